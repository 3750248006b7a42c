#pragma once

#include "ldw/camera.hpp"
#include "ldw/image.hpp"
#include "ldw/kernels.hpp"

// Inverse perspective mapping from extrinsics only.
//
// Pixel indices follow the mapping formulas: Ix is the 1-based row (Ix = 1 at
// the top, Ix = m at the bottom) and Iy the 1-based column. Ground
// coordinates: x forward, y lateral with y > 0 toward the image left.
//
// With u = 1 - 2(Ix-1)/(m-1) and v = 1 - 2(Iy-1)/(n-1):
//   x = h (1 + u tan(delta) tan(theta)) / (tan(theta) - u tan(delta))
//   y = h v tan(omega) / (sin(theta) - u tan(delta) cos(theta))
// The horizon is the root of the x denominator.

namespace ldw {

inline constexpr double kMaxIpmRange = 45.0;

struct HalfApertures {
    double delta = 0.0;  ///< row (vertical) half aperture
    double omega = 0.0;  ///< column (horizontal) half aperture
};

struct GroundPoint {
    double x = 0.0;
    double y = 0.0;
};

struct PixelPoint {
    double ix = 0.0;
    double iy = 0.0;
};

/// Splits the diagonal half aperture over rows and columns:
/// delta = atan((m-1)/d * tan(alpha)), omega = atan((n-1)/d * tan(alpha)),
/// d = sqrt((m-1)^2 + (n-1)^2).
HalfApertures half_apertures(const CameraModel& cam);

/// Denominator of the longitudinal mapping, tan(theta) - u tan(delta).
double longitudinal_denominator(const CameraModel& cam, double ix);

/// Row where the longitudinal denominator vanishes,
/// hz = 1 + (m-1)/2 * (1 - tan(theta)/tan(delta)); clamped to 1 when the
/// whole image is below the horizon.
double horizon_row(const CameraModel& cam);

/// Requires ix > horizon_row(cam). Yaw rotates the result about the origin.
GroundPoint pixel_to_ground(const CameraModel& cam, double ix, double iy);

/// Closed-form inverse of pixel_to_ground. Requires x > 0 after undoing yaw.
PixelPoint ground_to_pixel(const CameraModel& cam, double x, double y);

/// Bird's-eye raster. Row 0 is the far edge (x near x_max), the last row is
/// nearest the vehicle; column 0 is the left edge (y near +y_max).
struct GridSpec {
    double x_max = kMaxIpmRange;
    double y_max = 10.0;
    double resolution = 0.1;

    void validate() const;
    int rows() const;
    int cols() const;
    double x_at(int row) const { return x_max - (row + 0.5) * resolution; }
    double y_at(int col) const { return y_max - (col + 0.5) * resolution; }
    /// Fractional row/column of a ground coordinate (cell centers at integers).
    double row_of(double x) const { return (x_max - x) / resolution - 0.5; }
    double col_of(double y) const { return (y_max - y) / resolution - 0.5; }

    friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

struct IpmGrid {
    GridSpec spec;
    PlaneF cells;
    PlaneU8 valid;  ///< 1 where the cell maps inside the image below the horizon

    int rows() const noexcept { return cells.rows(); }
    int cols() const noexcept { return cells.cols(); }
    bool is_valid(int r, int c) const noexcept { return valid(r, c) != 0; }
};

enum class Interp { Bilinear, Nearest };

/// Precomputed cell -> source-pixel lookup for one camera and grid; applying
/// it to several planes of the same frame costs one gather each.
class IpmMap {
public:
    /// `supersample` > 1 averages s x s lookups per cell (area sampling for
    /// the near range, where one cell spans many pixels).
    IpmMap(const CameraModel& cam, const GridSpec& spec, Interp interp = Interp::Bilinear, int supersample = 1);

    const GridSpec& spec() const noexcept { return spec_; }
    const PlaneU8& valid() const noexcept { return valid_; }
    size_t valid_count() const noexcept { return valid_count_; }
    const CameraModel& camera() const noexcept { return cam_; }

    /// Invalid cells are set to `fill`.
    IpmGrid apply(const PlaneF& img, double fill = 0.0) const;
    IpmGrid apply_serial(const PlaneF& img, double fill = 0.0) const;

private:
    CameraModel cam_;
    GridSpec spec_;
    PlaneU8 valid_;
    size_t valid_count_ = 0;
    kernels::GatherTable table_;
};

/// One-shot IPM. Throws EmptyGrid when no cell maps inside the image.
IpmGrid build_ipm(const CameraModel& cam, const PlaneF& img, const GridSpec& spec = {},
                  Interp interp = Interp::Bilinear);

/// Replaces every invalid cell by the nearest valid cell of the same row
/// (rows with no valid cell copy the nearest row that has one), so filters
/// see no artificial step at the edge of the camera footprint.
PlaneF fill_invalid(const IpmGrid& grid);

}  // namespace ldw
