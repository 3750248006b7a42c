#pragma once

#include <array>
#include <vector>

#include "ldw/image.hpp"
#include "ldw/ipm.hpp"

namespace ldw {

enum class KernelId { G2x = 0, Gxy = 1, G2y = 2, G4x = 3, G4y = 4 };
inline constexpr std::array<KernelId, 5> kAllKernels = {KernelId::G2x, KernelId::Gxy, KernelId::G2y, KernelId::G4x,
                                                        KernelId::G4y};

/// `AsPrinted` keeps the -12/sigma^4 constant of the published fourth-order
/// kernels; `Corrected` uses the true fourth derivative (+12/sigma^4) and
/// removes the truncation residue so every kernel sums to zero.
enum class SignConvention { AsPrinted, Corrected };

const char* to_string(KernelId id);

/// Gaussian-derivative kernels on a (2R+1)^2 support. Kernel planes are
/// indexed (row = y + R, col = x + R); x runs along columns.
struct FilterBank {
    struct Factors {
        std::vector<double> along_x;  ///< column-direction taps
        std::vector<double> along_y;  ///< row-direction taps
    };

    double sigma = 0.0;
    int radius = 0;
    SignConvention convention = SignConvention::Corrected;
    std::array<PlaneF, 5> kernels;
    std::array<Factors, 5> factors;

    const PlaneF& kernel(KernelId id) const { return kernels[static_cast<size_t>(id)]; }
    const Factors& factor(KernelId id) const { return factors[static_cast<size_t>(id)]; }
};

/// radius < 0 selects ceil(4 sigma). Throws InvalidInput for sigma <= 0 or
/// radius < ceil(3 sigma).
FilterBank make_bank(double sigma, int radius = -1, SignConvention convention = SignConvention::Corrected);

/// Separable convolution with symmetric reflection at the borders.
PlaneF convolve_separable(const PlaneF& img, const FilterBank& bank, KernelId id);
PlaneF convolve_separable_serial(const PlaneF& img, const FilterBank& bank, KernelId id);

/// Direct 2-D convolution, out(p) = sum_q K(q) img(p - q). Reference only.
PlaneF convolve_dense(const PlaneF& img, const PlaneF& kernel);

/// Second-order steering: cos^2 R2x + sin^2 R2y - 2 sin cos Rxy. Angles are
/// counterclockwise as displayed (rows grow downward), 0 along x.
PlaneF steer_order2(const PlaneF& r2x, const PlaneF& rxy, const PlaneF& r2y, double angle);

struct FeaturePoint {
    double x = 0.0;            ///< forward (m)
    double y = 0.0;            ///< lateral (m), positive to the left
    double strength = 0.0;
    double orientation = 0.0;  ///< ridge normal angle in grid frame, (-pi/2, pi/2]
    int row = 0;
    int col = 0;
    bool interpolated = false;
};

struct FeaturePointSet {
    GridSpec grid;
    std::vector<FeaturePoint> points;
};

enum class LaneAxis { Vertical, Horizontal };

struct FeatureParams {
    double w2 = 1.0;
    double w4 = 0.5;
    double k = 2.0;                   ///< threshold = mean + k * std per scan line
    double phi_max = 0.5235987755982988;  ///< 30 degrees
    bool bright_only = true;          ///< keep ridges brighter than their surroundings
    double min_strength_rel = 1e-6;   ///< absolute floor relative to max |grid|
    /// Frame-wide floor at median + noise_z * MAD of the response; rejects
    /// noise ridges on unmarked road. 0 disables it.
    double noise_z = 0.0;
    /// Keep a point only if the plane 2 sigma to each side is darker (or, for
    /// bright_only = false, on the same side of it); rejects step edges.
    bool ridge_check = false;
    LaneAxis axis = LaneAxis::Vertical;
};

struct FeatureExtraction {
    FeaturePointSet points;
    /// Axis-aligned response to structures across the lane direction
    /// (w2 |R_G2y| + w4 |R_G4y| for vertical lanes); crosswalk-style stripes
    /// show up here after the orientation gate removes them from `points`.
    PlaneF cross_response;
    /// Combined steered response S used for thresholding.
    PlaneF strength;
};

FeatureExtraction extract_features(const IpmGrid& grid, const FilterBank& bank, const FeatureParams& params = {});

}  // namespace ldw
