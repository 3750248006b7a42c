#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "ldw/filters.hpp"

namespace ldw {

/// Lateral position as a cubic in forward distance:
/// Y = y0 + a X + b X^2 + c X^3 (meters).
struct LaneCurve {
    double y0 = 0.0;
    double a = 0.0;
    double b = 0.0;
    double c = 0.0;
    int inlier_count = 0;
    double inlier_rms = 0.0;
    double x_lo = 0.0;
    double x_hi = 0.0;

    double operator()(double x) const noexcept { return y0 + x * (a + x * (b + x * c)); }
    double slope(double x) const noexcept { return a + x * (2.0 * b + 3.0 * c * x); }
    /// Largest |slope| over [x_lo, x_hi].
    double max_abs_slope() const noexcept;
    /// Half the second derivative, b + 3 c x.
    double bend(double x) const noexcept { return b + 3.0 * c * x; }

    friend bool operator==(const LaneCurve&, const LaneCurve&) = default;
};

inline constexpr int kMaxLaneCurves = 8;

struct RansacConfig {
    int iterations = 500;
    double inlier_tol = 0.15;
    int min_inliers = 12;
    int max_curves = kMaxLaneCurves;
    std::uint64_t rng_seed = 0;
    /// After the first random point, the other three are drawn from points
    /// with |dy| <= cone_base + cone_slope * |dx| (0 disables the cone).
    double cone_base = 1.0;
    double cone_slope = 0.25;
    double max_condition = 1e12;
    /// Number of top-scoring trials that are refit before choosing the model.
    int local_refits = 4;
    /// Curves closer than merge_dist at merge_probe_x are merged.
    double merge_dist = 0.5;
    double merge_probe_x = 10.0;
    /// fit_lanes drops curves with fewer inliers per meter of x support;
    /// 0 disables the check.
    double min_density = 0.0;
    /// fit_lanes drops curves whose |dY/dX| exceeds this anywhere on their
    /// x support; 0 disables the check.
    double max_slope = 0.0;

    void validate() const;
};

struct LaneFit {
    LaneCurve curve;
    std::vector<size_t> inliers;  ///< indices into the input points
};

/// Best cubic over cfg.iterations trials; the cfg.local_refits strongest
/// trials are refit by least squares on their inliers and the best refit
/// wins. Throws InvalidInput for fewer than 4 points; std::nullopt when
/// the best model has fewer than min_inliers. `stream` separates the random
/// streams of successive fits sharing one seed.
std::optional<LaneFit> ransac_fit_one(std::span<const GroundPoint> points, const RansacConfig& cfg,
                                      std::uint64_t stream = 0);

/// Least-squares cubic through the given points (at least 4 distinct x).
LaneCurve fit_cubic_lsq(std::span<const GroundPoint> points);

/// Sequential RANSAC: up to cfg.max_curves curves sorted by y0 ascending.
std::vector<LaneCurve> fit_lanes(std::span<const GroundPoint> points, const RansacConfig& cfg);
std::vector<LaneCurve> fit_lanes(const FeaturePointSet& points, const RansacConfig& cfg);

std::vector<GroundPoint> ground_points(const FeaturePointSet& points);

struct GapParams {
    double max_gap = 3.0;          ///< longest gap along x that is bridged (m)
    double lateral_tol = 0.4;      ///< clustering distance after slope prediction (m)
    double cluster_angle = 1.0471975511965976;  ///< 60 degrees
    double phi_max = 0.5235987755982988;        ///< endpoint orientation agreement, 30 degrees
    double anchor_span = 1.0;      ///< spacing of the two support points on each side (m)
    double step = 0.0;             ///< sample spacing; 0 uses the grid resolution
};

/// Clusters points into lane-like chains and bridges gaps with the cubic
/// through two support points on each side. Synthetic points carry
/// interpolated = true and zero strength.
FeaturePointSet interpolate_gaps(const FeaturePointSet& points, const GapParams& params = {});

struct EgoLane {
    LaneCurve left;   ///< nearest curve with Y(x_probe) > vehicle_y
    LaneCurve right;  ///< nearest curve with Y(x_probe) < vehicle_y
    double offset = 0.0;  ///< lane midpoint minus vehicle_y at x_probe
};

/// Throws NoEgoLane when no pair of curves straddles the vehicle.
EgoLane ego_lane_and_offset(std::span<const LaneCurve> curves, double vehicle_y = 0.0, double x_probe = 5.0);

}  // namespace ldw
