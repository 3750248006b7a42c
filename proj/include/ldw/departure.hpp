#pragma once

#include <optional>
#include <span>
#include <vector>

#include "ldw/image.hpp"
#include "ldw/lanes.hpp"

namespace ldw {

/// vx runs along rows (longitudinal), vy along columns (lateral), px/frame.
struct FlowSample {
    int row = 0;
    int col = 0;
    double vx = 0.0;
    double vy = 0.0;
    double confidence = 0.0;
};

struct FlowField {
    std::vector<FlowSample> samples;
};

struct FlowParams {
    int grid_step = 8;
    int window = 15;
    double min_confidence = 0.05;
    int iterations = 10;
    /// Samples are taken on rows [row_begin, row_end); row_end < 0 means all
    /// rows. The window must fit inside `valid` when it is given.
    int row_begin = 0;
    int row_end = -1;
    const PlaneU8* valid = nullptr;
};

/// Windowed gradient least squares with one half-resolution pre-shift level.
/// confidence = lambda_min / (lambda_max + eps) of the structure matrix.
/// Throws DimensionMismatch when the frames differ in size.
FlowField estimate_flow(const PlaneF& prev, const PlaneF& curr, const FlowParams& params = {});

/// atan(median vy / median vx). Throws InsufficientFlow below 5 samples;
/// +-pi/2 by the sign of median vy when |median vx| < 1e-6.
double departure_angle(const FlowField& flow);

struct WarnParams {
    double lambda_threshold = 0.08726646259971647;  ///< 5 degrees
    double curvature_threshold = 0.01;              ///< on |b + 3 c x_probe| (1/m)
    double x_probe = 10.0;
    /// Without a lane fit the threshold is multiplied by this factor.
    double no_lane_factor = 2.0;
};

struct DepartureEstimate {
    double lambda = 0.0;
    std::optional<double> lateral_offset;
    bool warning = false;
    bool gated_by_curvature = false;
};

/// Inlier-weighted median of b + 3 c x over the curves. Markings are parallel,
/// so this is a robust road bend estimate when one ego curve is wrong.
std::optional<double> road_bend(std::span<const LaneCurve> curves, double x);

/// Gating uses road_bend(curves) when curves is non-empty, otherwise the mean
/// bend of the ego pair. Gating requires an ego lane either way.
DepartureEstimate warn(double lambda, const std::optional<EgoLane>& ego, const WarnParams& params = {},
                       std::span<const LaneCurve> curves = {});

}  // namespace ldw
