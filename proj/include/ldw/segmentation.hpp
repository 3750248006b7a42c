#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "ldw/image.hpp"
#include "ldw/ipm.hpp"
#include "ldw/lanes.hpp"

namespace ldw {

enum RoadClass : std::uint8_t { kRoad = 0, kScene = 1, kObstacle = 2, kInvalidLabel = 255 };
inline constexpr int kNumClasses = 3;
inline constexpr double kVarFloor = 1e-4;

const char* class_name(int cls);

using Feature = std::array<double, 3>;

/// Three-class diagonal-covariance mixture (road, scene, obstacle).
struct GmmModel {
    struct Component {
        double prior = 1.0 / kNumClasses;
        Feature mean{};
        Feature var{1.0, 1.0, 1.0};
    };
    std::array<Component, kNumClasses> classes;

    double prior_sum() const;
    /// Throws InvalidInput if priors are not normalized or a variance is below the floor.
    void validate(double var_floor = kVarFloor) const;
};

/// Per-class sample statistics; priors proportional to patch sizes.
/// Throws MissingClass for an empty class, InvalidInput for fewer than 30 samples.
GmmModel init_from_patches(const std::array<std::vector<Feature>, kNumClasses>& patches, double var_floor = kVarFloor);

/// k-means++ initialisation for ablation. Clusters are assigned to classes
/// by size: largest -> road, then scene, then obstacle.
GmmModel init_kmeans(std::span<const Feature> data, std::uint64_t seed, int iterations = 20,
                     double var_floor = kVarFloor);

struct EmOptions {
    int max_iters = 100;
    double rel_tol = 1e-6;
    double var_floor = kVarFloor;
    bool parallel = true;
};

struct EmResult {
    GmmModel model;
    /// Mean per-sample log-likelihood of each visited model; the last entry
    /// belongs to `model`.
    std::vector<double> trace;
    /// Prior sum after every M-step.
    std::vector<double> prior_sums;
};

EmResult em_refine(const GmmModel& init, std::span<const Feature> data, const EmOptions& options = {});

/// Mean per-sample log-likelihood, block-summed in a fixed order.
double log_likelihood(const GmmModel& model, std::span<const Feature> data, bool parallel = true);

/// Per-class log scores log p(c) + sum_k log N(x_k | m_k, var_k).
std::array<double, kNumClasses> class_log_scores(const GmmModel& model, const Feature& x);
/// argmax of the scores; ties go to the lowest class id.
std::uint8_t classify_pixel(const GmmModel& model, const Feature& x);

/// Feature planes aligned with an IPM grid.
struct FeatureGrid {
    GridSpec spec;
    std::array<PlaneF, 3> channels;
    PlaneU8 valid;

    int rows() const noexcept { return valid.rows(); }
    int cols() const noexcept { return valid.cols(); }
    Feature at(int r, int c) const { return {channels[0](r, c), channels[1](r, c), channels[2](r, c)}; }
    /// Valid cells on a regular stride, row-major.
    std::vector<Feature> samples(int stride = 1) const;
};

struct LabelMask {
    GridSpec spec;
    PlaneU8 labels;  ///< RoadClass ids, kInvalidLabel outside the valid grid
};

LabelMask classify(const GmmModel& model, const FeatureGrid& grid);

struct BoundaryParams {
    int min_run = 5;
    double min_road_fraction = 0.10;
};

struct RoadBoundaries {
    LaneCurve left;   ///< larger Y (image left)
    LaneCurve right;
    std::vector<GroundPoint> left_points;
    std::vector<GroundPoint> right_points;
};

/// Road edges from the outermost road runs of each row, each side fitted
/// with RANSAC. Throws NoRoad when road covers < 10% of valid cells and
/// NoModel when a side cannot be fitted.
RoadBoundaries extract_boundaries(const LabelMask& mask, const RansacConfig& cfg, const BoundaryParams& params = {});

/// Text sidecar: one "name m0 m1 m2 v0 v1 v2 prior" line per class.
GmmModel read_gmm_stats(const std::filesystem::path& path);
GmmModel parse_gmm_stats(const std::string& text);
std::string format_gmm_stats(const GmmModel& model);

}  // namespace ldw
