#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ldw/camera.hpp"
#include "ldw/color.hpp"
#include "ldw/departure.hpp"
#include "ldw/eval.hpp"
#include "ldw/filters.hpp"
#include "ldw/ipm.hpp"
#include "ldw/lanes.hpp"
#include "ldw/segmentation.hpp"

namespace ldw {

class KvConfig;

struct PipelineConfig {
    CameraModel camera;
    GridSpec grid;
    int ipm_supersample = 2;
    InvariantParams invariant;
    double sigma = 1.5;
    int filter_radius = -1;
    SignConvention sign_convention = SignConvention::Corrected;
    FeatureParams features;
    bool interpolate = true;
    GapParams gaps;
    RansacConfig ransac{.min_density = 2.0, .max_slope = 1.0};
    double ego_x_probe = 5.0;
    bool segment = true;
    std::optional<GmmModel> gmm;  ///< absent: k-means initialisation per frame
    EmOptions em{.max_iters = 8, .rel_tol = 1e-4};
    int em_stride = 3;
    BoundaryParams boundary;
    /// Drop feature points outside the fitted road edges widened by the
    /// margin (negative margins shrink the road) before lane fitting.
    bool road_gate = true;
    double road_gate_margin = 0.5;
    bool departure = true;
    FlowParams flow;
    WarnParams warn;
    std::uint64_t rng_seed = 0;

    void validate() const;
};

/// Keys are checked against the known set; relative paths (camera,
/// gmm_stats) resolve against the config file's directory.
PipelineConfig pipeline_config_from(const KvConfig& kv, const std::filesystem::path& base_dir);
PipelineConfig load_pipeline_config(const std::filesystem::path& path);

struct FrameOutput {
    std::string frame;
    std::vector<LaneCurve> curves;
    std::optional<EgoLane> ego;
    std::optional<RoadBoundaries> boundaries;
    std::optional<DepartureEstimate> departure;
    std::vector<std::string> errors;  ///< non-fatal stage failures, "Code: message"
    std::map<std::string, double> timing_ms;

    IpmGrid gray;  ///< motion plane kept for the next frame

    // Filled when debug planes are requested.
    std::map<std::string, PlaneF> debug;
    std::optional<LabelMask> labels;
};

class Pipeline {
public:
    explicit Pipeline(PipelineConfig cfg);

    const PipelineConfig& config() const noexcept { return cfg_; }
    const IpmMap& map() const noexcept { return *map_; }

    /// All single-frame stages; departure needs `add_departure`.
    FrameOutput process(const RgbImage& img, const std::string& name = {}, bool debug = false) const;
    /// Per-cell segmentation features (100 x invariant, a*, b*).
    FeatureGrid segmentation_features(const RgbImage& img) const;

    /// Flow from prev.gray to curr.gray, then the warning rule.
    void add_departure(FrameOutput& curr, const FrameOutput& prev) const;

private:
    FeatureGrid feature_grid(const LabImage& lab, const IpmGrid& inv_grid) const;

    PipelineConfig cfg_;
    std::shared_ptr<const IpmMap> map_;
    FilterBank bank_;
    int first_row_ = 0;
};

/// One JSON object, no trailing newline. Timing is included on request only
/// so repeated runs produce identical bytes.
std::string to_json_line(const FrameOutput& out, bool with_timing = false);

/// Reads a record written by to_json_line back into an evaluation input.
/// Throws Config on malformed JSON.
FramePrediction prediction_from_json(const std::string& line, const GridSpec& grid, std::string* frame = nullptr);

/// Writes the debug planes as 8-bit PGM files named <frame>_<plane>.pgm.
void write_debug_planes(const std::filesystem::path& dir, const FrameOutput& out);

}  // namespace ldw
