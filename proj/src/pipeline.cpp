#include "ldw/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <numbers>

#include <json.hpp>

#include "ldw/error.hpp"
#include "ldw/kv_config.hpp"
#include "ldw/pnm.hpp"

namespace ldw {

namespace fs = std::filesystem;

void PipelineConfig::validate() const {
    camera.validate();
    grid.validate();
    ransac.validate();
    if (ipm_supersample < 1) throw Error(ErrorCode::InvalidInput, "ipm_supersample must be >= 1");
    if (!(sigma > 0.0)) throw Error(ErrorCode::InvalidInput, "sigma must be > 0");
    if (features.k < 0.0) throw Error(ErrorCode::InvalidInput, "k must be >= 0");
    if (!(features.phi_max > 0.0) || features.phi_max > std::numbers::pi / 2) {
        throw Error(ErrorCode::InvalidInput, "phi_max_deg must be in (0, 90]");
    }
    if (features.w2 < 0.0 || features.w4 < 0.0) throw Error(ErrorCode::InvalidInput, "filter weights must be >= 0");
    if (features.noise_z < 0.0) throw Error(ErrorCode::InvalidInput, "noise_z must be >= 0");
    if (em_stride < 1 || em.max_iters < 1) throw Error(ErrorCode::InvalidInput, "bad EM settings");
    if (gmm) gmm->validate(em.var_floor);
    if (flow.grid_step < 1 || flow.window < 3) throw Error(ErrorCode::InvalidInput, "bad flow grid or window");
    if (!(warn.lambda_threshold > 0.0) || !(warn.curvature_threshold > 0.0)) {
        throw Error(ErrorCode::InvalidInput, "departure thresholds must be > 0");
    }
    if (invariant.tile < 2 || !(invariant.std_floor > 0.0)) throw Error(ErrorCode::InvalidInput, "bad invariant params");
}

PipelineConfig pipeline_config_from(const KvConfig& kv, const fs::path& base_dir) {
    kv.reject_unknown({"camera",
                       "grid_x_max",
                       "grid_y_max",
                       "grid_resolution",
                       "ipm_supersample",
                       "invariant_tile",
                       "invariant_std_floor",
                       "sigma",
                       "filter_radius",
                       "sign_convention",
                       "k",
                       "phi_max_deg",
                       "w2",
                       "w4",
                       "bright_only",
                       "noise_z",
                       "ridge_check",
                       "interpolate_gaps",
                       "gap_max_m",
                       "gap_lateral_tol_m",
                       "ransac_iterations",
                       "ransac_inlier_tol_m",
                       "ransac_min_inliers",
                       "ransac_min_density",
                       "max_lane_slope",
                       "max_curves",
                       "merge_dist_m",
                       "ego_x_probe_m",
                       "segment",
                       "gmm_stats",
                       "em_iterations",
                       "em_stride",
                       "boundary_min_run",
                       "road_gate",
                       "road_gate_margin_m",
                       "departure",
                       "flow_grid_step",
                       "flow_window",
                       "flow_min_confidence",
                       "lambda_threshold_deg",
                       "curvature_threshold",
                       "curvature_x_probe_m",
                       "no_lane_factor",
                       "rng_seed"});
    PipelineConfig c;
    auto resolve = [&](const std::string& p) { return fs::path(p).is_absolute() ? fs::path(p) : base_dir / p; };
    c.camera = load_camera(resolve(kv.require("camera")));
    c.grid.x_max = kv.number_or("grid_x_max", c.grid.x_max);
    c.grid.y_max = kv.number_or("grid_y_max", c.grid.y_max);
    c.grid.resolution = kv.number_or("grid_resolution", c.grid.resolution);
    c.ipm_supersample = static_cast<int>(kv.integer_or("ipm_supersample", c.ipm_supersample));
    c.invariant.tile = static_cast<int>(kv.integer_or("invariant_tile", c.invariant.tile));
    c.invariant.std_floor = kv.number_or("invariant_std_floor", c.invariant.std_floor);
    c.sigma = kv.number_or("sigma", c.sigma);
    c.filter_radius = static_cast<int>(kv.integer_or("filter_radius", c.filter_radius));
    const std::string conv = kv.string_or("sign_convention", "corrected");
    if (conv == "corrected") {
        c.sign_convention = SignConvention::Corrected;
    } else if (conv == "as_printed") {
        c.sign_convention = SignConvention::AsPrinted;
    } else {
        throw Error(ErrorCode::Config, "sign_convention must be corrected or as_printed");
    }
    c.features.k = kv.number_or("k", c.features.k);
    c.features.phi_max = deg2rad(kv.number_or("phi_max_deg", rad2deg(c.features.phi_max)));
    c.features.w2 = kv.number_or("w2", c.features.w2);
    c.features.w4 = kv.number_or("w4", c.features.w4);
    c.features.bright_only = kv.boolean_or("bright_only", c.features.bright_only);
    c.features.noise_z = kv.number_or("noise_z", c.features.noise_z);
    c.features.ridge_check = kv.boolean_or("ridge_check", c.features.ridge_check);
    c.interpolate = kv.boolean_or("interpolate_gaps", c.interpolate);
    c.gaps.max_gap = kv.number_or("gap_max_m", c.gaps.max_gap);
    c.gaps.lateral_tol = kv.number_or("gap_lateral_tol_m", c.gaps.lateral_tol);
    c.gaps.phi_max = c.features.phi_max;
    c.ransac.iterations = static_cast<int>(kv.integer_or("ransac_iterations", c.ransac.iterations));
    c.ransac.inlier_tol = kv.number_or("ransac_inlier_tol_m", c.ransac.inlier_tol);
    c.ransac.min_inliers = static_cast<int>(kv.integer_or("ransac_min_inliers", c.ransac.min_inliers));
    c.ransac.min_density = kv.number_or("ransac_min_density", c.ransac.min_density);
    c.ransac.max_slope = kv.number_or("max_lane_slope", c.ransac.max_slope);
    c.ransac.max_curves = static_cast<int>(kv.integer_or("max_curves", c.ransac.max_curves));
    c.ransac.merge_dist = kv.number_or("merge_dist_m", c.ransac.merge_dist);
    c.rng_seed = static_cast<std::uint64_t>(kv.integer_or("rng_seed", 0));
    c.ransac.rng_seed = c.rng_seed;
    c.ego_x_probe = kv.number_or("ego_x_probe_m", c.ego_x_probe);
    c.segment = kv.boolean_or("segment", c.segment);
    if (kv.has("gmm_stats")) c.gmm = read_gmm_stats(resolve(kv.require("gmm_stats")));
    c.em.max_iters = static_cast<int>(kv.integer_or("em_iterations", c.em.max_iters));
    c.em_stride = static_cast<int>(kv.integer_or("em_stride", c.em_stride));
    c.boundary.min_run = static_cast<int>(kv.integer_or("boundary_min_run", c.boundary.min_run));
    c.road_gate = kv.boolean_or("road_gate", c.road_gate);
    c.road_gate_margin = kv.number_or("road_gate_margin_m", c.road_gate_margin);
    c.departure = kv.boolean_or("departure", c.departure);
    c.flow.grid_step = static_cast<int>(kv.integer_or("flow_grid_step", c.flow.grid_step));
    c.flow.window = static_cast<int>(kv.integer_or("flow_window", c.flow.window));
    c.flow.min_confidence = kv.number_or("flow_min_confidence", c.flow.min_confidence);
    c.warn.lambda_threshold = deg2rad(kv.number_or("lambda_threshold_deg", rad2deg(c.warn.lambda_threshold)));
    c.warn.curvature_threshold = kv.number_or("curvature_threshold", c.warn.curvature_threshold);
    c.warn.x_probe = kv.number_or("curvature_x_probe_m", c.warn.x_probe);
    c.warn.no_lane_factor = kv.number_or("no_lane_factor", c.warn.no_lane_factor);
    try {
        c.validate();
    } catch (const Error& e) {
        if (e.code() != ErrorCode::InvalidInput) throw;
        throw Error(ErrorCode::Config, kv.origin() + ": " + e.what());
    }
    return c;
}

PipelineConfig load_pipeline_config(const fs::path& path) {
    const auto kv = KvConfig::load(path);
    return pipeline_config_from(kv, path.parent_path());
}

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t) {
    return std::chrono::duration<double, std::milli>(Clock::now() - t).count();
}

std::string describe(const Error& e) { return std::string(to_string(e.code())) + ": " + e.what(); }

PlaneF gray_rows(const RgbImage& img, int first_row) {
    PlaneF out(img.rows(), img.cols());
    for (int r = first_row; r < img.rows(); ++r) {
        for (int c = 0; c < img.cols(); ++c) {
            const auto* p = img.px(r, c);
            out(r, c) = (kGrayWeightR * p[0] + kGrayWeightG * p[1] + kGrayWeightB * p[2]) / 255.0;
        }
    }
    return out;
}

}  // namespace

Pipeline::Pipeline(PipelineConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    map_ = std::make_shared<const IpmMap>(cfg_.camera, cfg_.grid, Interp::Bilinear, cfg_.ipm_supersample);
    if (map_->valid_count() == 0) throw Error(ErrorCode::EmptyGrid, "grid does not overlap the camera footprint");
    bank_ = make_bank(cfg_.sigma, cfg_.filter_radius, cfg_.sign_convention);
    first_row_ = std::max(0, static_cast<int>(std::floor(horizon_row(cfg_.camera))) - 2);
}

FrameOutput Pipeline::process(const RgbImage& img, const std::string& name, bool debug) const {
    if (img.rows() != cfg_.camera.rows || img.cols() != cfg_.camera.cols) {
        throw Error(ErrorCode::DimensionMismatch, "frame size does not match the camera");
    }
    FrameOutput out;
    out.frame = name;
    const auto t_start = Clock::now();

    auto t = Clock::now();
    const LabImage lab = rgb_to_lab(img, first_row_);
    const PlaneF inv = illuminant_invariant(lab, cfg_.invariant, first_row_);
    out.timing_ms["color"] = ms_since(t);

    t = Clock::now();
    const IpmGrid inv_grid = map_->apply(inv, 0.5);
    out.gray = map_->apply(gray_rows(img, first_row_));
    out.timing_ms["ipm"] = ms_since(t);

    if (cfg_.segment) {
        t = Clock::now();
        const FeatureGrid fg = feature_grid(lab, inv_grid);
        try {
            const auto data = fg.samples(cfg_.em_stride);
            const GmmModel init = cfg_.gmm ? *cfg_.gmm : init_kmeans(data, cfg_.rng_seed);
            const auto em = em_refine(init, data, cfg_.em);
            LabelMask mask = classify(em.model, fg);
            RansacConfig rc = cfg_.ransac;
            rc.min_density = 0.0;
            rc.max_slope = 0.0;
            out.boundaries = extract_boundaries(mask, rc, cfg_.boundary);
            if (debug) out.labels = std::move(mask);
        } catch (const Error& e) {
            out.errors.push_back(describe(e));
        }
        out.timing_ms["segment"] = ms_since(t);
    }

    t = Clock::now();
    auto feats = extract_features(inv_grid, bank_, cfg_.features);
    if (out.boundaries && cfg_.road_gate) {
        // Markings lie on the road: drop ridges beyond the fitted edges.
        const auto& b = *out.boundaries;
        const double m = cfg_.road_gate_margin;
        std::erase_if(feats.points.points, [&](const FeaturePoint& p) {
            return p.y > b.left(p.x) + m || p.y < b.right(p.x) - m;
        });
    }
    const FeaturePointSet pts = cfg_.interpolate ? interpolate_gaps(feats.points, cfg_.gaps) : feats.points;
    out.timing_ms["features"] = ms_since(t);

    t = Clock::now();
    out.curves = fit_lanes(pts, cfg_.ransac);
    try {
        out.ego = ego_lane_and_offset(out.curves, 0.0, cfg_.ego_x_probe);
    } catch (const Error& e) {
        out.errors.push_back(describe(e));
    }
    out.timing_ms["lanes"] = ms_since(t);

    if (debug) {
        out.debug["invariant"] = inv;
        out.debug["ipm"] = inv_grid.cells;
        out.debug["ipm_gray"] = out.gray.cells;
        out.debug["strength"] = feats.strength;
        out.debug["cross"] = feats.cross_response;
        PlaneF marks(inv_grid.rows(), inv_grid.cols());
        for (const auto& p : pts.points) marks(p.row, p.col) = p.interpolated ? 0.5 : 1.0;
        out.debug["features"] = std::move(marks);
    }
    out.timing_ms["total"] = ms_since(t_start);
    return out;
}

FeatureGrid Pipeline::feature_grid(const LabImage& lab, const IpmGrid& inv_grid) const {
    FeatureGrid fg{cfg_.grid,
                   {PlaneF(inv_grid.rows(), inv_grid.cols()), map_->apply(lab.a).cells, map_->apply(lab.b).cells},
                   map_->valid()};
    for (size_t i = 0; i < fg.channels[0].size(); ++i) fg.channels[0].data()[i] = 100.0 * inv_grid.cells.data()[i];
    return fg;
}

FeatureGrid Pipeline::segmentation_features(const RgbImage& img) const {
    const LabImage lab = rgb_to_lab(img, first_row_);
    const PlaneF inv = illuminant_invariant(lab, cfg_.invariant, first_row_);
    return feature_grid(lab, map_->apply(inv, 0.5));
}

void Pipeline::add_departure(FrameOutput& curr, const FrameOutput& prev) const {
    const auto t = Clock::now();
    FlowParams fp = cfg_.flow;
    fp.valid = &map_->valid();
    fp.row_begin = curr.gray.rows() / 2;  // near half of the grid
    try {
        const auto flow = estimate_flow(prev.gray.cells, curr.gray.cells, fp);
        curr.departure = warn(departure_angle(flow), curr.ego, cfg_.warn, curr.curves);
    } catch (const Error& e) {
        curr.errors.push_back(describe(e));
    }
    curr.timing_ms["flow"] = ms_since(t);
    curr.timing_ms["total"] += curr.timing_ms["flow"];
}

namespace {

using nlohmann::json;

json curve_json(const LaneCurve& c) {
    return {{"y0", c.y0},       {"a", c.a},           {"b", c.b},       {"c", c.c},
            {"inliers", c.inlier_count}, {"rms", c.inlier_rms}, {"x_lo", c.x_lo}, {"x_hi", c.x_hi}};
}

}  // namespace

std::string to_json_line(const FrameOutput& out, bool with_timing) {
    json j;
    j["v"] = 1;
    j["frame"] = out.frame;
    j["curves"] = json::array();
    for (const auto& c : out.curves) j["curves"].push_back(curve_json(c));
    j["offset_m"] = out.ego ? json(out.ego->offset) : json(nullptr);
    if (out.boundaries) {
        j["boundaries"] = {{"left", curve_json(out.boundaries->left)}, {"right", curve_json(out.boundaries->right)}};
    } else {
        j["boundaries"] = nullptr;
    }
    if (out.departure) {
        j["lambda_deg"] = rad2deg(out.departure->lambda);
        j["warning"] = out.departure->warning;
        j["gated"] = out.departure->gated_by_curvature;
    } else {
        j["lambda_deg"] = nullptr;
        j["warning"] = false;
        j["gated"] = false;
    }
    j["errors"] = out.errors;
    if (with_timing) j["timing_ms"] = out.timing_ms;
    return j.dump();
}

namespace {

LaneCurve curve_from(const json& j) {
    LaneCurve c;
    c.y0 = j.at("y0").get<double>();
    c.a = j.at("a").get<double>();
    c.b = j.at("b").get<double>();
    c.c = j.at("c").get<double>();
    c.inlier_count = j.value("inliers", 0);
    c.inlier_rms = j.value("rms", 0.0);
    c.x_lo = j.at("x_lo").get<double>();
    c.x_hi = j.at("x_hi").get<double>();
    return c;
}

}  // namespace

FramePrediction prediction_from_json(const std::string& line, const GridSpec& grid, std::string* frame) {
    FramePrediction p;
    p.grid = grid;
    try {
        const json j = json::parse(line);
        if (j.value("v", 0) != 1) throw Error(ErrorCode::Config, "unsupported record version");
        if (frame) *frame = j.value("frame", std::string());
        for (const auto& c : j.at("curves")) p.curves.push_back(curve_from(c));
        if (j.contains("boundaries") && !j["boundaries"].is_null()) {
            p.boundaries = std::array<LaneCurve, 2>{curve_from(j["boundaries"].at("left")),
                                                    curve_from(j["boundaries"].at("right"))};
        }
        if (j.contains("timing_ms")) p.runtime_ms = j["timing_ms"].get<std::map<std::string, double>>();
    } catch (const json::exception& e) {
        throw Error(ErrorCode::Config, std::string("prediction record: ") + e.what());
    }
    return p;
}

void write_debug_planes(const fs::path& dir, const FrameOutput& out) {
    fs::create_directories(dir);
    const std::string stem = out.frame.empty() ? "frame" : out.frame;
    for (const auto& [name, plane] : out.debug) {
        const bool unit = name == "invariant" || name == "ipm" || name == "ipm_gray" || name == "features";
        write_pgm(dir / (stem + "_" + name + ".pgm"), unit ? to_u8(plane, 0.0, 1.0) : to_u8(plane));
    }
    if (out.labels) {
        PlaneU8 vis = out.labels->labels;
        for (auto& v : vis.data()) v = v == kInvalidLabel ? 0 : static_cast<std::uint8_t>(80 + 80 * v);
        write_pgm(dir / (stem + "_labels.pgm"), vis);
    }
}

}  // namespace ldw
