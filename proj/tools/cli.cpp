#include "cli.hpp"

#include <omp.h>

#include <algorithm>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "ldw/color.hpp"
#include "ldw/dataset.hpp"
#include "ldw/error.hpp"
#include "ldw/eval.hpp"
#include "ldw/pipeline.hpp"
#include "ldw/pnm.hpp"
#include "ldw/scene.hpp"

namespace ldw::cli {

namespace fs = std::filesystem;

namespace {

struct Common {
    std::string config;
    std::optional<std::uint64_t> seed;
    int threads = 0;
    std::string debug_dir;
};

int exit_code_for(const Error& e) {
    switch (e.code()) {
        case ErrorCode::Config:
        case ErrorCode::MissingCamera: return kExitConfig;
        case ErrorCode::Io:
        case ErrorCode::MalformedTruth: return kExitIo;
        default: return kExitFailure;
    }
}

PipelineConfig load_config(const Common& common) {
    if (common.config.empty()) throw Error(ErrorCode::Config, "--config is required");
    PipelineConfig cfg = load_pipeline_config(common.config);
    if (common.seed) {
        cfg.rng_seed = *common.seed;
        cfg.ransac.rng_seed = *common.seed;
    }
    return cfg;
}

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out || !(out << text)) throw Error(ErrorCode::Io, "cannot write " + path.string());
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// ---- ipm ------------------------------------------------------------------

int cmd_ipm(const Common& common, const std::string& input, const std::string& output, const std::string& plane) {
    const Pipeline pipe(load_config(common));
    const RgbImage img = read_frame(input);
    if (img.rows() != pipe.config().camera.rows || img.cols() != pipe.config().camera.cols) {
        throw Error(ErrorCode::InvalidInput, "frame size does not match the camera");
    }
    PlaneF src;
    if (plane == "gray") {
        src = to_gray(img);
    } else {
        src = illuminant_invariant(rgb_to_lab(img));
    }
    const IpmGrid grid = pipe.map().apply(src);
    write_pgm(output, to_u8(grid.cells, 0.0, 1.0));
    return kExitOk;
}

// ---- detect ---------------------------------------------------------------

struct DetectOptions {
    std::string input;
    std::string output;
    int max_curves = 0;
    bool timing = false;
};

int cmd_detect(const Common& common, const DetectOptions& opt) {
    PipelineConfig cfg = load_config(common);
    if (opt.max_curves > 0) cfg.ransac.max_curves = std::min(opt.max_curves, kMaxLaneCurves);
    const Pipeline pipe(cfg);

    std::vector<fs::path> frames;
    std::vector<std::string> names;
    if (fs::is_directory(opt.input)) {
        for (const auto& e : list_frames(opt.input)) {
            frames.push_back(e.image);
            names.push_back(e.stem);
        }
    } else {
        if (!fs::exists(opt.input)) throw Error(ErrorCode::Io, "no such input " + opt.input);
        frames.push_back(opt.input);
        names.push_back(fs::path(opt.input).stem().string());
    }

    std::ofstream file;
    std::ostream* out = &std::cout;
    if (!opt.output.empty()) {
        if (fs::path(opt.output).has_parent_path()) fs::create_directories(fs::path(opt.output).parent_path());
        file.open(opt.output, std::ios::binary);
        if (!file) throw Error(ErrorCode::Io, "cannot write " + opt.output);
        out = &file;
    }

    const int n = static_cast<int>(frames.size());
    const int chunk = std::max(1, 4 * omp_get_max_threads());
    const bool debug = !common.debug_dir.empty();
    int ok = 0;
    std::unique_ptr<FrameOutput> carry;  // last frame of the previous chunk
    int carry_index = -2;
    for (int begin = 0; begin < n; begin += chunk) {
        const int end = std::min(n, begin + chunk);
        std::vector<std::unique_ptr<FrameOutput>> results(end - begin);
        std::vector<std::string> failures(end - begin);
        // Frames run in parallel; inner loops then run on one thread each.
#pragma omp parallel for schedule(dynamic, 1)
        for (int i = begin; i < end; ++i) {
            try {
                const RgbImage img = read_frame(frames[i]);
                results[i - begin] = std::make_unique<FrameOutput>(pipe.process(img, names[i], debug));
            } catch (const std::exception& e) {
                failures[i - begin] = e.what();
            }
        }
        if (cfg.departure) {
#pragma omp parallel for schedule(dynamic, 1)
            for (int i = begin; i < end; ++i) {
                FrameOutput* curr = results[i - begin].get();
                const FrameOutput* prev = i == begin ? (carry_index == i - 1 ? carry.get() : nullptr)
                                                     : results[i - begin - 1].get();
                if (curr && prev) pipe.add_departure(*curr, *prev);
            }
        }
        for (int i = begin; i < end; ++i) {
            const auto& r = results[i - begin];
            if (!r) {
                std::cerr << "ldw: " << frames[i].string() << ": " << failures[i - begin] << '\n';
                continue;
            }
            ++ok;
            *out << to_json_line(*r, opt.timing) << '\n';
            if (debug) write_debug_planes(common.debug_dir, *r);
        }
        carry = std::move(results.back());
        carry_index = end - 1;
    }
    out->flush();
    if (!*out) throw Error(ErrorCode::Io, "write failed");
    return n > 0 && ok == 0 ? kExitNoOutput : kExitOk;
}

// ---- segment --------------------------------------------------------------

int cmd_segment(const Common& common, const std::string& input, const std::string& mask_out) {
    PipelineConfig cfg = load_config(common);
    cfg.segment = true;
    const Pipeline pipe(cfg);
    const auto out = pipe.process(read_frame(input), fs::path(input).stem().string(), true);
    if (!out.labels) {
        for (const auto& e : out.errors) std::cerr << "ldw: " << e << '\n';
        return kExitNoOutput;
    }
    write_pgm(mask_out, out.labels->labels);
    std::cout << to_json_line(out) << '\n';
    if (!common.debug_dir.empty()) write_debug_planes(common.debug_dir, out);
    return kExitOk;
}

// ---- departure ------------------------------------------------------------

int cmd_departure(const Common& common, const std::string& prev_path, const std::string& curr_path) {
    PipelineConfig cfg = load_config(common);
    cfg.segment = false;
    const Pipeline pipe(cfg);
    const auto prev = pipe.process(read_frame(prev_path), fs::path(prev_path).stem().string());
    auto curr = pipe.process(read_frame(curr_path), fs::path(curr_path).stem().string());
    pipe.add_departure(curr, prev);
    std::cout << to_json_line(curr) << '\n';
    return curr.departure ? kExitOk : kExitNoOutput;
}

// ---- synth ----------------------------------------------------------------

int cmd_synth(const Common& common, const std::string& scene_path, const std::string& out_dir) {
    SceneSpec spec = load_scene(scene_path);
    if (common.seed) spec.seed = *common.seed;
    fs::create_directories(out_dir);
    write_text(fs::path(out_dir) / kCameraFile, camera_to_config(spec.camera));
    write_text(fs::path(out_dir) / "scene.json", scene_to_json(spec) + "\n");
    std::vector<std::string> failures(spec.frames);
#pragma omp parallel for schedule(dynamic, 1)
    for (int f = 0; f < spec.frames; ++f) {
        try {
            write_synth_frame(out_dir, frame_stem(f), render_scene(spec, f));
        } catch (const std::exception& e) {
            failures[f] = e.what();
        }
    }
    for (const auto& msg : failures) {
        if (!msg.empty()) throw Error(ErrorCode::Io, msg);
    }
    return kExitOk;
}

// ---- eval -----------------------------------------------------------------

struct EvalOptions {
    std::string pred;
    std::string truth;
    std::string json_out;
    std::string table_out;
    double tolerance = 0.3;
};

std::vector<std::string> prediction_lines(const fs::path& pred) {
    std::vector<std::string> lines;
    auto add_file = [&](const fs::path& p) {
        std::istringstream in(read_text(p));
        std::string line;
        while (std::getline(in, line)) {
            if (line.find_first_not_of(" \t\r") != std::string::npos) lines.push_back(line);
        }
    };
    if (fs::is_directory(pred)) {
        std::vector<fs::path> files;
        for (const auto& e : fs::directory_iterator(pred)) {
            const auto ext = e.path().extension();
            if (e.is_regular_file() && (ext == ".json" || ext == ".jsonl")) files.push_back(e.path());
        }
        std::sort(files.begin(), files.end());
        for (const auto& f : files) add_file(f);
    } else {
        add_file(pred);
    }
    return lines;
}

int cmd_eval(const Common& common, const EvalOptions& opt) {
    const Dataset ds = ingest_dataset(opt.truth);
    GridSpec grid;
    if (!common.config.empty()) grid = load_config(common).grid;
    std::map<std::string, const DatasetEntry*> by_stem;
    for (const auto& e : ds.frames) by_stem[e.stem] = &e;
    PlaneU8 valid;
    if (ds.camera) valid = IpmMap(*ds.camera, grid).valid();

    EvalParams params;
    params.tolerance = opt.tolerance;
    std::vector<FrameReport> frames;
    for (const auto& line : prediction_lines(opt.pred)) {
        std::string name;
        const auto pred = prediction_from_json(line, grid, &name);
        const auto it = by_stem.find(name);
        if (it == by_stem.end()) {
            std::cerr << "ldw: no truth for frame '" << name << "', skipped\n";
            continue;
        }
        frames.push_back(evaluate_frame(pred, load_truth(*it->second, grid, valid), params, name));
    }
    if (frames.empty()) {
        std::cerr << "ldw: nothing to evaluate\n";
        return kExitNoOutput;
    }
    const auto report = aggregate(std::move(frames));
    const std::string table = report_to_table(report);
    if (!opt.json_out.empty()) write_text(opt.json_out, report_to_json(report) + "\n");
    if (!opt.table_out.empty()) write_text(opt.table_out, table);
    std::cout << table;
    return kExitOk;
}

// ---- train-gmm ------------------------------------------------------------

int cmd_train_gmm(const Common& common, const std::string& scene_path, const std::string& out) {
    SceneSpec spec = load_scene(scene_path);
    if (common.seed) spec.seed = *common.seed;
    PipelineConfig cfg;
    if (!common.config.empty()) cfg = load_config(common);
    cfg.camera = spec.camera;
    cfg.grid = spec.grid;
    cfg.gmm.reset();
    const Pipeline pipe(cfg);
    std::array<std::vector<Feature>, kNumClasses> patches;
    for (int f = 0; f < spec.frames; ++f) {
        const auto frame = render_scene(spec, f);
        const auto fg = pipe.segmentation_features(frame.image);
        const auto& labels = frame.truth.classes.labels;
        for (int r = 0; r < fg.rows(); ++r) {
            for (int c = 0; c < fg.cols(); ++c) {
                if (!fg.valid(r, c) || labels(r, c) >= kNumClasses) continue;
                patches[labels(r, c)].push_back(fg.at(r, c));
            }
        }
    }
    write_text(out, format_gmm_stats(init_from_patches(patches)));
    return kExitOk;
}

}  // namespace

int run(int argc, char** argv) {
    CLI::App app{"Lane detection and departure warning toolkit"};
    app.require_subcommand(1);
    Common common;
    std::uint64_t seed = 0;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", common.config, "pipeline config file");
        sub->add_option("--seed", seed, "random seed override");
        sub->add_option("--threads", common.threads, "worker threads (default: all cores)")->check(CLI::NonNegativeNumber);
        sub->add_option("--debug-dir", common.debug_dir, "write intermediate planes as PGM");
    };

    std::string in1, in2, out1, plane = "invariant";
    auto* ipm = app.add_subcommand("ipm", "bird's-eye grid of one frame as PGM");
    add_common(ipm);
    ipm->add_option("input", in1, "frame (PPM/PGM/PNG)")->required();
    ipm->add_option("output", out1, "output PGM")->required();
    ipm->add_option("--plane", plane, "invariant or gray")->check(CLI::IsMember({"invariant", "gray"}));

    DetectOptions dopt;
    auto* detect = app.add_subcommand("detect", "lane curves, boundaries and departure as JSON lines");
    add_common(detect);
    detect->add_option("input", dopt.input, "frame or directory of frames")->required();
    detect->add_option("-o,--out", dopt.output, "output file (default stdout)");
    detect->add_option("--max-curves", dopt.max_curves, "cap on curves per frame")->check(CLI::Range(1, kMaxLaneCurves));
    detect->add_flag("--timing", dopt.timing, "append per-stage timing to each record");

    auto* segment = app.add_subcommand("segment", "road/scene/obstacle labels of one frame");
    add_common(segment);
    segment->add_option("input", in1, "frame")->required();
    segment->add_option("mask", out1, "output label PGM")->required();

    auto* departure = app.add_subcommand("departure", "departure angle between two frames");
    add_common(departure);
    departure->add_option("prev", in1, "previous frame")->required();
    departure->add_option("curr", in2, "current frame")->required();

    auto* synth = app.add_subcommand("synth", "render a synthetic scene with ground truth");
    add_common(synth);
    synth->add_option("scene", in1, "scene JSON")->required();
    synth->add_option("out_dir", out1, "output directory")->required();

    EvalOptions eopt;
    auto* eval = app.add_subcommand("eval", "pixel-wise evaluation against a truth directory");
    add_common(eval);
    eval->add_option("pred", eopt.pred, "JSON-lines file or directory of them")->required();
    eval->add_option("truth", eopt.truth, "dataset directory with truth files")->required();
    eval->add_option("--json", eopt.json_out, "write the report as JSON");
    eval->add_option("--table", eopt.table_out, "write the report as a text table");
    eval->add_option("--tolerance", eopt.tolerance, "lateral match band (m)")->check(CLI::PositiveNumber);

    auto* train = app.add_subcommand("train-gmm", "class statistics sidecar from a synthetic scene");
    add_common(train);
    train->add_option("scene", in1, "scene JSON")->required();
    train->add_option("output", out1, "stats file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitConfig;
    }
    for (auto* sub : app.get_subcommands()) {
        if (sub->count("--seed") > 0) common.seed = seed;
    }
    if (common.threads > 0) omp_set_num_threads(common.threads);

    try {
        if (ipm->parsed()) return cmd_ipm(common, in1, out1, plane);
        if (detect->parsed()) return cmd_detect(common, dopt);
        if (segment->parsed()) return cmd_segment(common, in1, out1);
        if (departure->parsed()) return cmd_departure(common, in1, in2);
        if (synth->parsed()) return cmd_synth(common, in1, out1);
        if (eval->parsed()) return cmd_eval(common, eopt);
        if (train->parsed()) return cmd_train_gmm(common, in1, out1);
    } catch (const Error& e) {
        std::cerr << "ldw: " << e.what() << '\n';
        return exit_code_for(e);
    } catch (const fs::filesystem_error& e) {
        std::cerr << "ldw: Io: " << e.what() << '\n';
        return kExitIo;
    } catch (const std::exception& e) {
        std::cerr << "ldw: " << e.what() << '\n';
        return kExitFailure;
    }
    return kExitFailure;
}

}  // namespace ldw::cli
