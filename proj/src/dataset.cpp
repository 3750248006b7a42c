#include "ldw/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "ldw/error.hpp"
#include "ldw/pnm.hpp"

namespace ldw {

namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void spill(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out || !(out << text)) throw Error(ErrorCode::Io, "cannot write " + path.string());
}

bool is_frame_name(const std::string& name, std::string& stem) {
    for (const char* ext : {".ppm", ".pgm", ".png"}) {
        const std::string e(ext);
        if (name.size() > e.size() && name.ends_with(e)) {
            stem = name.substr(0, name.size() - e.size());
            if (stem.find('.') != std::string::npos) return false;  // NNNNNN.mask.pgm
            return !stem.empty() && std::all_of(stem.begin(), stem.end(), [](char c) { return c >= '0' && c <= '9'; });
        }
    }
    return false;
}

bool parse_double(std::string_view s, double& v) {
    if (s.empty()) return false;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    return res.ec == std::errc() && res.ptr == s.data() + s.size() && std::isfinite(v);
}

std::optional<fs::path> sibling(const fs::path& dir, const std::string& stem, const char* suffix) {
    fs::path p = dir / (stem + suffix);
    if (fs::exists(p)) return p;
    return std::nullopt;
}

}  // namespace

std::vector<DatasetEntry> list_frames(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw Error(ErrorCode::Io, "not a directory: " + dir.string());
    std::vector<DatasetEntry> frames;
    for (const auto& item : fs::directory_iterator(dir)) {
        if (!item.is_regular_file()) continue;
        std::string stem;
        if (!is_frame_name(item.path().filename().string(), stem)) continue;
        DatasetEntry e;
        e.stem = stem;
        e.image = item.path();
        e.lanes = sibling(dir, stem, ".lanes.txt");
        e.boundary = sibling(dir, stem, ".boundary.txt");
        e.mask = sibling(dir, stem, ".mask.pgm");
        frames.push_back(std::move(e));
    }
    std::sort(frames.begin(), frames.end(),
              [](const DatasetEntry& a, const DatasetEntry& b) { return a.stem < b.stem; });
    const auto dup = std::adjacent_find(frames.begin(), frames.end(),
                                        [](const DatasetEntry& a, const DatasetEntry& b) { return a.stem == b.stem; });
    if (dup != frames.end()) throw Error(ErrorCode::InvalidInput, "frame " + dup->stem + " has more than one image");
    return frames;
}

Dataset ingest_dataset(const fs::path& dir) {
    Dataset ds;
    ds.dir = dir;
    ds.frames = list_frames(dir);
    if (ds.frames.empty()) return ds;
    const fs::path cam = dir / kCameraFile;
    if (!fs::exists(cam)) throw Error(ErrorCode::MissingCamera, "no " + std::string(kCameraFile) + " in " + dir.string());
    ds.camera = load_camera(cam);
    return ds;
}

std::vector<TruthLine> parse_lines_truth(const std::string& text, const std::string& origin) {
    std::vector<TruthLine> lines;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::istringstream toks(line);
        std::string tok;
        TruthLine tl;
        while (toks >> tok) {
            const auto comma = tok.find(',');
            GroundPoint p;
            if (comma == std::string::npos || !parse_double(std::string_view(tok).substr(0, comma), p.x) ||
                !parse_double(std::string_view(tok).substr(comma + 1), p.y)) {
                throw Error(ErrorCode::MalformedTruth,
                            origin + ":" + std::to_string(lineno) + ": expected x,y but got '" + tok + "'");
            }
            tl.points.push_back(p);
        }
        if (tl.points.empty()) continue;
        std::stable_sort(tl.points.begin(), tl.points.end(),
                         [](const GroundPoint& a, const GroundPoint& b) { return a.x < b.x; });
        lines.push_back(std::move(tl));
    }
    return lines;
}

std::vector<TruthLine> read_lines_truth(const fs::path& path) { return parse_lines_truth(slurp(path), path.string()); }

std::string format_lines_truth(const std::vector<TruthLine>& lines) {
    std::string out;
    char buf[64];
    for (const auto& l : lines) {
        for (size_t i = 0; i < l.points.size(); ++i) {
            std::snprintf(buf, sizeof buf, "%s%.4f,%.6f", i ? " " : "", l.points[i].x, l.points[i].y);
            out += buf;
        }
        out += '\n';
    }
    return out;
}

FrameTruth load_truth(const DatasetEntry& entry, const GridSpec& grid, const PlaneU8& valid) {
    FrameTruth t;
    t.grid = grid;
    t.valid = valid;
    if (entry.lanes) t.lanes = read_lines_truth(*entry.lanes);
    if (entry.boundary) {
        auto b = read_lines_truth(*entry.boundary);
        if (b.size() != 2) {
            throw Error(ErrorCode::MalformedTruth, entry.boundary->string() + ": expected two boundary lines");
        }
        t.boundaries = std::array<TruthLine, 2>{std::move(b[0]), std::move(b[1])};
    }
    return t;
}

std::optional<LabelMask> load_class_mask(const DatasetEntry& entry, const GridSpec& grid) {
    if (!entry.mask) return std::nullopt;
    LabelMask m{grid, read_pgm(*entry.mask)};
    if (m.labels.rows() != grid.rows() || m.labels.cols() != grid.cols()) {
        throw Error(ErrorCode::GridMismatch, entry.mask->string() + " does not match the grid");
    }
    return m;
}

FrameTruth truth_from_scene(const SceneTruth& truth) {
    FrameTruth t;
    t.grid = truth.spec;
    t.valid = truth.valid;
    t.lane_mask = truth.lane_mask;
    auto sample = [&](const Cubic& c) { return sample_curve(c.as_lane(0.0, truth.spec.x_max), truth.spec); };
    for (const auto& c : truth.lanes) t.lanes.push_back(sample(c));
    t.boundaries = std::array<TruthLine, 2>{sample(truth.left_boundary), sample(truth.right_boundary)};
    return t;
}

std::string frame_stem(int index) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%06d", index);
    return buf;
}

void write_synth_frame(const fs::path& dir, const std::string& stem, const RenderedFrame& frame) {
    const auto t = truth_from_scene(frame.truth);
    write_ppm(dir / (stem + ".ppm"), frame.image);
    spill(dir / (stem + ".lanes.txt"), format_lines_truth(t.lanes));
    spill(dir / (stem + ".boundary.txt"), format_lines_truth({(*t.boundaries)[0], (*t.boundaries)[1]}));
    write_pgm(dir / (stem + ".mask.pgm"), frame.truth.classes.labels);
    nlohmann::json j;
    j["v"] = 1;
    j["drift_angle_rad"] = frame.truth.drift_angle;
    j["drift_angle_deg"] = frame.truth.drift_angle * 180.0 / 3.14159265358979323846;
    j["pose"] = {{"x", frame.truth.pose.x}, {"y", frame.truth.pose.y}};
    auto cubic = [](const Cubic& c) { return nlohmann::json{{"y0", c.y0}, {"a", c.a}, {"b", c.b}, {"c", c.c}}; };
    j["lanes"] = nlohmann::json::array();
    for (const auto& c : frame.truth.lanes) j["lanes"].push_back(cubic(c));
    j["left_boundary"] = cubic(frame.truth.left_boundary);
    j["right_boundary"] = cubic(frame.truth.right_boundary);
    spill(dir / (stem + ".truth.json"), j.dump(2) + "\n");
}

}  // namespace ldw
