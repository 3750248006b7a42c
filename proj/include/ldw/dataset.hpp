#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ldw/camera.hpp"
#include "ldw/eval.hpp"
#include "ldw/scene.hpp"

namespace ldw {

// Directory layout: NNNNNN.ppm (or .pgm) frames with optional
//   NNNNNN.lanes.txt     one lane per line, space-separated "x,y" pairs (m)
//   NNNNNN.boundary.txt  two such lines, left edge then right edge
//   NNNNNN.mask.pgm      class labels on the IPM grid (0 road, 1 scene, 2 obstacle)
// and camera.cfg for the whole directory.

inline constexpr const char* kCameraFile = "camera.cfg";

struct DatasetEntry {
    std::string stem;
    std::filesystem::path image;
    std::optional<std::filesystem::path> lanes;
    std::optional<std::filesystem::path> boundary;
    std::optional<std::filesystem::path> mask;

    bool has_truth() const { return lanes || boundary || mask; }
};

struct Dataset {
    std::filesystem::path dir;
    std::optional<CameraModel> camera;  ///< absent only when there are no frames
    std::vector<DatasetEntry> frames;   ///< sorted by stem
};

/// Frames of `dir` sorted by stem, truth siblings attached; no camera check.
std::vector<DatasetEntry> list_frames(const std::filesystem::path& dir);

/// Throws Io when `dir` is not a directory and MissingCamera when frames
/// exist without camera.cfg.
Dataset ingest_dataset(const std::filesystem::path& dir);

/// Throws MalformedTruth naming the 1-based line.
std::vector<TruthLine> parse_lines_truth(const std::string& text, const std::string& origin = "<string>");
std::vector<TruthLine> read_lines_truth(const std::filesystem::path& path);
std::string format_lines_truth(const std::vector<TruthLine>& lines);

/// Truth for evaluation; `valid` is the camera footprint on the grid.
FrameTruth load_truth(const DatasetEntry& entry, const GridSpec& grid, const PlaneU8& valid);
std::optional<LabelMask> load_class_mask(const DatasetEntry& entry, const GridSpec& grid);

/// Evaluation truth from the generator: lanes and boundaries sampled on the
/// grid rows, lane mask and footprint taken as rendered.
FrameTruth truth_from_scene(const SceneTruth& truth);

/// Writes NNNNNN.ppm, .lanes.txt, .boundary.txt, .mask.pgm and .truth.json.
void write_synth_frame(const std::filesystem::path& dir, const std::string& stem, const RenderedFrame& frame);

std::string frame_stem(int index);

}  // namespace ldw
