#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ldw/image.hpp"
#include "ldw/ipm.hpp"
#include "ldw/lanes.hpp"

namespace ldw {

/// Ground-plane polyline, vehicle frame, sorted by x.
struct TruthLine {
    std::vector<GroundPoint> points;

    /// Linear interpolation in x; nullopt outside the covered x range.
    std::optional<double> y_at(double x) const;
};

struct FrameTruth {
    GridSpec grid;
    PlaneU8 lane_mask;  ///< nonzero on lane cells; empty plane = rasterize `lanes`
    PlaneU8 valid;      ///< empty plane = every cell counts
    std::vector<TruthLine> lanes;
    std::optional<std::array<TruthLine, 2>> boundaries;  ///< left (larger y), right
};

struct FramePrediction {
    GridSpec grid;
    std::vector<LaneCurve> curves;
    std::optional<std::array<LaneCurve, 2>> boundaries;  ///< left, right
    std::map<std::string, double> runtime_ms;
};

struct EvalParams {
    double tolerance = 0.3;      ///< lateral match band (m)
    double row_fraction = 0.8;   ///< rows that must match for a correct ego lane / boundary
    double x_probe = 5.0;        ///< where the ego pair is chosen
    double vehicle_y = 0.0;
    double line_width = 0.15;    ///< paint width used to rasterize polyline truth
    double curve_tp_fraction = 0.5;  ///< curves with fewer TP cells count as false positives
};

inline constexpr std::array<double, 3> kPreRanges = {20.0, 30.0, 40.0};

/// Pixel counts, total and cumulative over rows with x <= 20, 30, 40 m.
struct PixelCounts {
    long tp = 0;
    long fp = 0;
    std::array<long, 3> tp_k{};
    std::array<long, 3> fp_k{};

    PixelCounts& operator+=(const PixelCounts& o);
    friend bool operator==(const PixelCounts&, const PixelCounts&) = default;
};

/// TP / (TP + FP), nullopt when both are zero.
std::optional<double> precision(long tp, long fp);

/// A predicted cell is a true positive when a truth cell lies in the same row
/// within floor(tolerance / resolution) columns, otherwise a false positive.
PixelCounts count_pixels(const PlaneU8& pred, const PlaneU8& truth, const GridSpec& grid, double tolerance);

/// One cell per grid row inside [x_lo, x_hi]; cells outside `valid` (when
/// given) are skipped.
PlaneU8 rasterize_curves(const std::vector<LaneCurve>& curves, const GridSpec& grid, const PlaneU8& valid = {});
/// Cells whose center is within max(width, resolution) / 2 of a line.
PlaneU8 rasterize_truth(const std::vector<TruthLine>& lines, const GridSpec& grid, double width,
                        const PlaneU8& valid = {});

TruthLine sample_curve(const LaneCurve& curve, const GridSpec& grid);

struct FrameReport {
    std::string frame;
    PixelCounts counts;
    int curves = 0;
    int false_positive_curves = 0;
    std::optional<bool> ego_correct;       ///< nullopt when truth has no ego pair
    std::optional<bool> boundary_correct;  ///< nullopt when truth has no boundaries
    std::optional<double> boundary_deviation;  ///< worse side's mean |dy| (m)
    std::map<std::string, double> runtime_ms;
};

struct EvalReport {
    std::vector<FrameReport> frames;
    PixelCounts counts;
    int curves = 0;
    int false_positive_curves = 0;
    std::optional<double> correct_rate;
    std::optional<double> false_positive_rate;
    std::optional<double> correct_boundary;
    std::map<std::string, double> runtime_ms;  ///< mean per frame

    std::optional<double> pre() const { return precision(counts.tp, counts.fp); }
    std::optional<double> pre_k(int i) const { return precision(counts.tp_k[i], counts.fp_k[i]); }
};

/// Throws GridMismatch when the grids or plane shapes disagree.
FrameReport evaluate_frame(const FramePrediction& pred, const FrameTruth& truth, const EvalParams& params = {},
                           const std::string& name = {});
EvalReport aggregate(std::vector<FrameReport> frames);

std::string report_to_json(const EvalReport& report);
std::string report_to_table(const EvalReport& report);

}  // namespace ldw
