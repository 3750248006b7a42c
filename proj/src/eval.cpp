#include "ldw/eval.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "ldw/error.hpp"

namespace ldw {

std::optional<double> TruthLine::y_at(double x) const {
    if (points.empty() || x < points.front().x || x > points.back().x) return std::nullopt;
    auto it = std::lower_bound(points.begin(), points.end(), x,
                               [](const GroundPoint& p, double v) { return p.x < v; });
    if (it == points.begin()) return it->y;
    const auto& hi = *it;
    const auto& lo = *(it - 1);
    if (hi.x == lo.x) return hi.y;
    const double t = (x - lo.x) / (hi.x - lo.x);
    return lo.y + (hi.y - lo.y) * t;
}

PixelCounts& PixelCounts::operator+=(const PixelCounts& o) {
    tp += o.tp;
    fp += o.fp;
    for (size_t k = 0; k < tp_k.size(); ++k) {
        tp_k[k] += o.tp_k[k];
        fp_k[k] += o.fp_k[k];
    }
    return *this;
}

std::optional<double> precision(long tp, long fp) {
    if (tp + fp <= 0) return std::nullopt;
    return static_cast<double>(tp) / static_cast<double>(tp + fp);
}

namespace {

void check_grid(const GridSpec& grid, const PlaneU8& plane, const char* what) {
    if (plane.empty()) return;
    if (plane.rows() != grid.rows() || plane.cols() != grid.cols()) {
        throw Error(ErrorCode::GridMismatch, std::string(what) + " does not match the grid");
    }
}

int band_cells(const GridSpec& grid, double tolerance) {
    return static_cast<int>(std::floor(tolerance / grid.resolution + 1e-9));
}

bool cell_ok(const PlaneU8& valid, int r, int c) { return valid.empty() || valid(r, c) != 0; }

}  // namespace

PixelCounts count_pixels(const PlaneU8& pred, const PlaneU8& truth, const GridSpec& grid, double tolerance) {
    check_grid(grid, pred, "prediction mask");
    check_grid(grid, truth, "truth mask");
    if (pred.empty() || truth.empty()) throw Error(ErrorCode::GridMismatch, "empty mask");
    const int w = band_cells(grid, tolerance);
    PixelCounts out;
    for (int r = 0; r < pred.rows(); ++r) {
        const double x = grid.x_at(r);
        for (int c = 0; c < pred.cols(); ++c) {
            if (!pred(r, c)) continue;
            bool hit = false;
            for (int d = std::max(0, c - w); d <= std::min(pred.cols() - 1, c + w) && !hit; ++d) hit = truth(r, d) != 0;
            (hit ? out.tp : out.fp) += 1;
            for (size_t k = 0; k < kPreRanges.size(); ++k) {
                if (x <= kPreRanges[k]) (hit ? out.tp_k[k] : out.fp_k[k]) += 1;
            }
        }
    }
    return out;
}

PlaneU8 rasterize_curves(const std::vector<LaneCurve>& curves, const GridSpec& grid, const PlaneU8& valid) {
    check_grid(grid, valid, "valid mask");
    PlaneU8 out(grid.rows(), grid.cols());
    const double half = 0.5 * grid.resolution;
    for (const auto& curve : curves) {
        for (int r = 0; r < out.rows(); ++r) {
            const double x = grid.x_at(r);
            if (x < curve.x_lo - half || x > curve.x_hi + half) continue;
            const long c = std::lround(grid.col_of(curve(x)));
            if (c < 0 || c >= out.cols()) continue;
            if (cell_ok(valid, r, static_cast<int>(c))) out(r, static_cast<int>(c)) = 1;
        }
    }
    return out;
}

PlaneU8 rasterize_truth(const std::vector<TruthLine>& lines, const GridSpec& grid, double width, const PlaneU8& valid) {
    check_grid(grid, valid, "valid mask");
    PlaneU8 out(grid.rows(), grid.cols());
    const double half = 0.5 * std::max(width, grid.resolution);
    for (const auto& line : lines) {
        for (int r = 0; r < out.rows(); ++r) {
            const auto y = line.y_at(grid.x_at(r));
            if (!y) continue;
            const int lo = std::max(0, static_cast<int>(std::floor(grid.col_of(*y + half))));
            const int hi = std::min(out.cols() - 1, static_cast<int>(std::ceil(grid.col_of(*y - half))));
            for (int c = lo; c <= hi; ++c) {
                if (std::abs(grid.y_at(c) - *y) <= half + 1e-12 && cell_ok(valid, r, c)) out(r, c) = 1;
            }
        }
    }
    return out;
}

TruthLine sample_curve(const LaneCurve& curve, const GridSpec& grid) {
    TruthLine line;
    for (int r = grid.rows() - 1; r >= 0; --r) {
        const double x = grid.x_at(r);
        if (x >= curve.x_lo && x <= curve.x_hi) line.points.push_back({x, curve(x)});
    }
    return line;
}

namespace {

struct PairMatch {
    int rows = 0;
    int matched = 0;
    double dev_left = 0.0;
    double dev_right = 0.0;
};

PairMatch match_pair(const LaneCurve& pl, const LaneCurve& pr, const TruthLine& tl, const TruthLine& tr,
                     const GridSpec& grid, const PlaneU8& valid, double tol) {
    PairMatch m;
    const double half = 0.5 * grid.resolution;
    auto visible = [&](int r, double y) {
        if (std::abs(y) > grid.y_max) return false;
        const long c = std::lround(grid.col_of(y));
        return c >= 0 && c < grid.cols() && cell_ok(valid, r, static_cast<int>(c));
    };
    auto covers = [&](const LaneCurve& p, double x) { return x >= p.x_lo - half && x <= p.x_hi + half; };
    for (int r = 0; r < grid.rows(); ++r) {
        const double x = grid.x_at(r);
        const auto yl = tl.y_at(x), yr = tr.y_at(x);
        if (!yl || !yr || !visible(r, *yl) || !visible(r, *yr)) continue;
        ++m.rows;
        const double dl = std::abs(pl(x) - *yl), dr = std::abs(pr(x) - *yr);
        m.dev_left += dl;
        m.dev_right += dr;
        if (covers(pl, x) && covers(pr, x) && dl <= tol && dr <= tol) ++m.matched;
    }
    if (m.rows > 0) {
        m.dev_left /= m.rows;
        m.dev_right /= m.rows;
    }
    return m;
}

std::optional<std::array<TruthLine, 2>> truth_ego(const std::vector<TruthLine>& lanes, double vehicle_y, double x_probe) {
    const TruthLine* left = nullptr;
    const TruthLine* right = nullptr;
    double yl = 0.0, yr = 0.0;
    for (const auto& l : lanes) {
        const auto y = l.y_at(x_probe);
        if (!y) continue;
        if (*y > vehicle_y && (!left || *y < yl)) {
            left = &l;
            yl = *y;
        } else if (*y < vehicle_y && (!right || *y > yr)) {
            right = &l;
            yr = *y;
        }
    }
    if (!left || !right) return std::nullopt;
    return std::array<TruthLine, 2>{*left, *right};
}

}  // namespace

FrameReport evaluate_frame(const FramePrediction& pred, const FrameTruth& truth, const EvalParams& params,
                           const std::string& name) {
    if (!(pred.grid == truth.grid)) throw Error(ErrorCode::GridMismatch, "prediction and truth grids differ");
    const GridSpec& grid = truth.grid;
    check_grid(grid, truth.lane_mask, "truth lane mask");
    check_grid(grid, truth.valid, "truth valid mask");

    FrameReport rep;
    rep.frame = name;
    rep.runtime_ms = pred.runtime_ms;
    const PlaneU8 truth_mask =
        truth.lane_mask.empty() ? rasterize_truth(truth.lanes, grid, params.line_width, truth.valid) : truth.lane_mask;
    const PlaneU8 pred_mask = rasterize_curves(pred.curves, grid, truth.valid);
    rep.counts = count_pixels(pred_mask, truth_mask, grid, params.tolerance);

    rep.curves = static_cast<int>(pred.curves.size());
    for (const auto& curve : pred.curves) {
        const PlaneU8 one = rasterize_curves({curve}, grid, truth.valid);
        const auto c = count_pixels(one, truth_mask, grid, params.tolerance);
        if (c.tp + c.fp == 0 || static_cast<double>(c.tp) < params.curve_tp_fraction * (c.tp + c.fp)) {
            ++rep.false_positive_curves;
        }
    }

    if (const auto ego_truth = truth_ego(truth.lanes, params.vehicle_y, params.x_probe)) {
        bool ok = false;
        try {
            const auto ego = ego_lane_and_offset(pred.curves, params.vehicle_y, params.x_probe);
            const auto m = match_pair(ego.left, ego.right, (*ego_truth)[0], (*ego_truth)[1], grid, truth.valid,
                                      params.tolerance);
            ok = m.rows > 0 && m.matched >= params.row_fraction * m.rows;
        } catch (const Error& e) {
            if (e.code() != ErrorCode::NoEgoLane) throw;
        }
        rep.ego_correct = ok;
    }

    if (truth.boundaries) {
        bool ok = false;
        if (pred.boundaries) {
            const auto m = match_pair((*pred.boundaries)[0], (*pred.boundaries)[1], (*truth.boundaries)[0],
                                      (*truth.boundaries)[1], grid, truth.valid, params.tolerance);
            ok = m.rows > 0 && m.matched >= params.row_fraction * m.rows;
            if (m.rows > 0) rep.boundary_deviation = std::max(m.dev_left, m.dev_right);
        }
        rep.boundary_correct = ok;
    }
    return rep;
}

EvalReport aggregate(std::vector<FrameReport> frames) {
    EvalReport rep;
    int ego_n = 0, ego_ok = 0, bnd_n = 0, bnd_ok = 0;
    for (const auto& f : frames) {
        rep.counts += f.counts;
        rep.curves += f.curves;
        rep.false_positive_curves += f.false_positive_curves;
        if (f.ego_correct) {
            ++ego_n;
            ego_ok += *f.ego_correct ? 1 : 0;
        }
        if (f.boundary_correct) {
            ++bnd_n;
            bnd_ok += *f.boundary_correct ? 1 : 0;
        }
        for (const auto& [k, v] : f.runtime_ms) rep.runtime_ms[k] += v;
    }
    if (ego_n > 0) rep.correct_rate = static_cast<double>(ego_ok) / ego_n;
    if (bnd_n > 0) rep.correct_boundary = static_cast<double>(bnd_ok) / bnd_n;
    if (rep.curves > 0) rep.false_positive_rate = static_cast<double>(rep.false_positive_curves) / rep.curves;
    if (!frames.empty()) {
        for (auto& [k, v] : rep.runtime_ms) v /= static_cast<double>(frames.size());
    }
    rep.frames = std::move(frames);
    return rep;
}

namespace {

using nlohmann::json;

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }
json opt(const std::optional<bool>& v) { return v ? json(*v) : json(nullptr); }

json counts_json(const PixelCounts& c) {
    return {{"TP", c.tp},
            {"FP", c.fp},
            {"PRE", opt(precision(c.tp, c.fp))},
            {"PRE_20", opt(precision(c.tp_k[0], c.fp_k[0]))},
            {"PRE_30", opt(precision(c.tp_k[1], c.fp_k[1]))},
            {"PRE_40", opt(precision(c.tp_k[2], c.fp_k[2]))}};
}

std::string cell(const std::optional<double>& v) {
    if (!v) return "-";
    std::ostringstream os;
    os << std::fixed << std::setprecision(2) << 100.0 * *v << '%';
    return os.str();
}

}  // namespace

std::string report_to_json(const EvalReport& report) {
    json j;
    j["v"] = 1;
    json agg = counts_json(report.counts);
    agg["frames"] = report.frames.size();
    agg["curves"] = report.curves;
    agg["false_positive_curves"] = report.false_positive_curves;
    agg["correct_rate"] = opt(report.correct_rate);
    agg["false_positive_rate"] = opt(report.false_positive_rate);
    agg["correct_boundary"] = opt(report.correct_boundary);
    agg["runtime_ms"] = report.runtime_ms;
    j["aggregate"] = agg;
    j["frames"] = json::array();
    for (const auto& f : report.frames) {
        json fj = counts_json(f.counts);
        fj["frame"] = f.frame;
        fj["curves"] = f.curves;
        fj["false_positive_curves"] = f.false_positive_curves;
        fj["ego_correct"] = opt(f.ego_correct);
        fj["boundary_correct"] = opt(f.boundary_correct);
        fj["boundary_deviation_m"] = opt(f.boundary_deviation);
        fj["runtime_ms"] = f.runtime_ms;
        j["frames"].push_back(fj);
    }
    return j.dump(2);
}

std::string report_to_table(const EvalReport& report) {
    std::ostringstream os;
    const int w = 14;
    os << std::left << std::setw(8) << "frames" << std::right << std::setw(w) << "CorrectRate" << std::setw(w)
       << "FalsePositive" << std::setw(w) << "CorrectBound" << '\n';
    os << std::left << std::setw(8) << report.frames.size() << std::right << std::setw(w) << cell(report.correct_rate)
       << std::setw(w) << cell(report.false_positive_rate) << std::setw(w) << cell(report.correct_boundary) << "\n\n";
    os << std::left << std::setw(8) << "TP" << std::setw(8) << "FP" << std::right << std::setw(w) << "PRE"
       << std::setw(w) << "PRE-20" << std::setw(w) << "PRE-30" << std::setw(w) << "PRE-40" << std::setw(w)
       << "ms/frame" << '\n';
    double total_ms = 0.0;
    for (const auto& [k, v] : report.runtime_ms) {
        if (k == "total") total_ms = v;
    }
    std::ostringstream ms;
    ms << std::fixed << std::setprecision(1) << total_ms;
    os << std::left << std::setw(8) << report.counts.tp << std::setw(8) << report.counts.fp << std::right
       << std::setw(w) << cell(report.pre()) << std::setw(w) << cell(report.pre_k(0)) << std::setw(w)
       << cell(report.pre_k(1)) << std::setw(w) << cell(report.pre_k(2)) << std::setw(w) << ms.str() << '\n';
    return os.str();
}

}  // namespace ldw
