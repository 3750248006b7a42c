#include "ldw/departure.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "ldw/error.hpp"

namespace ldw {

namespace {

double sample_bilinear(const PlaneF& img, double r, double c) {
    r = std::clamp(r, 0.0, img.rows() - 1.0);
    c = std::clamp(c, 0.0, img.cols() - 1.0);
    const int r0 = std::min(static_cast<int>(r), img.rows() - 2 < 0 ? 0 : img.rows() - 2);
    const int c0 = std::min(static_cast<int>(c), img.cols() - 2 < 0 ? 0 : img.cols() - 2);
    const int r1 = std::min(r0 + 1, img.rows() - 1), c1 = std::min(c0 + 1, img.cols() - 1);
    const double fr = r - r0, fc = c - c0;
    const double top = img(r0, c0) + (img(r0, c1) - img(r0, c0)) * fc;
    const double bot = img(r1, c0) + (img(r1, c1) - img(r1, c0)) * fc;
    return top + (bot - top) * fr;
}

PlaneF halve(const PlaneF& img) {
    PlaneF out(std::max(1, img.rows() / 2), std::max(1, img.cols() / 2));
    for (int r = 0; r < out.rows(); ++r) {
        for (int c = 0; c < out.cols(); ++c) {
            const int r0 = std::min(2 * r, img.rows() - 1), r1 = std::min(2 * r + 1, img.rows() - 1);
            const int c0 = std::min(2 * c, img.cols() - 1), c1 = std::min(2 * c + 1, img.cols() - 1);
            out(r, c) = 0.25 * (img(r0, c0) + img(r0, c1) + img(r1, c0) + img(r1, c1));
        }
    }
    return out;
}

struct Gradients {
    PlaneF gr;
    PlaneF gc;
};

Gradients central_gradients(const PlaneF& img) {
    Gradients g{PlaneF(img.rows(), img.cols()), PlaneF(img.rows(), img.cols())};
    for (int r = 0; r < img.rows(); ++r) {
        const int ru = std::max(r - 1, 0), rd = std::min(r + 1, img.rows() - 1);
        for (int c = 0; c < img.cols(); ++c) {
            const int cl = std::max(c - 1, 0), cr = std::min(c + 1, img.cols() - 1);
            g.gr(r, c) = (img(rd, c) - img(ru, c)) / std::max(1, rd - ru);
            g.gc(r, c) = (img(r, cr) - img(r, cl)) / std::max(1, cr - cl);
        }
    }
    return g;
}

struct LkResult {
    double vr = 0.0;
    double vc = 0.0;
    double confidence = 0.0;
};

/// Iterative Lucas-Kanade at one point, starting from (vr, vc).
LkResult track(const PlaneF& prev, const PlaneF& curr, const Gradients& g, double pr, double pc, int half,
               double vr, double vc, int iterations) {
    double a = 0.0, b = 0.0, d = 0.0;
    const int r0 = static_cast<int>(pr), c0 = static_cast<int>(pc);
    for (int dr = -half; dr <= half; ++dr) {
        for (int dc = -half; dc <= half; ++dc) {
            const int r = std::clamp(r0 + dr, 0, prev.rows() - 1), c = std::clamp(c0 + dc, 0, prev.cols() - 1);
            a += g.gr(r, c) * g.gr(r, c);
            b += g.gr(r, c) * g.gc(r, c);
            d += g.gc(r, c) * g.gc(r, c);
        }
    }
    const double n = (2.0 * half + 1) * (2.0 * half + 1);
    const double tr = 0.5 * (a + d);
    const double disc = std::sqrt(std::max(0.0, 0.25 * (a - d) * (a - d) + b * b));
    const double lmax = tr + disc, lmin = tr - disc;
    LkResult res{vr, vc, std::max(0.0, lmin) / (lmax + 1e-6 * n)};
    const double det = a * d - b * b;
    if (!(det > 1e-12 * n * n) || res.confidence <= 0.0) return res;
    for (int it = 0; it < iterations; ++it) {
        double er = 0.0, ec = 0.0;
        for (int dr = -half; dr <= half; ++dr) {
            for (int dc = -half; dc <= half; ++dc) {
                const int r = std::clamp(r0 + dr, 0, prev.rows() - 1), c = std::clamp(c0 + dc, 0, prev.cols() - 1);
                const double diff = prev(r, c) - sample_bilinear(curr, r + res.vr, c + res.vc);
                er += g.gr(r, c) * diff;
                ec += g.gc(r, c) * diff;
            }
        }
        const double ur = (d * er - b * ec) / det;
        const double uc = (a * ec - b * er) / det;
        res.vr += ur;
        res.vc += uc;
        if (std::abs(ur) < 1e-4 && std::abs(uc) < 1e-4) break;
    }
    return res;
}

bool window_valid(const PlaneU8* valid, int r0, int c0, int half) {
    if (!valid) return true;
    for (int r = r0 - half; r <= r0 + half; ++r) {
        for (int c = c0 - half; c <= c0 + half; ++c) {
            if (r < 0 || c < 0 || r >= valid->rows() || c >= valid->cols() || !(*valid)(r, c)) return false;
        }
    }
    return true;
}

double median(std::vector<double> v) {
    const size_t n = v.size();
    std::nth_element(v.begin(), v.begin() + n / 2, v.end());
    const double hi = v[n / 2];
    if (n % 2) return hi;
    return 0.5 * (hi + *std::max_element(v.begin(), v.begin() + n / 2));
}

}  // namespace

FlowField estimate_flow(const PlaneF& prev, const PlaneF& curr, const FlowParams& params) {
    if (!prev.same_shape(curr)) throw Error(ErrorCode::DimensionMismatch, "flow frames differ in size");
    if (params.valid && !prev.same_shape(*params.valid)) {
        throw Error(ErrorCode::DimensionMismatch, "flow valid mask differs in size");
    }
    if (params.grid_step < 1 || params.window < 3) throw Error(ErrorCode::InvalidInput, "bad flow grid or window");
    const int half = params.window / 2;
    const int row_end = params.row_end < 0 ? prev.rows() : std::min(params.row_end, prev.rows());
    const int row_begin = std::max(params.row_begin, 0);

    const PlaneF prev2 = halve(prev), curr2 = halve(curr);
    const Gradients g = central_gradients(prev), g2 = central_gradients(prev2);
    const int half2 = std::max(2, half / 2);

    std::vector<std::pair<int, int>> points;
    for (int r = row_begin + half; r < row_end - half; r += params.grid_step) {
        for (int c = half; c < prev.cols() - half; c += params.grid_step) {
            if (window_valid(params.valid, r, c, half)) points.emplace_back(r, c);
        }
    }
    std::vector<FlowSample> out(points.size());
    std::vector<unsigned char> keep(points.size(), 0);
#pragma omp parallel for schedule(dynamic, 8)
    for (long i = 0; i < static_cast<long>(points.size()); ++i) {
        const auto [r, c] = points[i];
        const auto coarse = track(prev2, curr2, g2, r / 2.0, c / 2.0, half2, 0.0, 0.0, params.iterations);
        const double vr0 = coarse.confidence > 0.0 ? 2.0 * coarse.vr : 0.0;
        const double vc0 = coarse.confidence > 0.0 ? 2.0 * coarse.vc : 0.0;
        const auto fine = track(prev, curr, g, r, c, half, vr0, vc0, params.iterations);
        out[i] = {r, c, fine.vr, fine.vc, std::min(1.0, fine.confidence)};
        keep[i] = fine.confidence >= params.min_confidence && std::isfinite(fine.vr) && std::isfinite(fine.vc);
    }
    FlowField field;
    for (size_t i = 0; i < out.size(); ++i) {
        if (keep[i]) field.samples.push_back(out[i]);
    }
    return field;
}

double departure_angle(const FlowField& flow) {
    if (flow.samples.size() < 5) throw Error(ErrorCode::InsufficientFlow, "fewer than 5 flow samples");
    std::vector<double> vx, vy;
    vx.reserve(flow.samples.size());
    vy.reserve(flow.samples.size());
    for (const auto& s : flow.samples) {
        vx.push_back(s.vx);
        vy.push_back(s.vy);
    }
    const double mx = median(std::move(vx)), my = median(std::move(vy));
    if (std::abs(mx) < 1e-6) return my >= 0.0 ? std::numbers::pi / 2 : -std::numbers::pi / 2;
    return std::atan(my / mx);
}

std::optional<double> road_bend(std::span<const LaneCurve> curves, double x) {
    std::vector<std::pair<double, double>> bw;
    double total = 0.0;
    for (const auto& c : curves) {
        const double w = static_cast<double>(std::max(c.inlier_count, 1));
        bw.emplace_back(c.bend(x), w);
        total += w;
    }
    if (bw.empty()) return std::nullopt;
    std::sort(bw.begin(), bw.end());
    double acc = 0.0;
    for (const auto& [b, w] : bw) {
        acc += w;
        if (2.0 * acc >= total) return b;
    }
    return bw.back().first;
}

DepartureEstimate warn(double lambda, const std::optional<EgoLane>& ego, const WarnParams& params,
                       std::span<const LaneCurve> curves) {
    DepartureEstimate est;
    est.lambda = lambda;
    double threshold = params.lambda_threshold;
    if (ego) {
        est.lateral_offset = ego->offset;
        const auto all = road_bend(curves, params.x_probe);
        const double bend =
            all ? *all : 0.5 * (ego->left.bend(params.x_probe) + ego->right.bend(params.x_probe));
        est.gated_by_curvature = std::abs(bend) > params.curvature_threshold;
    } else {
        threshold *= params.no_lane_factor;
    }
    est.warning = std::abs(lambda) > threshold && !est.gated_by_curvature;
    return est;
}

}  // namespace ldw
