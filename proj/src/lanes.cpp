#include "ldw/lanes.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <random>

#include "ldw/error.hpp"

namespace ldw {
namespace {

std::uint64_t splitmix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t trial_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t trial) {
    return splitmix(splitmix(splitmix(seed) ^ stream) ^ trial);
}

double x_scale_of(std::span<const GroundPoint> pts) {
    double s = 0.0;
    for (const auto& p : pts) s = std::max(s, std::abs(p.x));
    return s > 0.0 ? s : 1.0;
}

LaneCurve from_scaled(const Eigen::Vector4d& p, double scale) {
    LaneCurve c;
    c.y0 = p[0];
    c.a = p[1] / scale;
    c.b = p[2] / (scale * scale);
    c.c = p[3] / (scale * scale * scale);
    return c;
}

// Exact cubic through four samples; nullopt when the scaled Vandermonde
// system is too ill-conditioned.
std::optional<LaneCurve> solve_minimal(const GroundPoint* const* s, double scale, double max_condition) {
    Eigen::Matrix4d v;
    Eigen::Vector4d rhs;
    for (int i = 0; i < 4; ++i) {
        const double t = s[i]->x / scale;
        v(i, 0) = 1.0;
        v(i, 1) = t;
        v(i, 2) = t * t;
        v(i, 3) = t * t * t;
        rhs[i] = s[i]->y;
    }
    const Eigen::JacobiSVD<Eigen::Matrix4d> svd(v);
    const auto& sv = svd.singularValues();
    if (!(sv[3] > 0.0) || sv[0] / sv[3] > max_condition) return std::nullopt;
    return from_scaled(v.colPivHouseholderQr().solve(rhs), scale);
}

struct TrialScore {
    int count = -1;
    double sse = 0.0;
    LaneCurve model;
};

TrialScore score(const LaneCurve& model, std::span<const GroundPoint> pts, double tol) {
    TrialScore s;
    s.count = 0;
    s.model = model;
    for (const auto& p : pts) {
        const double r = p.y - model(p.x);
        if (std::abs(r) <= tol) {
            ++s.count;
            s.sse += r * r;
        }
    }
    return s;
}

bool better(const TrialScore& a, const TrialScore& b) {
    if (a.count != b.count) return a.count > b.count;
    return a.sse < b.sse;
}

}  // namespace

double LaneCurve::max_abs_slope() const noexcept {
    double m = std::max(std::abs(slope(x_lo)), std::abs(slope(x_hi)));
    if (c != 0.0) {
        const double xe = -b / (3.0 * c);  // extremum of the slope
        if (xe > x_lo && xe < x_hi) m = std::max(m, std::abs(slope(xe)));
    }
    return m;
}

void RansacConfig::validate() const {
    if (iterations <= 0) throw Error(ErrorCode::InvalidInput, "ransac iterations must be > 0");
    if (!(inlier_tol > 0.0)) throw Error(ErrorCode::InvalidInput, "ransac inlier_tol must be > 0");
    if (min_inliers < 4) throw Error(ErrorCode::InvalidInput, "ransac min_inliers must be >= 4");
    if (max_curves < 0 || max_curves > kMaxLaneCurves) {
        throw Error(ErrorCode::InvalidInput, "max_curves must lie in [0, 8]");
    }
    if (cone_base < 0.0 || cone_slope < 0.0) throw Error(ErrorCode::InvalidInput, "sampling cone must be >= 0");
    if (!(max_condition > 1.0)) throw Error(ErrorCode::InvalidInput, "max_condition must be > 1");
    if (local_refits < 1) throw Error(ErrorCode::InvalidInput, "local_refits must be >= 1");
    if (min_density < 0.0 || max_slope < 0.0) throw Error(ErrorCode::InvalidInput, "curve filters must be >= 0");
}

LaneCurve fit_cubic_lsq(std::span<const GroundPoint> pts) {
    if (pts.size() < 4) throw Error(ErrorCode::InvalidInput, "cubic fit needs at least 4 points");
    const double scale = x_scale_of(pts);
    Eigen::MatrixXd v(static_cast<Eigen::Index>(pts.size()), 4);
    Eigen::VectorXd rhs(static_cast<Eigen::Index>(pts.size()));
    for (Eigen::Index i = 0; i < v.rows(); ++i) {
        const double t = pts[static_cast<size_t>(i)].x / scale;
        v(i, 0) = 1.0;
        v(i, 1) = t;
        v(i, 2) = t * t;
        v(i, 3) = t * t * t;
        rhs[i] = pts[static_cast<size_t>(i)].y;
    }
    const Eigen::Vector4d p = v.colPivHouseholderQr().solve(rhs);
    return from_scaled(p, scale);
}

std::optional<LaneFit> ransac_fit_one(std::span<const GroundPoint> pts, const RansacConfig& cfg, std::uint64_t stream) {
    cfg.validate();
    if (pts.size() < 4) throw Error(ErrorCode::InvalidInput, "RANSAC needs at least 4 points");
    const double scale = x_scale_of(pts);
    const size_t n = pts.size();
    const bool cone = cfg.cone_base > 0.0 || cfg.cone_slope > 0.0;
    constexpr int kMaxAttempts = 64;

    std::vector<TrialScore> trials(static_cast<size_t>(cfg.iterations));
#pragma omp parallel
    {
        std::vector<size_t> neighbours;
#pragma omp for schedule(dynamic, 16)
        for (int t = 0; t < cfg.iterations; ++t) {
            std::mt19937_64 rng(trial_seed(cfg.rng_seed, stream, static_cast<std::uint64_t>(t)));
            std::uniform_int_distribution<size_t> pick_any(0, n - 1);
            for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
                const size_t first = pick_any(rng);
                const GroundPoint& p0 = pts[first];
                neighbours.clear();
                for (size_t i = 0; i < n; ++i) {
                    if (i == first) continue;
                    if (cone && std::abs(pts[i].y - p0.y) > cfg.cone_base + cfg.cone_slope * std::abs(pts[i].x - p0.x)) {
                        continue;
                    }
                    neighbours.push_back(i);
                }
                if (neighbours.size() < 3) continue;
                // Partial Fisher-Yates for three distinct neighbours.
                for (size_t k = 0; k < 3; ++k) {
                    std::uniform_int_distribution<size_t> pick(k, neighbours.size() - 1);
                    std::swap(neighbours[k], neighbours[pick(rng)]);
                }
                const GroundPoint* sample[4] = {&p0, &pts[neighbours[0]], &pts[neighbours[1]], &pts[neighbours[2]]};
                bool distinct = true;
                for (int i = 0; i < 4 && distinct; ++i) {
                    for (int j = i + 1; j < 4; ++j) {
                        if (sample[i]->x == sample[j]->x) {
                            distinct = false;
                            break;
                        }
                    }
                }
                if (!distinct) continue;
                const auto model = solve_minimal(sample, scale, cfg.max_condition);
                if (!model) continue;
                trials[static_cast<size_t>(t)] = score(*model, pts, cfg.inlier_tol);
                break;
            }
        }
    }

    std::vector<size_t> order;
    for (size_t t = 0; t < trials.size(); ++t) {
        if (trials[t].count >= 0) order.push_back(t);
    }
    std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) { return better(trials[a], trials[b]); });
    const int min_count = std::max(cfg.min_inliers, 4);
    if (order.empty() || trials[order.front()].count < min_count) return std::nullopt;

    // Local refinement: the strongest trials are each refit on their
    // consensus set until it stops changing; the best refined model wins.
    std::optional<LaneFit> best;
    TrialScore best_score;
    const size_t candidates = std::min(order.size(), static_cast<size_t>(std::max(cfg.local_refits, 1)));
    for (size_t k = 0; k < candidates; ++k) {
        LaneCurve curve = trials[order[k]].model;
        std::vector<size_t> inliers;
        for (int round = 0; round < 5; ++round) {
            std::vector<size_t> next;
            for (size_t i = 0; i < n; ++i) {
                if (std::abs(pts[i].y - curve(pts[i].x)) <= cfg.inlier_tol) next.push_back(i);
            }
            if (next == inliers) break;
            if (next.size() < 4) break;
            std::vector<GroundPoint> sel;
            sel.reserve(next.size());
            for (auto i : next) sel.push_back(pts[i]);
            std::vector<double> xs;
            for (const auto& p : sel) xs.push_back(p.x);
            std::sort(xs.begin(), xs.end());
            if (std::unique(xs.begin(), xs.end()) - xs.begin() < 4) break;
            inliers = std::move(next);
            curve = fit_cubic_lsq(sel);
        }
        inliers.clear();
        double sse = 0.0, x_lo = std::numeric_limits<double>::infinity(), x_hi = -x_lo;
        for (size_t i = 0; i < n; ++i) {
            const double r = pts[i].y - curve(pts[i].x);
            if (std::abs(r) <= cfg.inlier_tol) {
                inliers.push_back(i);
                sse += r * r;
                x_lo = std::min(x_lo, pts[i].x);
                x_hi = std::max(x_hi, pts[i].x);
            }
        }
        if (static_cast<int>(inliers.size()) < min_count) continue;
        curve.inlier_count = static_cast<int>(inliers.size());
        curve.inlier_rms = std::sqrt(sse / static_cast<double>(inliers.size()));
        curve.x_lo = x_lo;
        curve.x_hi = x_hi;
        TrialScore sc;
        sc.count = curve.inlier_count;
        sc.sse = sse;
        if (!best || better(sc, best_score)) {
            best = LaneFit{curve, std::move(inliers)};
            best_score = sc;
        }
    }
    return best;
}

std::vector<GroundPoint> ground_points(const FeaturePointSet& points) {
    std::vector<GroundPoint> out;
    out.reserve(points.points.size());
    for (const auto& p : points.points) out.push_back({p.x, p.y});
    return out;
}

std::vector<LaneCurve> fit_lanes(std::span<const GroundPoint> pts, const RansacConfig& cfg) {
    cfg.validate();
    std::vector<LaneCurve> curves;
    std::vector<GroundPoint> remaining(pts.begin(), pts.end());
    // Sparse fits are consumed but not reported; the attempt budget bounds
    // how many of them can be skipped.
    const int attempts = cfg.min_density > 0.0 || cfg.max_slope > 0.0 ? 3 * cfg.max_curves : cfg.max_curves;
    for (int k = 0; k < attempts && static_cast<int>(curves.size()) < cfg.max_curves && remaining.size() >= 4; ++k) {
        const auto fit = ransac_fit_one(remaining, cfg, static_cast<std::uint64_t>(k));
        if (!fit) break;
        const double span = std::max(fit->curve.x_hi - fit->curve.x_lo, 1e-9);
        const bool dense = cfg.min_density <= 0.0 || fit->curve.inlier_count / span >= cfg.min_density;
        const bool plausible = cfg.max_slope <= 0.0 || fit->curve.max_abs_slope() <= cfg.max_slope;
        if (dense && plausible) curves.push_back(fit->curve);
        std::vector<char> drop(remaining.size(), 0);
        for (auto i : fit->inliers) drop[i] = 1;
        std::vector<GroundPoint> keep;
        keep.reserve(remaining.size() - fit->inliers.size());
        for (size_t i = 0; i < remaining.size(); ++i) {
            if (!drop[i]) keep.push_back(remaining[i]);
        }
        remaining = std::move(keep);
    }

    // Merge near-duplicates, strongest first.
    std::stable_sort(curves.begin(), curves.end(),
                     [](const LaneCurve& l, const LaneCurve& r) { return l.inlier_count > r.inlier_count; });
    std::vector<LaneCurve> merged;
    for (const auto& c : curves) {
        const bool duplicate = std::any_of(merged.begin(), merged.end(), [&](const LaneCurve& m) {
            return std::abs(m(cfg.merge_probe_x) - c(cfg.merge_probe_x)) < cfg.merge_dist;
        });
        if (!duplicate) merged.push_back(c);
    }
    std::stable_sort(merged.begin(), merged.end(), [](const LaneCurve& l, const LaneCurve& r) { return l.y0 < r.y0; });
    return merged;
}

std::vector<LaneCurve> fit_lanes(const FeaturePointSet& points, const RansacConfig& cfg) {
    auto curves = fit_lanes(ground_points(points), cfg);
    // Keep each curve's support inside the lateral extent of the grid.
    const double y_max = points.grid.y_max;
    const double step = points.grid.resolution > 0.0 ? points.grid.resolution : 0.1;
    for (auto& c : curves) {
        while (c.x_hi > c.x_lo && std::abs(c(c.x_hi)) > y_max) c.x_hi = std::max(c.x_lo, c.x_hi - step);
        while (c.x_lo < c.x_hi && std::abs(c(c.x_lo)) > y_max) c.x_lo = std::min(c.x_hi, c.x_lo + step);
    }
    return curves;
}

namespace {

double angle_diff(double a, double b) {
    double d = std::fmod(std::abs(a - b), std::numbers::pi);
    return std::min(d, std::numbers::pi - d);
}

struct Cluster {
    std::vector<FeaturePoint> pts;
};

// Point of `pts` (sorted by x) nearest to x among those on the requested side.
const FeaturePoint* anchor(const std::vector<FeaturePoint>& pts, size_t edge, double target_x, bool left) {
    const FeaturePoint* best = nullptr;
    double best_d = std::numeric_limits<double>::infinity();
    if (left) {
        for (size_t i = 0; i < edge; ++i) {
            const double d = std::abs(pts[i].x - target_x);
            if (d < best_d) {
                best_d = d;
                best = &pts[i];
            }
        }
    } else {
        for (size_t i = edge + 1; i < pts.size(); ++i) {
            const double d = std::abs(pts[i].x - target_x);
            if (d < best_d) {
                best_d = d;
                best = &pts[i];
            }
        }
    }
    return best;
}

double lagrange(const double* xs, const double* ys, double x) {
    double acc = 0.0;
    for (int i = 0; i < 4; ++i) {
        double term = ys[i];
        for (int j = 0; j < 4; ++j) {
            if (j != i) term *= (x - xs[j]) / (xs[i] - xs[j]);
        }
        acc += term;
    }
    return acc;
}

}  // namespace

FeaturePointSet interpolate_gaps(const FeaturePointSet& input, const GapParams& params) {
    FeaturePointSet out = input;
    if (input.points.size() < 4) return out;
    const double step = params.step > 0.0 ? params.step : (input.grid.resolution > 0.0 ? input.grid.resolution : 0.1);

    std::vector<FeaturePoint> sorted = input.points;
    std::stable_sort(sorted.begin(), sorted.end(), [](const FeaturePoint& l, const FeaturePoint& r) {
        return l.x != r.x ? l.x < r.x : l.y < r.y;
    });

    std::vector<Cluster> clusters;
    for (const auto& p : sorted) {
        Cluster* best = nullptr;
        double best_d = std::numeric_limits<double>::infinity();
        for (auto& cl : clusters) {
            const auto& tail = cl.pts.back();
            const double dx = p.x - tail.x;
            if (!(dx > 0.0) || dx > params.max_gap + step) continue;
            if (angle_diff(p.orientation, tail.orientation) > params.cluster_angle) continue;
            const double slope = std::clamp(std::tan(tail.orientation), -1.0, 1.0);
            const double d = std::abs(p.y - (tail.y + slope * dx));
            if (d <= params.lateral_tol && d < best_d) {
                best_d = d;
                best = &cl;
            }
        }
        if (best) {
            best->pts.push_back(p);
        } else {
            clusters.push_back({{p}});
        }
    }

    const auto& grid = input.grid;
    for (const auto& cl : clusters) {
        const auto& pts = cl.pts;
        for (size_t i = 0; i + 1 < pts.size(); ++i) {
            const auto& lo = pts[i];
            const auto& hi = pts[i + 1];
            const double gap = hi.x - lo.x;
            if (gap <= 1.5 * step || gap > params.max_gap) continue;
            if (angle_diff(lo.orientation, hi.orientation) > params.phi_max) continue;
            const double span = std::min(params.anchor_span, gap);
            const FeaturePoint* l2 = anchor(pts, i, lo.x - span, true);
            const FeaturePoint* r2 = anchor(pts, i + 1, hi.x + span, false);
            if (!l2 || !r2) continue;
            const double xs[4] = {l2->x, lo.x, hi.x, r2->x};
            const double ys[4] = {l2->y, lo.y, hi.y, r2->y};
            if (!(xs[0] < xs[1] && xs[1] < xs[2] && xs[2] < xs[3])) continue;
            const int samples = static_cast<int>(std::floor(gap / step - 1e-9));
            for (int s = 1; s <= samples; ++s) {
                const double x = lo.x + s * step;
                if (x >= hi.x - 0.5 * step) break;
                const double t = (x - lo.x) / gap;
                FeaturePoint f;
                f.x = x;
                f.y = lagrange(xs, ys, x);
                f.strength = 0.0;
                f.orientation = lo.orientation + t * (hi.orientation - lo.orientation);
                f.interpolated = true;
                if (grid.resolution > 0.0) {
                    f.row = static_cast<int>(std::lround(grid.row_of(x)));
                    f.col = static_cast<int>(std::lround(grid.col_of(f.y)));
                }
                out.points.push_back(f);
            }
        }
    }
    return out;
}

EgoLane ego_lane_and_offset(std::span<const LaneCurve> curves, double vehicle_y, double x_probe) {
    const LaneCurve* left = nullptr;
    const LaneCurve* right = nullptr;
    for (const auto& c : curves) {
        const double y = c(x_probe);
        if (y > vehicle_y && (!left || y < (*left)(x_probe))) left = &c;
        if (y < vehicle_y && (!right || y > (*right)(x_probe))) right = &c;
    }
    if (!left || !right) throw Error(ErrorCode::NoEgoLane, "no pair of curves straddles the vehicle");
    return {*left, *right, 0.5 * ((*left)(x_probe) + (*right)(x_probe)) - vehicle_y};
}

}  // namespace ldw
