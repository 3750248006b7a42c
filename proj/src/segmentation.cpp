#include "ldw/segmentation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numbers>
#include <random>
#include <sstream>

#include "ldw/error.hpp"

namespace ldw {

const char* class_name(int cls) {
    switch (cls) {
        case kRoad: return "road";
        case kScene: return "scene";
        case kObstacle: return "obstacle";
        default: return "invalid";
    }
}

double GmmModel::prior_sum() const {
    double s = 0.0;
    for (const auto& c : classes) s += c.prior;
    return s;
}

void GmmModel::validate(double var_floor) const {
    if (std::abs(prior_sum() - 1.0) > 1e-9) throw Error(ErrorCode::InvalidInput, "class priors must sum to 1");
    for (const auto& c : classes) {
        if (!(c.prior > 0.0 && c.prior < 1.0)) throw Error(ErrorCode::InvalidInput, "class prior outside (0,1)");
        for (double v : c.var) {
            if (!(v >= var_floor)) throw Error(ErrorCode::InvalidInput, "class variance below floor");
        }
    }
}

namespace {

void normalize_priors(GmmModel& m) {
    constexpr double kPriorFloor = 1e-12;
    for (auto& c : m.classes) c.prior = std::max(c.prior, kPriorFloor);
    const double s = m.prior_sum();
    for (auto& c : m.classes) c.prior /= s;
}

struct ClassConstants {
    std::array<double, kNumClasses> offset;
    std::array<Feature, kNumClasses> inv2var;
};

ClassConstants constants(const GmmModel& m) {
    ClassConstants k;
    for (int i = 0; i < kNumClasses; ++i) {
        const auto& c = m.classes[i];
        double off = std::log(c.prior);
        for (int d = 0; d < 3; ++d) {
            off -= 0.5 * std::log(2.0 * std::numbers::pi * c.var[d]);
            k.inv2var[i][d] = 0.5 / c.var[d];
        }
        k.offset[i] = off;
    }
    return k;
}

std::array<double, kNumClasses> scores_with(const GmmModel& m, const ClassConstants& k, const Feature& x) {
    std::array<double, kNumClasses> s;
    for (int i = 0; i < kNumClasses; ++i) {
        double acc = k.offset[i];
        for (int d = 0; d < 3; ++d) {
            const double e = x[d] - m.classes[i].mean[d];
            acc -= e * e * k.inv2var[i][d];
        }
        s[i] = acc;
    }
    return s;
}

struct Neumaier {
    double sum = 0.0;
    double comp = 0.0;
    void add(double v) {
        const double t = sum + v;
        comp += std::abs(sum) >= std::abs(v) ? (sum - t) + v : (v - t) + sum;
        sum = t;
    }
    double value() const { return sum + comp; }
};

struct BlockStats {
    std::array<double, kNumClasses> nk{};
    std::array<Feature, kNumClasses> sx{};   // sum r (x - m_old)
    std::array<Feature, kNumClasses> sxx{};  // sum r (x - m_old)^2
    Neumaier ll;
};

constexpr size_t kBlock = 2048;

std::vector<BlockStats> e_step(const GmmModel& m, std::span<const Feature> data, bool parallel) {
    const auto k = constants(m);
    const size_t nblocks = (data.size() + kBlock - 1) / kBlock;
    std::vector<BlockStats> blocks(nblocks);
    const long nb = static_cast<long>(nblocks);
#pragma omp parallel for schedule(static) if (parallel)
    for (long b = 0; b < nb; ++b) {
        BlockStats& st = blocks[static_cast<size_t>(b)];
        const size_t lo = static_cast<size_t>(b) * kBlock, hi = std::min(data.size(), lo + kBlock);
        for (size_t i = lo; i < hi; ++i) {
            const auto& x = data[i];
            const auto s = scores_with(m, k, x);
            const double mx = *std::max_element(s.begin(), s.end());
            double z = 0.0;
            for (double v : s) z += std::exp(v - mx);
            const double lse = mx + std::log(z);
            st.ll.add(lse);
            for (int c = 0; c < kNumClasses; ++c) {
                const double r = std::exp(s[c] - lse);
                st.nk[c] += r;
                for (int d = 0; d < 3; ++d) {
                    const double e = x[d] - m.classes[c].mean[d];
                    st.sx[c][d] += r * e;
                    st.sxx[c][d] += r * e * e;
                }
            }
        }
    }
    return blocks;
}

double mean_ll(const std::vector<BlockStats>& blocks, size_t n) {
    Neumaier total;
    for (const auto& b : blocks) total.add(b.ll.value());
    return total.value() / static_cast<double>(n);
}

}  // namespace

GmmModel init_from_patches(const std::array<std::vector<Feature>, kNumClasses>& patches, double var_floor) {
    size_t total = 0;
    for (int c = 0; c < kNumClasses; ++c) {
        if (patches[c].empty()) throw Error(ErrorCode::MissingClass, std::string("no patches for class ") + class_name(c));
        if (patches[c].size() < 30) {
            throw Error(ErrorCode::InvalidInput, std::string("fewer than 30 samples for class ") + class_name(c));
        }
        total += patches[c].size();
    }
    GmmModel m;
    for (int c = 0; c < kNumClasses; ++c) {
        const auto& p = patches[c];
        const double n = static_cast<double>(p.size());
        auto& comp = m.classes[c];
        comp.prior = n / static_cast<double>(total);
        for (int d = 0; d < 3; ++d) {
            // Shifted sums: identical samples give their value back exactly.
            const double ref = p.front()[d];
            double s = 0.0, s2 = 0.0;
            for (const auto& x : p) {
                const double e = x[d] - ref;
                s += e;
                s2 += e * e;
            }
            const double mu = s / n;
            comp.mean[d] = ref + mu;
            comp.var[d] = std::max(s2 / n - mu * mu, var_floor);
        }
    }
    const double s = m.prior_sum();
    for (auto& c : m.classes) c.prior /= s;
    return m;
}

GmmModel init_kmeans(std::span<const Feature> data, std::uint64_t seed, int iterations, double var_floor) {
    if (data.size() < kNumClasses) throw Error(ErrorCode::InvalidInput, "k-means needs at least 3 samples");
    std::mt19937_64 rng(seed);
    auto dist2 = [](const Feature& a, const Feature& b) {
        double s = 0.0;
        for (int d = 0; d < 3; ++d) s += (a[d] - b[d]) * (a[d] - b[d]);
        return s;
    };
    std::array<Feature, kNumClasses> centers;
    centers[0] = data[std::uniform_int_distribution<size_t>(0, data.size() - 1)(rng)];
    std::vector<double> d2(data.size());
    for (int k = 1; k < kNumClasses; ++k) {
        for (size_t i = 0; i < data.size(); ++i) {
            double best = std::numeric_limits<double>::infinity();
            for (int j = 0; j < k; ++j) best = std::min(best, dist2(data[i], centers[j]));
            d2[i] = best;
        }
        std::discrete_distribution<size_t> pick(d2.begin(), d2.end());
        centers[k] = data[pick(rng)];
    }
    std::vector<int> assign(data.size(), 0);
    for (int it = 0; it < iterations; ++it) {
        for (size_t i = 0; i < data.size(); ++i) {
            int best = 0;
            for (int k = 1; k < kNumClasses; ++k) {
                if (dist2(data[i], centers[k]) < dist2(data[i], centers[best])) best = k;
            }
            assign[i] = best;
        }
        std::array<Feature, kNumClasses> sum{};
        std::array<size_t, kNumClasses> count{};
        for (size_t i = 0; i < data.size(); ++i) {
            ++count[assign[i]];
            for (int d = 0; d < 3; ++d) sum[assign[i]][d] += data[i][d];
        }
        for (int k = 0; k < kNumClasses; ++k) {
            if (count[k] == 0) continue;
            for (int d = 0; d < 3; ++d) centers[k][d] = sum[k][d] / static_cast<double>(count[k]);
        }
    }
    std::array<std::vector<Feature>, kNumClasses> groups;
    for (size_t i = 0; i < data.size(); ++i) groups[assign[i]].push_back(data[i]);
    std::array<int, kNumClasses> order{0, 1, 2};
    std::stable_sort(order.begin(), order.end(), [&](int l, int r) { return groups[l].size() > groups[r].size(); });

    GmmModel m;
    for (int c = 0; c < kNumClasses; ++c) {
        const auto& g = groups[order[c]];
        auto& comp = m.classes[c];
        comp.prior = static_cast<double>(g.size()) / static_cast<double>(data.size());
        comp.mean = centers[order[c]];
        for (int d = 0; d < 3; ++d) {
            double s2 = 0.0;
            for (const auto& x : g) s2 += (x[d] - comp.mean[d]) * (x[d] - comp.mean[d]);
            comp.var[d] = std::max(g.empty() ? var_floor : s2 / static_cast<double>(g.size()), var_floor);
        }
    }
    normalize_priors(m);
    return m;
}

double log_likelihood(const GmmModel& model, std::span<const Feature> data, bool parallel) {
    if (data.empty()) return 0.0;
    return mean_ll(e_step(model, data, parallel), data.size());
}

EmResult em_refine(const GmmModel& init, std::span<const Feature> data, const EmOptions& options) {
    if (options.max_iters < 1) throw Error(ErrorCode::InvalidInput, "max_iters must be >= 1");
    init.validate(options.var_floor);
    EmResult result;
    result.model = init;
    if (data.empty()) return result;
    const double n = static_cast<double>(data.size());

    for (int it = 0; it < options.max_iters; ++it) {
        const auto blocks = e_step(result.model, data, options.parallel);
        const double ll = mean_ll(blocks, data.size());
        const bool converged =
            !result.trace.empty() && std::abs(ll - result.trace.back()) <= options.rel_tol * std::abs(result.trace.back());
        result.trace.push_back(ll);
        if (converged || it + 1 == options.max_iters) break;

        // M-step from the block sums, combined in block order.
        BlockStats tot;
        for (const auto& b : blocks) {
            for (int c = 0; c < kNumClasses; ++c) {
                tot.nk[c] += b.nk[c];
                for (int d = 0; d < 3; ++d) {
                    tot.sx[c][d] += b.sx[c][d];
                    tot.sxx[c][d] += b.sxx[c][d];
                }
            }
        }
        GmmModel next = result.model;
        for (int c = 0; c < kNumClasses; ++c) {
            auto& comp = next.classes[c];
            comp.prior = tot.nk[c] / n;
            if (tot.nk[c] <= 1e-300) continue;
            for (int d = 0; d < 3; ++d) {
                const double shift = tot.sx[c][d] / tot.nk[c];
                comp.mean[d] = result.model.classes[c].mean[d] + shift;
                comp.var[d] = std::max(tot.sxx[c][d] / tot.nk[c] - shift * shift, options.var_floor);
            }
        }
        normalize_priors(next);
        result.prior_sums.push_back(next.prior_sum());
        result.model = next;
    }
    return result;
}

std::array<double, kNumClasses> class_log_scores(const GmmModel& model, const Feature& x) {
    return scores_with(model, constants(model), x);
}

std::uint8_t classify_pixel(const GmmModel& model, const Feature& x) {
    const auto s = class_log_scores(model, x);
    int best = 0;
    for (int c = 1; c < kNumClasses; ++c) {
        if (s[c] > s[best]) best = c;
    }
    return static_cast<std::uint8_t>(best);
}

std::vector<Feature> FeatureGrid::samples(int stride) const {
    stride = std::max(stride, 1);
    std::vector<Feature> out;
    for (int r = 0; r < rows(); r += stride) {
        for (int c = 0; c < cols(); c += stride) {
            if (valid(r, c)) out.push_back(at(r, c));
        }
    }
    return out;
}

LabelMask classify(const GmmModel& model, const FeatureGrid& grid) {
    LabelMask mask{grid.spec, PlaneU8(grid.rows(), grid.cols(), kInvalidLabel)};
    const auto k = constants(model);
#pragma omp parallel for schedule(static)
    for (int r = 0; r < grid.rows(); ++r) {
        for (int c = 0; c < grid.cols(); ++c) {
            if (!grid.valid(r, c)) continue;
            const auto s = scores_with(model, k, grid.at(r, c));
            int best = 0;
            for (int i = 1; i < kNumClasses; ++i) {
                if (s[i] > s[best]) best = i;
            }
            mask.labels(r, c) = static_cast<std::uint8_t>(best);
        }
    }
    return mask;
}

RoadBoundaries extract_boundaries(const LabelMask& mask, const RansacConfig& cfg, const BoundaryParams& params) {
    const auto& lab = mask.labels;
    const auto& spec = mask.spec;
    size_t valid = 0, road = 0;
    for (auto v : lab.data()) {
        if (v != kInvalidLabel) ++valid;
        if (v == kRoad) ++road;
    }
    if (valid == 0 || static_cast<double>(road) < params.min_road_fraction * static_cast<double>(valid)) {
        throw Error(ErrorCode::NoRoad, "road class covers too little of the grid");
    }
    RoadBoundaries out;
    const int cols = lab.cols();
    auto edge_ok = [&](int r, int c) { return c >= 0 && c < cols && lab(r, c) != kInvalidLabel && lab(r, c) != kRoad; };
    for (int r = 0; r < lab.rows(); ++r) {
        const double x = spec.x_at(r);
        int first_run_start = -1, last_run_end = -1;
        for (int c = 0; c < cols;) {
            if (lab(r, c) != kRoad) {
                ++c;
                continue;
            }
            int e = c;
            while (e + 1 < cols && lab(r, e + 1) == kRoad) ++e;
            if (e - c + 1 >= params.min_run) {
                if (first_run_start < 0) first_run_start = c;
                last_run_end = e;
            }
            c = e + 1;
        }
        if (first_run_start < 0) continue;
        // Only genuine road/non-road transitions count, not the edge of the
        // camera footprint.
        if (edge_ok(r, first_run_start - 1)) {
            out.left_points.push_back({x, spec.y_max - first_run_start * spec.resolution});
        }
        if (edge_ok(r, last_run_end + 1)) {
            out.right_points.push_back({x, spec.y_max - (last_run_end + 1) * spec.resolution});
        }
    }
    auto fit_side = [&](const std::vector<GroundPoint>& pts, std::uint64_t stream, const char* side) {
        if (pts.size() < 4) throw Error(ErrorCode::NoModel, std::string("too few ") + side + " boundary points");
        auto fit = ransac_fit_one(pts, cfg, stream);
        if (!fit) throw Error(ErrorCode::NoModel, std::string("no ") + side + " boundary model");
        return fit->curve;
    };
    out.left = fit_side(out.left_points, 101, "left");
    out.right = fit_side(out.right_points, 102, "right");
    return out;
}

GmmModel parse_gmm_stats(const std::string& text) {
    std::map<std::string, int> ids{{"road", kRoad}, {"scene", kScene}, {"obstacle", kObstacle}};
    std::array<bool, kNumClasses> seen{};
    GmmModel m;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto h = line.find('#'); h != std::string::npos) line.erase(h);
        std::istringstream ls(line);
        std::string name;
        if (!(ls >> name)) continue;
        const auto it = ids.find(name);
        if (it == ids.end()) throw Error(ErrorCode::Config, "gmm stats line " + std::to_string(lineno) + ": unknown class " + name);
        auto& c = m.classes[it->second];
        if (!(ls >> c.mean[0] >> c.mean[1] >> c.mean[2] >> c.var[0] >> c.var[1] >> c.var[2] >> c.prior)) {
            throw Error(ErrorCode::Config, "gmm stats line " + std::to_string(lineno) + ": expected 7 numbers");
        }
        std::string extra;
        if (ls >> extra) throw Error(ErrorCode::Config, "gmm stats line " + std::to_string(lineno) + ": trailing data");
        seen[it->second] = true;
    }
    for (int c = 0; c < kNumClasses; ++c) {
        if (!seen[c]) throw Error(ErrorCode::MissingClass, std::string("gmm stats lack class ") + class_name(c));
    }
    for (auto& c : m.classes) {
        for (auto& v : c.var) v = std::max(v, kVarFloor);
    }
    const double s = m.prior_sum();
    if (!(s > 0.0)) throw Error(ErrorCode::Config, "gmm stats priors must be positive");
    for (auto& c : m.classes) c.prior /= s;
    return m;
}

GmmModel read_gmm_stats(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, "cannot open gmm stats " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_gmm_stats(ss.str());
}

std::string format_gmm_stats(const GmmModel& model) {
    std::ostringstream out;
    out.precision(std::numeric_limits<double>::max_digits10);
    out << "# class mean0 mean1 mean2 var0 var1 var2 prior\n";
    for (int c = 0; c < kNumClasses; ++c) {
        const auto& k = model.classes[c];
        out << class_name(c);
        for (double v : k.mean) out << ' ' << v;
        for (double v : k.var) out << ' ' << v;
        out << ' ' << k.prior << '\n';
    }
    return out.str();
}

}  // namespace ldw
