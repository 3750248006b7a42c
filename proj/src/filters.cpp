#include "ldw/filters.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "ldw/error.hpp"
#include "ldw/kernels.hpp"

namespace ldw {

const char* to_string(KernelId id) {
    switch (id) {
        case KernelId::G2x: return "G2x";
        case KernelId::Gxy: return "Gxy";
        case KernelId::G2y: return "G2y";
        case KernelId::G4x: return "G4x";
        case KernelId::G4y: return "G4y";
    }
    return "?";
}

namespace {

struct Profiles {
    std::vector<double> g, d1, d2, d4;
};

Profiles sample_profiles(double sigma, int radius, SignConvention convention) {
    const double s2 = sigma * sigma, s4 = s2 * s2, s6 = s4 * s2, s8 = s4 * s4;
    const double c4 = convention == SignConvention::Corrected ? 12.0 / s4 : -12.0 / s4;
    Profiles p;
    for (int i = -radius; i <= radius; ++i) {
        const double t = i, t2 = t * t;
        const double g = std::exp(-t2 / s2);
        p.g.push_back(g);
        p.d1.push_back(2.0 * t / s2 * g);
        p.d2.push_back((4.0 * t2 / s4 - 2.0 / s2) * g);
        p.d4.push_back((16.0 * t2 * t2 / s8 - 48.0 * t2 / s6 + c4) * g);
    }
    if (convention == SignConvention::Corrected) {
        // The truncated tails leave a small DC; take it out along g so the
        // even derivative factors sum to zero like their continuous forms.
        const double sg = std::accumulate(p.g.begin(), p.g.end(), 0.0);
        for (auto* f : {&p.d2, &p.d4}) {
            const double ratio = std::accumulate(f->begin(), f->end(), 0.0) / sg;
            for (size_t i = 0; i < f->size(); ++i) (*f)[i] -= ratio * p.g[i];
        }
    }
    return p;
}

PlaneF outer(const std::vector<double>& along_y, const std::vector<double>& along_x) {
    PlaneF k(static_cast<int>(along_y.size()), static_cast<int>(along_x.size()));
    for (int r = 0; r < k.rows(); ++r) {
        for (int c = 0; c < k.cols(); ++c) k(r, c) = along_y[r] * along_x[c];
    }
    return k;
}

}  // namespace

FilterBank make_bank(double sigma, int radius, SignConvention convention) {
    if (!(sigma > 0.0)) throw Error(ErrorCode::InvalidInput, "sigma must be > 0");
    if (radius < 0) radius = static_cast<int>(std::ceil(4.0 * sigma));
    if (radius < static_cast<int>(std::ceil(3.0 * sigma))) {
        throw Error(ErrorCode::InvalidInput, "radius must be >= ceil(3 sigma)");
    }
    const auto p = sample_profiles(sigma, radius, convention);
    FilterBank bank;
    bank.sigma = sigma;
    bank.radius = radius;
    bank.convention = convention;
    bank.factors[static_cast<size_t>(KernelId::G2x)] = {p.d2, p.g};
    bank.factors[static_cast<size_t>(KernelId::Gxy)] = {p.d1, p.d1};
    bank.factors[static_cast<size_t>(KernelId::G2y)] = {p.g, p.d2};
    bank.factors[static_cast<size_t>(KernelId::G4x)] = {p.d4, p.g};
    bank.factors[static_cast<size_t>(KernelId::G4y)] = {p.g, p.d4};
    for (auto id : kAllKernels) {
        const auto& f = bank.factor(id);
        bank.kernels[static_cast<size_t>(id)] = outer(f.along_y, f.along_x);
    }
    return bank;
}

PlaneF convolve_separable(const PlaneF& img, const FilterBank& bank, KernelId id) {
    const auto& f = bank.factor(id);
    PlaneF tmp, out;
    kernels::parallel::convolve_rows(img, f.along_x, tmp);
    kernels::parallel::convolve_cols(tmp, f.along_y, out);
    return out;
}

PlaneF convolve_separable_serial(const PlaneF& img, const FilterBank& bank, KernelId id) {
    const auto& f = bank.factor(id);
    PlaneF tmp, out;
    kernels::serial::convolve_rows(img, f.along_x, tmp);
    kernels::serial::convolve_cols(tmp, f.along_y, out);
    return out;
}

PlaneF convolve_dense(const PlaneF& img, const PlaneF& kernel) {
    if (kernel.rows() % 2 == 0 || kernel.cols() % 2 == 0) {
        throw Error(ErrorCode::InvalidInput, "dense kernel must have odd size");
    }
    const int rr = kernel.rows() / 2, rc = kernel.cols() / 2;
    PlaneF out(img.rows(), img.cols());
    for (int r = 0; r < img.rows(); ++r) {
        for (int c = 0; c < img.cols(); ++c) {
            double acc = 0.0;
            for (int i = -rr; i <= rr; ++i) {
                const int sr = kernels::reflect(r - i, img.rows());
                for (int j = -rc; j <= rc; ++j) {
                    acc += kernel(i + rr, j + rc) * img(sr, kernels::reflect(c - j, img.cols()));
                }
            }
            out(r, c) = acc;
        }
    }
    return out;
}

PlaneF steer_order2(const PlaneF& r2x, const PlaneF& rxy, const PlaneF& r2y, double angle) {
    if (!r2x.same_shape(rxy) || !r2x.same_shape(r2y)) {
        throw Error(ErrorCode::DimensionMismatch, "steering basis planes differ in size");
    }
    const double c = std::cos(angle), s = std::sin(angle);
    const double cc = c * c, ss = s * s, cs2 = 2.0 * s * c;
    PlaneF out(r2x.rows(), r2x.cols());
    for (size_t i = 0; i < out.size(); ++i) {
        out.data()[i] = cc * r2x.data()[i] + ss * r2y.data()[i] - cs2 * rxy.data()[i];
    }
    return out;
}

namespace {

template <typename T>
Plane<T> transpose(const Plane<T>& p) {
    Plane<T> t(p.cols(), p.rows());
    for (int r = 0; r < p.rows(); ++r) {
        for (int c = 0; c < p.cols(); ++c) t(c, r) = p(r, c);
    }
    return t;
}

double wrap_half_pi(double a) {
    constexpr double pi = std::numbers::pi;
    while (a > pi / 2) a -= pi;
    while (a <= -pi / 2) a += pi;
    return a;
}

struct RawPoint {
    int row, col;
    double subcol, strength, orientation;
};

// Vertical-lane extraction on a filled plane; scan lines are rows.
std::vector<RawPoint> extract_vertical(const PlaneF& plane, const PlaneU8& valid, const FilterBank& bank,
                                       const FeatureParams& params, PlaneF& strength, PlaneF& cross) {
    const PlaneF a = convolve_separable(plane, bank, KernelId::G2x);
    const PlaneF b = convolve_separable(plane, bank, KernelId::Gxy);
    const PlaneF c = convolve_separable(plane, bank, KernelId::G2y);
    const PlaneF f4 = convolve_separable(plane, bank, KernelId::G4x);
    const PlaneF f4y = convolve_separable(plane, bank, KernelId::G4y);

    const int rows = plane.rows(), cols = plane.cols();
    strength = PlaneF(rows, cols);
    cross = PlaneF(rows, cols);
    PlaneF normal(rows, cols);
    PlaneU8 polarity_ok(rows, cols);

    double max_abs = 0.0;
    for (size_t i = 0; i < plane.size(); ++i) {
        if (valid.data()[i]) max_abs = std::max(max_abs, std::abs(plane.data()[i]));
    }
    const double abs_floor = params.min_strength_rel * max_abs;

#pragma omp parallel for schedule(static)
    for (int r = 0; r < rows; ++r) {
        for (int col = 0; col < cols; ++col) {
            const double A = a(r, col), B = b(r, col), C = c(r, col);
            // R(t) = (A+C)/2 + (A-C)/2 cos 2t - B sin 2t; its minimum is the
            // response across a bright ridge.
            const double amp = std::hypot(0.5 * (A - C), B);
            const double r2_min = 0.5 * (A + C) - amp;
            const double r2_max = 0.5 * (A + C) + amp;
            const double phase = std::atan2(-2.0 * B, A - C);
            const double theta_min = wrap_half_pi(0.5 * phase + std::numbers::pi / 2);
            const double theta_max = wrap_half_pi(0.5 * phase);
            const bool bright = std::abs(r2_min) >= std::abs(r2_max);
            const double r2 = params.bright_only || bright ? r2_min : r2_max;
            normal(r, col) = params.bright_only || bright ? theta_min : theta_max;
            polarity_ok(r, col) = !params.bright_only || r2_min < 0.0;
            strength(r, col) = params.w2 * std::abs(r2) + params.w4 * std::abs(f4(r, col));
            cross(r, col) = params.w2 * std::abs(C) + params.w4 * std::abs(f4y(r, col));
        }
    }

    double floor = abs_floor;
    const int side = params.ridge_check ? static_cast<int>(std::lround(2.0 * bank.sigma)) : 0;
    if (params.noise_z > 0.0) {
        // Robust frame-wide floor: median + z * MAD of the valid responses.
        std::vector<double> v;
        for (size_t i = 0; i < strength.size(); ++i) {
            if (valid.data()[i]) v.push_back(strength.data()[i]);
        }
        if (!v.empty()) {
            auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
            std::nth_element(v.begin(), mid, v.end());
            const double med = *mid;
            for (auto& x : v) x = std::abs(x - med);
            std::nth_element(v.begin(), mid, v.end());
            floor = std::max(floor, med + params.noise_z * *mid);
        }
    }

    std::vector<std::vector<RawPoint>> per_row(static_cast<size_t>(rows));
#pragma omp parallel for schedule(static)
    for (int r = 0; r < rows; ++r) {
        double s = 0.0, s2 = 0.0;
        int n = 0;
        for (int col = 0; col < cols; ++col) {
            if (!valid(r, col)) continue;
            s += strength(r, col);
            ++n;
        }
        if (n < 3) continue;
        const double mean = s / n;
        for (int col = 0; col < cols; ++col) {
            if (!valid(r, col)) continue;
            const double d = strength(r, col) - mean;
            s2 += d * d;
        }
        const double threshold = std::max(mean + params.k * std::sqrt(s2 / n), floor);
        for (int col = 1; col + 1 < cols; ++col) {
            const double v = strength(r, col);
            if (!valid(r, col) || !(v > threshold) || !polarity_ok(r, col)) continue;
            if (std::abs(normal(r, col)) > params.phi_max) continue;
            const double left = strength(r, col - 1), right = strength(r, col + 1);
            if (!(v >= left && v > right)) continue;
            if (side > 0 && col - side >= 0 && col + side < cols) {
                // A ridge is lower on both sides; a step edge is not.
                const double center = plane(r, col);
                const double l = plane(r, col - side), rr = plane(r, col + side);
                const bool ok = params.bright_only ? center > std::max(l, rr)
                                                   : (plane(r, col) - l) * (plane(r, col) - rr) > 0.0;
                if (!ok) continue;
            }
            const double denom = left - 2.0 * v + right;
            const double offset = denom < 0.0 ? std::clamp(0.5 * (left - right) / denom, -0.5, 0.5) : 0.0;
            per_row[static_cast<size_t>(r)].push_back({r, col, col + offset, v, normal(r, col)});
        }
    }
    std::vector<RawPoint> out;
    for (auto& row : per_row) out.insert(out.end(), row.begin(), row.end());
    return out;
}

}  // namespace

FeatureExtraction extract_features(const IpmGrid& grid, const FilterBank& bank, const FeatureParams& params) {
    FeatureExtraction result;
    result.points.grid = grid.spec;
    if (grid.cells.empty()) return result;
    const bool any_valid = std::any_of(grid.valid.data().begin(), grid.valid.data().end(), [](auto v) { return v; });
    if (!any_valid) {
        result.strength = PlaneF(grid.rows(), grid.cols());
        result.cross_response = PlaneF(grid.rows(), grid.cols());
        return result;
    }
    const PlaneF filled = fill_invalid(grid);

    if (params.axis == LaneAxis::Vertical) {
        const auto raw = extract_vertical(filled, grid.valid, bank, params, result.strength, result.cross_response);
        for (const auto& p : raw) {
            result.points.points.push_back({grid.spec.x_at(p.row), grid.spec.y_max - (p.subcol + 0.5) * grid.spec.resolution,
                                            p.strength, p.orientation, p.row, p.col, false});
        }
        return result;
    }

    // Horizontal lanes: run the vertical detector on the transposed grid.
    PlaneF strength_t, cross_t;
    const auto raw = extract_vertical(transpose(filled), transpose(grid.valid), bank, params, strength_t, cross_t);
    result.strength = transpose(strength_t);
    result.cross_response = transpose(cross_t);
    for (const auto& p : raw) {
        const int row = p.col, col = p.row;
        const double subrow = p.subcol;
        result.points.points.push_back({grid.spec.x_max - (subrow + 0.5) * grid.spec.resolution, grid.spec.y_at(col),
                                        p.strength, wrap_half_pi(std::numbers::pi / 2 - p.orientation), row, col,
                                        false});
    }
    std::sort(result.points.points.begin(), result.points.points.end(),
              [](const FeaturePoint& l, const FeaturePoint& r) { return std::tie(l.row, l.col) < std::tie(r.row, r.col); });
    return result;
}

}  // namespace ldw
