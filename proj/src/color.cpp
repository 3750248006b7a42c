#include "ldw/color.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace ldw {
namespace {

// D65 reference white.
constexpr double kXn = 0.95047;
constexpr double kYn = 1.0;
constexpr double kZn = 1.08883;

const std::array<double, 256>& srgb_linear_table() {
    static const std::array<double, 256> table = [] {
        std::array<double, 256> t{};
        for (int i = 0; i < 256; ++i) {
            const double v = i / 255.0;
            t[i] = v <= 0.04045 ? v / 12.92 : std::pow((v + 0.055) / 1.055, 2.4);
        }
        return t;
    }();
    return table;
}

double lab_f(double t) {
    constexpr double eps = 216.0 / 24389.0;
    constexpr double kappa = 24389.0 / 27.0;
    return t > eps ? std::cbrt(t) : (kappa * t + 16.0) / 116.0;
}

}  // namespace

void srgb_to_lab(std::uint8_t r8, std::uint8_t g8, std::uint8_t b8, double& L, double& A, double& B) {
    const auto& lin = srgb_linear_table();
    const double r = lin[r8], g = lin[g8], b = lin[b8];
    const double X = 0.412453 * r + 0.357580 * g + 0.180423 * b;
    const double Y = 0.212671 * r + 0.715160 * g + 0.072169 * b;
    const double Z = 0.019334 * r + 0.119193 * g + 0.950227 * b;
    const double fx = lab_f(X / kXn), fy = lab_f(Y / kYn), fz = lab_f(Z / kZn);
    L = 116.0 * fy - 16.0;
    A = 500.0 * (fx - fy);
    B = 200.0 * (fy - fz);
}

LabImage rgb_to_lab(const RgbImage& img, int first_row) {
    const int rows = img.rows(), cols = img.cols();
    LabImage lab{PlaneF(rows, cols), PlaneF(rows, cols), PlaneF(rows, cols)};
    first_row = std::clamp(first_row, 0, rows);
#pragma omp parallel for schedule(static)
    for (int r = first_row; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            const auto* p = img.px(r, c);
            srgb_to_lab(p[0], p[1], p[2], lab.L(r, c), lab.a(r, c), lab.b(r, c));
        }
    }
    return lab;
}

PlaneF to_gray(const RgbImage& img) {
    PlaneF out(img.rows(), img.cols());
    for (int r = 0; r < img.rows(); ++r) {
        for (int c = 0; c < img.cols(); ++c) {
            const auto* p = img.px(r, c);
            out(r, c) = (kGrayWeightR * p[0] + kGrayWeightG * p[1] + kGrayWeightB * p[2]) / 255.0;
        }
    }
    return out;
}

PlaneF illuminant_invariant(const LabImage& lab, const InvariantParams& params, int first_row) {
    const int rows = lab.rows(), cols = lab.cols();
    if (params.tile <= 0 || params.std_floor <= 0.0 || params.z_span <= 0.0 || params.chroma_ref <= 0.0) {
        throw Error(ErrorCode::InvalidInput, "invariant parameters must be positive");
    }
    PlaneF out(rows, cols, 0.5);
    first_row = std::clamp(first_row, 0, rows);
    const int roi_rows = rows - first_row;
    if (roi_rows == 0 || cols == 0) return out;

    const int tile = params.tile;
    const int tr = (roi_rows + tile - 1) / tile;
    const int tc = (cols + tile - 1) / tile;
    PlaneF mean(tr, tc), stdev(tr, tc);
    for (int i = 0; i < tr; ++i) {
        for (int j = 0; j < tc; ++j) {
            const int r0 = first_row + i * tile, r1 = std::min(rows, r0 + tile);
            const int c0 = j * tile, c1 = std::min(cols, c0 + tile);
            // Shifted accumulation keeps flat tiles exactly flat.
            const double ref = lab.L(r0, c0);
            double s = 0.0, s2 = 0.0;
            for (int r = r0; r < r1; ++r) {
                for (int c = c0; c < c1; ++c) {
                    const double d = lab.L(r, c) - ref;
                    s += d;
                    s2 += d * d;
                }
            }
            const double n = static_cast<double>((r1 - r0) * (c1 - c0));
            const double m = s / n;
            mean(i, j) = ref + m;
            stdev(i, j) = std::sqrt(std::max(0.0, s2 / n - m * m));
        }
    }

    // Tile statistics live at tile centers; interpolate between them.
    auto axis = [tile](int pos, int ntiles, int& i0, int& i1, double& w) {
        const double t = (pos + 0.5) / tile - 0.5;
        if (t <= 0.0) {
            i0 = i1 = 0;
            w = 0.0;
        } else if (t >= ntiles - 1) {
            i0 = i1 = ntiles - 1;
            w = 0.0;
        } else {
            i0 = static_cast<int>(t);
            i1 = i0 + 1;
            w = t - i0;
        }
    };

#pragma omp parallel for schedule(static)
    for (int r = first_row; r < rows; ++r) {
        int i0, i1;
        double wr;
        axis(r - first_row, tr, i0, i1, wr);
        for (int c = 0; c < cols; ++c) {
            int j0, j1;
            double wc;
            axis(c, tc, j0, j1, wc);
            auto lerp2 = [&](const PlaneF& p) {
                const double top = p(i0, j0) + (p(i0, j1) - p(i0, j0)) * wc;
                const double bot = p(i1, j0) + (p(i1, j1) - p(i1, j0)) * wc;
                return top + (bot - top) * wr;
            };
            const double mu = lerp2(mean);
            const double sd = std::max(lerp2(stdev), params.std_floor);
            const double z = (lab.L(r, c) - mu) / sd;
            const double chroma = std::hypot(lab.a(r, c), lab.b(r, c));
            const double weight = 1.0 + chroma / params.chroma_ref;
            out(r, c) = std::clamp(0.5 + z * weight / (2.0 * params.z_span), 0.0, 1.0);
        }
    }
    return out;
}

}  // namespace ldw
