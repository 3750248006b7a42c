#include "ldw/ipm.hpp"

#include <algorithm>
#include <cmath>

#include "ldw/error.hpp"

namespace ldw {
namespace {

double row_factor(const CameraModel& cam, double ix) { return 1.0 - 2.0 * (ix - 1.0) / (cam.rows - 1); }
double col_factor(const CameraModel& cam, double iy) { return 1.0 - 2.0 * (iy - 1.0) / (cam.cols - 1); }

}  // namespace

HalfApertures half_apertures(const CameraModel& cam) {
    cam.validate();
    const double dm = cam.rows - 1.0, dn = cam.cols - 1.0;
    const double diag = std::hypot(dm, dn);
    const double ta = std::tan(cam.half_aperture);
    return {std::atan(dm / diag * ta), std::atan(dn / diag * ta)};
}

double longitudinal_denominator(const CameraModel& cam, double ix) {
    const auto ap = half_apertures(cam);
    return std::tan(cam.pitch) - row_factor(cam, ix) * std::tan(ap.delta);
}

double horizon_row(const CameraModel& cam) {
    if (!(cam.pitch > 0.0)) throw Error(ErrorCode::HorizonOutsideImage, "pitch must be > 0");
    const auto ap = half_apertures(cam);
    const double ratio = std::tan(cam.pitch) / std::tan(ap.delta);
    if (ratio >= 1.0) return 1.0;
    return 1.0 + 0.5 * (cam.rows - 1.0) * (1.0 - ratio);
}

GroundPoint pixel_to_ground(const CameraModel& cam, double ix, double iy) {
    const auto ap = half_apertures(cam);
    const double hz = horizon_row(cam);
    if (!(ix > hz)) throw Error(ErrorCode::AboveHorizon, "row " + std::to_string(ix) + " is not below the horizon");
    const double u = row_factor(cam, ix);
    const double v = col_factor(cam, iy);
    const double tt = std::tan(cam.pitch), td = std::tan(ap.delta), tw = std::tan(ap.omega);
    const double den_x = tt - u * td;
    const double den_y = std::sin(cam.pitch) - u * td * std::cos(cam.pitch);
    if (std::abs(den_x) < 1e-12 || std::abs(den_y) < 1e-12) {
        throw Error(ErrorCode::NonFinite, "mapping denominator vanishes at row " + std::to_string(ix));
    }
    const double x = cam.h * (1.0 + u * td * tt) / den_x;
    const double y = cam.h * v * tw / den_y;
    if (cam.yaw == 0.0) return {x, y};
    const double cg = std::cos(cam.yaw), sg = std::sin(cam.yaw);
    return {cg * x - sg * y, sg * x + cg * y};
}

PixelPoint ground_to_pixel(const CameraModel& cam, double x, double y) {
    if (cam.yaw != 0.0) {
        const double cg = std::cos(cam.yaw), sg = std::sin(cam.yaw);
        const double xr = cg * x + sg * y;
        const double yr = -sg * x + cg * y;
        x = xr;
        y = yr;
    }
    if (!(x > 0.0)) throw Error(ErrorCode::BehindCamera, "ground point with x <= 0");
    const auto ap = half_apertures(cam);
    const double tt = std::tan(cam.pitch), td = std::tan(ap.delta), tw = std::tan(ap.omega);
    // x (tt - u td) = h (1 + u td tt)  =>  u = (x tt - h) / (td (x + h tt))
    const double u = (x * tt - cam.h) / (td * (x + cam.h * tt));
    const double den_y = std::sin(cam.pitch) - u * td * std::cos(cam.pitch);
    const double v = y * den_y / (cam.h * tw);
    return {1.0 + 0.5 * (1.0 - u) * (cam.rows - 1.0), 1.0 + 0.5 * (1.0 - v) * (cam.cols - 1.0)};
}

void GridSpec::validate() const {
    if (!(resolution > 0.0)) throw Error(ErrorCode::InvalidInput, "grid resolution must be > 0");
    if (!(x_max > 0.0) || x_max > kMaxIpmRange + 1e-12) {
        throw Error(ErrorCode::InvalidInput, "grid x_max must lie in (0, 45] m");
    }
    if (!(y_max > 0.0)) throw Error(ErrorCode::InvalidInput, "grid y_max must be > 0");
}

int GridSpec::rows() const { return static_cast<int>(std::lround(x_max / resolution)); }
int GridSpec::cols() const { return static_cast<int>(std::lround(2.0 * y_max / resolution)); }

IpmMap::IpmMap(const CameraModel& cam, const GridSpec& spec, Interp interp, int supersample)
    : cam_(cam), spec_(spec) {
    cam.validate();
    spec.validate();
    if (supersample < 1) throw Error(ErrorCode::InvalidInput, "supersample must be >= 1");
    const int rows = spec.rows(), cols = spec.cols();
    const double hz = horizon_row(cam);
    const int taps_per_lookup = interp == Interp::Bilinear ? 4 : 1;
    const int per_cell = taps_per_lookup * supersample * supersample;
    valid_ = PlaneU8(rows, cols);
    table_.per_cell = per_cell;
    table_.index.assign(static_cast<size_t>(rows) * cols * per_cell, 0);
    table_.weight.assign(static_cast<size_t>(rows) * cols * per_cell, 0.0);

#pragma omp parallel for schedule(static)
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            const size_t base = (static_cast<size_t>(r) * cols + c) * per_cell;
            bool ok = true;
            int t = 0;
            for (int si = 0; si < supersample && ok; ++si) {
                for (int sj = 0; sj < supersample && ok; ++sj) {
                    const double x = spec.x_max - (r + (si + 0.5) / supersample) * spec.resolution;
                    const double y = spec.y_max - (c + (sj + 0.5) / supersample) * spec.resolution;
                    if (!(x > 0.0)) {
                        ok = false;
                        break;
                    }
                    PixelPoint p;
                    try {
                        p = ground_to_pixel(cam, x, y);
                    } catch (const Error&) {
                        ok = false;
                        break;
                    }
                    if (!(p.ix > hz) || p.ix < 1.0 || p.ix > cam.rows || p.iy < 1.0 || p.iy > cam.cols) {
                        ok = false;
                        break;
                    }
                    const double wsub = 1.0 / (supersample * supersample);
                    const double fr = p.ix - 1.0, fc = p.iy - 1.0;
                    if (interp == Interp::Nearest) {
                        const int rr = std::clamp(static_cast<int>(std::lround(fr)), 0, cam.rows - 1);
                        const int cc = std::clamp(static_cast<int>(std::lround(fc)), 0, cam.cols - 1);
                        table_.index[base + t] = static_cast<std::uint32_t>(rr * cam.cols + cc);
                        table_.weight[base + t] = wsub;
                        ++t;
                    } else {
                        const int r0 = std::min(static_cast<int>(fr), cam.rows - 1);
                        const int c0 = std::min(static_cast<int>(fc), cam.cols - 1);
                        const int r1 = std::min(r0 + 1, cam.rows - 1);
                        const int c1 = std::min(c0 + 1, cam.cols - 1);
                        const double wr = fr - r0, wc = fc - c0;
                        const std::uint32_t idx[4] = {
                            static_cast<std::uint32_t>(r0 * cam.cols + c0), static_cast<std::uint32_t>(r0 * cam.cols + c1),
                            static_cast<std::uint32_t>(r1 * cam.cols + c0), static_cast<std::uint32_t>(r1 * cam.cols + c1)};
                        const double w[4] = {(1 - wr) * (1 - wc) * wsub, (1 - wr) * wc * wsub, wr * (1 - wc) * wsub,
                                             wr * wc * wsub};
                        for (int k = 0; k < 4; ++k, ++t) {
                            table_.index[base + t] = idx[k];
                            table_.weight[base + t] = w[k];
                        }
                    }
                }
            }
            if (ok) {
                valid_(r, c) = 1;
            } else {
                std::fill_n(table_.weight.begin() + static_cast<long>(base), per_cell, 0.0);
                std::fill_n(table_.index.begin() + static_cast<long>(base), per_cell, 0u);
            }
        }
    }
    valid_count_ = static_cast<size_t>(std::count(valid_.data().begin(), valid_.data().end(), std::uint8_t{1}));
}

namespace {

template <typename Gather>
IpmGrid apply_with(const IpmMap& map, const PlaneF& img, double fill, Gather gather) {
    const auto& cam = map.camera();
    if (img.rows() != cam.rows || img.cols() != cam.cols) {
        throw Error(ErrorCode::DimensionMismatch, "image size differs from camera model");
    }
    IpmGrid grid{map.spec(), PlaneF(map.spec().rows(), map.spec().cols()), map.valid()};
    gather(std::span<const double>(img.data()), std::span<double>(grid.cells.data()));
    for (size_t i = 0; i < grid.cells.size(); ++i) {
        if (!grid.valid.data()[i]) grid.cells.data()[i] = fill;
    }
    return grid;
}

}  // namespace

IpmGrid IpmMap::apply(const PlaneF& img, double fill) const {
    return apply_with(*this, img, fill, [this](auto in, auto out) { kernels::parallel::gather(in, table_, out); });
}

IpmGrid IpmMap::apply_serial(const PlaneF& img, double fill) const {
    return apply_with(*this, img, fill, [this](auto in, auto out) { kernels::serial::gather(in, table_, out); });
}

IpmGrid build_ipm(const CameraModel& cam, const PlaneF& img, const GridSpec& spec, Interp interp) {
    IpmMap map(cam, spec, interp);
    if (map.valid_count() == 0) throw Error(ErrorCode::EmptyGrid, "no grid cell maps inside the image");
    return map.apply(img);
}

PlaneF fill_invalid(const IpmGrid& grid) {
    PlaneF out = grid.cells;
    const int rows = out.rows(), cols = out.cols();
    std::vector<int> filled_rows;
    for (int r = 0; r < rows; ++r) {
        int first = -1, last = -1;
        for (int c = 0; c < cols; ++c) {
            if (grid.is_valid(r, c)) {
                if (first < 0) first = c;
                last = c;
            }
        }
        if (first < 0) continue;
        filled_rows.push_back(r);
        for (int c = 0; c < first; ++c) out(r, c) = out(r, first);
        for (int c = last + 1; c < cols; ++c) out(r, c) = out(r, last);
        // Interior holes take the valid neighbour on the left.
        for (int c = first + 1; c < last; ++c) {
            if (!grid.is_valid(r, c)) out(r, c) = out(r, c - 1);
        }
    }
    if (filled_rows.empty()) return out;
    // Rows without any valid cell copy the nearest row that had one.
    size_t k = 0;
    for (int r = 0; r < rows; ++r) {
        while (k + 1 < filled_rows.size() && std::abs(filled_rows[k + 1] - r) <= std::abs(filled_rows[k] - r)) ++k;
        const int src = filled_rows[k];
        if (src != r && std::find(filled_rows.begin(), filled_rows.end(), r) == filled_rows.end()) {
            std::copy(out.row(src).begin(), out.row(src).end(), out.row(r).begin());
        }
    }
    return out;
}

}  // namespace ldw
