#include "ldw/kernels.hpp"

#include <vector>

#include "ldw/error.hpp"

namespace ldw::kernels {

int reflect(int i, int n) noexcept {
    if (n == 1) return 0;
    const int period = 2 * n;
    i %= period;
    if (i < 0) i += period;
    return i < n ? i : period - 1 - i;
}

namespace {

void check_taps(std::span<const double> taps) {
    if (taps.empty() || taps.size() % 2 == 0) throw Error(ErrorCode::InvalidInput, "kernel length must be odd");
}

void prepare(const PlaneF& in, PlaneF& out) {
    if (!out.same_shape(in)) out = PlaneF(in.rows(), in.cols());
}

}  // namespace

namespace serial {

void convolve_rows(const PlaneF& in, std::span<const double> taps, PlaneF& out) {
    check_taps(taps);
    prepare(in, out);
    const int radius = static_cast<int>(taps.size() / 2);
    for (int r = 0; r < in.rows(); ++r) {
        for (int c = 0; c < in.cols(); ++c) {
            double acc = 0.0;
            for (size_t j = 0; j < taps.size(); ++j) {
                acc += taps[j] * in(r, reflect(c + radius - static_cast<int>(j), in.cols()));
            }
            out(r, c) = acc;
        }
    }
}

void convolve_cols(const PlaneF& in, std::span<const double> taps, PlaneF& out) {
    check_taps(taps);
    prepare(in, out);
    const int radius = static_cast<int>(taps.size() / 2);
    for (int r = 0; r < in.rows(); ++r) {
        for (int c = 0; c < in.cols(); ++c) {
            double acc = 0.0;
            for (size_t j = 0; j < taps.size(); ++j) {
                acc += taps[j] * in(reflect(r + radius - static_cast<int>(j), in.rows()), c);
            }
            out(r, c) = acc;
        }
    }
}

void gather(std::span<const double> in, const GatherTable& table, std::span<double> out) {
    const size_t cells = table.cells();
    if (out.size() != cells) throw Error(ErrorCode::DimensionMismatch, "gather output size");
    for (size_t i = 0; i < cells; ++i) {
        double acc = 0.0;
        for (int t = 0; t < table.per_cell; ++t) {
            const size_t k = i * static_cast<size_t>(table.per_cell) + static_cast<size_t>(t);
            acc += table.weight[k] * in[table.index[k]];
        }
        out[i] = acc;
    }
}

}  // namespace serial

namespace parallel {

void convolve_rows(const PlaneF& in, std::span<const double> taps, PlaneF& out) {
    check_taps(taps);
    prepare(in, out);
    const int radius = static_cast<int>(taps.size() / 2);
    const int cols = in.cols();
    const int ntaps = static_cast<int>(taps.size());
#pragma omp parallel
    {
        std::vector<double> padded(static_cast<size_t>(cols + 2 * radius));
#pragma omp for schedule(static)
        for (int r = 0; r < in.rows(); ++r) {
            const auto src = in.row(r);
            for (int p = 0; p < cols + 2 * radius; ++p) padded[p] = src[reflect(p - radius, cols)];
            auto dst = out.row(r);
            for (int c = 0; c < cols; ++c) {
                // padded[c + 2R - j] == in(r, reflect(c + R - j))
                const double* base = padded.data() + c + 2 * radius;
                double acc = 0.0;
                for (int j = 0; j < ntaps; ++j) acc += taps[j] * base[-j];
                dst[c] = acc;
            }
        }
    }
}

void convolve_cols(const PlaneF& in, std::span<const double> taps, PlaneF& out) {
    check_taps(taps);
    prepare(in, out);
    const int radius = static_cast<int>(taps.size() / 2);
    const int rows = in.rows();
    const int cols = in.cols();
    const int ntaps = static_cast<int>(taps.size());
#pragma omp parallel for schedule(static)
    for (int r = 0; r < rows; ++r) {
        auto dst = out.row(r);
        for (int c = 0; c < cols; ++c) dst[c] = 0.0;
        for (int j = 0; j < ntaps; ++j) {
            const auto src = in.row(reflect(r + radius - j, rows));
            const double w = taps[j];
            for (int c = 0; c < cols; ++c) dst[c] += w * src[c];
        }
    }
}

void gather(std::span<const double> in, const GatherTable& table, std::span<double> out) {
    const size_t cells = table.cells();
    if (out.size() != cells) throw Error(ErrorCode::DimensionMismatch, "gather output size");
    const long n = static_cast<long>(cells);
    const int per = table.per_cell;
#pragma omp parallel for schedule(static)
    for (long i = 0; i < n; ++i) {
        const size_t base = static_cast<size_t>(i) * static_cast<size_t>(per);
        double acc = 0.0;
        for (int t = 0; t < per; ++t) acc += table.weight[base + t] * in[table.index[base + t]];
        out[static_cast<size_t>(i)] = acc;
    }
}

}  // namespace parallel

}  // namespace ldw::kernels
