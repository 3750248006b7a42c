#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ldw/image.hpp"

// Hot loops shared by the filter, IPM and mixture stages. Each kernel has a
// plain serial reference and an OpenMP version; both accumulate in the same
// order, so their outputs are bitwise identical for any thread count.

namespace ldw::kernels {

/// Half-sample symmetric reflection (d c b a | a b c d | d c b a).
int reflect(int i, int n) noexcept;

/// Fixed-width gather table: out[i] = sum_t weight[i*per_cell+t] * in[index[i*per_cell+t]].
struct GatherTable {
    int per_cell = 0;
    std::vector<std::uint32_t> index;
    std::vector<double> weight;

    size_t cells() const noexcept { return per_cell == 0 ? 0 : index.size() / static_cast<size_t>(per_cell); }
};

namespace serial {

/// out(r,c) = sum_j taps[j] * in(r, c + R - j), R = taps.size() / 2.
void convolve_rows(const PlaneF& in, std::span<const double> taps, PlaneF& out);
/// out(r,c) = sum_j taps[j] * in(r + R - j, c).
void convolve_cols(const PlaneF& in, std::span<const double> taps, PlaneF& out);
void gather(std::span<const double> in, const GatherTable& table, std::span<double> out);

}  // namespace serial

namespace parallel {

void convolve_rows(const PlaneF& in, std::span<const double> taps, PlaneF& out);
void convolve_cols(const PlaneF& in, std::span<const double> taps, PlaneF& out);
void gather(std::span<const double> in, const GatherTable& table, std::span<double> out);

}  // namespace parallel

}  // namespace ldw::kernels
