#pragma once

#include <filesystem>

#include "ldw/image.hpp"

namespace ldw {

// Binary netpbm: P6 for RGB, P5 for 8-bit gray. Writers emit the minimal
// header "P?\n<cols> <rows>\n255\n", so read(write(x)) == x byte for byte.

RgbImage read_ppm(const std::filesystem::path& path);
PlaneU8 read_pgm(const std::filesystem::path& path);
void write_ppm(const std::filesystem::path& path, const RgbImage& img);
void write_pgm(const std::filesystem::path& path, const PlaneU8& img);

/// 8-bit PNG via libpng. Gray is replicated, alpha is dropped.
RgbImage read_png(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const RgbImage& img);

/// Reads P6, P5 or PNG (by extension); gray input is replicated to three channels.
RgbImage read_frame(const std::filesystem::path& path);

/// Affine map of [lo, hi] onto [0, 255] with clamping. When lo == hi the
/// plane's own min/max are used.
PlaneU8 to_u8(const PlaneF& plane, double lo = 0.0, double hi = 0.0);

}  // namespace ldw
