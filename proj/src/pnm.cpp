#include "ldw/pnm.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <string>

namespace ldw {
namespace {

struct PnmHeader {
    char kind = 0;
    int cols = 0;
    int rows = 0;
};

int read_header_int(std::istream& in, const std::filesystem::path& path) {
    // Skips whitespace and '#' comments between header tokens.
    for (;;) {
        const int ch = in.peek();
        if (ch == '#') {
            std::string ignored;
            std::getline(in, ignored);
        } else if (ch != EOF && std::isspace(ch)) {
            in.get();
        } else {
            break;
        }
    }
    int value = -1;
    if (!(in >> value) || value < 0) throw Error(ErrorCode::Io, "bad netpbm header in " + path.string());
    return value;
}

PnmHeader read_header(std::istream& in, const std::filesystem::path& path) {
    char magic[2] = {0, 0};
    in.read(magic, 2);
    if (!in || magic[0] != 'P' || (magic[1] != '5' && magic[1] != '6')) {
        throw Error(ErrorCode::Io, "not a binary PGM/PPM file: " + path.string());
    }
    PnmHeader h;
    h.kind = magic[1];
    h.cols = read_header_int(in, path);
    h.rows = read_header_int(in, path);
    const int maxval = read_header_int(in, path);
    if (maxval <= 0 || maxval > 255) {
        throw Error(ErrorCode::Io, "only 8-bit netpbm supported: " + path.string());
    }
    // Exactly one whitespace byte separates the header from the raster.
    in.get();
    return h;
}

std::ifstream open_in(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
    return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
    return out;
}

void read_raster(std::istream& in, std::vector<std::uint8_t>& buf, const std::filesystem::path& path) {
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (in.gcount() != static_cast<std::streamsize>(buf.size())) {
        throw Error(ErrorCode::Io, "truncated raster in " + path.string());
    }
}

}  // namespace

RgbImage read_ppm(const std::filesystem::path& path) {
    auto in = open_in(path);
    const auto h = read_header(in, path);
    if (h.kind != '6') throw Error(ErrorCode::Io, "expected P6: " + path.string());
    RgbImage img(h.rows, h.cols);
    read_raster(in, img.data(), path);
    return img;
}

PlaneU8 read_pgm(const std::filesystem::path& path) {
    auto in = open_in(path);
    const auto h = read_header(in, path);
    if (h.kind != '5') throw Error(ErrorCode::Io, "expected P5: " + path.string());
    PlaneU8 img(h.rows, h.cols);
    read_raster(in, img.data(), path);
    return img;
}

RgbImage read_frame(const std::filesystem::path& path) {
    if (path.extension() == ".png") return read_png(path);
    auto in = open_in(path);
    const auto h = read_header(in, path);
    RgbImage img(h.rows, h.cols);
    if (h.kind == '6') {
        read_raster(in, img.data(), path);
        return img;
    }
    std::vector<std::uint8_t> gray(static_cast<size_t>(h.rows) * static_cast<size_t>(h.cols));
    read_raster(in, gray, path);
    for (size_t i = 0; i < gray.size(); ++i) {
        img.data()[3 * i] = img.data()[3 * i + 1] = img.data()[3 * i + 2] = gray[i];
    }
    return img;
}

void write_ppm(const std::filesystem::path& path, const RgbImage& img) {
    auto out = open_out(path);
    out << "P6\n" << img.cols() << ' ' << img.rows() << "\n255\n";
    out.write(reinterpret_cast<const char*>(img.data().data()), static_cast<std::streamsize>(img.data().size()));
    if (!out) throw Error(ErrorCode::Io, "write failed: " + path.string());
}

void write_pgm(const std::filesystem::path& path, const PlaneU8& img) {
    auto out = open_out(path);
    out << "P5\n" << img.cols() << ' ' << img.rows() << "\n255\n";
    out.write(reinterpret_cast<const char*>(img.data().data()), static_cast<std::streamsize>(img.data().size()));
    if (!out) throw Error(ErrorCode::Io, "write failed: " + path.string());
}

PlaneU8 to_u8(const PlaneF& plane, double lo, double hi) {
    if (lo == hi && !plane.empty()) {
        const auto [mn, mx] = std::minmax_element(plane.data().begin(), plane.data().end());
        lo = *mn;
        hi = *mx;
    }
    PlaneU8 out(plane.rows(), plane.cols());
    const double span = hi > lo ? hi - lo : 1.0;
    for (size_t i = 0; i < plane.size(); ++i) {
        const double v = std::clamp((plane.data()[i] - lo) / span, 0.0, 1.0);
        out.data()[i] = static_cast<std::uint8_t>(std::lround(v * 255.0));
    }
    return out;
}

}  // namespace ldw
