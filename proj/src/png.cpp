#include <png.h>

#include "ldw/error.hpp"
#include "ldw/pnm.hpp"

namespace ldw {

RgbImage read_png(const std::filesystem::path& path) {
    png_image png{};
    png.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&png, path.c_str())) {
        throw Error(ErrorCode::Io, "cannot read PNG " + path.string() + ": " + png.message);
    }
    png.format = PNG_FORMAT_RGB;  // alpha is composited onto black, gray is replicated
    RgbImage img(static_cast<int>(png.height), static_cast<int>(png.width));
    if (!png_image_finish_read(&png, nullptr, img.data().data(), 0, nullptr)) {
        png_image_free(&png);
        throw Error(ErrorCode::Io, "corrupt PNG " + path.string() + ": " + png.message);
    }
    return img;
}

void write_png(const std::filesystem::path& path, const RgbImage& img) {
    png_image png{};
    png.version = PNG_IMAGE_VERSION;
    png.width = static_cast<png_uint_32>(img.cols());
    png.height = static_cast<png_uint_32>(img.rows());
    png.format = PNG_FORMAT_RGB;
    if (!png_image_write_to_file(&png, path.c_str(), 0, img.data().data(), 0, nullptr)) {
        throw Error(ErrorCode::Io, "cannot write PNG " + path.string() + ": " + png.message);
    }
}

}  // namespace ldw
