#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ldw/error.hpp"

namespace ldw {

/// Row-major single-channel raster. Storage is 0-based; the geometry code
/// converts to the 1-based (Ix, Iy) pixel indices used by the IPM formulas.
template <typename T>
class Plane {
public:
    Plane() = default;
    Plane(int rows, int cols, T fill = T{}) : rows_(rows), cols_(cols) {
        if (rows < 0 || cols < 0) throw Error(ErrorCode::InvalidInput, "negative plane size");
        data_.assign(static_cast<size_t>(rows) * static_cast<size_t>(cols), fill);
    }

    int rows() const noexcept { return rows_; }
    int cols() const noexcept { return cols_; }
    size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    T& operator()(int r, int c) noexcept { return data_[index(r, c)]; }
    const T& operator()(int r, int c) const noexcept { return data_[index(r, c)]; }

    std::span<T> row(int r) noexcept { return {data_.data() + index(r, 0), static_cast<size_t>(cols_)}; }
    std::span<const T> row(int r) const noexcept {
        return {data_.data() + index(r, 0), static_cast<size_t>(cols_)};
    }

    std::vector<T>& data() noexcept { return data_; }
    const std::vector<T>& data() const noexcept { return data_; }

    bool same_shape(const auto& other) const noexcept {
        return rows_ == other.rows() && cols_ == other.cols();
    }

    friend bool operator==(const Plane&, const Plane&) = default;

private:
    size_t index(int r, int c) const noexcept {
        return static_cast<size_t>(r) * static_cast<size_t>(cols_) + static_cast<size_t>(c);
    }

    int rows_ = 0;
    int cols_ = 0;
    std::vector<T> data_;
};

using PlaneF = Plane<double>;
using PlaneU8 = Plane<std::uint8_t>;

/// Interleaved 8-bit RGB frame.
class RgbImage {
public:
    RgbImage() = default;
    RgbImage(int rows, int cols) : rows_(rows), cols_(cols) {
        if (rows < 0 || cols < 0) throw Error(ErrorCode::InvalidInput, "negative image size");
        data_.assign(static_cast<size_t>(rows) * static_cast<size_t>(cols) * 3, 0);
    }

    int rows() const noexcept { return rows_; }
    int cols() const noexcept { return cols_; }
    static constexpr int channels() noexcept { return 3; }

    std::uint8_t* px(int r, int c) noexcept { return data_.data() + offset(r, c); }
    const std::uint8_t* px(int r, int c) const noexcept { return data_.data() + offset(r, c); }

    std::vector<std::uint8_t>& data() noexcept { return data_; }
    const std::vector<std::uint8_t>& data() const noexcept { return data_; }

    friend bool operator==(const RgbImage&, const RgbImage&) = default;

private:
    size_t offset(int r, int c) const noexcept {
        return (static_cast<size_t>(r) * static_cast<size_t>(cols_) + static_cast<size_t>(c)) * 3;
    }

    int rows_ = 0;
    int cols_ = 0;
    std::vector<std::uint8_t> data_;
};

/// CIE L*a*b* planes (D65). L in [0,100], a/b nominally [-128,127].
struct LabImage {
    PlaneF L;
    PlaneF a;
    PlaneF b;

    int rows() const noexcept { return L.rows(); }
    int cols() const noexcept { return L.cols(); }
};

}  // namespace ldw
