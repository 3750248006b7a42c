#pragma once

#include <atomic>
#include <filesystem>
#include <random>
#include <string>
#include <unistd.h>

#include "ldw/camera.hpp"
#include "ldw/image.hpp"

namespace ldw::test {

inline CameraModel kitti_camera() {
    CameraModel cam;
    cam.h = 1.55;
    cam.pitch = deg2rad(3.0);
    cam.half_aperture = deg2rad(60.0);
    cam.rows = 375;
    cam.cols = 1242;
    return cam;
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag = "ldw") {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                (tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

inline PlaneF random_plane(int rows, int cols, std::uint64_t seed) {
    PlaneF p(rows, cols);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (auto& v : p.data()) v = u(rng);
    return p;
}

}  // namespace ldw::test
