#include "ldw/camera.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "ldw/error.hpp"
#include "ldw/kv_config.hpp"

namespace ldw {

double deg2rad(double deg) { return deg * std::numbers::pi / 180.0; }
double rad2deg(double rad) { return rad * 180.0 / std::numbers::pi; }

void CameraModel::validate() const {
    constexpr double half_pi = std::numbers::pi / 2.0;
    if (!(h > 0.0)) throw Error(ErrorCode::InvalidInput, "camera height must be > 0");
    if (!(half_aperture > 0.0 && half_aperture < half_pi)) {
        throw Error(ErrorCode::InvalidInput, "half aperture must lie in (0, pi/2)");
    }
    if (!(pitch > 0.0 && pitch < half_pi)) throw Error(ErrorCode::InvalidInput, "pitch must lie in (0, pi/2)");
    if (!std::isfinite(yaw)) throw Error(ErrorCode::InvalidInput, "yaw must be finite");
    if (rows < 2 || cols < 2) throw Error(ErrorCode::InvalidInput, "camera needs at least 2x2 pixels");
}

CameraModel camera_from_config(const KvConfig& cfg) {
    cfg.reject_unknown({"h_m", "pitch_deg", "yaw_deg", "aperture_half_deg", "rows", "cols", "cx_m", "cy_m"});
    CameraModel cam;
    cam.h = cfg.number("h_m");
    cam.pitch = deg2rad(cfg.number("pitch_deg"));
    cam.yaw = deg2rad(cfg.number("yaw_deg"));
    cam.half_aperture = deg2rad(cfg.number("aperture_half_deg"));
    cam.rows = static_cast<int>(cfg.integer("rows"));
    cam.cols = static_cast<int>(cfg.integer("cols"));
    cam.cx = cfg.number_or("cx_m", 0.0);
    cam.cy = cfg.number_or("cy_m", 0.0);
    try {
        cam.validate();
    } catch (const Error& e) {
        throw Error(ErrorCode::Config, cfg.origin() + ": " + e.what());
    }
    return cam;
}

CameraModel load_camera(const std::filesystem::path& path) { return camera_from_config(KvConfig::load(path)); }

std::string camera_to_config(const CameraModel& cam) {
    std::ostringstream out;
    out.precision(17);
    out << "h_m = " << cam.h << "\n"
        << "pitch_deg = " << rad2deg(cam.pitch) << "\n"
        << "yaw_deg = " << rad2deg(cam.yaw) << "\n"
        << "aperture_half_deg = " << rad2deg(cam.half_aperture) << "\n"
        << "rows = " << cam.rows << "\n"
        << "cols = " << cam.cols << "\n";
    if (cam.cx != 0.0 || cam.cy != 0.0) out << "cx_m = " << cam.cx << "\ncy_m = " << cam.cy << "\n";
    return out.str();
}

}  // namespace ldw
