#pragma once

#include <filesystem>
#include <string>

namespace ldw {

class KvConfig;

/// Extrinsic-only camera description. Angles are radians internally; the
/// config file stores degrees. No focal length or principal point: the
/// half aperture and the image size fully determine the projection.
struct CameraModel {
    double h = 1.55;              ///< height above ground (m)
    double pitch = 0.0;           ///< optical axis below horizontal (rad)
    double yaw = 0.0;             ///< rotation about the vertical axis (rad)
    double half_aperture = 0.0;   ///< half of the diagonal field of view (rad)
    int rows = 0;                 ///< m
    int cols = 0;                 ///< n
    double cx = 0.0;              ///< mount position in the car frame, metadata only
    double cy = 0.0;

    /// Throws InvalidInput naming the violated bound.
    void validate() const;
};

CameraModel camera_from_config(const KvConfig& cfg);
CameraModel load_camera(const std::filesystem::path& path);
std::string camera_to_config(const CameraModel& cam);

double deg2rad(double deg);
double rad2deg(double rad);

}  // namespace ldw
