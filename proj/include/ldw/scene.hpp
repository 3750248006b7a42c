#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ldw/camera.hpp"
#include "ldw/image.hpp"
#include "ldw/ipm.hpp"
#include "ldw/lanes.hpp"
#include "ldw/segmentation.hpp"

namespace ldw {

using Rgb = std::array<std::uint8_t, 3>;

/// Y = y0 + a X + b X^2 + c X^3 over a forward coordinate X.
struct Cubic {
    double y0 = 0.0;
    double a = 0.0;
    double b = 0.0;
    double c = 0.0;

    double operator()(double x) const noexcept { return y0 + x * (a + x * (b + x * c)); }
    /// Same curve expressed in x' = X - x_origin, minus y_origin.
    Cubic shifted(double x_origin, double y_origin) const noexcept;
    LaneCurve as_lane(double x_lo, double x_hi) const;
};

struct PlantedLane {
    Cubic curve;
    double width = 0.15;
    double dash_on = 0.0;   ///< 0 = solid line
    double dash_off = 0.0;
    double dash_phase = 0.0;
    Rgb color{235, 235, 235};

    bool painted_at(double x_world) const noexcept;
};

struct ShadowBand {
    double x_lo = 0.0;  ///< world X interval
    double x_hi = 0.0;
    double gain = 0.5;
};

/// Flat painted rectangle on the road: X in [x, x + length], |Y - y| <= width / 2.
struct Obstacle {
    double x = 0.0;
    double y = 0.0;
    double length = 4.0;
    double width = 1.8;
    Rgb color{170, 30, 30};
};

/// Synthetic road scene in world coordinates. The vehicle moves forward
/// `forward_per_frame` and laterally `drift_per_frame` per frame while its
/// heading stays along X; with `follow_road` it also tracks the road center.
struct SceneSpec {
    CameraModel camera;
    GridSpec grid;
    Cubic road_center;
    double road_half_width = 7.0;
    std::vector<PlantedLane> lanes;
    Rgb road_color{105, 105, 105};
    Rgb grass_color{80, 125, 55};
    Rgb sky_color{170, 195, 225};
    double road_texture = 0.08;
    double grass_texture = 0.15;
    double texture_scale = 0.5;
    std::vector<ShadowBand> shadows;
    std::vector<Obstacle> obstacles;
    double noise_sigma = 0.0;  ///< per-channel Gaussian noise, fraction of 255
    double start_x = 0.0;
    double start_offset = 0.0;
    double forward_per_frame = 0.5;
    double drift_per_frame = 0.0;
    bool follow_road = false;
    int frames = 1;
    std::uint64_t seed = 1;
    int supersample = 3;

    void validate() const;
};

struct VehiclePose {
    double x = 0.0;
    double y = 0.0;
};

struct SceneTruth {
    GridSpec spec;
    PlaneU8 valid;
    PlaneU8 lane_mask;  ///< 1 on cells within width/2 of a planted line (dash gaps included)
    LabelMask classes;
    std::vector<Cubic> lanes;  ///< vehicle frame
    Cubic left_boundary;       ///< vehicle frame, larger Y
    Cubic right_boundary;
    double drift_angle = 0.0;  ///< atan(lateral / forward) since the previous frame
    VehiclePose pose;
};

struct RenderedFrame {
    RgbImage image;
    SceneTruth truth;
};

VehiclePose vehicle_pose(const SceneSpec& spec, int frame_idx);
RenderedFrame render_scene(const SceneSpec& spec, int frame_idx);

/// Noise-free gray level of the ground under each grid cell center (0 where
/// the cell is invalid); reference for the IPM resampling.
PlaneF rasterize_ground_gray(const SceneSpec& spec, int frame_idx, const PlaneU8& valid);

SceneSpec parse_scene(const std::string& json_text);
SceneSpec load_scene(const std::filesystem::path& path);
std::string scene_to_json(const SceneSpec& spec);

}  // namespace ldw
