#include "ldw/scene.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "ldw/color.hpp"
#include "ldw/error.hpp"

namespace ldw {

Cubic Cubic::shifted(double x0, double y_origin) const noexcept {
    // Taylor expansion of P(x0 + t) in t.
    Cubic out;
    out.y0 = (*this)(x0) - y_origin;
    out.a = a + 2.0 * b * x0 + 3.0 * c * x0 * x0;
    out.b = b + 3.0 * c * x0;
    out.c = c;
    return out;
}

LaneCurve Cubic::as_lane(double x_lo, double x_hi) const {
    LaneCurve l;
    l.y0 = y0;
    l.a = a;
    l.b = b;
    l.c = c;
    l.x_lo = x_lo;
    l.x_hi = x_hi;
    return l;
}

bool PlantedLane::painted_at(double x_world) const noexcept {
    if (dash_on <= 0.0 || dash_off <= 0.0) return true;
    const double period = dash_on + dash_off;
    double t = std::fmod(x_world - dash_phase, period);
    if (t < 0.0) t += period;
    return t < dash_on;
}

void SceneSpec::validate() const {
    camera.validate();
    grid.validate();
    if (frames < 1) throw Error(ErrorCode::InvalidInput, "scene needs at least one frame");
    if (supersample < 1) throw Error(ErrorCode::InvalidInput, "supersample must be >= 1");
    if (!(road_half_width > 0.0)) throw Error(ErrorCode::InvalidInput, "road half width must be > 0");
    if (noise_sigma < 0.0) throw Error(ErrorCode::InvalidInput, "noise sigma must be >= 0");
    if (!(texture_scale > 0.0)) throw Error(ErrorCode::InvalidInput, "texture scale must be > 0");
    const double x_end = start_x + kMaxIpmRange + frames * std::abs(forward_per_frame);
    for (const auto& lane : lanes) {
        if (!(lane.width > 0.0)) throw Error(ErrorCode::InvalidInput, "lane width must be > 0");
        if (lane.dash_on < 0.0 || lane.dash_off < 0.0) throw Error(ErrorCode::InvalidInput, "dash lengths must be >= 0");
        for (double X = start_x; X <= x_end; X += 0.5) {
            if (std::abs(lane.curve(X) - road_center(X)) > road_half_width) {
                throw Error(ErrorCode::InvalidInput, "planted lane leaves the road");
            }
        }
    }
    for (const auto& s : shadows) {
        if (!(s.x_hi > s.x_lo) || !(s.gain > 0.0)) throw Error(ErrorCode::InvalidInput, "bad shadow band");
    }
}

VehiclePose vehicle_pose(const SceneSpec& spec, int frame_idx) {
    VehiclePose p;
    p.x = spec.start_x + frame_idx * spec.forward_per_frame;
    p.y = spec.start_offset + frame_idx * spec.drift_per_frame;
    if (spec.follow_road) p.y += spec.road_center(p.x);
    return p;
}

namespace {

std::uint64_t mix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

double lattice(std::int64_t i, std::int64_t j, std::uint64_t seed) {
    const std::uint64_t h = mix(mix(seed ^ static_cast<std::uint64_t>(i)) ^ static_cast<std::uint64_t>(j) * 0x632be59bd9b4e019ULL);
    return static_cast<double>(h >> 11) * (2.0 / 9007199254740992.0) - 1.0;
}

double value_noise(double u, double v, std::uint64_t seed) {
    const double fu = std::floor(u), fv = std::floor(v);
    const auto i = static_cast<std::int64_t>(fu), j = static_cast<std::int64_t>(fv);
    double tu = u - fu, tv = v - fv;
    tu = tu * tu * (3.0 - 2.0 * tu);
    tv = tv * tv * (3.0 - 2.0 * tv);
    const double a = lattice(i, j, seed), b = lattice(i + 1, j, seed);
    const double c = lattice(i, j + 1, seed), d = lattice(i + 1, j + 1, seed);
    return (a + (b - a) * tu) + ((c + (d - c) * tu) - (a + (b - a) * tu)) * tv;
}

double texture(const SceneSpec& s, double X, double Y) {
    const double u = X / s.texture_scale, v = Y / s.texture_scale;
    return 0.65 * value_noise(u, v, s.seed) + 0.35 * value_noise(2.0 * u + 17.0, 2.0 * v - 5.0, s.seed + 1);
}

struct Color {
    double r, g, b;
};

Color ground_color(const SceneSpec& s, double X, double Y) {
    const double tex = texture(s, X, Y);
    const bool on_road = std::abs(Y - s.road_center(X)) <= s.road_half_width;
    Color col;
    const Rgb& base = on_road ? s.road_color : s.grass_color;
    const double k = 1.0 + (on_road ? s.road_texture : s.grass_texture) * tex;
    col = {base[0] * k, base[1] * k, base[2] * k};
    if (on_road) {
        for (const auto& lane : s.lanes) {
            if (std::abs(Y - lane.curve(X)) <= 0.5 * lane.width && lane.painted_at(X)) {
                col = {static_cast<double>(lane.color[0]), static_cast<double>(lane.color[1]),
                       static_cast<double>(lane.color[2])};
            }
        }
    }
    for (const auto& o : s.obstacles) {
        if (X >= o.x && X <= o.x + o.length && std::abs(Y - o.y) <= 0.5 * o.width) {
            col = {static_cast<double>(o.color[0]), static_cast<double>(o.color[1]), static_cast<double>(o.color[2])};
        }
    }
    for (const auto& sh : s.shadows) {
        if (X >= sh.x_lo && X <= sh.x_hi) {
            col.r *= sh.gain;
            col.g *= sh.gain;
            col.b *= sh.gain;
        }
    }
    return col;
}

constexpr double kFarLimit = 400.0;

}  // namespace

RenderedFrame render_scene(const SceneSpec& spec, int frame_idx) {
    spec.validate();
    const auto& cam = spec.camera;
    const auto pose = vehicle_pose(spec, frame_idx);
    const auto ap = half_apertures(cam);
    const double hz = horizon_row(cam);
    const double tt = std::tan(cam.pitch), td = std::tan(ap.delta), tw = std::tan(ap.omega);
    const double cg = std::cos(cam.yaw), sg = std::sin(cam.yaw);
    const int ss = spec.supersample;
    const Color sky{static_cast<double>(spec.sky_color[0]), static_cast<double>(spec.sky_color[1]),
                    static_cast<double>(spec.sky_color[2])};

    std::vector<double> acc(static_cast<size_t>(cam.rows) * cam.cols * 3, 0.0);
#pragma omp parallel for schedule(dynamic, 4)
    for (int r = 0; r < cam.rows; ++r) {
        for (int si = 0; si < ss; ++si) {
            const double ix = r + 0.5 + (si + 0.5) / ss;
            const double u = 1.0 - 2.0 * (ix - 1.0) / (cam.rows - 1);
            const bool ground = ix > hz;
            const double x = ground ? cam.h * (1.0 + u * td * tt) / (tt - u * td) : 0.0;
            const double ky = ground ? cam.h * tw / (std::sin(cam.pitch) - u * td * std::cos(cam.pitch)) : 0.0;
            for (int c = 0; c < cam.cols; ++c) {
                double* out = &acc[(static_cast<size_t>(r) * cam.cols + c) * 3];
                for (int sj = 0; sj < ss; ++sj) {
                    Color col = sky;
                    if (ground && x < kFarLimit) {
                        const double iy = c + 0.5 + (sj + 0.5) / ss;
                        const double v = 1.0 - 2.0 * (iy - 1.0) / (cam.cols - 1);
                        const double y = v * ky;
                        const double xr = cg * x - sg * y, yr = sg * x + cg * y;
                        col = ground_color(spec, pose.x + xr, pose.y + yr);
                    }
                    out[0] += col.r;
                    out[1] += col.g;
                    out[2] += col.b;
                }
            }
        }
    }

    RenderedFrame frame;
    frame.image = RgbImage(cam.rows, cam.cols);
    std::mt19937_64 rng(mix(spec.seed * 1000003ULL + static_cast<std::uint64_t>(frame_idx)));
    std::normal_distribution<double> noise(0.0, spec.noise_sigma * 255.0);
    const double norm = 1.0 / (ss * ss);
    for (size_t i = 0; i < acc.size(); ++i) {
        double v = acc[i] * norm;
        if (spec.noise_sigma > 0.0) v += noise(rng);
        frame.image.data()[i] = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
    }

    auto& truth = frame.truth;
    truth.spec = spec.grid;
    truth.pose = pose;
    const IpmMap map(cam, spec.grid);
    truth.valid = map.valid();
    const int rows = spec.grid.rows(), cols = spec.grid.cols();
    truth.lane_mask = PlaneU8(rows, cols);
    truth.classes = LabelMask{spec.grid, PlaneU8(rows, cols, kInvalidLabel)};
    for (const auto& lane : spec.lanes) truth.lanes.push_back(lane.curve.shifted(pose.x, pose.y));
    truth.left_boundary = spec.road_center.shifted(pose.x, pose.y - spec.road_half_width);
    truth.right_boundary = spec.road_center.shifted(pose.x, pose.y + spec.road_half_width);
    const auto prev = vehicle_pose(spec, frame_idx - 1);
    truth.drift_angle = std::atan2(pose.y - prev.y, pose.x - prev.x);

    for (int r = 0; r < rows; ++r) {
        const double x = spec.grid.x_at(r);
        for (int c = 0; c < cols; ++c) {
            if (!truth.valid(r, c)) continue;
            const double y = spec.grid.y_at(c);
            for (size_t k = 0; k < spec.lanes.size(); ++k) {
                if (std::abs(y - truth.lanes[k](x)) <= 0.5 * spec.lanes[k].width) truth.lane_mask(r, c) = 1;
            }
            const double X = pose.x + x, Y = pose.y + y;
            std::uint8_t cls = std::abs(Y - spec.road_center(X)) <= spec.road_half_width ? kRoad : kScene;
            for (const auto& o : spec.obstacles) {
                if (X >= o.x && X <= o.x + o.length && std::abs(Y - o.y) <= 0.5 * o.width) cls = kObstacle;
            }
            truth.classes.labels(r, c) = cls;
        }
    }
    return frame;
}

PlaneF rasterize_ground_gray(const SceneSpec& spec, int frame_idx, const PlaneU8& valid) {
    const auto pose = vehicle_pose(spec, frame_idx);
    PlaneF out(valid.rows(), valid.cols());
    for (int r = 0; r < valid.rows(); ++r) {
        for (int c = 0; c < valid.cols(); ++c) {
            if (!valid(r, c)) continue;
            const auto col = ground_color(spec, pose.x + spec.grid.x_at(r), pose.y + spec.grid.y_at(c));
            out(r, c) = std::clamp((kGrayWeightR * col.r + kGrayWeightG * col.g + kGrayWeightB * col.b) / 255.0, 0.0, 1.0);
        }
    }
    return out;
}

namespace {

using nlohmann::json;

Cubic cubic_from(const json& j) {
    return {j.value("y0", 0.0), j.value("a", 0.0), j.value("b", 0.0), j.value("c", 0.0)};
}

json cubic_to(const Cubic& c) { return {{"y0", c.y0}, {"a", c.a}, {"b", c.b}, {"c", c.c}}; }

Rgb rgb_from(const json& j, Rgb fallback) {
    if (j.is_null()) return fallback;
    if (!j.is_array() || j.size() != 3) throw Error(ErrorCode::Config, "colors are [r, g, b] arrays");
    return {j[0].get<std::uint8_t>(), j[1].get<std::uint8_t>(), j[2].get<std::uint8_t>()};
}

void reject_unknown(const json& j, std::initializer_list<const char*> keys, const char* where) {
    for (const auto& [k, v] : j.items()) {
        if (std::none_of(keys.begin(), keys.end(), [&](const char* a) { return k == a; })) {
            throw Error(ErrorCode::Config, std::string("unknown key '") + k + "' in " + where);
        }
    }
}

}  // namespace

SceneSpec parse_scene(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::Config, std::string("scene json: ") + e.what());
    }
    try {
        reject_unknown(j,
                       {"camera", "grid", "road_center", "road_half_width", "lanes", "road_color", "grass_color",
                        "sky_color", "road_texture", "grass_texture", "texture_scale", "shadows", "obstacles",
                        "noise_sigma", "start_x", "start_offset", "forward_per_frame", "drift_per_frame",
                        "follow_road", "frames", "seed", "supersample"},
                       "scene");
        SceneSpec s;
        const auto& cam = j.at("camera");
        reject_unknown(cam, {"h_m", "pitch_deg", "yaw_deg", "aperture_half_deg", "rows", "cols"}, "camera");
        s.camera.h = cam.at("h_m").get<double>();
        s.camera.pitch = deg2rad(cam.at("pitch_deg").get<double>());
        s.camera.yaw = deg2rad(cam.value("yaw_deg", 0.0));
        s.camera.half_aperture = deg2rad(cam.at("aperture_half_deg").get<double>());
        s.camera.rows = cam.at("rows").get<int>();
        s.camera.cols = cam.at("cols").get<int>();
        if (j.contains("grid")) {
            const auto& g = j["grid"];
            reject_unknown(g, {"x_max", "y_max", "resolution"}, "grid");
            s.grid.x_max = g.value("x_max", s.grid.x_max);
            s.grid.y_max = g.value("y_max", s.grid.y_max);
            s.grid.resolution = g.value("resolution", s.grid.resolution);
        }
        if (j.contains("road_center")) s.road_center = cubic_from(j["road_center"]);
        s.road_half_width = j.value("road_half_width", s.road_half_width);
        for (const auto& l : j.value("lanes", json::array())) {
            reject_unknown(l, {"y0", "a", "b", "c", "width", "dash_on", "dash_off", "dash_phase", "color"}, "lane");
            PlantedLane lane;
            lane.curve = cubic_from(l);
            lane.width = l.value("width", lane.width);
            lane.dash_on = l.value("dash_on", 0.0);
            lane.dash_off = l.value("dash_off", 0.0);
            lane.dash_phase = l.value("dash_phase", 0.0);
            lane.color = rgb_from(l.value("color", json()), lane.color);
            s.lanes.push_back(lane);
        }
        s.road_color = rgb_from(j.value("road_color", json()), s.road_color);
        s.grass_color = rgb_from(j.value("grass_color", json()), s.grass_color);
        s.sky_color = rgb_from(j.value("sky_color", json()), s.sky_color);
        s.road_texture = j.value("road_texture", s.road_texture);
        s.grass_texture = j.value("grass_texture", s.grass_texture);
        s.texture_scale = j.value("texture_scale", s.texture_scale);
        for (const auto& b : j.value("shadows", json::array())) {
            s.shadows.push_back({b.at("x_lo").get<double>(), b.at("x_hi").get<double>(), b.at("gain").get<double>()});
        }
        for (const auto& o : j.value("obstacles", json::array())) {
            Obstacle ob;
            ob.x = o.at("x").get<double>();
            ob.y = o.at("y").get<double>();
            ob.length = o.value("length", ob.length);
            ob.width = o.value("width", ob.width);
            ob.color = rgb_from(o.value("color", json()), ob.color);
            s.obstacles.push_back(ob);
        }
        s.noise_sigma = j.value("noise_sigma", s.noise_sigma);
        s.start_x = j.value("start_x", s.start_x);
        s.start_offset = j.value("start_offset", s.start_offset);
        s.forward_per_frame = j.value("forward_per_frame", s.forward_per_frame);
        s.drift_per_frame = j.value("drift_per_frame", s.drift_per_frame);
        s.follow_road = j.value("follow_road", s.follow_road);
        s.frames = j.value("frames", s.frames);
        s.seed = j.value("seed", s.seed);
        s.supersample = j.value("supersample", s.supersample);
        try {
            s.validate();
        } catch (const Error& e) {
            throw Error(ErrorCode::Config, std::string("scene: ") + e.what());
        }
        return s;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::Config, std::string("scene json: ") + e.what());
    }
}

SceneSpec load_scene(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, "cannot open scene " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_scene(ss.str());
}

std::string scene_to_json(const SceneSpec& s) {
    json j;
    j["camera"] = {{"h_m", s.camera.h},
                   {"pitch_deg", rad2deg(s.camera.pitch)},
                   {"yaw_deg", rad2deg(s.camera.yaw)},
                   {"aperture_half_deg", rad2deg(s.camera.half_aperture)},
                   {"rows", s.camera.rows},
                   {"cols", s.camera.cols}};
    j["grid"] = {{"x_max", s.grid.x_max}, {"y_max", s.grid.y_max}, {"resolution", s.grid.resolution}};
    j["road_center"] = cubic_to(s.road_center);
    j["road_half_width"] = s.road_half_width;
    j["lanes"] = json::array();
    for (const auto& l : s.lanes) {
        auto lj = cubic_to(l.curve);
        lj["width"] = l.width;
        lj["dash_on"] = l.dash_on;
        lj["dash_off"] = l.dash_off;
        lj["dash_phase"] = l.dash_phase;
        lj["color"] = l.color;
        j["lanes"].push_back(lj);
    }
    j["road_color"] = s.road_color;
    j["grass_color"] = s.grass_color;
    j["sky_color"] = s.sky_color;
    j["road_texture"] = s.road_texture;
    j["grass_texture"] = s.grass_texture;
    j["texture_scale"] = s.texture_scale;
    j["shadows"] = json::array();
    for (const auto& b : s.shadows) j["shadows"].push_back({{"x_lo", b.x_lo}, {"x_hi", b.x_hi}, {"gain", b.gain}});
    j["obstacles"] = json::array();
    for (const auto& o : s.obstacles) {
        j["obstacles"].push_back(
            {{"x", o.x}, {"y", o.y}, {"length", o.length}, {"width", o.width}, {"color", o.color}});
    }
    j["noise_sigma"] = s.noise_sigma;
    j["start_x"] = s.start_x;
    j["start_offset"] = s.start_offset;
    j["forward_per_frame"] = s.forward_per_frame;
    j["drift_per_frame"] = s.drift_per_frame;
    j["follow_road"] = s.follow_road;
    j["frames"] = s.frames;
    j["seed"] = s.seed;
    j["supersample"] = s.supersample;
    return j.dump(2);
}

}  // namespace ldw
