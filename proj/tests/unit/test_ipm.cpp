#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "ldw/color.hpp"
#include "ldw/ipm.hpp"
#include "ldw/scene.hpp"
#include "test_util.hpp"

using namespace ldw;

TEST(Ipm, HalfAperturesMatchReference) {
    const auto ha = half_apertures(test::kitti_camera());
    EXPECT_NEAR(ha.delta, 0.46347552897733380239, 1e-12);
    EXPECT_NEAR(ha.omega, 1.0281745131974876033, 1e-12);
}

TEST(Ipm, SquareImageSplitsApertureEvenly) {
    CameraModel cam = test::kitti_camera();
    cam.rows = cam.cols = 101;
    cam.half_aperture = std::numbers::pi / 4;
    const auto ha = half_apertures(cam);
    EXPECT_NEAR(ha.delta, std::atan(1.0 / std::sqrt(2.0)), 1e-12);
    EXPECT_NEAR(ha.omega, ha.delta, 1e-15);
}

TEST(Ipm, TallImageLimit) {
    CameraModel cam = test::kitti_camera();
    cam.rows = 100000;
    cam.cols = 2;
    const auto ha = half_apertures(cam);
    EXPECT_NEAR(ha.delta, cam.half_aperture, 1e-4);
    EXPECT_LT(ha.omega, 1e-4);
}

TEST(Ipm, HorizonMatchesReference) {
    const CameraModel cam = test::kitti_camera();
    EXPECT_NEAR(horizon_row(cam), 168.39105550473803507, 1e-9);
    EXPECT_NEAR(longitudinal_denominator(cam, horizon_row(cam)), 0.0, 1e-12);
}

TEST(Ipm, HorizonLimits) {
    CameraModel cam = test::kitti_camera();
    cam.pitch = 1e-9;
    EXPECT_NEAR(horizon_row(cam), (cam.rows + 1) / 2.0, 1e-5);
    cam.pitch = half_apertures(cam).delta;
    EXPECT_NEAR(horizon_row(cam), 1.0, 1e-9);
    cam.pitch = 1.2;
    EXPECT_DOUBLE_EQ(horizon_row(cam), 1.0);
    cam.pitch = 0.0;
    try {
        horizon_row(cam);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::HorizonOutsideImage);
    }
}

TEST(Ipm, PixelToGroundMatchesReference) {
    const auto g = pixel_to_ground(test::kitti_camera(), 375, 1);
    EXPECT_NEAR(g.x, 2.7334686762451568461, 1e-12);
    EXPECT_NEAR(g.y, 4.6614384988266396488, 1e-12);
}

TEST(Ipm, CenterColumnHasZeroLateral) {
    const CameraModel cam = test::kitti_camera();
    EXPECT_EQ(pixel_to_ground(cam, cam.rows, (cam.cols + 1) / 2.0).y, 0.0);
    EXPECT_NEAR(ground_to_pixel(cam, 12.0, 0.0).iy, (cam.cols + 1) / 2.0, 1e-9);
}

TEST(Ipm, ForwardDistanceDecreasesDownTheImage) {
    const CameraModel cam = test::kitti_camera();
    const int first = static_cast<int>(std::floor(horizon_row(cam))) + 1;
    double prev = std::numeric_limits<double>::infinity();
    for (int ix = first; ix <= cam.rows; ++ix) {
        const double x = pixel_to_ground(cam, ix, 300).x;
        EXPECT_GT(x, 0.0);
        EXPECT_LT(x, prev);
        prev = x;
    }
}

TEST(Ipm, ErrorsAboveHorizonAndBehindCamera) {
    const CameraModel cam = test::kitti_camera();
    try {
        pixel_to_ground(cam, 100, 1);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::AboveHorizon);
    }
    try {
        ground_to_pixel(cam, -1.0, 0.0);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::BehindCamera);
    }
}

TEST(Ipm, FarPointsApproachHorizon) {
    const CameraModel cam = test::kitti_camera();
    EXPECT_NEAR(ground_to_pixel(cam, 1e9, 0.0).ix, horizon_row(cam), 1e-6);
}

TEST(IpmProperty, RoundTripWithYaw) {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> ux(0.5, 45.0), uy(-10.0, 10.0), uyaw(-0.1, 0.1);
    CameraModel cam = test::kitti_camera();
    for (int i = 0; i < 2000; ++i) {
        cam.yaw = uyaw(rng);
        const double x = ux(rng), y = uy(rng);
        const auto p = ground_to_pixel(cam, x, y);
        const auto g = pixel_to_ground(cam, p.ix, p.iy);
        ASSERT_NEAR(g.x, x, 1e-9);
        ASSERT_NEAR(g.y, y, 1e-9);
    }
}

TEST(IpmProperty, PixelRoundTrip) {
    const CameraModel cam = test::kitti_camera();
    const double hz = horizon_row(cam);
    for (int ix = static_cast<int>(hz) + 2; ix <= cam.rows; ix += 7) {
        for (int iy = 1; iy <= cam.cols; iy += 97) {
            const auto g = pixel_to_ground(cam, ix, iy);
            const auto p = ground_to_pixel(cam, g.x, g.y);
            ASSERT_NEAR(p.ix, ix, 1e-6);
            ASSERT_NEAR(p.iy, iy, 1e-6);
        }
    }
}

TEST(Grid, DefaultShapeAndCellCenters) {
    GridSpec g;
    g.y_max = 10.0;
    EXPECT_EQ(g.rows(), 450);
    EXPECT_EQ(g.cols(), 200);
    EXPECT_DOUBLE_EQ(g.x_at(0), 44.95);
    EXPECT_DOUBLE_EQ(g.y_at(0), 9.95);
    EXPECT_NEAR(g.row_of(g.x_at(17)), 17.0, 1e-9);
    EXPECT_NEAR(g.col_of(g.y_at(33)), 33.0, 1e-9);
    GridSpec bad;
    bad.x_max = 50.0;
    EXPECT_THROW(bad.validate(), Error);
    bad = GridSpec{};
    bad.resolution = 0.0;
    EXPECT_THROW(bad.validate(), Error);
}

TEST(IpmMap, ConstantImageStaysConstant) {
    const CameraModel cam = test::kitti_camera();
    const PlaneF img(cam.rows, cam.cols, 0.37);
    for (int ss : {1, 2}) {
        const IpmMap map(cam, GridSpec{}, Interp::Bilinear, ss);
        const IpmGrid g = map.apply(img, -1.0);
        ASSERT_GT(map.valid_count(), 0u);
        for (int r = 0; r < g.rows(); ++r)
            for (int c = 0; c < g.cols(); ++c) {
                if (g.is_valid(r, c)) {
                    ASSERT_NEAR(g.cells(r, c), 0.37, 1e-12);
                } else {
                    ASSERT_EQ(g.cells(r, c), -1.0);
                }
            }
    }
}

TEST(IpmMap, ValidCellsLieBelowHorizonInsideImage) {
    const CameraModel cam = test::kitti_camera();
    const IpmMap map(cam, GridSpec{});
    const double hz = horizon_row(cam);
    const auto& spec = map.spec();
    for (int r = 0; r < spec.rows(); r += 3)
        for (int c = 0; c < spec.cols(); c += 3) {
            if (!map.valid()(r, c)) continue;
            const auto p = ground_to_pixel(cam, spec.x_at(r), spec.y_at(c));
            ASSERT_GT(p.ix, hz);
            ASSERT_GE(p.ix, 1.0);
            ASSERT_LE(p.ix, cam.rows);
            ASSERT_GE(p.iy, 1.0);
            ASSERT_LE(p.iy, cam.cols);
        }
    // The nearest rows see past the bottom edge of the image.
    EXPECT_FALSE(map.valid()(spec.rows() - 1, spec.cols() / 2));
    EXPECT_TRUE(map.valid()(spec.rows() - 30, spec.cols() / 2));
}

TEST(IpmMap, SerialAndParallelAgreeBitwise) {
    const CameraModel cam = test::kitti_camera();
    PlaneF img = test::random_plane(cam.rows, cam.cols, 5);
    const IpmMap map(cam, GridSpec{}, Interp::Bilinear, 2);
    EXPECT_EQ(map.apply(img).cells, map.apply_serial(img).cells);
    const IpmMap nearest(cam, GridSpec{}, Interp::Nearest);
    EXPECT_EQ(nearest.apply(img).cells, nearest.apply_serial(img).cells);
}

TEST(IpmMap, EmptyGridThrows) {
    CameraModel cam = test::kitti_camera();
    GridSpec spec;
    spec.x_max = 2.0;  // entirely in front of the nearest visible row
    try {
        build_ipm(cam, PlaneF(cam.rows, cam.cols), spec);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::EmptyGrid);
    }
}

TEST(IpmMap, FillInvalidCopiesNearestValid) {
    IpmGrid g;
    g.spec.x_max = 0.4;
    g.spec.y_max = 0.2;
    g.cells = PlaneF(4, 4);
    g.valid = PlaneU8(4, 4);
    g.cells(1, 1) = 5.0;
    g.valid(1, 1) = 1;
    g.cells(1, 2) = 7.0;
    g.valid(1, 2) = 1;
    const PlaneF f = fill_invalid(g);
    EXPECT_EQ(f(1, 0), 5.0);
    EXPECT_EQ(f(1, 3), 7.0);
    EXPECT_EQ(f(0, 0), 5.0);
    EXPECT_EQ(f(3, 3), 7.0);
}

TEST(IpmScene, WorldParallelLinesStayParallel) {
    SceneSpec spec;
    spec.camera = test::kitti_camera();
    PlantedLane l1, l2;
    l1.curve.y0 = 1.75;
    l2.curve.y0 = -1.75;
    spec.lanes = {l1, l2};
    spec.road_texture = 0.0;
    spec.grass_texture = 0.0;
    const auto frame = render_scene(spec, 0);
    const IpmMap map(spec.camera, spec.grid, Interp::Bilinear, 2);
    const IpmGrid g = map.apply(to_gray(frame.image));

    // Centroid of bright cells on each side of the center, per row.
    std::vector<double> xs, yl, yr;
    const int mid = g.cols() / 2;
    for (int r = 0; r < g.rows(); ++r) {
        if (g.spec.x_at(r) > 30.0) continue;
        double sl = 0, wl = 0, sr = 0, wr = 0;
        bool ok = true;
        for (int c = 0; c < g.cols(); ++c) {
            if (!g.is_valid(r, c)) {
                ok = ok && (c < mid - 40 || c > mid + 40);
                continue;
            }
            const double w = std::max(0.0, g.cells(r, c) - 0.6);
            (c < mid ? sl : sr) += w * g.spec.y_at(c);
            (c < mid ? wl : wr) += w;
        }
        if (!ok || wl == 0 || wr == 0) continue;
        xs.push_back(g.spec.x_at(r));
        yl.push_back(sl / wl);
        yr.push_back(sr / wr);
    }
    ASSERT_GT(xs.size(), 100u);
    auto slope = [&](const std::vector<double>& ys) {
        double mx = 0, my = 0;
        for (size_t i = 0; i < xs.size(); ++i) mx += xs[i], my += ys[i];
        mx /= xs.size();
        my /= ys.size();
        double sxy = 0, sxx = 0;
        for (size_t i = 0; i < xs.size(); ++i) sxy += (xs[i] - mx) * (ys[i] - my), sxx += (xs[i] - mx) * (xs[i] - mx);
        return sxy / sxx;
    };
    const double angle = std::abs(std::atan(slope(yl)) - std::atan(slope(yr)));
    EXPECT_LT(angle, deg2rad(0.5));
    double mean_sep = 0;
    for (size_t i = 0; i < xs.size(); ++i) mean_sep += yl[i] - yr[i];
    mean_sep /= xs.size();
    EXPECT_NEAR(mean_sep, 3.5, spec.grid.resolution);
}
