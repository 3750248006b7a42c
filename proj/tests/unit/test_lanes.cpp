#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include <omp.h>

#include "ldw/lanes.hpp"
#include "test_util.hpp"

using namespace ldw;

namespace {

const LaneCurve kPlanted{-1.75, 0.02, 0.003, -0.00004};

std::vector<GroundPoint> planted_points(std::uint64_t seed, int n = 400, double outliers = 0.3, double sigma = 0.05) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> ux(0.0, 45.0), uy(-10.0, 10.0), u01(0.0, 1.0);
    std::normal_distribution<double> noise(0.0, sigma);
    std::vector<GroundPoint> pts;
    for (int i = 0; i < n; ++i) {
        const double x = ux(rng);
        pts.push_back({x, u01(rng) < outliers ? uy(rng) : kPlanted(x) + noise(rng)});
    }
    return pts;
}

double max_dev(const LaneCurve& a, const LaneCurve& b) {
    double m = 0.0;
    for (double x = 0.0; x <= 45.0; x += 0.05) m = std::max(m, std::abs(a(x) - b(x)));
    return m;
}

FeaturePointSet line_points(double y, double x_lo, double x_hi, double step, double orientation = 0.0) {
    FeaturePointSet s;
    s.grid.y_max = 10.0;
    for (double x = x_lo; x <= x_hi + 1e-9; x += step) {
        FeaturePoint p;
        p.x = x;
        p.y = y;
        p.orientation = orientation;
        p.strength = 1.0;
        p.row = static_cast<int>(std::lround(s.grid.row_of(x)));
        p.col = static_cast<int>(std::lround(s.grid.col_of(y)));
        s.points.push_back(p);
    }
    return s;
}

}  // namespace

TEST(Ransac, ExactLineRecovered) {
    std::vector<GroundPoint> pts;
    for (int i = 0; i < 50; ++i) pts.push_back({0.5 + 0.8 * i, 1.0 + 0.5 * (0.5 + 0.8 * i)});
    RansacConfig cfg;
    cfg.rng_seed = 3;
    const auto fit = ransac_fit_one(pts, cfg);
    ASSERT_TRUE(fit);
    EXPECT_NEAR(fit->curve.y0, 1.0, 1e-9);
    EXPECT_NEAR(fit->curve.a, 0.5, 1e-9);
    EXPECT_NEAR(fit->curve.b, 0.0, 1e-9);
    EXPECT_NEAR(fit->curve.c, 0.0, 1e-9);
    EXPECT_EQ(fit->curve.inlier_count, 50);
}

TEST(Ransac, TooFewPointsThrows) {
    const std::vector<GroundPoint> pts = {{1, 0}, {2, 0}, {3, 0}};
    EXPECT_THROW(ransac_fit_one(pts, RansacConfig{}), Error);
}

TEST(Ransac, NoModelBelowMinInliers) {
    std::vector<GroundPoint> pts;
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> ux(0, 45), uy(-10, 10);
    for (int i = 0; i < 30; ++i) pts.push_back({ux(rng), uy(rng)});
    RansacConfig cfg;
    cfg.min_inliers = 25;
    EXPECT_FALSE(ransac_fit_one(pts, cfg));
}

TEST(Ransac, PlantedCubicSeed7) {
    RansacConfig cfg;
    cfg.rng_seed = 7;
    const auto fit = ransac_fit_one(planted_points(7), cfg);
    ASSERT_TRUE(fit);
    EXPECT_LT(max_dev(fit->curve, kPlanted), 0.05);
}

TEST(RansacProperty, InliersSatisfyToleranceOfFinalCurve) {
    for (std::uint64_t s = 1; s <= 10; ++s) {
        const auto pts = planted_points(s);
        RansacConfig cfg;
        cfg.rng_seed = s;
        const auto fit = ransac_fit_one(pts, cfg);
        ASSERT_TRUE(fit);
        EXPECT_EQ(static_cast<int>(fit->inliers.size()), fit->curve.inlier_count);
        for (auto i : fit->inliers) EXPECT_LE(std::abs(pts[i].y - fit->curve(pts[i].x)), cfg.inlier_tol);
        size_t all = 0;
        for (const auto& p : pts) all += std::abs(p.y - fit->curve(p.x)) <= cfg.inlier_tol;
        EXPECT_EQ(all, fit->inliers.size());
    }
}

TEST(RansacProperty, DeterministicAcrossThreadCounts) {
    const auto pts = planted_points(11);
    RansacConfig cfg;
    cfg.rng_seed = 99;
    const int saved = omp_get_max_threads();
    omp_set_num_threads(1);
    const auto a = fit_lanes(pts, cfg);
    omp_set_num_threads(4);
    const auto b = fit_lanes(pts, cfg);
    omp_set_num_threads(saved);
    EXPECT_EQ(a, b);
    EXPECT_EQ(a, fit_lanes(pts, cfg));
}

TEST(FitLanes, EmptyAndCapped) {
    EXPECT_TRUE(fit_lanes(std::vector<GroundPoint>{}, RansacConfig{}).empty());
    std::vector<GroundPoint> pts;
    for (int k = 0; k < 10; ++k)
        for (double x = 3.0; x < 40.0; x += 0.25) pts.push_back({x, -9.0 + 2.0 * k});
    RansacConfig cfg;
    const auto curves = fit_lanes(pts, cfg);
    EXPECT_EQ(curves.size(), 8u);
    for (size_t i = 1; i < curves.size(); ++i) EXPECT_LE(curves[i - 1].y0, curves[i].y0);
    cfg.max_curves = 3;
    EXPECT_EQ(fit_lanes(pts, cfg).size(), 3u);
    cfg.max_curves = 9;
    EXPECT_THROW(cfg.validate(), Error);
}

TEST(FitLanes, FourParallelLinesFound) {
    std::vector<GroundPoint> pts;
    std::mt19937_64 rng(5);
    std::normal_distribution<double> n(0.0, 0.03);
    for (double y : {-5.25, -1.75, 1.75, 5.25})
        for (double x = 3.0; x < 44.0; x += 0.1) pts.push_back({x, y + 0.001 * x * x + n(rng)});
    RansacConfig cfg;
    cfg.rng_seed = 1;
    const auto curves = fit_lanes(pts, cfg);
    ASSERT_EQ(curves.size(), 4u);
    const double truth[] = {-5.25, -1.75, 1.75, 5.25};
    for (int i = 0; i < 4; ++i) {
        double dev = 0.0;
        int n_x = 0;
        for (double x = 3.0; x < 44.0; x += 0.5, ++n_x) dev += std::abs(curves[i](x) - (truth[i] + 0.001 * x * x));
        EXPECT_LT(dev / n_x, 0.1);
    }
}

TEST(FitLanesProperty, IdempotentOnCleanedData) {
    auto pts = planted_points(21, 300, 0.2);
    for (double x = 1.0; x < 44.0; x += 0.2) pts.push_back({x, 2.0 + 0.01 * x});
    RansacConfig cfg;
    cfg.rng_seed = 4;
    const auto first = fit_lanes(pts, cfg);
    ASSERT_FALSE(first.empty());
    std::vector<GroundPoint> kept;
    for (const auto& p : pts) {
        for (const auto& c : first) {
            if (std::abs(p.y - c(p.x)) <= cfg.inlier_tol) {
                kept.push_back(p);
                break;
            }
        }
    }
    const auto second = fit_lanes(kept, cfg);
    ASSERT_EQ(second.size(), first.size());
    for (size_t i = 0; i < first.size(); ++i) EXPECT_LT(max_dev(first[i], second[i]), 1e-6);
}

TEST(FitLanes, MergesNearDuplicates) {
    std::vector<GroundPoint> pts;
    for (double x = 3.0; x < 40.0; x += 0.1) {
        pts.push_back({x, 1.0});
        pts.push_back({x + 0.05, 1.3});
    }
    RansacConfig cfg;
    cfg.inlier_tol = 0.1;
    EXPECT_EQ(fit_lanes(pts, cfg).size(), 1u);
}

TEST(FitLanes, DensityAndSlopeFilters) {
    std::vector<GroundPoint> pts;
    for (double x = 3.0; x < 40.0; x += 0.1) pts.push_back({x, 1.0});
    for (double x = 3.0; x < 40.0; x += 2.0) pts.push_back({x, -3.0});  // 0.5 points per meter
    for (double x = 10.0; x < 14.0; x += 0.05) pts.push_back({x, -8.0 + 1.5 * (x - 10.0)});
    RansacConfig cfg;
    cfg.min_inliers = 12;
    EXPECT_EQ(fit_lanes(pts, cfg).size(), 3u);
    cfg.min_density = 2.0;
    cfg.max_slope = 1.0;
    const auto curves = fit_lanes(pts, cfg);
    ASSERT_EQ(curves.size(), 1u);
    EXPECT_NEAR(curves[0](20.0), 1.0, 1e-6);
}

TEST(LaneCurve, MaxAbsSlopeUsesInteriorExtremum) {
    LaneCurve c{0.0, 0.0, 0.3, -0.01};
    c.x_lo = 0.0;
    c.x_hi = 20.0;
    // slope = 0.6 x - 0.03 x^2 peaks at x = 10 with 3.0; ends give 0 and 0.
    EXPECT_NEAR(c.max_abs_slope(), 3.0, 1e-12);
    EXPECT_NEAR(c.bend(10.0), 0.0, 1e-12);
}

TEST(Gaps, CollinearDashesFilled) {
    FeaturePointSet a = line_points(1.0, 5.0, 10.0, 0.1);
    const FeaturePointSet b = line_points(1.0, 12.0, 17.0, 0.1);
    a.points.insert(a.points.end(), b.points.begin(), b.points.end());
    const auto out = interpolate_gaps(a);
    int added = 0;
    for (const auto& p : out.points) {
        if (!p.interpolated) continue;
        ++added;
        EXPECT_GT(p.x, 10.0);
        EXPECT_LT(p.x, 12.0);
        EXPECT_NEAR(p.y, 1.0, 1e-6);
    }
    EXPECT_GE(added, 15);
}

TEST(Gaps, DisagreeingOrientationsNotFilled) {
    FeaturePointSet a = line_points(1.0, 5.0, 10.0, 0.1, 0.0);
    const FeaturePointSet b = line_points(1.0, 12.0, 17.0, 0.1, deg2rad(45.0));
    a.points.insert(a.points.end(), b.points.begin(), b.points.end());
    for (const auto& p : interpolate_gaps(a).points) EXPECT_FALSE(p.interpolated);
}

TEST(Gaps, LongGapsNotFilled) {
    FeaturePointSet a = line_points(1.0, 5.0, 10.0, 0.1);
    const FeaturePointSet b = line_points(1.0, 15.0, 20.0, 0.1);
    a.points.insert(a.points.end(), b.points.begin(), b.points.end());
    for (const auto& p : interpolate_gaps(a).points) EXPECT_FALSE(p.interpolated);
}

TEST(Gaps, DashedCubicCloseToContinuousCount) {
    FeaturePointSet dashed, full;
    dashed.grid.y_max = full.grid.y_max = 10.0;
    const LaneCurve lane{-1.5, 0.01, 0.002, 0.0};
    for (int row = 0; row < 400; ++row) {
        const double x = dashed.grid.x_at(row);
        if (x < 4.0) continue;
        FeaturePoint p;
        p.x = x;
        p.y = lane(x);
        p.row = row;
        p.col = static_cast<int>(std::lround(dashed.grid.col_of(p.y)));
        p.strength = 1.0;
        p.orientation = std::atan(lane.slope(x));
        full.points.push_back(p);
        if (std::fmod(x, 3.0) < 1.0) dashed.points.push_back(p);  // 1 m on, 2 m off
    }
    // Compare over the span the dashes cover; there is nothing to bridge beyond it.
    double lo = 1e9, hi = -1e9;
    for (const auto& p : dashed.points) lo = std::min(lo, p.x), hi = std::max(hi, p.x);
    size_t continuous = 0;
    for (const auto& p : full.points) continuous += p.x >= lo && p.x <= hi;
    const auto out = interpolate_gaps(dashed);
    EXPECT_NEAR(static_cast<double>(out.points.size()), static_cast<double>(continuous), 0.05 * continuous);
}

TEST(Ego, MidpointOffsets) {
    const std::vector<LaneCurve> sym = {{-1.75}, {1.75}};
    EXPECT_NEAR(ego_lane_and_offset(sym).offset, 0.0, 1e-12);
    const std::vector<LaneCurve> asym = {{-5.0}, {-1.0}, {2.5}, {6.0}};
    const auto ego = ego_lane_and_offset(asym);
    EXPECT_NEAR(ego.offset, 0.75, 1e-12);
    EXPECT_EQ(ego.left.y0, 2.5);
    EXPECT_EQ(ego.right.y0, -1.0);
    const std::vector<LaneCurve> one_side = {{1.0}, {2.0}};
    try {
        ego_lane_and_offset(one_side);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::NoEgoLane);
    }
}
