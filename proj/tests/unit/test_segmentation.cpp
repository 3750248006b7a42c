#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "ldw/segmentation.hpp"
#include "test_util.hpp"

using namespace ldw;

namespace {

std::vector<Feature> gaussian_samples(const Feature& mean, const Feature& sd, int n, std::mt19937_64& rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<Feature> out(static_cast<size_t>(n));
    for (auto& f : out)
        for (int k = 0; k < 3; ++k) f[k] = mean[k] + sd[k] * g(rng);
    return out;
}

std::array<std::vector<Feature>, kNumClasses> three_patches(std::mt19937_64& rng, int n = 1000) {
    return {gaussian_samples({50, 0, 0}, {3, 1, 1}, n, rng), gaussian_samples({60, -20, 30}, {5, 3, 3}, n, rng),
            gaussian_samples({40, 40, 20}, {4, 2, 2}, n, rng)};
}

LabelMask road_mask(int rows, int cols, double half_width_m, GridSpec spec) {
    LabelMask m;
    m.spec = spec;
    m.labels = PlaneU8(rows, cols, kScene);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c)
            if (std::abs(spec.y_at(c)) <= half_width_m) m.labels(r, c) = kRoad;
    return m;
}

}  // namespace

TEST(Gmm, DegeneratePatchesGiveExactMeans) {
    std::array<std::vector<Feature>, kNumClasses> p;
    p[0].assign(40, {10, 1, 2});
    p[1].assign(40, {20, 3, 4});
    p[2].assign(40, {30, 5, 6});
    const GmmModel m = init_from_patches(p);
    for (int i = 0; i < 3; ++i) {
        EXPECT_EQ(m.classes[i].mean, p[i][0]);
        for (double v : m.classes[i].var) EXPECT_EQ(v, kVarFloor);
        EXPECT_NEAR(m.classes[i].prior, 1.0 / 3.0, 1e-15);
    }
}

TEST(Gmm, PatchErrors) {
    std::array<std::vector<Feature>, kNumClasses> p;
    p[0].assign(40, {1, 1, 1});
    p[1].assign(40, {2, 2, 2});
    try {
        init_from_patches(p);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::MissingClass);
    }
    p[2].assign(10, {3, 3, 3});
    EXPECT_THROW(init_from_patches(p), Error);
}

TEST(Gmm, SampledPatchMeansWithinThreeSigma) {
    std::mt19937_64 rng(8);
    const auto p = three_patches(rng);
    const GmmModel m = init_from_patches(p);
    const Feature means[3] = {{50, 0, 0}, {60, -20, 30}, {40, 40, 20}};
    const Feature sds[3] = {{3, 1, 1}, {5, 3, 3}, {4, 2, 2}};
    for (int i = 0; i < 3; ++i)
        for (int k = 0; k < 3; ++k) EXPECT_LT(std::abs(m.classes[i].mean[k] - means[i][k]), 3 * sds[i][k] / std::sqrt(1000.0));
}

TEST(Em, TraceNonDecreasingAndPriorsNormalized) {
    for (std::uint64_t s = 1; s <= 5; ++s) {
        std::mt19937_64 rng(s);
        auto p = three_patches(rng, 400);
        std::vector<Feature> data;
        for (auto& v : p) data.insert(data.end(), v.begin(), v.end());
        const auto res = em_refine(init_kmeans(data, s), data, {.max_iters = 50, .rel_tol = 0.0});
        for (size_t i = 1; i < res.trace.size(); ++i) EXPECT_GE(res.trace[i], res.trace[i - 1] - 1e-9);
        for (double ps : res.prior_sums) EXPECT_NEAR(ps, 1.0, 1e-12);
        res.model.validate();
    }
}

TEST(Em, FixedPointStaysFlat) {
    std::mt19937_64 rng(2);
    auto p = three_patches(rng, 3000);
    std::vector<Feature> data;
    for (auto& v : p) data.insert(data.end(), v.begin(), v.end());
    const GmmModel fitted = em_refine(init_from_patches(p), data, {.max_iters = 200, .rel_tol = 1e-12}).model;
    const auto again = em_refine(fitted, data, {.max_iters = 5, .rel_tol = 0.0});
    for (size_t i = 1; i < again.trace.size(); ++i)
        EXPECT_NEAR(again.trace[i], again.trace[0], 1e-6 * std::abs(again.trace[0]));
}

TEST(Em, TwoClustersThreeClasses) {
    std::mt19937_64 rng(3);
    auto a = gaussian_samples({0, 0, 0}, {1, 1, 1}, 1500, rng);
    auto b = gaussian_samples({20, 0, 0}, {1, 1, 1}, 1500, rng);
    std::vector<Feature> data = a;
    data.insert(data.end(), b.begin(), b.end());
    GmmModel init;
    init.classes[0].mean = {2, 0, 0};
    init.classes[1].mean = {17, 0, 0};
    init.classes[2].mean = {10, 5, 5};
    init.classes[2].prior = 0.2;
    init.classes[0].prior = init.classes[1].prior = 0.4;
    const auto m = em_refine(init, data, {.max_iters = 300, .rel_tol = 1e-10}).model;
    EXPECT_NEAR(m.classes[0].mean[0], 0.0, 1.0);
    EXPECT_NEAR(m.classes[1].mean[0], 20.0, 1.0);
    EXPECT_LT(m.classes[2].prior, 0.05);
}

TEST(Em, SerialAndParallelAgreeBitwise) {
    std::mt19937_64 rng(4);
    auto p = three_patches(rng, 2000);
    std::vector<Feature> data;
    for (auto& v : p) data.insert(data.end(), v.begin(), v.end());
    const GmmModel init = init_kmeans(data, 1);
    EmOptions serial{.max_iters = 10, .rel_tol = 0.0};
    serial.parallel = false;
    EmOptions par{.max_iters = 10, .rel_tol = 0.0};
    const auto a = em_refine(init, data, serial), b = em_refine(init, data, par);
    EXPECT_EQ(a.trace, b.trace);
    EXPECT_EQ(log_likelihood(a.model, data, false), log_likelihood(a.model, data, true));
}

TEST(Classify, MeanAndPriorTies) {
    GmmModel m;
    m.classes[0].mean = {1, 1, 1};
    m.classes[1].mean = {5, 5, 5};
    m.classes[2].mean = {9, 9, 9};
    EXPECT_EQ(classify_pixel(m, {1, 1, 1}), kRoad);
    GmmModel eq;
    eq.classes[0].prior = 0.5;
    eq.classes[1].prior = eq.classes[2].prior = 0.25;
    EXPECT_EQ(classify_pixel(eq, {3, 3, 3}), kRoad);
    GmmModel tie;  // identical components and priors
    EXPECT_EQ(classify_pixel(tie, {7, 7, 7}), kRoad);
}

TEST(ClassifyProperty, MonotoneTransformKeepsArgmax) {
    std::mt19937_64 rng(6);
    auto p = three_patches(rng, 100);
    const GmmModel m = init_from_patches(p);
    std::uniform_real_distribution<double> u(-50, 80);
    for (int i = 0; i < 500; ++i) {
        const Feature x{u(rng), u(rng), u(rng)};
        auto s = class_log_scores(m, x);
        int best = 0;
        for (int k = 1; k < 3; ++k) {
            // exp is strictly increasing; compare transformed scores.
            if (std::exp(0.01 * s[k]) > std::exp(0.01 * s[best])) best = k;
        }
        const int direct = classify_pixel(m, x);
        if (s[best] != s[direct]) EXPECT_EQ(best, direct);
    }
}

TEST(Boundaries, ExactRoadStrip) {
    GridSpec spec;
    const auto mask = road_mask(spec.rows(), spec.cols(), 4.0, spec);
    RansacConfig cfg;
    const auto b = extract_boundaries(mask, cfg);
    for (double x : {5.0, 20.0, 40.0}) {
        EXPECT_NEAR(b.left(x), 4.0, spec.resolution);
        EXPECT_NEAR(b.right(x), -4.0, spec.resolution);
        EXPECT_GE(b.left(x), b.right(x));
    }
}

TEST(Boundaries, NoRoadThrows) {
    GridSpec spec;
    LabelMask m;
    m.spec = spec;
    m.labels = PlaneU8(spec.rows(), spec.cols(), kScene);
    try {
        extract_boundaries(m, RansacConfig{});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::NoRoad);
    }
}

TEST(Stats, FormatParseRoundTrip) {
    std::mt19937_64 rng(7);
    const GmmModel m = init_from_patches(three_patches(rng, 60));
    const GmmModel back = parse_gmm_stats(format_gmm_stats(m));
    for (int i = 0; i < 3; ++i) {
        EXPECT_EQ(back.classes[i].mean, m.classes[i].mean);
        EXPECT_EQ(back.classes[i].var, m.classes[i].var);
        EXPECT_EQ(back.classes[i].prior, m.classes[i].prior);
    }
    EXPECT_THROW(parse_gmm_stats("road 1 2 3\n"), Error);
}
