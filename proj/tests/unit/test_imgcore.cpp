#include <gtest/gtest.h>

#include <fstream>

#include "ldw/color.hpp"
#include "ldw/kv_config.hpp"
#include "ldw/pnm.hpp"
#include "test_util.hpp"

using namespace ldw;

TEST(Color, GrayLabMatchesReference) {
    double L, a, b;
    srgb_to_lab(119, 119, 119, L, a, b);
    EXPECT_NEAR(L, 50.034438792538225, 1e-9);
    // The D65 white point is not exactly neutral at 4-digit precision.
    EXPECT_NEAR(a, -0.0013975038274938179, 1e-9);
    EXPECT_NEAR(b, 0.002649017710121271, 1e-9);
}

TEST(Color, LabExtremes) {
    double L, a, b;
    srgb_to_lab(0, 0, 0, L, a, b);
    EXPECT_NEAR(L, 0.0, 1e-9);
    srgb_to_lab(255, 255, 255, L, a, b);
    EXPECT_NEAR(L, 100.0, 1e-6);
    srgb_to_lab(255, 0, 0, L, a, b);
    EXPECT_GT(a, 70.0);
    srgb_to_lab(0, 0, 255, L, a, b);
    EXPECT_LT(b, -100.0);
}

TEST(Color, LabPlaneSkipsRowsAboveFirstRow) {
    RgbImage img(4, 3);
    for (auto& v : img.data()) v = 200;
    const LabImage lab = rgb_to_lab(img, 2);
    EXPECT_EQ(lab.L(1, 0), 0.0);
    EXPECT_GT(lab.L(2, 0), 0.0);
}

TEST(Color, GrayWeights) {
    RgbImage img(1, 1);
    img.px(0, 0)[0] = 255;
    EXPECT_NEAR(to_gray(img)(0, 0), kGrayWeightR, 1e-12);
}

TEST(Color, InvariantSuppressesUniformShadow) {
    // A bright stripe on asphalt keeps its normalized contrast at half the illumination.
    auto make = [](double gain) {
        RgbImage img(64, 64);
        for (int r = 0; r < 64; ++r)
            for (int c = 0; c < 64; ++c) {
                const int v = static_cast<int>((c >= 30 && c < 33 ? 220 : 100) * gain + 0.5);
                for (int k = 0; k < 3; ++k) img.px(r, c)[k] = static_cast<std::uint8_t>(v);
            }
        return illuminant_invariant(rgb_to_lab(img));
    };
    const PlaneF lit = make(1.0), shaded = make(0.5);
    const double lit_contrast = lit(32, 31) - lit(32, 10);
    const double shaded_contrast = shaded(32, 31) - shaded(32, 10);
    EXPECT_GT(lit_contrast, 0.2);
    EXPECT_NEAR(shaded_contrast, lit_contrast, 0.25 * lit_contrast);
}

TEST(Pnm, RoundTripIsByteExact) {
    test::TempDir dir;
    RgbImage img(5, 7);
    for (size_t i = 0; i < img.data().size(); ++i) img.data()[i] = static_cast<std::uint8_t>(i * 37);
    write_ppm(dir.path() / "a.ppm", img);
    EXPECT_EQ(read_ppm(dir.path() / "a.ppm"), img);

    PlaneU8 g(3, 4);
    for (size_t i = 0; i < g.size(); ++i) g.data()[i] = static_cast<std::uint8_t>(i * 11);
    write_pgm(dir.path() / "g.pgm", g);
    EXPECT_EQ(read_pgm(dir.path() / "g.pgm"), g);
    const RgbImage rep = read_frame(dir.path() / "g.pgm");
    EXPECT_EQ(rep.px(2, 3)[1], g(2, 3));
}

TEST(Png, RoundTripAndFrameDispatch) {
    test::TempDir dir;
    RgbImage img(6, 9);
    for (size_t i = 0; i < img.data().size(); ++i) img.data()[i] = static_cast<std::uint8_t>(i * 53);
    write_png(dir.path() / "a.png", img);
    EXPECT_EQ(read_png(dir.path() / "a.png"), img);
    EXPECT_EQ(read_frame(dir.path() / "a.png"), img);
    std::ofstream(dir.path() / "bad.png") << "not a png";
    EXPECT_THROW(read_png(dir.path() / "bad.png"), Error);
}

TEST(Pnm, HeaderCommentsAndErrors) {
    test::TempDir dir;
    {
        std::ofstream f(dir.path() / "c.pgm", std::ios::binary);
        f << "P5\n# comment\n2 1\n255\n";
        f.put(static_cast<char>(9));
        f.put(static_cast<char>(200));
    }
    const PlaneU8 g = read_pgm(dir.path() / "c.pgm");
    EXPECT_EQ(g(0, 1), 200);
    {
        std::ofstream f(dir.path() / "bad.ppm", std::ios::binary);
        f << "P6\n4 4\n255\n";
    }
    EXPECT_THROW(read_ppm(dir.path() / "bad.ppm"), Error);
    EXPECT_THROW(read_ppm(dir.path() / "missing.ppm"), Error);
}

TEST(Pnm, ToU8Clamps) {
    PlaneF p(1, 3);
    p(0, 0) = -1.0;
    p(0, 1) = 0.5;
    p(0, 2) = 2.0;
    const PlaneU8 u = to_u8(p, 0.0, 1.0);
    EXPECT_EQ(u(0, 0), 0);
    EXPECT_EQ(u(0, 2), 255);
    EXPECT_NEAR(u(0, 1), 128, 1);
}

TEST(KvConfig, ParsesAndRejects) {
    const auto kv = KvConfig::parse("# c\na = 1.5\n\nb = yes  # trailing\nname = x y\n");
    EXPECT_DOUBLE_EQ(kv.number("a"), 1.5);
    EXPECT_TRUE(kv.boolean_or("b", false));
    EXPECT_EQ(kv.string_or("name", ""), "x y");
    EXPECT_EQ(kv.integer_or("missing", 7), 7);
    EXPECT_THROW(kv.number("name"), Error);
    EXPECT_THROW(kv.reject_unknown({"a", "b"}), Error);
    EXPECT_THROW(KvConfig::parse("novalue\n"), Error);
}

TEST(Camera, ConfigRoundTrip) {
    const CameraModel cam = test::kitti_camera();
    const CameraModel back = camera_from_config(KvConfig::parse(camera_to_config(cam)));
    EXPECT_NEAR(back.h, cam.h, 1e-12);
    EXPECT_NEAR(back.pitch, cam.pitch, 1e-12);
    EXPECT_NEAR(back.half_aperture, cam.half_aperture, 1e-12);
    EXPECT_EQ(back.rows, cam.rows);
    EXPECT_EQ(back.cols, cam.cols);
}

TEST(Camera, ValidateNamesBound) {
    CameraModel cam = test::kitti_camera();
    cam.h = -1.0;
    try {
        cam.validate();
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::InvalidInput);
    }
}
