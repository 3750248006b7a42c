#include <gtest/gtest.h>

#include <fstream>

#include "ldw/dataset.hpp"
#include "ldw/kv_config.hpp"
#include "ldw/pipeline.hpp"
#include "ldw/scene.hpp"
#include "test_util.hpp"

using namespace ldw;

namespace {

const std::filesystem::path kData = LDW_DATA_DIR;

PipelineConfig shipped_config() { return load_pipeline_config(kData / "pipeline.cfg"); }

}  // namespace

TEST(Config, ShippedConfigLoads) {
    const PipelineConfig c = shipped_config();
    EXPECT_EQ(c.camera.rows, 375);
    EXPECT_TRUE(c.gmm.has_value());
    EXPECT_EQ(c.ransac.max_curves, 8);
    EXPECT_NEAR(c.warn.lambda_threshold, deg2rad(5.0), 1e-12);
}

TEST(Config, UnknownKeyAndBadValuesRejected) {
    const std::string cam = "camera = " + (kData / "camera_kitti.cfg").string() + "\n";
    try {
        pipeline_config_from(KvConfig::parse(cam + "sigmaa = 2\n"), kData);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::Config);
        EXPECT_NE(std::string(e.what()).find("sigmaa"), std::string::npos);
    }
    EXPECT_THROW(pipeline_config_from(KvConfig::parse(cam + "sigma = -1\n"), kData), Error);
    EXPECT_THROW(pipeline_config_from(KvConfig::parse(cam + "max_curves = 9\n"), kData), Error);
    EXPECT_THROW(pipeline_config_from(KvConfig::parse(cam + "sign_convention = other\n"), kData), Error);
    EXPECT_THROW(pipeline_config_from(KvConfig::parse("sigma = 2\n"), kData), Error);
}

TEST(Config, RelativePathsResolveAgainstConfigDir) {
    test::TempDir dir;
    std::filesystem::copy_file(kData / "camera_kitti.cfg", dir.path() / "cam.cfg");
    {
        std::ofstream f(dir.path() / "p.cfg");
        f << "camera = cam.cfg\nsegment = false\n";
    }
    const PipelineConfig c = load_pipeline_config(dir.path() / "p.cfg");
    EXPECT_EQ(c.camera.cols, 1242);
    EXPECT_FALSE(c.segment);
}

TEST(Pipeline, FindsPlantedLanesAndEgo) {
    SceneSpec s = load_scene(kData / "scenes" / "straight.json");
    const auto frame = render_scene(s, 2);
    const Pipeline p(shipped_config());
    const FrameOutput out = p.process(frame.image, "000002");
    EXPECT_TRUE(out.errors.empty());
    ASSERT_GE(out.curves.size(), 3u);
    ASSERT_TRUE(out.ego);
    EXPECT_NEAR(out.ego->left(10.0), 1.75 - frame.truth.pose.y, 0.15);
    EXPECT_NEAR(out.ego->right(10.0), -1.75 - frame.truth.pose.y, 0.15);
    ASSERT_TRUE(out.boundaries);
    EXPECT_NEAR(out.boundaries->left(15.0), s.road_half_width, 0.3);
    EXPECT_NEAR(out.boundaries->right(15.0), -s.road_half_width, 0.3);
}

TEST(Pipeline, RejectsWrongFrameSize) {
    const Pipeline p(shipped_config());
    try {
        p.process(RgbImage(10, 10));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::DimensionMismatch);
    }
}

TEST(Pipeline, JsonRecordRoundTrip) {
    SceneSpec s = load_scene(kData / "scenes" / "straight.json");
    const Pipeline p(shipped_config());
    FrameOutput prev = p.process(render_scene(s, 0).image, "000000");
    FrameOutput cur = p.process(render_scene(s, 1).image, "000001");
    p.add_departure(cur, prev);
    ASSERT_TRUE(cur.departure);
    const std::string line = to_json_line(cur);
    EXPECT_EQ(line.find('\n'), std::string::npos);
    EXPECT_EQ(line.find("timing_ms"), std::string::npos);
    EXPECT_NE(to_json_line(cur, true).find("timing_ms"), std::string::npos);
    EXPECT_NE(line.find("\"lambda_deg\""), std::string::npos);
    std::string frame;
    const FramePrediction pred = prediction_from_json(line, p.config().grid, &frame);
    EXPECT_EQ(frame, "000001");
    ASSERT_EQ(pred.curves.size(), cur.curves.size());
    for (size_t i = 0; i < pred.curves.size(); ++i) EXPECT_EQ(pred.curves[i], cur.curves[i]);
    EXPECT_TRUE(pred.boundaries);
    EXPECT_THROW(prediction_from_json("{broken", p.config().grid), Error);
    // Same input, same bytes.
    EXPECT_EQ(to_json_line(p.process(render_scene(s, 1).image, "000001")), to_json_line([&] {
                  FrameOutput o = p.process(render_scene(s, 1).image, "000001");
                  return o;
              }()));
}

TEST(Pipeline, DebugPlanesWritten) {
    test::TempDir dir;
    SceneSpec s = load_scene(kData / "scenes" / "straight.json");
    const Pipeline p(shipped_config());
    const FrameOutput out = p.process(render_scene(s, 0).image, "000000", true);
    write_debug_planes(dir.path(), out);
    EXPECT_TRUE(std::filesystem::exists(dir.path() / "000000_features.pgm"));
    EXPECT_TRUE(std::filesystem::exists(dir.path() / "000000_labels.pgm"));
}
