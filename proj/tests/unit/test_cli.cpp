#include <gtest/gtest.h>

#include <sys/wait.h>

#include <fstream>
#include <sstream>

#include "ldw/dataset.hpp"
#include "ldw/pnm.hpp"
#include "ldw/scene.hpp"
#include "test_util.hpp"

using namespace ldw;
namespace fs = std::filesystem;

namespace {

const fs::path kData = LDW_DATA_DIR;
const std::string kBin = LDW_BIN;

int run(const std::string& args) {
    const std::string cmd = kBin + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string config() { return "--config " + (kData / "pipeline.cfg").string(); }

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

std::vector<std::string> lines_of(const fs::path& p) {
    std::vector<std::string> out;
    std::ifstream f(p);
    for (std::string l; std::getline(f, l);) out.push_back(l);
    return out;
}

// Short copy of the straight scene, written next to the test data.
fs::path short_scene(const fs::path& dir, int frames, const std::string& name = "straight") {
    SceneSpec s = load_scene(kData / "scenes" / (name + ".json"));
    s.frames = frames;
    const fs::path p = dir / (name + "_short.json");
    std::ofstream(p) << scene_to_json(s);
    return p;
}

}  // namespace

TEST(Cli, UsageAndConfigErrors) {
    EXPECT_EQ(run(""), 2);
    EXPECT_EQ(run("bogus"), 2);
    EXPECT_EQ(run("detect"), 2);
    EXPECT_EQ(run("detect x.ppm"), 2);  // --config missing
    test::TempDir dir;
    std::ofstream(dir.path() / "bad.cfg") << "camera = " << (kData / "camera_kitti.cfg").string() << "\nwhat = 1\n";
    EXPECT_EQ(run("detect x.ppm --config " + (dir.path() / "bad.cfg").string()), 2);
    EXPECT_EQ(run("detect x.ppm " + config() + " --max-curves 9"), 2);
}

TEST(Cli, MissingInputIsIoError) {
    EXPECT_EQ(run("detect /nonexistent/frame.ppm " + config()), 3);
    EXPECT_EQ(run("ipm /nonexistent/frame.ppm /tmp/x.pgm " + config()), 3);
}

TEST(Cli, EmptyDirectoryGivesNoLines) {
    test::TempDir dir;
    fs::create_directories(dir.path() / "frames");
    const fs::path out = dir.path() / "out.jsonl";
    EXPECT_EQ(run("detect " + (dir.path() / "frames").string() + " " + config() + " -o " + out.string()), 0);
    EXPECT_TRUE(fs::exists(out));
    EXPECT_TRUE(lines_of(out).empty());
}

TEST(Cli, AllFramesFailingExitsFour) {
    test::TempDir dir;
    write_ppm(dir.path() / "000000.ppm", RgbImage(8, 8));
    EXPECT_EQ(run("detect " + dir.path().string() + " " + config()), 4);
}

TEST(Cli, EvalWithoutCameraIsConfigError) {
    test::TempDir dir;
    write_ppm(dir.path() / "000000.ppm", RgbImage(8, 8));
    std::ofstream(dir.path() / "p.jsonl") << "";
    EXPECT_EQ(run("eval " + (dir.path() / "p.jsonl").string() + " " + dir.path().string() + " " + config()), 2);
}

TEST(Cli, SynthIsDeterministicAndSeedable) {
    test::TempDir dir;
    const fs::path scene = short_scene(dir.path(), 2);
    ASSERT_EQ(run("synth " + scene.string() + " " + (dir.path() / "a").string()), 0);
    ASSERT_EQ(run("synth " + scene.string() + " " + (dir.path() / "b").string() + " --threads 1"), 0);
    ASSERT_EQ(run("synth " + scene.string() + " " + (dir.path() / "c").string() + " --seed 99"), 0);
    int files = 0;
    for (const auto& e : fs::directory_iterator(dir.path() / "a")) {
        const auto name = e.path().filename();
        EXPECT_EQ(slurp(e.path()), slurp(dir.path() / "b" / name)) << name;
        ++files;
    }
    EXPECT_GE(files, 2 * 5 + 2);
    EXPECT_NE(slurp(dir.path() / "a" / "000000.ppm"), slurp(dir.path() / "c" / "000000.ppm"));
}

TEST(Cli, DetectEvalAndMaxCurves) {
    test::TempDir dir;
    const fs::path scene = short_scene(dir.path(), 3);
    const fs::path frames = dir.path() / "frames";
    ASSERT_EQ(run("synth " + scene.string() + " " + frames.string()), 0);
    const fs::path out = dir.path() / "pred.jsonl";
    ASSERT_EQ(run("detect " + frames.string() + " " + config() + " -o " + out.string()), 0);
    const auto lines = lines_of(out);
    ASSERT_EQ(lines.size(), 3u);
    EXPECT_NE(lines[0].find("\"frame\":\"000000\""), std::string::npos);
    EXPECT_NE(lines[1].find("\"lambda_deg\":"), std::string::npos);

    const fs::path capped = dir.path() / "capped.jsonl";
    ASSERT_EQ(run("detect " + frames.string() + " " + config() + " --max-curves 2 -o " + capped.string()), 0);
    for (const auto& l : lines_of(capped)) {
        const auto curves = l.substr(l.find("\"curves\":["));
        const auto end = curves.find(']');
        int n = 0;
        for (size_t p = curves.find("\"y0\""); p < end; p = curves.find("\"y0\"", p + 1)) ++n;
        EXPECT_LE(n, 2);
    }

    const fs::path report = dir.path() / "report.json";
    const fs::path table = dir.path() / "report.txt";
    ASSERT_EQ(run("eval " + out.string() + " " + frames.string() + " " + config() + " --json " + report.string() +
                  " --table " + table.string()),
              0);
    EXPECT_NE(slurp(report).find("\"PRE_40\""), std::string::npos);
    EXPECT_NE(slurp(table).find("CorrectRate"), std::string::npos);
}

TEST(Cli, SingleFrameCommands) {
    test::TempDir dir;
    const fs::path scene = short_scene(dir.path(), 2);
    const fs::path frames = dir.path() / "frames";
    ASSERT_EQ(run("synth " + scene.string() + " " + frames.string()), 0);
    const std::string f0 = (frames / "000000.ppm").string(), f1 = (frames / "000001.ppm").string();
    EXPECT_EQ(run("ipm " + f0 + " " + (dir.path() / "ipm.pgm").string() + " " + config()), 0);
    EXPECT_EQ(read_pgm(dir.path() / "ipm.pgm").rows(), 450);
    EXPECT_EQ(run("ipm " + f0 + " " + (dir.path() / "g.pgm").string() + " --plane gray " + config()), 0);
    EXPECT_EQ(run("segment " + f0 + " " + (dir.path() / "mask.pgm").string() + " " + config()), 0);
    const PlaneU8 mask = read_pgm(dir.path() / "mask.pgm");
    EXPECT_EQ(mask.cols(), 200);
    EXPECT_EQ(run("departure " + f0 + " " + f1 + " " + config()), 0);
    // No obstacle class in this scene.
    EXPECT_EQ(run("train-gmm " + scene.string() + " " + (dir.path() / "x.stats").string() + " " + config()), 1);
    const fs::path train = short_scene(dir.path(), 2, "gmm_train");
    EXPECT_EQ(run("train-gmm " + train.string() + " " + (dir.path() / "g.stats").string() + " " + config()), 0);
    EXPECT_FALSE(slurp(dir.path() / "g.stats").empty());
}
