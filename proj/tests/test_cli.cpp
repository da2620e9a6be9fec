#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "gaugereader/commands.hpp"

namespace gauge::cli {
namespace {

namespace fs = std::filesystem;

struct RunResult {
  int code;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::path(::testing::TempDir()) /
           ("gauge_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  RunResult run(const std::string& args) {
    const fs::path out = dir_ / "stdout.txt", err = dir_ / "stderr.txt";
    const std::string cmd = std::string(GAUGE_BINARY) + " " + args + " >" + out.string() + " 2>" + err.string();
    const int status = std::system(cmd.c_str());
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(out), slurp(err)};
  }

  fs::path write(const std::string& name, const std::string& contents) {
    const fs::path p = dir_ / name;
    fs::create_directories(p.parent_path());
    std::ofstream(p, std::ios::binary) << contents;
    return p;
  }

  static synth::SceneSpec spec() {
    synth::SceneSpec s;
    s.range = {0, 10, "bar"};
    s.needle_value = 3.0;
    return s;
  }

  fs::path write_fixture(const std::string& name, const GaugeFixture& f) { return write(name, serialize_fixture(f)); }

  fs::path dir_;
};

TEST_F(CliTest, ReadValidFixturePrintsLibraryReport) {
  const auto f = synth::generate_scene(spec()).fixture;
  const auto path = write_fixture("ok.json", f);
  const auto r = run("read " + path.string());
  EXPECT_EQ(r.code, kSuccess) << r.err;
  EXPECT_EQ(r.out, serialize_report(read_gauge(f)));
  const auto doc = json_io::parse_document(r.out);
  EXPECT_EQ(doc["readings"].size(), 1u);
}

TEST_F(CliTest, ReadEllipseFailureExitsOneWithReport) {
  auto f = synth::generate_scene(spec()).fixture;
  f.keypoints.resize(4);
  const auto r = run("read --json " + write_fixture("bad.json", f).string());
  EXPECT_EQ(r.code, kReadingFailure);
  const auto doc = json_io::parse_document(r.out);
  EXPECT_EQ(doc["stage_statuses"]["ellipse"]["status"], "Failed");
  EXPECT_EQ(doc["stage_statuses"]["ellipse"]["reason"], "insufficient_notches");
}

TEST_F(CliTest, ReadErrorsMapToExitCodes) {
  EXPECT_EQ(run("read " + (dir_ / "missing.json").string()).code, kUsageOrIo);
  EXPECT_EQ(run("read " + write("broken.json", "{\"schema\":").string()).code, kSchemaError);
  EXPECT_EQ(run("read " + write("dup.json", R"({"schema": 1, "needle_points": [], "keypoints": [
      {"x": 1, "y": 1, "class": "start"}, {"x": 2, "y": 2, "class": "start"}]})").string()).code,
            kSchemaError);
  EXPECT_EQ(run("frobnicate").code, kUsageOrIo);
  EXPECT_EQ(run("read").code, kUsageOrIo);
  EXPECT_EQ(run("").code, kUsageOrIo);
  EXPECT_EQ(run("--help").code, kSuccess);
}

TEST_F(CliTest, ReadTableAndMultipleInputs) {
  const auto a = write_fixture("a.json", synth::generate_scene(spec()).fixture);
  auto bad = synth::generate_scene(spec()).fixture;
  bad.ocr_items.clear();
  const auto b = write_fixture("b.json", bad);

  const auto table = run("read --table " + a.string() + " " + b.string());
  EXPECT_EQ(table.code, kReadingFailure);
  std::istringstream lines(table.out);
  std::string l1, l2;
  std::getline(lines, l1);
  std::getline(lines, l2);
  EXPECT_NE(l1.find("inner=3"), std::string::npos) << l1;
  EXPECT_NE(l1.find("bar"), std::string::npos);
  EXPECT_NE(l2.find("Failed(insufficient_markers)"), std::string::npos) << l2;

  const auto json = run("read " + a.string() + " " + b.string());
  const auto doc = json_io::parse_document(json.out);
  ASSERT_EQ(doc.size(), 2u);
  EXPECT_EQ(doc[0]["path"], a.string());
  EXPECT_EQ(doc[1]["report"]["stage_statuses"]["ocr"]["reason"], "insufficient_markers");
}

TEST_F(CliTest, ReadHonoursConfig) {
  const auto f = synth::generate_scene(spec()).fixture;
  const auto fx = write_fixture("f.json", f);
  write("units.txt", "# custom\nbar\n");
  const auto cfg = write("cfg.json", R"({"unit_lexicon_path": "units.txt", "ransac": {"seed": 3}})");
  const auto r = run("read --config " + cfg.string() + " " + fx.string());
  EXPECT_EQ(r.code, kSuccess) << r.err;
  EXPECT_EQ(r.out, serialize_report(read_gauge(f, PipelineConfig::load(cfg.string()))));
  EXPECT_EQ(run("read --config " + write("bad_cfg.json", "{\"ransac\": 3").string() + " " + fx.string()).code,
            kSchemaError);
}

TEST_F(CliTest, EvalHalfEllipseFailuresAndOutFile) {
  std::string manifest = R"({"fixtures": [)";
  Rng rng(5);
  for (int i = 0; i < 10; ++i) {
    auto f = synth::generate_scene(synth::sample_scene_spec(rng)).fixture;
    if (i % 2) f.keypoints.resize(3);
    write_fixture("fx/" + std::to_string(i) + ".json", f);
    manifest += (i ? ", " : "") + std::string("\"fx/") + std::to_string(i) + ".json\"";
  }
  manifest += "]}";
  const auto m = write("manifest.json", manifest);

  const auto r = run("eval " + m.string());
  EXPECT_EQ(r.code, kSuccess) << r.err;
  const auto doc = json_io::parse_document(r.out);
  EXPECT_EQ(doc["count"], 10);
  EXPECT_EQ(doc["failure_rates"]["ellipse"].get<double>(), 0.5);
  EXPECT_NE(r.err.find("ellipse"), std::string::npos);

  const auto out_file = dir_ / "summary.json";
  const auto r2 = run("eval " + m.string() + " --out " + out_file.string());
  EXPECT_EQ(r2.code, kSuccess);
  EXPECT_EQ(r2.out, out_file.string() + "\n");
  EXPECT_EQ(slurp(out_file), r.out);
}

TEST_F(CliTest, EvalMatchesLibraryAndRejectsMissingGroundTruth) {
  const auto s = synth::scene_spec_to_json(spec());
  json_io::Json manifest{{"scenes", json_io::Json::array({json_io::Json{{"spec", s}, {"category", "clean"}},
                                                          json_io::Json{{"spec", s},
                                                                        {"category", "noisy"},
                                                                        {"perturbation", {{"keypoint_noise_sigma", 1.0}}}}})}};
  const auto m = write("scenes.json", json_io::dump(manifest, 17));
  const auto r = run("eval " + m.string());
  ASSERT_EQ(r.code, kSuccess) << r.err;

  std::vector<BatchItem> items;
  for (const auto& e : parse_manifest(json_io::parse_document(slurp(m)), dir_))
    items.push_back({e.name, e.category, materialize(e)});
  EXPECT_EQ(r.out, serialize_summary(evaluate_batch(items)));

  auto f = synth::generate_scene(spec()).fixture;
  f.ground_truth.reset();
  write_fixture("nogt.json", f);
  EXPECT_EQ(run("eval " + write("m2.json", R"({"fixtures": ["nogt.json"]})").string()).code, kSchemaError);
  EXPECT_EQ(run("eval " + (dir_ / "nope.json").string()).code, kUsageOrIo);
}

TEST_F(CliTest, GenerateSingleSpecIsReadable) {
  const auto s = write("spec.json", json_io::dump(synth::scene_spec_to_json(spec()), 17));
  const auto out_dir = dir_ / "gen";
  const auto r = run("generate " + s.string() + " --out-dir " + out_dir.string());
  ASSERT_EQ(r.code, kSuccess) << r.err;
  const auto file = out_dir / "scene_0.json";
  EXPECT_EQ(r.out, file.string() + "\n");
  EXPECT_EQ(slurp(file), serialize_fixture(synth::generate_scene(spec()).fixture));
  EXPECT_EQ(run("read " + file.string()).code, kSuccess);
}

TEST_F(CliTest, GenerateIsByteDeterministicAndHandlesManifests) {
  Rng rng(7);
  json_io::Json scenes = json_io::Json::array();
  for (int i = 0; i < 100; ++i)
    scenes.push_back(json_io::Json{{"spec", synth::scene_spec_to_json(synth::sample_scene_spec(rng))},
                                   {"perturbation", {{"keypoint_noise_sigma", 1.0}, {"n_outlier_ocr", 2}}}});
  const auto m = write("gen_manifest.json", json_io::dump(json_io::Json{{"scenes", scenes}}, 17));
  ASSERT_EQ(run("generate " + m.string() + " --seed 11 --out-dir " + (dir_ / "a").string()).code, kSuccess);
  ASSERT_EQ(run("generate " + m.string() + " --seed 11 --out-dir " + (dir_ / "b").string()).code, kSuccess);
  ASSERT_EQ(run("generate " + m.string() + " --seed 12 --out-dir " + (dir_ / "c").string()).code, kSuccess);
  std::size_t files = 0;
  for (const auto& e : fs::directory_iterator(dir_ / "a")) {
    ++files;
    EXPECT_EQ(slurp(e.path()), slurp(dir_ / "b" / e.path().filename()));
  }
  EXPECT_EQ(files, 100u);
  EXPECT_NE(slurp(dir_ / "a" / "scene_0.json"), slurp(dir_ / "c" / "scene_0.json"));
}

TEST_F(CliTest, GenerateRejectsInvalidSpec) {
  auto bad = synth::scene_spec_to_json(spec());
  bad["n_major_notches"] = 3;
  EXPECT_EQ(run("generate " + write("bad.json", json_io::dump(bad)).string() + " --out-dir " + dir_.string()).code,
            kSchemaError);
  EXPECT_EQ(run("generate " + write("junk.json", "[1,").string()).code, kSchemaError);
}

}  // namespace
}  // namespace gauge::cli
