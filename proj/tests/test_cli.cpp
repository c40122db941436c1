#include <cstdlib>

#include <sys/wait.h>

#include <json.hpp>
#include <gtest/gtest.h>

#include "oracles.hpp"
#include "ualp/label_io.hpp"
#include "ualp/pgm.hpp"
#include "ualp/text_format.hpp"

namespace fs = std::filesystem;
using ualp::testing::list_files;
using ualp::testing::read_file;
using ualp::testing::TempDir;

namespace {

const fs::path kGolden = fs::path(UALP_GOLDEN_DIR);

struct Run {
  int code = -1;
  std::string out;
  std::string err;
};

Run ualp_cli(const std::string& args, const TempDir& dir) {
  const auto out = dir / "stdout.txt";
  const auto err = dir / "stderr.txt";
  const std::string cmd = std::string("'") + UALP_CLI_PATH + "' " + args + " >'" + out.string() + "' 2>'" + err.string() + "'";
  const int status = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = read_file(out);
  r.err = read_file(err);
  return r;
}

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

}  // namespace

TEST(Cli, HelpListsSubcommands) {
  TempDir dir("cli_help");
  const auto r = ualp_cli("--help", dir);
  EXPECT_EQ(r.code, 0);
  for (const char* sub : {"validate", "extract-bboxes", "build-uprior", "mine-upost", "compose", "evaluate", "simulate",
                          "experiment"}) {
    EXPECT_NE(r.out.find(sub), std::string::npos) << sub;
  }
  const auto e = ualp_cli("evaluate --help", dir);
  EXPECT_EQ(e.code, 0);
  EXPECT_NE(e.out.find("--entropy-floor"), std::string::npos);
}

TEST(Cli, UsageErrorsExitThree) {
  TempDir dir("cli_usage");
  EXPECT_EQ(ualp_cli("", dir).code, 3);
  EXPECT_EQ(ualp_cli("compose --bogus-flag", dir).code, 3);
  EXPECT_EQ(ualp_cli("compose --manifest " + q(kGolden / "dataset/manifest.json") + " --variant nope --out " +
                         q(dir / "o"),
                     dir)
                .code,
            3);
  EXPECT_FALSE(fs::exists(dir / "o"));
}

TEST(Cli, ExtractEmptyDirectoryWarns) {
  TempDir dir("cli_extract_empty");
  fs::create_directories(dir / "masks");
  const auto r = ualp_cli("extract-bboxes --masks " + q(dir / "masks") + " --out " + q(dir / "out"), dir);
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.err.find("warning"), std::string::npos);
  EXPECT_EQ(list_files(dir / "out"), std::vector<std::string>{"run.json"});
}

TEST(Cli, ExtractOneMaskMatchesLibrary) {
  TempDir dir("cli_extract");
  fs::create_directories(dir / "masks");
  const auto mask = ualp::geometry::read_pgm(kGolden / "dataset/masks/img_a_lung.pgm");
  ualp::geometry::write_pgm(mask, dir / "masks/scan.pgm");
  ASSERT_EQ(ualp_cli("extract-bboxes --masks " + q(dir / "masks") + " --out " + q(dir / "out"), dir).code, 0);
  const ualp::dataset::GroundTruthObject expected{0, ualp::geometry::normalize(ualp::geometry::bbox_from_mask(mask), 32, 32)};
  EXPECT_EQ(read_file(dir / "out/scan.txt"), ualp::dataset::format_label_line(expected) + "\n");

  ASSERT_EQ(ualp_cli("extract-bboxes --mode components --class-id 3 --masks " + q(dir / "masks") + " --out " +
                         q(dir / "comp"),
                     dir)
                .code,
            0);
  EXPECT_EQ(ualp::split_lines(read_file(dir / "comp/scan.txt")).size(), 2u);

  ualp::geometry::write_pgm(ualp::geometry::PixelMask(8, 8), dir / "masks/blank.pgm");
  const auto blank = ualp_cli("extract-bboxes --masks " + q(dir / "masks") + " --out " + q(dir / "out"), dir);
  EXPECT_EQ(blank.code, 0);
  EXPECT_EQ(read_file(dir / "out/blank.txt"), "");
  EXPECT_NE(blank.err.find("blank.pgm"), std::string::npos);
}

TEST(Cli, CorruptMaskExitsOneAndLeavesNothing) {
  TempDir dir("cli_corrupt");
  fs::create_directories(dir / "masks");
  ualp::geometry::write_pgm(ualp::geometry::PixelMask(8, 8), dir / "masks/a.pgm");
  ualp::write_text_file(dir / "masks/broken.pgm", "P6\n8 8\n255\n");
  fs::create_directories(dir / "out");
  ualp::write_text_file(dir / "out/keep.txt", "previous run");
  const auto r = ualp_cli("extract-bboxes --masks " + q(dir / "masks") + " --out " + q(dir / "out"), dir);
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("broken.pgm"), std::string::npos) << r.err;
  EXPECT_EQ(list_files(dir / "out"), std::vector<std::string>{"keep.txt"});
  EXPECT_FALSE(fs::exists(dir / "out.partial"));
}

TEST(Cli, ValidationFailuresExitTwo) {
  TempDir dir("cli_validation");
  fs::copy(kGolden / "dataset", dir / "ds", fs::copy_options::recursive);
  EXPECT_EQ(ualp_cli("validate --manifest " + q(dir / "ds/manifest.json"), dir).code, 0);
  ualp::write_text_file(dir / "ds/labels/img_c.txt", "0 0.5 0.5 0 0.1\n");
  const auto r = ualp_cli("validate --manifest " + q(dir / "ds/manifest.json"), dir);
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.out.find("img_c"), std::string::npos);
  EXPECT_EQ(ualp_cli("compose --manifest " + q(dir / "ds/manifest.json") + " --out " + q(dir / "o"), dir).code, 2);
  EXPECT_FALSE(fs::exists(dir / "o"));
  EXPECT_EQ(ualp_cli("evaluate --manifest " + q(dir / "missing.json") + " --out " + q(dir / "o"), dir).code, 1);
}

TEST(Cli, PipelineRunsEndToEnd) {
  TempDir dir("cli_pipeline");
  ASSERT_EQ(ualp_cli("--workers 2 simulate --seed 3 --train-images 6 --val-images 3 --detector target-plus-prior --out " +
                         q(dir / "sim"),
                     dir)
                .code,
            0);
  ASSERT_EQ(ualp_cli("build-uprior --manifest " + q(dir / "sim/manifest.json") + " --masks " + q(dir / "sim/masks") +
                         " --out " + q(dir / "up"),
                     dir)
                .code,
            0);
  ASSERT_EQ(ualp_cli("build-uprior --from-scenes --manifest " + q(dir / "sim/manifest.json") + " --out " + q(dir / "up2"),
                     dir)
                .code,
            0);
  for (const auto& f : list_files(dir / "up/labels")) EXPECT_EQ(read_file(dir / "up/labels" / f), read_file(dir / "up2/labels" / f));
  ASSERT_EQ(ualp_cli("mine-upost --manifest " + q(dir / "up/manifest.json") + " --out " + q(dir / "mined"), dir).code, 0);
  ASSERT_EQ(ualp_cli("compose --variant full --manifest " + q(dir / "mined/manifest.json") + " --out " + q(dir / "full"),
                     dir)
                .code,
            0);
  const auto ev = ualp_cli("evaluate --manifest " + q(dir / "full/manifest.json") + " --out " + q(dir / "eval"), dir);
  ASSERT_EQ(ev.code, 0) << ev.err;
  EXPECT_EQ(read_file(dir / "eval/summary.json"), ev.out);
  for (const char* f : {"curves/froc_iou_0.2.csv", "curves/pr_iou_0.5.csv", "run.json", "summary.json"}) {
    EXPECT_TRUE(fs::exists(dir / "eval" / f)) << f;
  }
  for (const char* d : {"sim", "up", "mined", "full", "eval"}) EXPECT_TRUE(fs::exists(dir / d / "run.json")) << d;
}

TEST(Cli, ComposeTargetOnlyThenEvaluateEqualsRawEvaluation) {
  TempDir dir("cli_identity");
  const auto manifest = kGolden / "dataset/manifest.json";
  ASSERT_EQ(ualp_cli("evaluate --manifest " + q(manifest) + " --split train --out " + q(dir / "raw"), dir).code, 0);
  ASSERT_EQ(ualp_cli("compose --variant target-only --manifest " + q(manifest) + " --out " + q(dir / "to"), dir).code, 0);
  ASSERT_EQ(ualp_cli("evaluate --manifest " + q(dir / "to/manifest.json") + " --split train --out " + q(dir / "comp"), dir)
                .code,
            0);
  EXPECT_EQ(read_file(dir / "raw/summary.json"), read_file(dir / "comp/summary.json"));
  for (const auto& f : list_files(dir / "raw/curves")) {
    EXPECT_EQ(read_file(dir / "raw/curves" / f), read_file(dir / "comp/curves" / f)) << f;
  }
}

TEST(Cli, EvaluateSeededFixtureMatchesFrozenSummary) {
  TempDir dir("cli_frozen");
  ASSERT_EQ(ualp_cli("simulate --no-masks --seed 42 --train-images 0 --val-images 25 --detector full --out " + q(dir / "sim"),
                     dir)
                .code,
            0);
  ASSERT_EQ(ualp_cli("evaluate --manifest " + q(dir / "sim/manifest.json") + " --out " + q(dir / "eval"), dir).code, 0);
  EXPECT_EQ(read_file(dir / "eval/summary.json"), read_file(kGolden / "regression/evaluate_seed42.json"));
}

TEST(Cli, IdempotentAndDigestsTrackInputs) {
  TempDir dir("cli_idem");
  fs::copy(kGolden / "dataset", dir / "ds", fs::copy_options::recursive);
  const std::string cmd = "compose --variant target-plus-prior --manifest " + q(dir / "ds/manifest.json") + " --out " + q(dir / "o");
  ASSERT_EQ(ualp_cli(cmd, dir).code, 0);
  std::map<std::string, std::string> first;
  for (const auto& f : list_files(dir / "o")) first[f] = read_file(dir / "o" / f);
  ASSERT_EQ(ualp_cli(cmd, dir).code, 0);
  for (const auto& f : list_files(dir / "o")) EXPECT_EQ(read_file(dir / "o" / f), first[f]) << f;

  const auto meta = nlohmann::json::parse(first["run.json"]);
  EXPECT_EQ(meta["tool"], "ualp");
  EXPECT_EQ(meta["subcommand"], "compose");
  EXPECT_FALSE(meta["version"].get<std::string>().empty());
  EXPECT_EQ(meta["config"]["paths"]["out"], (dir / "o").string());
  EXPECT_GE(meta["inputs"].size(), 11u);

  ualp::write_text_file(dir / "ds/labels/img_c.txt", "0 0.500000 0.500000 0.125000 0.125000\n");
  ASSERT_EQ(ualp_cli(cmd, dir).code, 0);
  const auto changed = nlohmann::json::parse(read_file(dir / "o/run.json"));
  std::size_t differing = 0;
  for (std::size_t i = 0; i < meta["inputs"].size(); ++i) {
    EXPECT_EQ(changed["inputs"][i]["path"], meta["inputs"][i]["path"]);
    if (changed["inputs"][i]["sha256"] != meta["inputs"][i]["sha256"]) {
      ++differing;
      EXPECT_NE(changed["inputs"][i]["path"].get<std::string>().find("img_c.txt"), std::string::npos);
    }
  }
  EXPECT_EQ(differing, 1u);
}

TEST(Cli, ConfigFileWithFlagOverrides) {
  TempDir dir("cli_config");
  ualp::write_text_file(dir / "run.json", R"({"match": {"iou_threshold": 0.5, "confidence_threshold": 0.1},
                                               "paths": {"manifest": ")" + (kGolden / "dataset/manifest.json").string() + R"("}})");
  ASSERT_EQ(ualp_cli("--config " + q(dir / "run.json") + " mine-upost --iou 0.3 --out " + q(dir / "o"), dir).code, 0);
  const auto meta = nlohmann::json::parse(read_file(dir / "o/run.json"));
  EXPECT_DOUBLE_EQ(meta["config"]["match"]["iou_threshold"].get<double>(), 0.3);
  EXPECT_DOUBLE_EQ(meta["config"]["match"]["confidence_threshold"].get<double>(), 0.1);

  ualp::write_text_file(dir / "bad.json", R"({"match": {"iou": 0.5}})");
  const auto r = ualp_cli("--config " + q(dir / "bad.json") + " mine-upost --out " + q(dir / "o2"), dir);
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.err.find("iou"), std::string::npos);
  ualp::write_text_file(dir / "range.json", R"({"match": {"iou_threshold": 2}})");
  EXPECT_EQ(ualp_cli("--config " + q(dir / "range.json") + " mine-upost --out " + q(dir / "o3") + " --manifest " +
                         q(kGolden / "dataset/manifest.json"),
                     dir)
                .code,
            3);
  EXPECT_FALSE(fs::exists(dir / "o3"));
}

TEST(Cli, ExperimentIsRepeatable) {
  TempDir dir("cli_exp");
  const std::string args = " experiment --seed 5 --train-images 30 --val-images 10 --out ";
  ASSERT_EQ(ualp_cli("--workers 1" + args + q(dir / "a"), dir).code, 0);
  ASSERT_EQ(ualp_cli("--workers 4" + args + q(dir / "a2"), dir).code, 0);
  EXPECT_EQ(read_file(dir / "a/report.json"), read_file(dir / "a2/report.json"));
  const auto files = list_files(dir / "a");
  EXPECT_EQ(files, list_files(dir / "a2"));
  for (const auto& f : files) {
    if (f == "run.json") continue;
    EXPECT_EQ(read_file(dir / "a" / f), read_file(dir / "a2" / f)) << f;
  }
}
