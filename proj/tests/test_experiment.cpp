#include <json.hpp>
#include <gtest/gtest.h>

#include "oracles.hpp"
#include "ualp/error.hpp"
#include "ualp/experiment.hpp"
#include "ualp/text_format.hpp"

namespace fs = std::filesystem;
using namespace ualp::experiment;
using ualp::dataset::LabelSetVariant;
using ualp::testing::read_file;
using ualp::testing::TempDir;

namespace {

ExperimentConfig small(int train = 40, int val = 20) {
  ExperimentConfig c;
  c.scene.train_images = train;
  c.scene.val_images = val;
  c.workers = 4;
  return c;
}

std::string curve(const fs::path& out, LabelSetVariant v, const char* kind) {
  return read_file(out / "curves" / (std::string(ualp::dataset::to_string(v)) + "_" + kind + "_iou_0.2.csv"));
}

}  // namespace

TEST(Experiment, ReportSchema) {
  TempDir dir("exp_schema");
  const auto report = run_policy_experiment(small(), dir / "out");
  const auto doc = nlohmann::ordered_json::parse(read_file(dir / "out/report.json"));
  std::vector<std::string> keys;
  for (const auto& [k, v] : doc.items()) keys.push_back(k);
  EXPECT_EQ(keys, std::vector<std::string>(kReportKeys.begin(), kReportKeys.end()));
  ASSERT_EQ(doc["variants"].size(), 3u);
  for (const auto& v : doc["variants"]) {
    std::vector<std::string> vk;
    for (const auto& [k, x] : v.items()) vk.push_back(k);
    EXPECT_EQ(vk, std::vector<std::string>(kVariantKeys.begin(), kVariantKeys.end()));
    for (const char* iou : {"iou_0.2", "iou_0.5"}) {
      for (const char* f : {"fppi_0.5", "fppi_1", "fppi_2", "fppi_5"}) EXPECT_TRUE(v["sensitivity"][iou].contains(f));
      EXPECT_TRUE(v["pr_auc"].contains(iou));
    }
    for (const char* e : {"median", "q1", "q3"}) EXPECT_TRUE(v["entropy"].contains(e));
    EXPECT_TRUE(v["mined_fp"].contains("conf_0.001"));
    EXPECT_TRUE(v["mined_fp"].contains("conf_0.25"));
  }
  EXPECT_EQ(doc["variants"][0]["vocabulary_size"], 1);
  EXPECT_EQ(doc["variants"][1]["vocabulary_size"], 11);
  EXPECT_EQ(doc["variants"][2]["vocabulary_size"], 12);
  for (const auto& f : report.curve_files) EXPECT_TRUE(fs::exists(dir / "out" / f)) << f;
  EXPECT_EQ(report.curve_files.size(), 12u);
  EXPECT_EQ(report.images_mined, 40u);
}

TEST(Experiment, NoConfoundersLeavesOnlyTheHilum) {
  TempDir dir("exp_noconf");
  auto c = small();
  c.scene.confounders_per_image = 0.0;
  run_policy_experiment(c, dir / "a");
  // Both richer models know the hilum, so nothing separates them.
  EXPECT_EQ(curve(dir / "a", LabelSetVariant::TargetPlusPrior, "froc"), curve(dir / "a", LabelSetVariant::Full, "froc"));
  EXPECT_NE(curve(dir / "a", LabelSetVariant::TargetOnly, "froc"), curve(dir / "a", LabelSetVariant::Full, "froc"));

  c.detector.confusion_probability = 0.0;
  run_policy_experiment(c, dir / "b");
  const std::string full = curve(dir / "b", LabelSetVariant::Full, "froc");
  EXPECT_EQ(curve(dir / "b", LabelSetVariant::TargetOnly, "froc"), full);
  EXPECT_EQ(curve(dir / "b", LabelSetVariant::TargetPlusPrior, "froc"), full);
}

TEST(Experiment, MinedCountsFallWithThreshold) {
  TempDir dir("exp_mined");
  const auto report = run_policy_experiment(small(), dir / "out");
  for (const auto& v : report.variants) {
    ASSERT_EQ(v.mined_fp.size(), 2u);
    EXPECT_GT(v.mined_fp[0].second, v.mined_fp[1].second);
  }
  const auto& tpp = report.variant(LabelSetVariant::TargetPlusPrior);
  EXPECT_EQ(tpp.mined_fp[1].second, report.mined_fp_count);
}

TEST(Experiment, ConfigValidation) {
  auto c = small();
  c.mined_count_thresholds = {1.5};
  EXPECT_THROW(c.validate(), ualp::Error);
  auto d = small();
  d.evaluation.iou_thresholds.clear();
  EXPECT_THROW(d.validate(), ualp::Error);
}

TEST(Experiment, Seed42MatchesFrozenReport) {
  TempDir dir("exp_frozen");
  ExperimentConfig c;
  c.workers = 4;
  run_policy_experiment(c, dir / "out");
  EXPECT_EQ(read_file(dir / "out/report.json"), read_file(fs::path(UALP_GOLDEN_DIR) / "regression/report_seed42.json"));
}
