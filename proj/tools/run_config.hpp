#pragma once

#include <cstddef>
#include <string>

#include <json.hpp>

#include "ualp/experiment.hpp"
#include "ualp/geometry.hpp"
#include "ualp/metrics.hpp"
#include "ualp/mining.hpp"
#include "ualp/simulator.hpp"

namespace ualp::cli {

// Everything a subcommand may need. Defaults < config file < flags.
struct RunConfig {
  std::string manifest;
  std::string masks;
  std::string out;
  std::string split = "val";
  std::string variant = "full";
  std::string mode = "global";  // extract-bboxes: global | components
  int class_id = 0;             // extract-bboxes
  int fp_class_id = -1;         // mine-upost; -1 = vocabulary default
  bool from_scenes = false;     // build-uprior: render masks from scene files
  std::string detector;         // simulate: variant to emit predictions for
  bool upost_learned = true;    // simulate: Full detector knows the fp class
  mining::MatchConfig match;
  metrics::EvaluationSettings metrics;
  geometry::ComponentConfig components;
  simulator::SceneConfig scene;
  simulator::DetectorProfile profile;
  std::string mining_variant = "target-plus-prior";
  std::size_t workers = 0;  // 0 = available cores
  int verbosity = 0;
};

/// Overlays a JSON config document; unknown keys are rejected with
/// Error(ConfigError).
void apply_config(RunConfig& config, const nlohmann::json& doc);

/// Effective configuration as echoed into run metadata.
nlohmann::ordered_json to_json(const RunConfig& config);

experiment::ExperimentConfig experiment_config(const RunConfig& config);

}  // namespace ualp::cli
