#pragma once

#include <filesystem>
#include <string>

#include "srn/detection.hpp"
#include "srn/energy.hpp"
#include "srn/network.hpp"
#include "srn/scene_gen.hpp"
#include "srn/train.hpp"

namespace srn {

/// Everything a run needs, assembled from defaults plus an optional config
/// file of "section.key=value" lines. Unknown keys are rejected.
struct RunConfig {
  NetworkConfig net;
  AnchorSpec anchor;
  float pos_iou = 0.5f;
  float neg_iou = 0.35f;
  bool force_match = false;
  float score_threshold = 0.3f;
  float nms_iou = 0.1f;

  double bti_r = 80.0;
  int bti_steps = 3;
  bool bti_reset_per_step = false;

  TrainConfig train;
  SceneConfig scene;
  EnergyModel energy;
  CountingMode counting = CountingMode::kMixed;
  double eval_iou = 0.3;

  AnchorGrid make_anchor_grid() const;
  void validate() const;
};

RunConfig default_run_config();

/// Apply one "key=value" assignment; throws on unknown keys or bad values.
void apply_config_entry(RunConfig& config, const std::string& key, const std::string& value);

RunConfig load_run_config(const std::filesystem::path& path);

}  // namespace srn
