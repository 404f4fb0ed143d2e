#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>

#include <json.hpp>

#include "foram/augment.hpp"
#include "foram/backbone.hpp"
#include "foram/finetune.hpp"
#include "foram/imaging.hpp"
#include "foram/synth.hpp"
#include "foram/train.hpp"
#include "foram/uncertainty.hpp"

namespace foram {

// Aggregated run configuration. Defaults mirror the reference procedure:
// batch 32, Adam at 1e-4, fine-tune backbone at 1e-7, min area 1024,
// 80/10/10 split, 100 MC passes.
struct RunConfig {
  std::uint64_t seed = 42;
  int workers = 0;  // 0 = all cores

  DetectConfig detect;
  std::array<double, 3> split_fractions{0.8, 0.1, 0.1};
  AugmentConfig augment;

  // train
  int batch_size = 32;
  double lr = 1e-4;
  int max_epochs = 50;
  int patience = 3;
  double dropout = 0.5;
  int epoch_multiplicity = 4;
  std::vector<int> hidden{512, 64};
  std::string optimizer = "adam";
  std::string train_scope = "head";  // head | end_to_end
  int train_image_size = 224;        // center-crop size for end_to_end training

  // finetune
  double finetune_backbone_lr = 1e-7;
  double finetune_head_lr = 1e-4;
  int finetune_max_epochs = 20;
  int finetune_patience = 3;
  int finetune_unfreeze_blocks = 2;  // last N blocks

  // backbone
  std::string backbone_kind = "builtin_small";
  std::string backbone_path;

  // mc dropout
  int mc_passes = 100;
  FlagThresholds flag_thresholds;

  // grid search
  int grid_max_epochs = 5;
  int grid_patience = 1;

  // synth
  int synth_plates = 20;
  PlateSpec plate_spec;

  nlohmann::json to_json() const;
};

nlohmann::json default_config_json();

// Parses and validates; unknown or ill-typed keys raise ValidationError
// naming every offending key. Missing keys take defaults.
RunConfig parse_config(const nlohmann::json& j);

RunConfig load_config_file(const std::string& path);

}  // namespace foram
