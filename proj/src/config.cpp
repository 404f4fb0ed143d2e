#include "foram/config.hpp"

#include <cmath>
#include <fstream>

namespace foram {

namespace {

void collect_unknown_keys(const nlohmann::json& given, const nlohmann::json& schema,
                          const std::string& prefix, std::vector<std::string>& bad) {
  for (const auto& [key, value] : given.items()) {
    const std::string path = prefix.empty() ? key : prefix + "." + key;
    if (!schema.contains(key)) {
      bad.push_back(path);
      continue;
    }
    if (value.is_object() && schema[key].is_object())
      collect_unknown_keys(value, schema[key], path, bad);
  }
}

template <typename T>
T get_or(const nlohmann::json& j, const char* section, const char* key, T fallback) {
  if (!j.contains(section) || !j[section].contains(key)) return fallback;
  try {
    return j[section][key].get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ValidationError(std::string("config: bad value type for ") + section + "." + key);
  }
}

template <typename T>
T get_top(const nlohmann::json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j[key].get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ValidationError(std::string("config: bad value type for ") + key);
  }
}

}  // namespace

nlohmann::json RunConfig::to_json() const {
  nlohmann::json j;
  j["seed"] = seed;
  j["workers"] = workers;
  j["detect"] = {
      {"border_sigma", detect.border_sigma},
      {"sigma", detect.sigma},
      {"threshold", detect.method == ThresholdMethod::otsu ? "otsu" : "fixed"},
      {"threshold_value", detect.fixed_value},
      {"connectivity", detect.connectivity},
      {"min_area", detect.min_area},
      {"border_removal", detect.border_removal},
  };
  j["split"] = {{"train", split_fractions[0]},
                {"val", split_fractions[1]},
                {"test", split_fractions[2]}};
  j["augment"] = {{"hflip", augment.hflip},
                  {"rot90", augment.rot90},
                  {"brightness", augment.brightness_delta},
                  {"contrast", augment.contrast_delta},
                  {"saturation", augment.saturation_delta},
                  {"hue", augment.hue_delta}};
  j["train"] = {{"batch_size", batch_size},
                {"lr", lr},
                {"max_epochs", max_epochs},
                {"patience", patience},
                {"dropout", dropout},
                {"epoch_multiplicity", epoch_multiplicity},
                {"hidden", hidden},
                {"optimizer", optimizer},
                {"scope", train_scope},
                {"image_size", train_image_size}};
  j["finetune"] = {{"backbone_lr", finetune_backbone_lr},
                   {"head_lr", finetune_head_lr},
                   {"max_epochs", finetune_max_epochs},
                   {"patience", finetune_patience},
                   {"unfreeze_blocks", finetune_unfreeze_blocks}};
  j["backbone"] = {{"kind", backbone_kind}, {"path", backbone_path}};
  j["mc"] = {{"passes", mc_passes},
             {"tau_confidence", flag_thresholds.confidence},
             {"tau_margin", flag_thresholds.margin}};
  j["gridsearch"] = {{"max_epochs", grid_max_epochs}, {"patience", grid_patience}};
  j["synth"] = {{"plates", synth_plates},
                {"width", plate_spec.width},
                {"height", plate_spec.height},
                {"blobs_per_plate", plate_spec.blob_count},
                {"small_blobs_per_plate", plate_spec.small_blob_count},
                {"min_blob_area", plate_spec.min_blob_area},
                {"max_blob_area", plate_spec.max_blob_area},
                {"small_blob_area", plate_spec.small_blob_area},
                {"noise_level", plate_spec.noise_level},
                {"tint_strength", plate_spec.tint_strength},
                {"texture_contrast", plate_spec.texture_contrast},
                {"border_px", plate_spec.border_px}};
  return j;
}

nlohmann::json default_config_json() { return RunConfig{}.to_json(); }

RunConfig parse_config(const nlohmann::json& j) {
  if (!j.is_object()) throw ValidationError("config: root must be a JSON object");

  std::vector<std::string> bad;
  collect_unknown_keys(j, default_config_json(), "", bad);
  if (!bad.empty()) {
    std::string msg = "config: unknown keys:";
    for (const std::string& key : bad) msg += " " + key;
    throw ValidationError(msg);
  }

  RunConfig cfg;
  cfg.seed = get_top<std::uint64_t>(j, "seed", cfg.seed);
  cfg.workers = get_top<int>(j, "workers", cfg.workers);

  cfg.detect.border_sigma = get_or(j, "detect", "border_sigma", cfg.detect.border_sigma);
  cfg.detect.sigma = get_or(j, "detect", "sigma", cfg.detect.sigma);
  const std::string method =
      get_or<std::string>(j, "detect", "threshold", "otsu");
  if (method == "otsu")
    cfg.detect.method = ThresholdMethod::otsu;
  else if (method == "fixed")
    cfg.detect.method = ThresholdMethod::fixed;
  else
    throw ValidationError("config: detect.threshold must be 'otsu' or 'fixed'");
  cfg.detect.fixed_value = get_or(j, "detect", "threshold_value", cfg.detect.fixed_value);
  cfg.detect.connectivity = get_or(j, "detect", "connectivity", cfg.detect.connectivity);
  cfg.detect.min_area = get_or(j, "detect", "min_area", cfg.detect.min_area);
  cfg.detect.border_removal = get_or(j, "detect", "border_removal", cfg.detect.border_removal);

  cfg.split_fractions[0] = get_or(j, "split", "train", cfg.split_fractions[0]);
  cfg.split_fractions[1] = get_or(j, "split", "val", cfg.split_fractions[1]);
  cfg.split_fractions[2] = get_or(j, "split", "test", cfg.split_fractions[2]);

  cfg.augment.hflip = get_or(j, "augment", "hflip", cfg.augment.hflip);
  cfg.augment.rot90 = get_or(j, "augment", "rot90", cfg.augment.rot90);
  cfg.augment.brightness_delta = get_or(j, "augment", "brightness", cfg.augment.brightness_delta);
  cfg.augment.contrast_delta = get_or(j, "augment", "contrast", cfg.augment.contrast_delta);
  cfg.augment.saturation_delta = get_or(j, "augment", "saturation", cfg.augment.saturation_delta);
  cfg.augment.hue_delta = get_or(j, "augment", "hue", cfg.augment.hue_delta);

  cfg.batch_size = get_or(j, "train", "batch_size", cfg.batch_size);
  cfg.lr = get_or(j, "train", "lr", cfg.lr);
  cfg.max_epochs = get_or(j, "train", "max_epochs", cfg.max_epochs);
  cfg.patience = get_or(j, "train", "patience", cfg.patience);
  cfg.dropout = get_or(j, "train", "dropout", cfg.dropout);
  cfg.epoch_multiplicity = get_or(j, "train", "epoch_multiplicity", cfg.epoch_multiplicity);
  cfg.hidden = get_or(j, "train", "hidden", cfg.hidden);
  cfg.optimizer = get_or(j, "train", "optimizer", cfg.optimizer);
  cfg.train_scope = get_or(j, "train", "scope", cfg.train_scope);
  cfg.train_image_size = get_or(j, "train", "image_size", cfg.train_image_size);

  cfg.finetune_backbone_lr = get_or(j, "finetune", "backbone_lr", cfg.finetune_backbone_lr);
  cfg.finetune_head_lr = get_or(j, "finetune", "head_lr", cfg.finetune_head_lr);
  cfg.finetune_max_epochs = get_or(j, "finetune", "max_epochs", cfg.finetune_max_epochs);
  cfg.finetune_patience = get_or(j, "finetune", "patience", cfg.finetune_patience);
  cfg.finetune_unfreeze_blocks =
      get_or(j, "finetune", "unfreeze_blocks", cfg.finetune_unfreeze_blocks);

  cfg.backbone_kind = get_or(j, "backbone", "kind", cfg.backbone_kind);
  cfg.backbone_path = get_or(j, "backbone", "path", cfg.backbone_path);

  cfg.mc_passes = get_or(j, "mc", "passes", cfg.mc_passes);
  cfg.flag_thresholds.confidence =
      get_or(j, "mc", "tau_confidence", cfg.flag_thresholds.confidence);
  cfg.flag_thresholds.margin = get_or(j, "mc", "tau_margin", cfg.flag_thresholds.margin);

  cfg.grid_max_epochs = get_or(j, "gridsearch", "max_epochs", cfg.grid_max_epochs);
  cfg.grid_patience = get_or(j, "gridsearch", "patience", cfg.grid_patience);

  cfg.synth_plates = get_or(j, "synth", "plates", cfg.synth_plates);
  cfg.plate_spec.width = get_or(j, "synth", "width", cfg.plate_spec.width);
  cfg.plate_spec.height = get_or(j, "synth", "height", cfg.plate_spec.height);
  cfg.plate_spec.blob_count = get_or(j, "synth", "blobs_per_plate", cfg.plate_spec.blob_count);
  cfg.plate_spec.small_blob_count =
      get_or(j, "synth", "small_blobs_per_plate", cfg.plate_spec.small_blob_count);
  cfg.plate_spec.min_blob_area = get_or(j, "synth", "min_blob_area", cfg.plate_spec.min_blob_area);
  cfg.plate_spec.max_blob_area = get_or(j, "synth", "max_blob_area", cfg.plate_spec.max_blob_area);
  cfg.plate_spec.small_blob_area =
      get_or(j, "synth", "small_blob_area", cfg.plate_spec.small_blob_area);
  cfg.plate_spec.noise_level = get_or(j, "synth", "noise_level", cfg.plate_spec.noise_level);
  cfg.plate_spec.tint_strength = get_or(j, "synth", "tint_strength", cfg.plate_spec.tint_strength);
  cfg.plate_spec.texture_contrast =
      get_or(j, "synth", "texture_contrast", cfg.plate_spec.texture_contrast);
  cfg.plate_spec.border_px = get_or(j, "synth", "border_px", cfg.plate_spec.border_px);

  // validation
  std::vector<std::string> problems;
  const double frac_sum = cfg.split_fractions[0] + cfg.split_fractions[1] + cfg.split_fractions[2];
  if (std::abs(frac_sum - 1.0) > 1e-9) problems.push_back("split fractions must sum to 1");
  if (cfg.detect.sigma <= 0.0 || cfg.detect.border_sigma <= 0.0)
    problems.push_back("detect sigmas must be positive");
  if (cfg.detect.connectivity != 4 && cfg.detect.connectivity != 8)
    problems.push_back("detect.connectivity must be 4 or 8");
  if (cfg.detect.fixed_value < 0.0 || cfg.detect.fixed_value > 1.0)
    problems.push_back("detect.threshold_value must be in [0, 1]");
  if (cfg.detect.min_area < 0) problems.push_back("detect.min_area must be >= 0");
  for (const char* name : {"brightness", "contrast", "saturation", "hue"}) {
    const double d = name == std::string("brightness")   ? cfg.augment.brightness_delta
                     : name == std::string("contrast")   ? cfg.augment.contrast_delta
                     : name == std::string("saturation") ? cfg.augment.saturation_delta
                                                         : cfg.augment.hue_delta;
    if (d < 0.0 || d > 1.0)
      problems.push_back(std::string("augment.") + name + " must be in [0, 1]");
  }
  if (cfg.batch_size <= 0) problems.push_back("train.batch_size must be positive");
  if (cfg.lr <= 0.0) problems.push_back("train.lr must be positive");
  if (cfg.dropout < 0.0 || cfg.dropout >= 1.0)
    problems.push_back("train.dropout must be in [0, 1)");
  if (cfg.epoch_multiplicity <= 0)
    problems.push_back("train.epoch_multiplicity must be positive");
  if (cfg.train_scope != "head" && cfg.train_scope != "end_to_end")
    problems.push_back("train.scope must be 'head' or 'end_to_end'");
  if (cfg.train_image_size < 32 || cfg.train_image_size > 224)
    problems.push_back("train.image_size must be in [32, 224]");
  if (cfg.finetune_unfreeze_blocks < 1 ||
      cfg.finetune_unfreeze_blocks > SmallConvNet::kBlockCount)
    problems.push_back("finetune.unfreeze_blocks must be in [1, 5]");
  if (cfg.mc_passes < 1) problems.push_back("mc.passes must be >= 1");
  if (cfg.synth_plates < 0) problems.push_back("synth.plates must be >= 0");
  try {
    optimizer_from_string(cfg.optimizer);
  } catch (const ValidationError&) {
    problems.push_back("train.optimizer must be adam, sgd-momentum, rmsprop or adagrad");
  }
  try {
    backbone_kind_from_string(cfg.backbone_kind);
  } catch (const ValidationError&) {
    problems.push_back("backbone.kind must be pretrained_onnx or builtin_small");
  }
  if (!problems.empty()) {
    std::string msg = "config validation failed:";
    for (const std::string& p : problems) msg += "\n  - " + p;
    throw ValidationError(msg);
  }
  return cfg;
}

RunConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("config is not valid JSON: " + std::string(e.what()));
  }
  return parse_config(j);
}

}  // namespace foram
