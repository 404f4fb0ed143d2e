#include "foram/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "foram/checkpoint.hpp"
#include "foram/feature_cache.hpp"
#include "foram/png_io.hpp"
#include "foram/util.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace fs = std::filesystem;

namespace foram {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

std::string zero_pad(int value, int width) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%0*d", width, value);
  return buf;
}

void ensure_dir(const std::string& dir) { fs::create_directories(dir); }

void echo_config(const RunConfig& cfg, const CliArgs& args, const std::string& command) {
  const nlohmann::json j = cfg.to_json();
  std::printf("[%s] seed=%llu\n", command.c_str(),
              static_cast<unsigned long long>(cfg.seed));
  std::printf("[%s] config: %s\n", command.c_str(), j.dump().c_str());
  ensure_dir(args.out_dir);
  write_file_atomic(args.out_dir + "/resolved_config_" + command + ".json", j.dump(2) + "\n");
}

std::vector<std::string> sorted_pngs(const std::string& dir) {
  std::vector<std::string> paths;
  if (!fs::is_directory(dir)) throw ValidationError("not a directory: " + dir);
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".png")
      paths.push_back(entry.path().string());
  std::sort(paths.begin(), paths.end());
  return paths;
}

void require_file(const std::string& path, const std::string& what) {
  if (path.empty()) throw ValidationError("missing required " + what);
  if (!fs::exists(path)) throw ValidationError(what + " does not exist: " + path);
}

// ---- ground truth (synth output / extract input) ----

struct TruthRecord {
  std::string plate;
  int class_id = 0;
  double centroid_row = 0.0;
  double centroid_col = 0.0;
  long area = 0;
  bool small = false;
};

void write_truth(const std::string& path, const std::vector<TruthRecord>& records,
                 const std::vector<std::string>& class_names) {
  std::ostringstream out;
  for (const TruthRecord& r : records) {
    nlohmann::json j;
    j["plate"] = r.plate;
    j["class_id"] = r.class_id;
    j["class"] = class_names[static_cast<std::size_t>(r.class_id)];
    j["centroid"] = {r.centroid_row, r.centroid_col};
    j["area"] = r.area;
    j["small"] = r.small;
    out << j.dump() << "\n";
  }
  write_file_atomic(path, out.str());
}

std::vector<TruthRecord> read_truth(const std::string& path,
                                    const std::vector<std::string>& class_names) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open truth file: " + path);
  std::vector<TruthRecord> records;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw RuntimeFailure("malformed truth line: " + std::string(e.what()));
    }
    TruthRecord r;
    r.plate = j.at("plate").get<std::string>();
    if (j.contains("class_id")) {
      r.class_id = j.at("class_id").get<int>();
    } else {
      const std::string name = j.at("class").get<std::string>();
      const auto it = std::find(class_names.begin(), class_names.end(), name);
      if (it == class_names.end()) throw ValidationError("unknown class in truth: " + name);
      r.class_id = static_cast<int>(it - class_names.begin());
    }
    const auto& c = j.at("centroid");
    r.centroid_row = c.at(0).get<double>();
    r.centroid_col = c.at(1).get<double>();
    r.area = j.value("area", 0L);
    r.small = j.value("small", false);
    records.push_back(std::move(r));
  }
  return records;
}

// ---- backbone resolution ----

BackboneHandle resolve_backbone(const RunConfig& cfg, const CliArgs& args,
                                bool allow_seed_init, const std::string& out_dir) {
  const BackboneKind kind = backbone_kind_from_string(cfg.backbone_kind);
  std::string path = args.backbone_checkpoint.empty() ? cfg.backbone_path
                                                      : args.backbone_checkpoint;
  if (kind == BackboneKind::pretrained_onnx) {
    require_file(path, "pretrained backbone model file (backbone.path)");
    return load_pretrained_backbone(path);
  }
  if (!path.empty()) {
    require_file(path, "builtin backbone checkpoint");
    return make_builtin_handle(load_backbone(path), path);
  }
  if (!allow_seed_init)
    throw ValidationError(
        "builtin backbone checkpoint required (backbone.path or --backbone)");
  // Fresh seed-derived backbone; persisted so later commands can reuse it.
  SmallConvNet net = SmallConvNet::init(derive_seed(cfg.seed, "backbone"));
  const std::string saved = out_dir + "/backbone.fcp";
  save_backbone(saved, net);
  std::printf("initialized builtin backbone from seed, saved to %s\n", saved.c_str());
  return make_builtin_handle(std::move(net), saved);
}

// ---- cached feature extraction for head-scope training ----

struct SplitImages {
  std::vector<std::size_t> indices;  // into manifest.records
  std::vector<int> labels;
};

SplitImages split_view(const DatasetManifest& manifest, const std::string& split) {
  SplitImages view;
  view.indices = manifest.split_indices(split);
  for (std::size_t idx : view.indices)
    view.labels.push_back(manifest.class_id(manifest.records[idx].label));
  return view;
}

std::vector<SpecimenImage> load_split_images(const DatasetManifest& manifest,
                                             const SplitImages& view) {
  const ImageLoader loader = png_loader();
  std::vector<SpecimenImage> images;
  images.reserve(view.indices.size());
  for (std::size_t idx : view.indices) images.push_back(loader(manifest.records[idx].image_path));
  return images;
}

std::uint64_t augment_config_hash(const AugmentConfig& a) {
  const double values[6] = {a.hflip ? 1.0 : 0.0, a.rot90 ? 1.0 : 0.0, a.brightness_delta,
                            a.contrast_delta, a.saturation_delta, a.hue_delta};
  return fnv1a64(values, sizeof(values));
}

// Train rows hold `multiplicity` augmented variants per record, frozen per
// (seed, record, variant); val/test rows are clean.
FeatureSections extract_or_load_features(const RunConfig& cfg, const BackboneHandle& backbone,
                                         const DatasetManifest& manifest,
                                         const std::string& manifest_path,
                                         const std::string& out_dir) {
  const std::uint64_t key =
      feature_cache_key(backbone.content_hash, hash_file(manifest_path),
                        augment_config_hash(cfg.augment), cfg.epoch_multiplicity, cfg.seed);
  char keyhex[32];
  std::snprintf(keyhex, sizeof(keyhex), "%016llx", static_cast<unsigned long long>(key));
  const std::string cache_path = out_dir + "/features_" + keyhex + ".bin";

  if (auto cached = load_feature_cache(cache_path, key)) {
    std::printf("feature cache hit: %s\n", cache_path.c_str());
    return std::move(*cached);
  }

  const SplitImages train = split_view(manifest, "train");
  const SplitImages val = split_view(manifest, "val");
  const SplitImages test = split_view(manifest, "test");

  FeatureSections sections;
  sections.dim = backbone.feature_dim();
  sections.train_variants = cfg.epoch_multiplicity;

  {
    const ImageLoader loader = png_loader();
    const std::size_t m = static_cast<std::size_t>(cfg.epoch_multiplicity);
    std::vector<SpecimenImage> variants(train.indices.size() * m);
    std::exception_ptr failure;
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
    for (std::size_t i = 0; i < train.indices.size(); ++i) {
      try {
        const SpecimenImage base = loader(manifest.records[train.indices[i]].image_path);
        for (std::size_t v = 0; v < m; ++v) {
          Rng rng(derive_seed(cfg.seed, "cache-augment", train.indices[i], v));
          variants[i * m + v] = augment(base, cfg.augment, rng);
        }
      } catch (...) {
#ifdef _OPENMP
#pragma omp critical
#endif
        if (!failure) failure = std::current_exception();
      }
    }
    if (failure) std::rethrow_exception(failure);
    sections.train = extract_features(backbone, variants, cfg.workers);
  }
  sections.val = extract_features(backbone, load_split_images(manifest, val), cfg.workers);
  sections.test = extract_features(backbone, load_split_images(manifest, test), cfg.workers);

  save_feature_cache(cache_path, key, sections);
  std::printf("extracted features: train %d rows (x%d variants), val %d, test %d -> %s\n",
              sections.train.rows, sections.train_variants, sections.val.rows,
              sections.test.rows, cache_path.c_str());
  return sections;
}

nlohmann::json report_to_json(const TrainReport& report) {
  nlohmann::json j;
  j["train_loss"] = report.train_loss;
  j["val_accuracy"] = report.val_accuracy;
  j["initial_val_accuracy"] = report.initial_val_accuracy;
  j["stopped_epoch"] = report.stopped_epoch;
  j["best_epoch"] = report.best_epoch;
  j["best_val_accuracy"] = report.best_val_accuracy;
  j["test_accuracy"] = report.test_accuracy;
  return j;
}

DatasetManifest load_manifest_checked(const CliArgs& args) {
  require_file(args.manifest_path, "manifest (--manifest)");
  return load_manifest(args.manifest_path);
}

}  // namespace

// ---- synth ----

void cmd_synth(const RunConfig& cfg, const CliArgs& args) {
  echo_config(cfg, args, "synth");
  const std::string plates_dir = args.out_dir + "/plates";
  ensure_dir(plates_dir);

  std::vector<TruthRecord> truth;
  for (int p = 0; p < cfg.synth_plates; ++p) {
    const std::string id = "plate_" + zero_pad(p, 4);
    // unlucky packing draws are retried with derived sub-seeds
    SynthResult result;
    for (int attempt = 0;; ++attempt) {
      try {
        result = generate_synthetic(
            cfg.plate_spec,
            derive_seed(cfg.seed, "plate", static_cast<std::uint64_t>(p),
                        static_cast<std::uint64_t>(attempt)),
            id);
        break;
      } catch (const RuntimeFailure&) {
        if (attempt >= 4) throw;
      }
    }
    write_png(plates_dir + "/" + id + ".png", result.plate.pixels);
    for (const TruthBlob& blob : result.truth)
      truth.push_back(TruthRecord{id, blob.class_id, blob.centroid_row, blob.centroid_col,
                                  blob.area, false});
    for (const TruthBlob& blob : result.small_truth)
      truth.push_back(TruthRecord{id, blob.class_id, blob.centroid_row, blob.centroid_col,
                                  blob.area, true});
  }
  write_truth(args.out_dir + "/truth.jsonl", truth, synth_class_names());

  long specimens = 0;
  for (const TruthRecord& r : truth)
    if (!r.small) ++specimens;
  std::printf("synth: %d plates, %ld specimens (+%ld sub-threshold particulates) -> %s\n",
              cfg.synth_plates, specimens, static_cast<long>(truth.size()) - specimens,
              plates_dir.c_str());
}

// ---- extract ----

void cmd_extract(const RunConfig& cfg, const CliArgs& args) {
  echo_config(cfg, args, "extract");
  if (args.plates_dir.empty()) throw ValidationError("missing required --plates directory");
  const std::vector<std::string> plate_paths = sorted_pngs(args.plates_dir);
  if (plate_paths.empty()) {
    std::fprintf(stderr, "warning: no PNG plates found in %s\n", args.plates_dir.c_str());
    std::printf("extract: 0 plates, 0 specimens\n");
    return;
  }

  std::vector<TruthRecord> truth;
  if (!args.truth_path.empty()) {
    require_file(args.truth_path, "truth file");
    truth = read_truth(args.truth_path, synth_class_names());
  }

  const std::string crops_dir = args.out_dir + "/crops";
  ensure_dir(crops_dir);

  std::ostringstream records;
  long total_crops = 0;
  long failed_plates = 0;
  for (const std::string& path : plate_paths) {
    Plate plate;
    plate.id = fs::path(path).stem().string();
    try {
      plate.pixels = read_png(path);
    } catch (const std::exception& e) {
      std::fprintf(stderr, "warning: skipping unreadable plate %s: %s\n", path.c_str(),
                   e.what());
      ++failed_plates;
      continue;
    }

    std::vector<Detection> detections;
    try {
      detections = detect_specimens(plate, cfg.detect);
    } catch (const std::exception& e) {
      std::fprintf(stderr, "warning: detection failed on %s: %s\n", path.c_str(), e.what());
      ++failed_plates;
      continue;
    }

    for (std::size_t i = 0; i < detections.size(); ++i) {
      const Detection& det = detections[i];

      // label from ground truth when a planted blob sits within 10 px
      std::string label = "unlabeled";
      double best_dist = 10.0;
      for (const TruthRecord& t : truth) {
        if (t.plate != plate.id || t.small) continue;
        const double d = std::hypot(t.centroid_row - det.candidate.centroid_row,
                                    t.centroid_col - det.candidate.centroid_col);
        if (d < best_dist) {
          best_dist = d;
          label = synth_class_names()[static_cast<std::size_t>(t.class_id)];
        }
      }

      const std::string crop_name = plate.id + "_" + zero_pad(static_cast<int>(i), 3) + ".png";
      const std::string crop_rel = "crops/" + label + "/" + crop_name;
      ensure_dir(crops_dir + "/" + label);
      write_png(args.out_dir + "/" + crop_rel, det.image.pixels);
      ++total_crops;

      nlohmann::json j;
      j["plate"] = plate.id;
      j["index"] = static_cast<int>(i);
      j["crop"] = crop_rel;
      j["centroid"] = {det.candidate.centroid_row, det.candidate.centroid_col};
      j["area"] = det.candidate.area;
      j["bbox"] = {det.candidate.top, det.candidate.left, det.candidate.bbox_height,
                   det.candidate.bbox_width};
      j["label"] = label;
      records << j.dump() << "\n";
    }
  }
  write_file_atomic(args.out_dir + "/detections.jsonl", records.str());

  if (failed_plates == static_cast<long>(plate_paths.size()))
    throw RuntimeFailure("all plates failed to process");
  std::printf("extract: %zu plates (%ld failed), %ld specimens -> %s\n", plate_paths.size(),
              failed_plates, total_crops, crops_dir.c_str());
}

// ---- split ----

void cmd_split(const RunConfig& cfg, const CliArgs& args) {
  echo_config(cfg, args, "split");
  if (args.data_dir.empty()) throw ValidationError("missing required --data directory");
  DatasetManifest manifest = ingest_directory(args.data_dir, synth_class_names(), cfg.seed);
  if (manifest.records.empty())
    throw ValidationError("no class-labeled PNG files under " + args.data_dir);
  manifest = stratified_split(manifest, cfg.split_fractions, cfg.seed);
  const std::string path = args.out_dir + "/manifest.json";
  save_manifest(manifest, path);

  long n_train = 0, n_val = 0, n_test = 0;
  for (const SpecimenRecord& r : manifest.records) {
    if (r.split == "train") ++n_train;
    else if (r.split == "val") ++n_val;
    else ++n_test;
  }
  std::printf("split: %zu records -> train %ld / val %ld / test %ld -> %s\n",
              manifest.records.size(), n_train, n_val, n_test, path.c_str());
}

// ---- train ----

void cmd_train(const RunConfig& cfg, const CliArgs& args) {
  echo_config(cfg, args, "train");
  const DatasetManifest manifest = load_manifest_checked(args);

  TrainReport report;
  if (cfg.train_scope == "end_to_end") {
    if (backbone_kind_from_string(cfg.backbone_kind) != BackboneKind::builtin_small)
      throw ValidationError("train.scope end_to_end requires the builtin backbone");

    SmallConvNet net =
        args.backbone_checkpoint.empty() && cfg.backbone_path.empty()
            ? SmallConvNet::init(derive_seed(cfg.seed, "backbone"))
            : load_backbone(args.backbone_checkpoint.empty() ? cfg.backbone_path
                                                             : args.backbone_checkpoint);
    ClassifierParams head =
        ClassifierParams::make(scn_feature_dim_for_size(cfg.train_image_size), cfg.hidden, 4,
                               cfg.dropout, derive_seed(cfg.seed, "head-init"));
    head.class_names = manifest.class_names;

    const ImageBatchStream train_stream(manifest, "train", cfg.batch_size,
                                        cfg.epoch_multiplicity, cfg.augment, true,
                                        derive_seed(cfg.seed, "train-stream"));
    const SplitImages val = split_view(manifest, "val");
    const SplitImages test = split_view(manifest, "test");
    const std::vector<SpecimenImage> val_images = load_split_images(manifest, val);
    const std::vector<SpecimenImage> test_images = load_split_images(manifest, test);

    FinetuneConfig ft;
    ft.first_trainable_block = 0;
    ft.backbone_lr = cfg.lr;
    ft.head_lr = cfg.lr;
    ft.optimizer = optimizer_from_string(cfg.optimizer);
    ft.max_epochs = cfg.max_epochs;
    ft.patience = cfg.patience;
    ft.image_size = cfg.train_image_size;
    ft.seed = cfg.seed;
    ft.workers = cfg.workers;
    report = finetune(net, head, train_stream, val_images, val.labels, &test_images,
                      &test.labels, ft);

    save_backbone(args.out_dir + "/backbone.fcp", net);
    save_classifier(args.out_dir + "/head.fcp", head);
  } else {
    const BackboneHandle backbone = resolve_backbone(cfg, args, true, args.out_dir);
    const FeatureSections features =
        extract_or_load_features(cfg, backbone, manifest, args.manifest_path, args.out_dir);

    const SplitImages train = split_view(manifest, "train");
    const SplitImages val = split_view(manifest, "val");
    const SplitImages test = split_view(manifest, "test");

    ClassifierParams head =
        ClassifierParams::make(features.dim, cfg.hidden, 4, cfg.dropout,
                               derive_seed(cfg.seed, "head-init"));
    head.class_names = manifest.class_names;

    TrainConfig tc;
    tc.batch_size = cfg.batch_size;
    tc.lr = cfg.lr;
    tc.max_epochs = cfg.max_epochs;
    tc.patience = cfg.patience;
    tc.optimizer = optimizer_from_string(cfg.optimizer);
    tc.seed = derive_seed(cfg.seed, "train");

    const InMemoryFeatureStream stream(features.train, train.labels, features.train_variants,
                                       cfg.batch_size, true, tc.seed);
    const EvalSet val_set{features.val, val.labels};
    const EvalSet test_set{features.test, test.labels};
    report = train_classifier(head, stream, val_set, &test_set, tc);

    save_classifier(args.out_dir + "/head.fcp", head);
  }

  write_file_atomic(args.out_dir + "/train_report.json", report_to_json(report).dump(2) + "\n");
  std::printf("train: stopped at epoch %d, best val accuracy %s (epoch %d), test accuracy %s\n",
              report.stopped_epoch, fmt(report.best_val_accuracy).c_str(), report.best_epoch,
              fmt(report.test_accuracy).c_str());
}

// ---- grid search ----

void cmd_grid_search(const RunConfig& cfg, const CliArgs& args) {
  echo_config(cfg, args, "grid-search");
  const DatasetManifest manifest = load_manifest_checked(args);
  const BackboneHandle backbone = resolve_backbone(cfg, args, true, args.out_dir);
  const FeatureSections features =
      extract_or_load_features(cfg, backbone, manifest, args.manifest_path, args.out_dir);

  const SplitImages train = split_view(manifest, "train");
  const SplitImages val = split_view(manifest, "val");

  // grid training sees one clean-equivalent pass: variant 0 of each record
  Matrix train_rows(static_cast<int>(train.indices.size()), features.dim);
  for (std::size_t i = 0; i < train.indices.size(); ++i) {
    const auto src = features.train.row(static_cast<int>(i) * features.train_variants);
    std::copy(src.begin(), src.end(),
              train_rows.data.begin() + i * static_cast<std::size_t>(features.dim));
  }

  TrainConfig base;
  base.batch_size = cfg.batch_size;
  base.lr = cfg.lr;
  base.max_epochs = cfg.grid_max_epochs;
  base.patience = cfg.grid_patience;
  base.seed = derive_seed(cfg.seed, "grid-search");

  const std::vector<GridEntry> grid = default_search_grid();
  const std::vector<GridResult> results = grid_search(
      grid, train_rows, train.labels, EvalSet{features.val, val.labels}, 4, base, cfg.workers);

  nlohmann::json j = nlohmann::json::array();
  std::ostringstream csv;
  csv << "rank,hidden1,hidden2,dropout,optimizer,val_accuracy,param_count\n";
  for (std::size_t rank = 0; rank < results.size(); ++rank) {
    const GridResult& r = results[rank];
    j.push_back({{"rank", rank + 1},
                 {"hidden", r.entry.hidden},
                 {"dropout", r.entry.dropout},
                 {"optimizer", optimizer_to_string(r.entry.optimizer)},
                 {"val_accuracy", r.best_val_accuracy},
                 {"param_count", r.param_count},
                 {"config_index", r.config_index}});
    csv << rank + 1 << "," << r.entry.hidden[0] << "," << r.entry.hidden[1] << ","
        << fmt(r.entry.dropout) << "," << optimizer_to_string(r.entry.optimizer) << ","
        << fmt(r.best_val_accuracy) << "," << r.param_count << "\n";
  }
  write_file_atomic(args.out_dir + "/grid_report.json", j.dump(2) + "\n");
  write_file_atomic(args.out_dir + "/grid_report.csv", csv.str());

  const GridResult& best = results.front();
  std::printf("grid-search: %zu configurations, best hidden=(%d,%d) dropout=%s %s "
              "val accuracy %s\n",
              results.size(), best.entry.hidden[0], best.entry.hidden[1],
              fmt(best.entry.dropout).c_str(),
              optimizer_to_string(best.entry.optimizer).c_str(),
              fmt(best.best_val_accuracy).c_str());
}

// ---- finetune ----

void cmd_finetune(const RunConfig& cfg, const CliArgs& args) {
  echo_config(cfg, args, "finetune");
  const DatasetManifest manifest = load_manifest_checked(args);
  if (backbone_kind_from_string(cfg.backbone_kind) == BackboneKind::pretrained_onnx)
    throw ValidationError(
        "fine-tuning the pretrained interchange backbone is unsupported; "
        "use backbone.kind builtin_small");

  require_file(args.head_checkpoint, "head checkpoint (--head)");
  ClassifierParams head = load_classifier(args.head_checkpoint);
  if (head.class_names != manifest.class_names)
    throw ValidationError("checkpoint class names do not match the manifest");

  const std::string backbone_path =
      args.backbone_checkpoint.empty() ? cfg.backbone_path : args.backbone_checkpoint;
  require_file(backbone_path, "builtin backbone checkpoint (--backbone)");
  SmallConvNet net = load_backbone(backbone_path);
  if (head.input_dim() != net.feature_dim())
    throw ValidationError("head input dim does not match backbone feature dim");

  const ImageBatchStream train_stream(manifest, "train", cfg.batch_size,
                                      cfg.epoch_multiplicity, cfg.augment, true,
                                      derive_seed(cfg.seed, "finetune-stream"));
  const SplitImages val = split_view(manifest, "val");
  const SplitImages test = split_view(manifest, "test");
  const std::vector<SpecimenImage> val_images = load_split_images(manifest, val);
  const std::vector<SpecimenImage> test_images = load_split_images(manifest, test);

  FinetuneConfig ft;
  ft.first_trainable_block = SmallConvNet::kBlockCount - cfg.finetune_unfreeze_blocks;
  ft.backbone_lr = cfg.finetune_backbone_lr;
  ft.head_lr = cfg.finetune_head_lr;
  ft.optimizer = optimizer_from_string(cfg.optimizer);
  ft.max_epochs = cfg.finetune_max_epochs;
  ft.patience = cfg.finetune_patience;
  ft.seed = derive_seed(cfg.seed, "finetune");
  ft.workers = cfg.workers;

  const TrainReport report = finetune(net, head, train_stream, val_images, val.labels,
                                      &test_images, &test.labels, ft);

  save_backbone(args.out_dir + "/backbone_finetuned.fcp", net);
  save_classifier(args.out_dir + "/head_finetuned.fcp", head);
  write_file_atomic(args.out_dir + "/finetune_report.json",
                    report_to_json(report).dump(2) + "\n");
  std::printf(
      "finetune: initial val accuracy %s, best %s (epoch %d), test accuracy %s\n",
      fmt(report.initial_val_accuracy).c_str(), fmt(report.best_val_accuracy).c_str(),
      report.best_epoch, fmt(report.test_accuracy).c_str());
}

// ---- evaluate ----

void cmd_evaluate(const RunConfig& cfg, const CliArgs& args) {
  echo_config(cfg, args, "evaluate");
  const DatasetManifest manifest = load_manifest_checked(args);
  require_file(args.head_checkpoint, "head checkpoint (--head)");
  const ClassifierParams head = load_classifier(args.head_checkpoint);
  if (head.class_names != manifest.class_names)
    throw ValidationError("checkpoint class names do not match the manifest");

  const BackboneHandle backbone = resolve_backbone(cfg, args, false, args.out_dir);
  const SplitImages view = split_view(manifest, args.eval_split);
  if (view.indices.empty()) throw ValidationError("empty split: " + args.eval_split);
  const Matrix features =
      extract_features(backbone, load_split_images(manifest, view), cfg.workers);

  const Matrix probs = nn_forward(head, features, Mode::eval);
  const std::vector<int> predicted = argmax_rows(probs);
  const double acc = accuracy(probs, view.labels);

  const int k = static_cast<int>(manifest.class_names.size());
  std::vector<std::vector<long>> confusion(static_cast<std::size_t>(k),
                                           std::vector<long>(static_cast<std::size_t>(k), 0));
  for (std::size_t i = 0; i < view.labels.size(); ++i)
    confusion[static_cast<std::size_t>(view.labels[i])]
             [static_cast<std::size_t>(predicted[i])] += 1;

  nlohmann::json j;
  j["split"] = args.eval_split;
  j["accuracy"] = acc;
  j["n"] = view.labels.size();
  j["class_names"] = manifest.class_names;
  j["confusion"] = confusion;
  write_file_atomic(args.out_dir + "/evaluation.json", j.dump(2) + "\n");

  std::printf("evaluate: %s accuracy %s over %zu specimens\n", args.eval_split.c_str(),
              fmt(acc).c_str(), view.labels.size());
  std::printf("confusion (rows = true, cols = predicted):\n");
  for (int r = 0; r < k; ++r) {
    std::printf("  %-22s", manifest.class_names[static_cast<std::size_t>(r)].c_str());
    for (int c = 0; c < k; ++c)
      std::printf(" %6ld", confusion[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)]);
    std::printf("\n");
  }
}

// ---- mc-dropout ----

void cmd_mc_dropout(const RunConfig& cfg, const CliArgs& args) {
  echo_config(cfg, args, "mc-dropout");
  const DatasetManifest manifest = load_manifest_checked(args);
  require_file(args.head_checkpoint, "head checkpoint (--head)");
  const ClassifierParams head = load_classifier(args.head_checkpoint);
  if (head.class_names != manifest.class_names)
    throw ValidationError("checkpoint class names do not match the manifest");

  const BackboneHandle backbone = resolve_backbone(cfg, args, false, args.out_dir);
  const SplitImages view = split_view(manifest, args.eval_split);
  if (view.indices.empty()) throw ValidationError("empty split: " + args.eval_split);
  const Matrix features =
      extract_features(backbone, load_split_images(manifest, view), cfg.workers);

  const McRun run = mc_predict(head, features, cfg.mc_passes, derive_seed(cfg.seed, "mc"));
  McSummary summary = summarize(run);
  summary.flags = flag_difficult(summary, view.labels, cfg.flag_thresholds);
  const std::vector<int> ensemble = majority_vote(summary);

  // deterministic single-pass accuracy and MC statistics
  const Matrix det_probs = nn_forward(head, features, Mode::eval);
  const double det_acc = accuracy(det_probs, view.labels);
  double pass_acc_sum = 0.0;
  for (int pass = 0; pass < run.n_passes; ++pass) {
    long hits = 0;
    for (int item = 0; item < run.batch; ++item) {
      int best = 0;
      for (int c = 1; c < run.classes; ++c)
        if (run.at(pass, item, c) > run.at(pass, item, best)) best = c;
      if (best == view.labels[static_cast<std::size_t>(item)]) ++hits;
    }
    pass_acc_sum += static_cast<double>(hits) / run.batch;
  }
  const double mean_pass_acc = pass_acc_sum / run.n_passes;
  long ensemble_hits = 0;
  for (std::size_t i = 0; i < view.labels.size(); ++i)
    if (ensemble[i] == view.labels[i]) ++ensemble_hits;
  const double ensemble_acc = static_cast<double>(ensemble_hits) / run.batch;

  const int k = summary.classes;
  std::ostringstream csv;
  csv << "id,path,true_label,predicted,majority,flag,uncertainty";
  for (int c = 0; c < k; ++c) csv << ",votes_" << c;
  for (int c = 0; c < k; ++c) csv << ",mean_" << c;
  for (int c = 0; c < k; ++c) csv << ",var_" << c;
  csv << "\n";

  nlohmann::json rows = nlohmann::json::array();
  for (int item = 0; item < summary.batch; ++item) {
    const std::size_t idx = view.indices[static_cast<std::size_t>(item)];
    const SpecimenRecord& rec = manifest.records[idx];
    const std::string& truth = rec.label;
    const std::string predicted =
        manifest.class_names[static_cast<std::size_t>(
            summary.predicted_class[static_cast<std::size_t>(item)])];
    const std::string majority =
        manifest.class_names[static_cast<std::size_t>(ensemble[static_cast<std::size_t>(item)])];
    const std::string flag = flag_to_string(summary.flags[static_cast<std::size_t>(item)]);

    csv << item << "," << rec.image_path << "," << truth << "," << predicted << ","
        << majority << "," << flag << "," << fmt(uncertainty_score(summary, item));
    for (int c = 0; c < k; ++c) csv << "," << summary.votes_at(item, c);
    for (int c = 0; c < k; ++c) csv << "," << fmt(summary.mean_at(item, c));
    for (int c = 0; c < k; ++c) csv << "," << fmt(summary.variance_at(item, c));
    csv << "\n";

    nlohmann::json row;
    row["id"] = item;
    row["path"] = rec.image_path;
    row["true_label"] = truth;
    row["predicted"] = predicted;
    row["majority"] = majority;
    row["flag"] = flag;
    row["uncertainty"] = uncertainty_score(summary, item);
    row["votes"] = std::vector<int>(summary.votes.begin() + item * k,
                                    summary.votes.begin() + (item + 1) * k);
    row["mean"] = std::vector<double>(summary.mean.begin() + item * k,
                                      summary.mean.begin() + (item + 1) * k);
    row["variance"] = std::vector<double>(summary.variance.begin() + item * k,
                                          summary.variance.begin() + (item + 1) * k);
    rows.push_back(std::move(row));
  }

  long n_uncertain = 0, n_confident_wrong = 0;
  for (const DifficultyFlag f : summary.flags) {
    if (f == DifficultyFlag::uncertain) ++n_uncertain;
    if (f == DifficultyFlag::confident_wrong) ++n_confident_wrong;
  }

  nlohmann::json j;
  j["split"] = args.eval_split;
  j["n_passes"] = run.n_passes;
  j["deterministic_accuracy"] = det_acc;
  j["mean_pass_accuracy"] = mean_pass_acc;
  j["ensemble_accuracy"] = ensemble_acc;
  j["n_uncertain"] = n_uncertain;
  j["n_confident_wrong"] = n_confident_wrong;
  j["rows"] = std::move(rows);
  write_file_atomic(args.out_dir + "/mc_report.json", j.dump(2) + "\n");
  write_file_atomic(args.out_dir + "/mc_report.csv", csv.str());

  // Fig.-5-style per-specimen histograms: 20 bins per class over [0, 1].
  std::ostringstream hist;
  hist << "id,path,class";
  for (int b = 0; b < 20; ++b) hist << ",bin_" << zero_pad(b, 2);
  hist << "\n";
  for (int item = 0; item < summary.batch; ++item) {
    const std::size_t idx = view.indices[static_cast<std::size_t>(item)];
    for (int c = 0; c < k; ++c) {
      hist << item << "," << manifest.records[idx].image_path << ","
           << manifest.class_names[static_cast<std::size_t>(c)];
      for (int count : prediction_histogram(run, item, c)) hist << "," << count;
      hist << "\n";
    }
  }
  write_file_atomic(args.out_dir + "/mc_histograms.csv", hist.str());

  std::printf("mc-dropout: N=%d over %d specimens; deterministic %s, mean per-pass %s, "
              "ensemble %s; %ld uncertain, %ld confident-wrong\n",
              run.n_passes, run.batch, fmt(det_acc).c_str(), fmt(mean_pass_acc).c_str(),
              fmt(ensemble_acc).c_str(), n_uncertain, n_confident_wrong);
}

int run_command(const std::string& name, const RunConfig& cfg, const CliArgs& args) {
  try {
    if (name == "synth") cmd_synth(cfg, args);
    else if (name == "extract") cmd_extract(cfg, args);
    else if (name == "split") cmd_split(cfg, args);
    else if (name == "train") cmd_train(cfg, args);
    else if (name == "grid-search") cmd_grid_search(cfg, args);
    else if (name == "finetune") cmd_finetune(cfg, args);
    else if (name == "evaluate") cmd_evaluate(cfg, args);
    else if (name == "mc-dropout") cmd_mc_dropout(cfg, args);
    else throw ValidationError("unknown command: " + name);
  } catch (const ValidationError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "failure: %s\n", e.what());
    return 2;
  }
  return 0;
}

}  // namespace foram
