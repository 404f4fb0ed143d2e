#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "foram/augment.hpp"
#include "foram/backbone.hpp"
#include "foram/checkpoint.hpp"
#include "foram/imaging.hpp"
#include "foram/manifest.hpp"
#include "foram/synth.hpp"
#include "foram/train.hpp"
#include "foram/uncertainty.hpp"

namespace py = pybind11;
using namespace foram;

namespace {

Image8 image_from_array(const py::array_t<std::uint8_t, py::array::c_style>& arr) {
  if (arr.ndim() != 3 || arr.shape(2) != 3)
    throw ValidationError("expected an (H, W, 3) uint8 array");
  Image8 img(static_cast<int>(arr.shape(0)), static_cast<int>(arr.shape(1)));
  std::copy(arr.data(), arr.data() + arr.size(), img.data.begin());
  return img;
}

py::array_t<std::uint8_t> image_to_array(const Image8& img) {
  py::array_t<std::uint8_t> arr({img.height, img.width, 3});
  std::copy(img.data.begin(), img.data.end(), arr.mutable_data());
  return arr;
}

GrayImage gray_from_array(const py::array_t<double, py::array::c_style | py::array::forcecast>& arr) {
  if (arr.ndim() != 2) throw ValidationError("expected an (H, W) float array");
  GrayImage img(static_cast<int>(arr.shape(0)), static_cast<int>(arr.shape(1)));
  std::copy(arr.data(), arr.data() + arr.size(), img.data.begin());
  return img;
}

py::array_t<double> gray_to_array(const GrayImage& img) {
  py::array_t<double> arr({img.height, img.width});
  std::copy(img.data.begin(), img.data.end(), arr.mutable_data());
  return arr;
}

Matrix matrix_from_array(const py::array_t<double, py::array::c_style | py::array::forcecast>& arr) {
  if (arr.ndim() != 2) throw ValidationError("expected an (n, d) float array");
  Matrix m(static_cast<int>(arr.shape(0)), static_cast<int>(arr.shape(1)));
  std::copy(arr.data(), arr.data() + arr.size(), m.data.begin());
  return m;
}

py::array_t<double> matrix_to_array(const Matrix& m) {
  py::array_t<double> arr({m.rows, m.cols});
  std::copy(m.data.begin(), m.data.end(), arr.mutable_data());
  return arr;
}

DetectConfig detect_config(double border_sigma, double sigma, const std::string& threshold,
                           double threshold_value, int connectivity, long min_area,
                           bool border_removal) {
  DetectConfig cfg;
  cfg.border_sigma = border_sigma;
  cfg.sigma = sigma;
  cfg.method = threshold == "fixed" ? ThresholdMethod::fixed : ThresholdMethod::otsu;
  if (threshold != "fixed" && threshold != "otsu")
    throw ValidationError("threshold must be 'otsu' or 'fixed'");
  cfg.fixed_value = threshold_value;
  cfg.connectivity = connectivity;
  cfg.min_area = min_area;
  cfg.border_removal = border_removal;
  return cfg;
}

py::dict candidate_to_dict(const Candidate& c) {
  py::dict d;
  d["label"] = c.label;
  d["area"] = c.area;
  d["centroid"] = py::make_tuple(c.centroid_row, c.centroid_col);
  d["bbox"] = py::make_tuple(c.top, c.left, c.bbox_height, c.bbox_width);
  return d;
}

std::vector<SpecimenImage> specimens_from_array(
    const py::array_t<std::uint8_t, py::array::c_style>& arr) {
  if (arr.ndim() != 4 || arr.shape(1) != kCropSize || arr.shape(2) != kCropSize ||
      arr.shape(3) != 3)
    throw ValidationError("expected an (n, 224, 224, 3) uint8 array");
  std::vector<SpecimenImage> images(static_cast<std::size_t>(arr.shape(0)));
  const std::size_t stride = static_cast<std::size_t>(kCropSize) * kCropSize * 3;
  for (std::size_t i = 0; i < images.size(); ++i) {
    images[i].pixels = Image8(kCropSize, kCropSize);
    std::copy(arr.data() + i * stride, arr.data() + (i + 1) * stride,
              images[i].pixels.data.begin());
  }
  return images;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Microfossil specimen extraction, transfer-learning classification and "
            "MC-dropout uncertainty";

  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<RuntimeFailure>(m, "RuntimeFailure", PyExc_RuntimeError);

  m.def("class_names", [] { return synth_class_names(); });

  // ---- imaging ----
  m.def(
      "to_grayscale",
      [](const py::array_t<std::uint8_t, py::array::c_style>& plate) {
        return gray_to_array(to_grayscale(image_from_array(plate)));
      },
      py::arg("plate"));

  m.def(
      "gaussian_blur",
      [](const py::array_t<double, py::array::c_style | py::array::forcecast>& img,
         double sigma) { return gray_to_array(gaussian_blur(gray_from_array(img), sigma)); },
      py::arg("image"), py::arg("sigma"));

  m.def("gaussian_kernel", &gaussian_kernel, py::arg("sigma"));

  m.def(
      "threshold",
      [](const py::array_t<double, py::array::c_style | py::array::forcecast>& img,
         const std::string& method, double value) {
        double chosen = 0.0;
        const BinaryMask mask =
            threshold(gray_from_array(img),
                      method == "fixed" ? ThresholdMethod::fixed : ThresholdMethod::otsu, value,
                      &chosen);
        py::array_t<bool> out({mask.height, mask.width});
        for (py::ssize_t i = 0; i < out.size(); ++i)
          out.mutable_data()[i] = mask.data[static_cast<std::size_t>(i)] != 0;
        return py::make_tuple(out, chosen);
      },
      py::arg("image"), py::arg("method") = "otsu", py::arg("value") = 0.5,
      "Returns (mask, threshold_value)");

  m.def(
      "connected_components",
      [](const py::array_t<bool, py::array::c_style | py::array::forcecast>& mask,
         int connectivity) {
        if (mask.ndim() != 2) throw ValidationError("expected an (H, W) bool array");
        BinaryMask bm(static_cast<int>(mask.shape(0)), static_cast<int>(mask.shape(1)));
        for (py::ssize_t i = 0; i < mask.size(); ++i)
          bm.data[static_cast<std::size_t>(i)] = mask.data()[i] ? 1 : 0;
        const ComponentMap cmap = connected_components(bm, connectivity);
        py::array_t<std::int32_t> labels({cmap.height, cmap.width});
        std::copy(cmap.labels.begin(), cmap.labels.end(), labels.mutable_data());
        return py::make_tuple(labels, cmap.count);
      },
      py::arg("mask"), py::arg("connectivity") = 8, "Returns (labels, count)");

  m.def(
      "measure_candidates",
      [](const py::array_t<std::int32_t, py::array::c_style | py::array::forcecast>& labels,
         int count) {
        if (labels.ndim() != 2) throw ValidationError("expected an (H, W) int32 array");
        ComponentMap cmap(static_cast<int>(labels.shape(0)), static_cast<int>(labels.shape(1)));
        std::copy(labels.data(), labels.data() + labels.size(), cmap.labels.begin());
        cmap.count = count;
        py::list out;
        for (const Candidate& c : measure_candidates(cmap)) out.append(candidate_to_dict(c));
        return out;
      },
      py::arg("labels"), py::arg("count"));

  m.def(
      "detect_specimens",
      [](const py::array_t<std::uint8_t, py::array::c_style>& plate_arr, double border_sigma,
         double sigma, const std::string& threshold, double threshold_value, int connectivity,
         long min_area, bool border_removal) {
        Plate plate;
        plate.pixels = image_from_array(plate_arr);
        plate.id = "array";
        const auto detections =
            detect_specimens(plate, detect_config(border_sigma, sigma, threshold,
                                                  threshold_value, connectivity, min_area,
                                                  border_removal));
        py::list out;
        for (const Detection& det : detections)
          out.append(py::make_tuple(image_to_array(det.image.pixels),
                                    candidate_to_dict(det.candidate)));
        return out;
      },
      py::arg("plate"), py::arg("border_sigma") = 2.0, py::arg("sigma") = 1.0,
      py::arg("threshold") = "otsu", py::arg("threshold_value") = 0.5,
      py::arg("connectivity") = 8, py::arg("min_area") = 1024,
      py::arg("border_removal") = true,
      "Returns a list of (crop, candidate) pairs");

  // ---- synth ----
  m.def(
      "generate_synthetic",
      [](std::uint64_t seed, int width, int height, int blobs, int small_blobs,
         long min_blob_area, long max_blob_area, long small_blob_area, double noise_level,
         double tint_strength, double texture_contrast, int border_px) {
        PlateSpec spec;
        spec.width = width;
        spec.height = height;
        spec.blob_count = blobs;
        spec.small_blob_count = small_blobs;
        spec.min_blob_area = min_blob_area;
        spec.max_blob_area = max_blob_area;
        spec.small_blob_area = small_blob_area;
        spec.noise_level = noise_level;
        spec.tint_strength = tint_strength;
        spec.texture_contrast = texture_contrast;
        spec.border_px = border_px;
        const SynthResult result = generate_synthetic(spec, seed, "synthetic");
        py::list truth;
        for (const TruthBlob& blob : result.truth) {
          py::dict d;
          d["class_id"] = blob.class_id;
          d["centroid"] = py::make_tuple(blob.centroid_row, blob.centroid_col);
          d["area"] = blob.area;
          truth.append(d);
        }
        return py::make_tuple(image_to_array(result.plate.pixels), truth);
      },
      py::arg("seed"), py::arg("width") = 800, py::arg("height") = 600, py::arg("blobs") = 12,
      py::arg("small_blobs") = 2, py::arg("min_blob_area") = 1400,
      py::arg("max_blob_area") = 3000, py::arg("small_blob_area") = 500,
      py::arg("noise_level") = 0.015, py::arg("tint_strength") = 1.0,
      py::arg("texture_contrast") = 1.0, py::arg("border_px") = 14,
      "Returns (plate, truth)");

  // ---- augmentation ----
  m.def(
      "augment_image",
      [](const py::array_t<std::uint8_t, py::array::c_style>& img, std::uint64_t seed,
         bool hflip, bool rot90, double brightness, double contrast, double saturation,
         double hue) {
        AugmentConfig cfg;
        cfg.hflip = hflip;
        cfg.rot90 = rot90;
        cfg.brightness_delta = brightness;
        cfg.contrast_delta = contrast;
        cfg.saturation_delta = saturation;
        cfg.hue_delta = hue;
        SpecimenImage spec;
        spec.pixels = image_from_array(img);
        Rng rng(seed);
        return image_to_array(augment(spec, cfg, rng).pixels);
      },
      py::arg("image"), py::arg("seed"), py::arg("hflip") = true, py::arg("rot90") = true,
      py::arg("brightness") = 0.10, py::arg("contrast") = 0.10, py::arg("saturation") = 0.10,
      py::arg("hue") = 0.05);

  m.def(
      "apply_photometric",
      [](const py::array_t<std::uint8_t, py::array::c_style>& img, double brightness,
         double contrast, double saturation, double hue_offset) {
        return image_to_array(
            apply_photometric(image_from_array(img), brightness, contrast, saturation,
                              hue_offset));
      },
      py::arg("image"), py::arg("brightness") = 1.0, py::arg("contrast") = 1.0,
      py::arg("saturation") = 1.0, py::arg("hue_offset") = 0.0);

  // ---- dataset ----
  m.def(
      "stratified_split",
      [](const std::vector<std::string>& labels, const std::vector<std::string>& class_names,
         std::array<double, 3> fractions, std::uint64_t seed) {
        DatasetManifest manifest;
        manifest.class_names = class_names;
        for (std::size_t i = 0; i < labels.size(); ++i)
          manifest.records.push_back(
              SpecimenRecord{"record_" + std::to_string(i), labels[i], "unassigned"});
        manifest = stratified_split(manifest, fractions, seed);
        std::vector<std::string> splits;
        for (const SpecimenRecord& rec : manifest.records) splits.push_back(rec.split);
        return splits;
      },
      py::arg("labels"), py::arg("class_names"),
      py::arg("fractions") = std::array<double, 3>{0.8, 0.1, 0.1}, py::arg("seed") = 0,
      "Returns the per-record split assignment");

  // ---- classifier head ----
  py::class_<ClassifierParams>(m, "Classifier")
      .def(py::init([](int in_dim, const std::vector<int>& hidden, int classes, double dropout,
                       std::uint64_t seed) {
             return ClassifierParams::make(in_dim, hidden, classes, dropout, seed);
           }),
           py::arg("in_dim") = 25088, py::arg("hidden") = std::vector<int>{512, 64},
           py::arg("classes") = 4, py::arg("dropout") = 0.5, py::arg("seed") = 0)
      .def_readwrite("class_names", &ClassifierParams::class_names)
      .def_property_readonly("dropout_rate",
                             [](const ClassifierParams& p) { return p.dropout_rate; })
      .def_property_readonly("input_dim", &ClassifierParams::input_dim)
      .def_property_readonly("param_count", &ClassifierParams::param_count)
      .def(
          "forward",
          [](const ClassifierParams& params,
             const py::array_t<double, py::array::c_style | py::array::forcecast>& features,
             bool train, std::uint64_t seed) {
            Rng rng(seed);
            return matrix_to_array(nn_forward(params, matrix_from_array(features),
                                              train ? Mode::train : Mode::eval,
                                              train ? &rng : nullptr));
          },
          py::arg("features"), py::arg("train") = false, py::arg("seed") = 0)
      .def(
          "fit",
          [](ClassifierParams& params,
             const py::array_t<double, py::array::c_style | py::array::forcecast>& train_x,
             const std::vector<int>& train_y,
             const py::array_t<double, py::array::c_style | py::array::forcecast>& val_x,
             const std::vector<int>& val_y, int batch_size, double lr, int max_epochs,
             int patience, const std::string& optimizer, std::uint64_t seed) {
            TrainConfig cfg;
            cfg.batch_size = batch_size;
            cfg.lr = lr;
            cfg.max_epochs = max_epochs;
            cfg.patience = patience;
            cfg.optimizer = optimizer_from_string(optimizer);
            cfg.seed = seed;
            InMemoryFeatureStream stream(matrix_from_array(train_x), train_y, 1, batch_size,
                                         true, seed);
            const EvalSet val{matrix_from_array(val_x), val_y};
            const TrainReport report = train_classifier(params, stream, val, nullptr, cfg);
            py::dict d;
            d["train_loss"] = report.train_loss;
            d["val_accuracy"] = report.val_accuracy;
            d["initial_val_accuracy"] = report.initial_val_accuracy;
            d["stopped_epoch"] = report.stopped_epoch;
            d["best_epoch"] = report.best_epoch;
            d["best_val_accuracy"] = report.best_val_accuracy;
            return d;
          },
          py::arg("train_x"), py::arg("train_y"), py::arg("val_x"), py::arg("val_y"),
          py::arg("batch_size") = 32, py::arg("lr") = 1e-4, py::arg("max_epochs") = 50,
          py::arg("patience") = 3, py::arg("optimizer") = "adam", py::arg("seed") = 0)
      .def("save",
           [](const ClassifierParams& params, const std::string& path) {
             save_classifier(path, params);
           })
      .def_static("load", [](const std::string& path) { return load_classifier(path); });

  // ---- backbones ----
  py::class_<BackboneHandle>(m, "Backbone")
      .def_static(
          "builtin",
          [](std::uint64_t seed) {
            return make_builtin_handle(SmallConvNet::init(seed), "seed");
          },
          py::arg("seed") = 0)
      .def_static("load_builtin",
                  [](const std::string& path) {
                    return make_builtin_handle(load_backbone(path), path);
                  })
      .def_static("load_pretrained",
                  [](const std::string& path) { return load_pretrained_backbone(path); })
      .def_property_readonly("feature_dim", &BackboneHandle::feature_dim)
      .def_property_readonly("kind",
                             [](const BackboneHandle& h) {
                               return backbone_kind_to_string(h.kind);
                             })
      .def(
          "extract",
          [](const BackboneHandle& handle,
             const py::array_t<std::uint8_t, py::array::c_style>& images, int workers) {
            return matrix_to_array(
                extract_features(handle, specimens_from_array(images), workers));
          },
          py::arg("images"), py::arg("workers") = 0,
          "images: (n, 224, 224, 3) uint8 -> (n, feature_dim) float64");

  // ---- uncertainty ----
  m.def(
      "mc_predict",
      [](const ClassifierParams& params,
         const py::array_t<double, py::array::c_style | py::array::forcecast>& features,
         int n_passes, std::uint64_t seed) {
        const McRun run = mc_predict(params, matrix_from_array(features), n_passes, seed);
        py::array_t<double> out({run.n_passes, run.batch, run.classes});
        std::copy(run.predictions.begin(), run.predictions.end(), out.mutable_data());
        return out;
      },
      py::arg("classifier"), py::arg("features"), py::arg("n_passes") = 100,
      py::arg("seed") = 0);

  m.def(
      "mc_summarize",
      [](const py::array_t<double, py::array::c_style | py::array::forcecast>& predictions) {
        if (predictions.ndim() != 3)
          throw ValidationError("expected an (N, n, classes) array");
        McRun run;
        run.n_passes = static_cast<int>(predictions.shape(0));
        run.batch = static_cast<int>(predictions.shape(1));
        run.classes = static_cast<int>(predictions.shape(2));
        run.predictions.assign(predictions.data(), predictions.data() + predictions.size());
        const McSummary s = summarize(run);

        py::array_t<double> mean({s.batch, s.classes});
        std::copy(s.mean.begin(), s.mean.end(), mean.mutable_data());
        py::array_t<double> variance({s.batch, s.classes});
        std::copy(s.variance.begin(), s.variance.end(), variance.mutable_data());
        py::array_t<int> votes({s.batch, s.classes});
        std::copy(s.votes.begin(), s.votes.end(), votes.mutable_data());
        py::array_t<int> predicted(s.batch);
        std::copy(s.predicted_class.begin(), s.predicted_class.end(),
                  predicted.mutable_data());
        const std::vector<int> majority = majority_vote(s);
        py::array_t<int> majority_arr(s.batch);
        std::copy(majority.begin(), majority.end(), majority_arr.mutable_data());

        py::dict d;
        d["mean"] = mean;
        d["variance"] = variance;
        d["votes"] = votes;
        d["predicted_class"] = predicted;
        d["majority"] = majority_arr;
        return d;
      },
      py::arg("predictions"));

  m.def(
      "flag_difficult",
      [](const py::array_t<double, py::array::c_style | py::array::forcecast>& predictions,
         const std::vector<int>& labels, double tau_confidence, double tau_margin) {
        if (predictions.ndim() != 3)
          throw ValidationError("expected an (N, n, classes) array");
        McRun run;
        run.n_passes = static_cast<int>(predictions.shape(0));
        run.batch = static_cast<int>(predictions.shape(1));
        run.classes = static_cast<int>(predictions.shape(2));
        run.predictions.assign(predictions.data(), predictions.data() + predictions.size());
        const McSummary s = summarize(run);
        std::vector<std::string> flags;
        for (const DifficultyFlag f :
             flag_difficult(s, labels, FlagThresholds{tau_confidence, tau_margin}))
          flags.push_back(flag_to_string(f));
        return flags;
      },
      py::arg("predictions"), py::arg("labels"), py::arg("tau_confidence") = 0.7,
      py::arg("tau_margin") = 0.2);
}
