#include "foram/backbone.hpp"

#include "foram/util.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace foram {

BackboneKind backbone_kind_from_string(const std::string& name) {
  if (name == "pretrained_onnx") return BackboneKind::pretrained_onnx;
  if (name == "builtin_small") return BackboneKind::builtin_small;
  throw ValidationError("unknown backbone kind: " + name);
}

std::string backbone_kind_to_string(BackboneKind kind) {
  return kind == BackboneKind::pretrained_onnx ? "pretrained_onnx" : "builtin_small";
}

int BackboneHandle::feature_dim() const {
  return kind == BackboneKind::pretrained_onnx ? 7 * 7 * 512 : scn->feature_dim();
}

BackboneHandle load_pretrained_backbone(const std::string& onnx_path) {
  BackboneHandle handle;
  handle.kind = BackboneKind::pretrained_onnx;
  handle.onnx = std::make_shared<OnnxModel>(OnnxModel::load_file(onnx_path));
  handle.source = onnx_path;
  handle.content_hash = hash_file(onnx_path);
  return handle;
}

std::uint64_t scn_content_hash(const SmallConvNet& net) {
  std::uint64_t h = fnv1a64(&net.init_seed, sizeof(net.init_seed));
  for (const ConvLayer& block : net.blocks) {
    h = fnv1a64(block.weights.data(), block.weights.size() * sizeof(double), h);
    h = fnv1a64(block.bias.data(), block.bias.size() * sizeof(double), h);
  }
  return h;
}

BackboneHandle make_builtin_handle(SmallConvNet net, const std::string& source) {
  BackboneHandle handle;
  handle.kind = BackboneKind::builtin_small;
  handle.scn = std::make_shared<SmallConvNet>(std::move(net));
  handle.source = source;
  handle.content_hash = scn_content_hash(*handle.scn);
  return handle;
}

Volume to_volume(const Image8& img, BackboneKind kind) {
  static constexpr double kMean[3] = {0.485, 0.456, 0.406};
  static constexpr double kStd[3] = {0.229, 0.224, 0.225};

  Volume out(3, img.height, img.width);
  for (int r = 0; r < img.height; ++r) {
    for (int c = 0; c < img.width; ++c) {
      for (int ch = 0; ch < 3; ++ch) {
        double v = img.at(r, c, ch) / 255.0;
        if (kind == BackboneKind::pretrained_onnx) v = (v - kMean[ch]) / kStd[ch];
        out.at(ch, r, c) = v;
      }
    }
  }
  return out;
}

Volume preprocess(const SpecimenImage& img, BackboneKind kind) {
  if (img.pixels.height != kCropSize || img.pixels.width != kCropSize)
    throw ValidationError("preprocess: image must be 224x224x3");
  return to_volume(img.pixels, kind);
}

std::vector<double> extract_features_one(const BackboneHandle& handle,
                                         const SpecimenImage& img) {
  const Volume input = preprocess(img, handle.kind);
  if (handle.kind == BackboneKind::pretrained_onnx)
    return onnx_extract_features(*handle.onnx, input);
  return scn_features(*handle.scn, input);
}

Matrix extract_features(const BackboneHandle& handle,
                        const std::vector<SpecimenImage>& images, int workers) {
  const int dim = handle.feature_dim();
  Matrix out(static_cast<int>(images.size()), dim);
  std::exception_ptr failure;

#ifdef _OPENMP
  if (workers <= 0) workers = omp_get_max_threads();
#pragma omp parallel for schedule(dynamic) num_threads(workers)
#endif
  for (std::size_t i = 0; i < images.size(); ++i) {
    try {
      const std::vector<double> features = extract_features_one(handle, images[i]);
      if (static_cast<int>(features.size()) != dim)
        throw RuntimeFailure("backbone produced an unexpected feature length");
      std::copy(features.begin(), features.end(),
                out.data.begin() + i * static_cast<std::size_t>(dim));
    } catch (...) {
#ifdef _OPENMP
#pragma omp critical
#endif
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

}  // namespace foram
