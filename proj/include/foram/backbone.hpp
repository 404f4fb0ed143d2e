#pragma once

#include <memory>
#include <string>
#include <vector>

#include "foram/image.hpp"
#include "foram/nn.hpp"
#include "foram/onnx.hpp"
#include "foram/smallconvnet.hpp"

namespace foram {

enum class BackboneKind { pretrained_onnx, builtin_small };

BackboneKind backbone_kind_from_string(const std::string& name);
std::string backbone_kind_to_string(BackboneKind kind);

// Immutable after construction; extraction never mutates a handle.
struct BackboneHandle {
  BackboneKind kind = BackboneKind::builtin_small;
  std::shared_ptr<const OnnxModel> onnx;
  std::shared_ptr<const SmallConvNet> scn;
  std::string source;
  std::uint64_t content_hash = 0;

  int feature_dim() const;
};

// Loads a user-supplied interchange model (operator set limited to conv,
// relu, maxpool). Inference only: this kind can never be fine-tuned.
BackboneHandle load_pretrained_backbone(const std::string& onnx_path);

BackboneHandle make_builtin_handle(SmallConvNet net, const std::string& source);

std::uint64_t scn_content_hash(const SmallConvNet& net);

// Scales to [0, 1]; the pretrained kind additionally centers with the
// standard per-channel normalization constants (0.485, 0.456, 0.406) /
// (0.229, 0.224, 0.225).
Volume preprocess(const SpecimenImage& img, BackboneKind kind);

// Size-agnostic variant of the same normalization (used for reduced-size
// training crops).
Volume to_volume(const Image8& img, BackboneKind kind);

std::vector<double> extract_features_one(const BackboneHandle& handle,
                                         const SpecimenImage& img);

// Batch extraction, parallel over images (workers <= 0 uses all cores).
// Output row order matches the input order regardless of scheduling.
Matrix extract_features(const BackboneHandle& handle,
                        const std::vector<SpecimenImage>& images, int workers = 0);

}  // namespace foram
