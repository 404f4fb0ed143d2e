#pragma once

#include <string>

#include "foram/nn.hpp"
#include "foram/smallconvnet.hpp"

namespace foram {

// Versioned binary container: magic, JSON header (dims, activations, dropout
// rate, class names, seed, flatten order), then raw little-endian float64
// parameters. Round-trips bit exactly.
void save_classifier(const std::string& path, const ClassifierParams& params);
ClassifierParams load_classifier(const std::string& path);

void save_backbone(const std::string& path, const SmallConvNet& net);
SmallConvNet load_backbone(const std::string& path);

}  // namespace foram
