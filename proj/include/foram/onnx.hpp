#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "foram/conv.hpp"

namespace foram {

struct OnnxAttribute {
  std::string name;
  std::int64_t i = 0;
  float f = 0.0f;
  std::string s;
  std::vector<std::int64_t> ints;
  std::vector<float> floats;
};

struct OnnxNode {
  std::string op_type;
  std::string name;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  std::vector<OnnxAttribute> attributes;

  const OnnxAttribute* find_attribute(std::string_view attr_name) const;
};

struct OnnxTensor {
  std::string name;
  std::vector<std::int64_t> dims;
  std::vector<double> values;
};

// Minimal ONNX reader for inference-only feature extraction. Understands just
// enough of the protobuf wire format to recover the graph: nodes, float
// initializers and the graph input declaration.
struct OnnxModel {
  std::int64_t ir_version = 0;
  std::vector<OnnxNode> nodes;
  std::map<std::string, OnnxTensor> initializers;
  std::string input_name;
  std::vector<std::int64_t> input_dims;  // -1 for symbolic dimensions

  static OnnxModel parse(std::string_view bytes);
  static OnnxModel load_file(const std::string& path);
};

// Executes the graph up to and including its last MaxPool node (the operator
// set on that path must be Conv / Relu / MaxPool), verifies the 512x7x7
// output shape and flattens it in (height, width, channel) order to 25088
// values.
std::vector<double> onnx_extract_features(const OnnxModel& model, const Volume& input);

}  // namespace foram
