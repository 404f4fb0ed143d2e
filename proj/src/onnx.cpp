#include "foram/onnx.hpp"

#include <algorithm>
#include <cstring>

#include "foram/util.hpp"

namespace foram {

namespace {

// Protobuf wire types.
constexpr int kWireVarint = 0;
constexpr int kWireFixed64 = 1;
constexpr int kWireLen = 2;
constexpr int kWireFixed32 = 5;

struct Cursor {
  const std::uint8_t* p;
  const std::uint8_t* end;

  bool done() const { return p >= end; }
};

[[noreturn]] void malformed(const char* what) {
  throw RuntimeFailure(std::string("malformed ONNX file: ") + what);
}

std::uint64_t read_varint(Cursor& c) {
  std::uint64_t value = 0;
  int shift = 0;
  while (!c.done()) {
    const std::uint8_t byte = *c.p++;
    value |= static_cast<std::uint64_t>(byte & 0x7f) << shift;
    if ((byte & 0x80) == 0) return value;
    shift += 7;
    if (shift >= 64) malformed("varint overflow");
  }
  malformed("truncated varint");
}

float read_fixed32_float(Cursor& c) {
  if (c.end - c.p < 4) malformed("truncated fixed32");
  float v;
  std::memcpy(&v, c.p, 4);
  c.p += 4;
  return v;
}

double read_fixed64_double(Cursor& c) {
  if (c.end - c.p < 8) malformed("truncated fixed64");
  double v;
  std::memcpy(&v, c.p, 8);
  c.p += 8;
  return v;
}

std::string_view read_len(Cursor& c) {
  const std::uint64_t n = read_varint(c);
  if (static_cast<std::uint64_t>(c.end - c.p) < n) malformed("truncated length-delimited field");
  std::string_view out(reinterpret_cast<const char*>(c.p), n);
  c.p += n;
  return out;
}

void skip_field(Cursor& c, int wire) {
  switch (wire) {
    case kWireVarint: read_varint(c); break;
    case kWireFixed64:
      if (c.end - c.p < 8) malformed("truncated fixed64");
      c.p += 8;
      break;
    case kWireLen: read_len(c); break;
    case kWireFixed32:
      if (c.end - c.p < 4) malformed("truncated fixed32");
      c.p += 4;
      break;
    default: malformed("unsupported wire type");
  }
}

Cursor sub(std::string_view bytes) {
  return Cursor{reinterpret_cast<const std::uint8_t*>(bytes.data()),
                reinterpret_cast<const std::uint8_t*>(bytes.data() + bytes.size())};
}

// Repeated int64: either one varint or a packed block.
void read_ints(Cursor& c, int wire, std::vector<std::int64_t>& out) {
  if (wire == kWireVarint) {
    out.push_back(static_cast<std::int64_t>(read_varint(c)));
  } else if (wire == kWireLen) {
    Cursor inner = sub(read_len(c));
    while (!inner.done()) out.push_back(static_cast<std::int64_t>(read_varint(inner)));
  } else {
    malformed("unexpected wire type for int list");
  }
}

void read_floats(Cursor& c, int wire, std::vector<float>& out) {
  if (wire == kWireFixed32) {
    out.push_back(read_fixed32_float(c));
  } else if (wire == kWireLen) {
    Cursor inner = sub(read_len(c));
    while (!inner.done()) out.push_back(read_fixed32_float(inner));
  } else {
    malformed("unexpected wire type for float list");
  }
}

OnnxAttribute parse_attribute(std::string_view bytes) {
  OnnxAttribute attr;
  Cursor c = sub(bytes);
  while (!c.done()) {
    const std::uint64_t key = read_varint(c);
    const int field = static_cast<int>(key >> 3);
    const int wire = static_cast<int>(key & 7);
    switch (field) {
      case 1: attr.name = std::string(read_len(c)); break;
      case 2: attr.f = read_fixed32_float(c); break;
      case 3: attr.i = static_cast<std::int64_t>(read_varint(c)); break;
      case 4: attr.s = std::string(read_len(c)); break;
      case 7: read_floats(c, wire, attr.floats); break;
      case 8: read_ints(c, wire, attr.ints); break;
      default: skip_field(c, wire);
    }
  }
  return attr;
}

OnnxNode parse_node(std::string_view bytes) {
  OnnxNode node;
  Cursor c = sub(bytes);
  while (!c.done()) {
    const std::uint64_t key = read_varint(c);
    const int field = static_cast<int>(key >> 3);
    const int wire = static_cast<int>(key & 7);
    switch (field) {
      case 1: node.inputs.emplace_back(read_len(c)); break;
      case 2: node.outputs.emplace_back(read_len(c)); break;
      case 3: node.name = std::string(read_len(c)); break;
      case 4: node.op_type = std::string(read_len(c)); break;
      case 5: node.attributes.push_back(parse_attribute(read_len(c))); break;
      default: skip_field(c, wire);
    }
  }
  return node;
}

// TensorProto data types used here.
constexpr std::int64_t kFloat32 = 1;
constexpr std::int64_t kFloat64 = 11;

OnnxTensor parse_tensor(std::string_view bytes) {
  OnnxTensor tensor;
  std::int64_t data_type = 0;
  std::string raw;
  std::vector<float> f32;
  std::vector<double> f64;

  Cursor c = sub(bytes);
  while (!c.done()) {
    const std::uint64_t key = read_varint(c);
    const int field = static_cast<int>(key >> 3);
    const int wire = static_cast<int>(key & 7);
    switch (field) {
      case 1: read_ints(c, wire, tensor.dims); break;
      case 2: data_type = static_cast<std::int64_t>(read_varint(c)); break;
      case 4: read_floats(c, wire, f32); break;
      case 8: tensor.name = std::string(read_len(c)); break;
      case 9: raw = std::string(read_len(c)); break;
      case 10:
        if (wire == kWireFixed64) {
          f64.push_back(read_fixed64_double(c));
        } else if (wire == kWireLen) {
          Cursor inner = sub(read_len(c));
          while (!inner.done()) f64.push_back(read_fixed64_double(inner));
        } else {
          malformed("unexpected wire type for double_data");
        }
        break;
      default: skip_field(c, wire);
    }
  }

  if (!raw.empty()) {
    if (data_type == kFloat32) {
      if (raw.size() % 4 != 0) malformed("raw float32 data size");
      tensor.values.resize(raw.size() / 4);
      for (std::size_t i = 0; i < tensor.values.size(); ++i) {
        float v;
        std::memcpy(&v, raw.data() + i * 4, 4);
        tensor.values[i] = static_cast<double>(v);
      }
    } else if (data_type == kFloat64) {
      if (raw.size() % 8 != 0) malformed("raw float64 data size");
      tensor.values.resize(raw.size() / 8);
      std::memcpy(tensor.values.data(), raw.data(), raw.size());
    } else {
      malformed("unsupported tensor data type");
    }
  } else if (!f32.empty()) {
    tensor.values.assign(f32.begin(), f32.end());
  } else if (!f64.empty()) {
    tensor.values = std::move(f64);
  }
  return tensor;
}

// ValueInfoProto -> name and (possibly symbolic) tensor dims.
void parse_value_info(std::string_view bytes, std::string& name,
                      std::vector<std::int64_t>& dims) {
  Cursor c = sub(bytes);
  while (!c.done()) {
    const std::uint64_t key = read_varint(c);
    const int field = static_cast<int>(key >> 3);
    const int wire = static_cast<int>(key & 7);
    if (field == 1) {
      name = std::string(read_len(c));
    } else if (field == 2) {
      Cursor type_c = sub(read_len(c));
      while (!type_c.done()) {
        const std::uint64_t tk = read_varint(type_c);
        if (static_cast<int>(tk >> 3) == 1 && static_cast<int>(tk & 7) == kWireLen) {
          Cursor tt = sub(read_len(type_c));
          while (!tt.done()) {
            const std::uint64_t ttk = read_varint(tt);
            if (static_cast<int>(ttk >> 3) == 2 && static_cast<int>(ttk & 7) == kWireLen) {
              Cursor shape = sub(read_len(tt));
              while (!shape.done()) {
                const std::uint64_t sk = read_varint(shape);
                if (static_cast<int>(sk >> 3) == 1 && static_cast<int>(sk & 7) == kWireLen) {
                  Cursor dim = sub(read_len(shape));
                  std::int64_t value = -1;  // symbolic unless dim_value present
                  while (!dim.done()) {
                    const std::uint64_t dk = read_varint(dim);
                    if (static_cast<int>(dk >> 3) == 1) {
                      value = static_cast<std::int64_t>(read_varint(dim));
                    } else {
                      skip_field(dim, static_cast<int>(dk & 7));
                    }
                  }
                  dims.push_back(value);
                } else {
                  skip_field(shape, static_cast<int>(sk & 7));
                }
              }
            } else {
              skip_field(tt, static_cast<int>(ttk & 7));
            }
          }
        } else {
          skip_field(type_c, static_cast<int>(tk & 7));
        }
      }
    } else {
      skip_field(c, wire);
    }
  }
}

void parse_graph(std::string_view bytes, OnnxModel& model) {
  struct InputInfo {
    std::string name;
    std::vector<std::int64_t> dims;
  };
  std::vector<InputInfo> declared_inputs;

  Cursor c = sub(bytes);
  while (!c.done()) {
    const std::uint64_t key = read_varint(c);
    const int field = static_cast<int>(key >> 3);
    const int wire = static_cast<int>(key & 7);
    switch (field) {
      case 1: model.nodes.push_back(parse_node(read_len(c))); break;
      case 5: {
        OnnxTensor t = parse_tensor(read_len(c));
        const std::string tensor_name = t.name;
        model.initializers[tensor_name] = std::move(t);
        break;
      }
      case 11: {
        InputInfo info;
        parse_value_info(read_len(c), info.name, info.dims);
        declared_inputs.push_back(std::move(info));
        break;
      }
      default: skip_field(c, wire);
    }
  }

  // Older exports list initializers among graph inputs; the real input is the
  // one without an initializer.
  for (const auto& info : declared_inputs) {
    if (model.initializers.count(info.name)) continue;
    model.input_name = info.name;
    model.input_dims = info.dims;
    break;
  }
}

std::int64_t attr_int(const OnnxNode& node, std::string_view name, std::int64_t fallback) {
  const OnnxAttribute* attr = node.find_attribute(name);
  return attr ? attr->i : fallback;
}

std::vector<std::int64_t> attr_ints(const OnnxNode& node, std::string_view name,
                                    std::vector<std::int64_t> fallback) {
  const OnnxAttribute* attr = node.find_attribute(name);
  return attr ? attr->ints : fallback;
}

}  // namespace

const OnnxAttribute* OnnxNode::find_attribute(std::string_view attr_name) const {
  for (const OnnxAttribute& attr : attributes)
    if (attr.name == attr_name) return &attr;
  return nullptr;
}

OnnxModel OnnxModel::parse(std::string_view bytes) {
  OnnxModel model;
  Cursor c = sub(bytes);
  bool saw_graph = false;
  while (!c.done()) {
    const std::uint64_t key = read_varint(c);
    const int field = static_cast<int>(key >> 3);
    const int wire = static_cast<int>(key & 7);
    if (field == 1 && wire == kWireVarint) {
      model.ir_version = static_cast<std::int64_t>(read_varint(c));
    } else if (field == 7 && wire == kWireLen) {
      parse_graph(read_len(c), model);
      saw_graph = true;
    } else {
      skip_field(c, wire);
    }
  }
  if (!saw_graph || model.nodes.empty()) malformed("no graph");
  if (model.input_name.empty()) malformed("no graph input");
  return model;
}

OnnxModel OnnxModel::load_file(const std::string& path) {
  return parse(read_file(path));
}

namespace {

Volume tensor_as_input(const Volume& v) { return v; }

ConvLayer conv_layer_from_node(const OnnxModel& model, const OnnxNode& node) {
  if (node.inputs.size() < 2) malformed("Conv node without weights");
  const auto wit = model.initializers.find(node.inputs[1]);
  if (wit == model.initializers.end())
    throw RuntimeFailure("ONNX: Conv weights are not an initializer: " + node.inputs[1]);
  const OnnxTensor& w = wit->second;
  if (w.dims.size() != 4) throw RuntimeFailure("ONNX: Conv weights must be 4-D");

  ConvLayer layer;
  layer.out_channels = static_cast<int>(w.dims[0]);
  layer.in_channels = static_cast<int>(w.dims[1]);
  layer.weights = w.values;

  if (attr_int(node, "group", 1) != 1)
    throw RuntimeFailure("ONNX: grouped convolutions are not supported");
  for (std::int64_t d : attr_ints(node, "dilations", {1, 1}))
    if (d != 1) throw RuntimeFailure("ONNX: dilated convolutions are not supported");

  const auto kernel = attr_ints(node, "kernel_shape", {w.dims[2], w.dims[3]});
  const auto strides = attr_ints(node, "strides", {1, 1});
  const auto pads = attr_ints(node, "pads", {0, 0, 0, 0});
  if (kernel.size() != 2 || strides.size() != 2 || pads.size() != 4)
    throw RuntimeFailure("ONNX: only 2-D convolutions are supported");

  layer.spec.kernel_h = static_cast<int>(kernel[0]);
  layer.spec.kernel_w = static_cast<int>(kernel[1]);
  layer.spec.stride_h = static_cast<int>(strides[0]);
  layer.spec.stride_w = static_cast<int>(strides[1]);
  layer.spec.pad_top = static_cast<int>(pads[0]);
  layer.spec.pad_left = static_cast<int>(pads[1]);
  layer.spec.pad_bottom = static_cast<int>(pads[2]);
  layer.spec.pad_right = static_cast<int>(pads[3]);

  const std::size_t expected = static_cast<std::size_t>(layer.out_channels) *
                               layer.in_channels * layer.spec.kernel_h * layer.spec.kernel_w;
  if (layer.weights.size() != expected)
    throw RuntimeFailure("ONNX: Conv weight data does not match its dims");

  if (node.inputs.size() >= 3 && !node.inputs[2].empty()) {
    const auto bit = model.initializers.find(node.inputs[2]);
    if (bit == model.initializers.end())
      throw RuntimeFailure("ONNX: Conv bias is not an initializer");
    layer.bias = bit->second.values;
    if (layer.bias.size() != static_cast<std::size_t>(layer.out_channels))
      throw RuntimeFailure("ONNX: Conv bias size mismatch");
  } else {
    layer.bias.assign(static_cast<std::size_t>(layer.out_channels), 0.0);
  }
  return layer;
}

}  // namespace

std::vector<double> onnx_extract_features(const OnnxModel& model, const Volume& input) {
  // Declared input shape must be compatible with (3, 224, 224), batch 1.
  if (model.input_dims.size() == 4) {
    const auto& d = model.input_dims;
    if ((d[0] > 1) || (d[1] > 0 && d[1] != input.channels) ||
        (d[2] > 0 && d[2] != input.height) || (d[3] > 0 && d[3] != input.width))
      throw RuntimeFailure("ONNX: graph input shape does not match 1x3x224x224");
  }

  int last_pool = -1;
  for (std::size_t i = 0; i < model.nodes.size(); ++i)
    if (model.nodes[i].op_type == "MaxPool") last_pool = static_cast<int>(i);
  if (last_pool < 0) throw RuntimeFailure("ONNX: graph has no MaxPool node");

  for (int i = 0; i <= last_pool; ++i) {
    const std::string& op = model.nodes[static_cast<std::size_t>(i)].op_type;
    if (op != "Conv" && op != "Relu" && op != "MaxPool")
      throw RuntimeFailure("ONNX: unsupported operator before the last MaxPool: " + op);
  }

  // Consumer counts let intermediate activations be freed as soon as possible.
  std::map<std::string, int> consumers;
  for (int i = 0; i <= last_pool; ++i)
    for (const std::string& in : model.nodes[static_cast<std::size_t>(i)].inputs)
      if (!model.initializers.count(in)) consumers[in] += 1;

  std::map<std::string, Volume> values;
  values[model.input_name] = tensor_as_input(input);

  auto take = [&](const std::string& name) -> const Volume& {
    const auto it = values.find(name);
    if (it == values.end()) throw RuntimeFailure("ONNX: missing activation: " + name);
    return it->second;
  };
  auto release = [&](const std::string& name) {
    if (--consumers[name] <= 0) values.erase(name);
  };

  Volume out;
  for (int i = 0; i <= last_pool; ++i) {
    const OnnxNode& node = model.nodes[static_cast<std::size_t>(i)];
    if (node.outputs.empty()) malformed("node without outputs");

    if (node.op_type == "Conv") {
      const ConvLayer layer = conv_layer_from_node(model, node);
      out = conv2d_forward(layer, take(node.inputs[0]));
      release(node.inputs[0]);
    } else if (node.op_type == "Relu") {
      out = take(node.inputs[0]);
      release(node.inputs[0]);
      relu_inplace(out);
    } else {  // MaxPool
      const auto kernel = attr_ints(node, "kernel_shape", {2, 2});
      const auto strides = attr_ints(node, "strides", {kernel[0], kernel[1]});
      const auto pads = attr_ints(node, "pads", {0, 0, 0, 0});
      if (kernel.size() != 2 || kernel[0] != kernel[1] || strides[0] != strides[1] ||
          pads[0] != pads[1] || pads[0] != pads[2] || pads[0] != pads[3])
        throw RuntimeFailure("ONNX: only square MaxPool windows are supported");
      if (attr_int(node, "ceil_mode", 0) != 0)
        throw RuntimeFailure("ONNX: MaxPool ceil_mode is not supported");
      PoolSpec spec;
      spec.kernel = static_cast<int>(kernel[0]);
      spec.stride = static_cast<int>(strides[0]);
      spec.pad = static_cast<int>(pads[0]);
      out = maxpool_forward(take(node.inputs[0]), spec);
      release(node.inputs[0]);
    }

    if (i < last_pool) values[node.outputs[0]] = std::move(out);
  }

  if (out.channels != 512 || out.height != 7 || out.width != 7)
    throw RuntimeFailure("ONNX: truncated graph output is " + std::to_string(out.channels) +
                         "x" + std::to_string(out.height) + "x" + std::to_string(out.width) +
                         ", expected 512x7x7");

  std::vector<double> features(out.size());
  std::size_t f = 0;
  for (int h = 0; h < out.height; ++h)
    for (int w = 0; w < out.width; ++w)
      for (int c = 0; c < out.channels; ++c) features[f++] = out.at(c, h, w);
  return features;
}

}  // namespace foram
