// Minimal ONNX protobuf writer for test fixtures.
#pragma once

#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

namespace foram::testing {

class ProtoWriter {
 public:
  void varint(std::uint64_t v) {
    while (v >= 0x80) {
      bytes_.push_back(static_cast<char>((v & 0x7f) | 0x80));
      v >>= 7;
    }
    bytes_.push_back(static_cast<char>(v));
  }

  void key(int field, int wire) { varint(static_cast<std::uint64_t>(field) << 3 | wire); }

  void varint_field(int field, std::uint64_t v) {
    key(field, 0);
    varint(v);
  }

  void bytes_field(int field, const std::string& s) {
    key(field, 2);
    varint(s.size());
    bytes_.append(s);
  }

  void message_field(int field, const ProtoWriter& inner) { bytes_field(field, inner.str()); }

  const std::string& str() const { return bytes_; }

 private:
  std::string bytes_;
};

struct OnnxConvSpec {
  std::string input, output, weight_name, bias_name;
  int out_ch, in_ch, kernel = 3, stride = 1, pad = 1;
  std::vector<float> weights, bias;
};

inline std::string float_tensor(const std::string& name, const std::vector<std::int64_t>& dims,
                                const std::vector<float>& values) {
  ProtoWriter t;
  for (std::int64_t d : dims) t.varint_field(1, static_cast<std::uint64_t>(d));
  t.varint_field(2, 1);  // data_type FLOAT
  t.bytes_field(8, name);
  std::string raw(values.size() * 4, '\0');
  std::memcpy(raw.data(), values.data(), raw.size());
  t.bytes_field(9, raw);
  return t.str();
}

inline std::string int_attribute(const std::string& name, std::int64_t value) {
  ProtoWriter a;
  a.bytes_field(1, name);
  a.varint_field(3, static_cast<std::uint64_t>(value));
  a.varint_field(20, 2);  // AttributeType INT
  return a.str();
}

inline std::string ints_attribute(const std::string& name,
                                  const std::vector<std::int64_t>& values) {
  ProtoWriter a;
  a.bytes_field(1, name);
  for (std::int64_t v : values) a.varint_field(8, static_cast<std::uint64_t>(v));
  a.varint_field(20, 7);  // AttributeType INTS
  return a.str();
}

inline std::string node(const std::string& op, const std::vector<std::string>& inputs,
                        const std::vector<std::string>& outputs,
                        const std::vector<std::string>& attributes = {}) {
  ProtoWriter n;
  for (const std::string& in : inputs) n.bytes_field(1, in);
  for (const std::string& out : outputs) n.bytes_field(2, out);
  n.bytes_field(4, op);
  for (const std::string& attr : attributes) n.bytes_field(5, attr);
  return n.str();
}

inline std::string conv_node(const OnnxConvSpec& spec) {
  return node("Conv", {spec.input, spec.weight_name, spec.bias_name}, {spec.output},
              {ints_attribute("kernel_shape", {spec.kernel, spec.kernel}),
               ints_attribute("strides", {spec.stride, spec.stride}),
               ints_attribute("pads", {spec.pad, spec.pad, spec.pad, spec.pad}),
               int_attribute("group", 1)});
}

inline std::string maxpool_node(const std::string& input, const std::string& output,
                                int kernel = 2, int stride = 2) {
  return node("MaxPool", {input}, {output},
              {ints_attribute("kernel_shape", {kernel, kernel}),
               ints_attribute("strides", {stride, stride}),
               ints_attribute("pads", {0, 0, 0, 0})});
}

inline std::string value_info(const std::string& name, const std::vector<std::int64_t>& dims) {
  ProtoWriter shape;
  for (std::int64_t d : dims) {
    ProtoWriter dim;
    if (d > 0) dim.varint_field(1, static_cast<std::uint64_t>(d));
    shape.message_field(1, dim);
  }
  ProtoWriter tensor_type;
  tensor_type.varint_field(1, 1);  // elem_type FLOAT
  tensor_type.message_field(2, shape);
  ProtoWriter type;
  type.message_field(1, tensor_type);
  ProtoWriter info;
  info.bytes_field(1, name);
  info.message_field(2, type);
  return info.str();
}

// nodes + initializers -> serialized ModelProto
inline std::string onnx_model(const std::vector<std::string>& nodes,
                              const std::vector<std::string>& initializers,
                              const std::string& input_info) {
  ProtoWriter graph;
  for (const std::string& n : nodes) graph.bytes_field(1, n);
  graph.bytes_field(2, std::string("test_graph"));
  for (const std::string& t : initializers) graph.bytes_field(5, t);
  graph.bytes_field(11, input_info);

  ProtoWriter model;
  model.varint_field(1, 8);  // ir_version
  model.message_field(7, graph);
  return model.str();
}

}  // namespace foram::testing
