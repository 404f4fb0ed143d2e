#include "foram/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include <json.hpp>

#include "foram/util.hpp"

namespace foram {

namespace {

constexpr char kMagic[8] = {'F', 'O', 'R', 'A', 'M', 'C', 'K', '1'};

std::string activation_name(Activation a) {
  switch (a) {
    case Activation::relu: return "relu";
    case Activation::softmax: return "softmax";
    case Activation::none: return "none";
  }
  return "none";
}

Activation activation_from_name(const std::string& name) {
  if (name == "relu") return Activation::relu;
  if (name == "softmax") return Activation::softmax;
  if (name == "none") return Activation::none;
  throw RuntimeFailure("checkpoint: unknown activation " + name);
}

void append_doubles(std::string& out, const std::vector<double>& values) {
  const std::size_t offset = out.size();
  out.resize(offset + values.size() * sizeof(double));
  std::memcpy(out.data() + offset, values.data(), values.size() * sizeof(double));
}

void write_container(const std::string& path, const nlohmann::json& header,
                     const std::string& payload) {
  const std::string header_str = header.dump();
  std::string bytes;
  bytes.reserve(sizeof(kMagic) + 4 + header_str.size() + payload.size());
  bytes.append(kMagic, sizeof(kMagic));
  const std::uint32_t len = static_cast<std::uint32_t>(header_str.size());
  bytes.append(reinterpret_cast<const char*>(&len), 4);
  bytes.append(header_str);
  bytes.append(payload);
  write_file_atomic(path, bytes);
}

struct Container {
  nlohmann::json header;
  std::string payload;
  std::size_t cursor = 0;

  std::vector<double> take_doubles(std::size_t count) {
    if (cursor + count * sizeof(double) > payload.size())
      throw RuntimeFailure("checkpoint: truncated parameter data");
    std::vector<double> out(count);
    std::memcpy(out.data(), payload.data() + cursor, count * sizeof(double));
    cursor += count * sizeof(double);
    return out;
  }
};

Container read_container(const std::string& path, const std::string& expected_kind) {
  const std::string bytes = read_file(path);
  if (bytes.size() < sizeof(kMagic) + 4 ||
      std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0)
    throw RuntimeFailure("not a foram checkpoint: " + path);
  std::uint32_t len = 0;
  std::memcpy(&len, bytes.data() + sizeof(kMagic), 4);
  if (bytes.size() < sizeof(kMagic) + 4 + len)
    throw RuntimeFailure("checkpoint header truncated: " + path);

  Container container;
  try {
    container.header =
        nlohmann::json::parse(bytes.substr(sizeof(kMagic) + 4, len));
  } catch (const nlohmann::json::exception& e) {
    throw RuntimeFailure(std::string("checkpoint header is not valid JSON: ") + e.what());
  }
  if (container.header.value("format_version", 0) != 1)
    throw RuntimeFailure("unsupported checkpoint version in " + path);
  if (container.header.value("kind", "") != expected_kind)
    throw RuntimeFailure("checkpoint kind mismatch: expected " + expected_kind + " in " + path);
  container.payload = bytes.substr(sizeof(kMagic) + 4 + len);
  return container;
}

}  // namespace

void save_classifier(const std::string& path, const ClassifierParams& params) {
  nlohmann::json header;
  header["format_version"] = 1;
  header["kind"] = "classifier_head";
  header["dropout_rate"] = params.dropout_rate;
  header["seed"] = params.rng_seed;
  header["class_names"] = params.class_names;
  header["flatten_order"] = "hwc";
  auto& layers = header["layers"] = nlohmann::json::array();
  std::string payload;
  for (const DenseLayer& layer : params.layers) {
    layers.push_back({{"in", layer.in_dim},
                      {"out", layer.out_dim},
                      {"activation", activation_name(layer.activation)}});
    append_doubles(payload, layer.weights);
    append_doubles(payload, layer.bias);
  }
  write_container(path, header, payload);
}

ClassifierParams load_classifier(const std::string& path) {
  Container container = read_container(path, "classifier_head");
  ClassifierParams params;
  params.dropout_rate = container.header.at("dropout_rate").get<double>();
  params.rng_seed = container.header.at("seed").get<std::uint64_t>();
  params.class_names = container.header.at("class_names").get<std::vector<std::string>>();
  for (const auto& spec : container.header.at("layers")) {
    DenseLayer layer;
    layer.in_dim = spec.at("in").get<int>();
    layer.out_dim = spec.at("out").get<int>();
    layer.activation = activation_from_name(spec.at("activation").get<std::string>());
    layer.weights =
        container.take_doubles(static_cast<std::size_t>(layer.in_dim) * layer.out_dim);
    layer.bias = container.take_doubles(static_cast<std::size_t>(layer.out_dim));
    params.layers.push_back(std::move(layer));
  }
  if (params.layers.empty()) throw RuntimeFailure("checkpoint has no layers: " + path);
  return params;
}

void save_backbone(const std::string& path, const SmallConvNet& net) {
  nlohmann::json header;
  header["format_version"] = 1;
  header["kind"] = "builtin_backbone";
  header["seed"] = net.init_seed;
  header["flatten_order"] = "hwc";
  auto& blocks = header["blocks"] = nlohmann::json::array();
  std::string payload;
  for (const ConvLayer& block : net.blocks) {
    blocks.push_back({{"in", block.in_channels},
                      {"out", block.out_channels},
                      {"kernel", block.spec.kernel_h}});
    append_doubles(payload, block.weights);
    append_doubles(payload, block.bias);
  }
  write_container(path, header, payload);
}

SmallConvNet load_backbone(const std::string& path) {
  Container container = read_container(path, "builtin_backbone");
  SmallConvNet net;
  net.init_seed = container.header.at("seed").get<std::uint64_t>();
  for (const auto& spec : container.header.at("blocks")) {
    ConvLayer block;
    block.in_channels = spec.at("in").get<int>();
    block.out_channels = spec.at("out").get<int>();
    block.spec = ConvSpec{};
    block.weights = container.take_doubles(static_cast<std::size_t>(block.out_channels) *
                                           block.in_channels * 9);
    block.bias = container.take_doubles(static_cast<std::size_t>(block.out_channels));
    net.blocks.push_back(std::move(block));
  }
  if (net.blocks.size() != SmallConvNet::kBlockCount)
    throw RuntimeFailure("backbone checkpoint must have 5 blocks: " + path);
  return net;
}

}  // namespace foram
