#include "csocnn/nn/model_io.hpp"

#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "csocnn/error.hpp"

namespace csocnn::nn {

namespace {

constexpr std::string_view kMagic = "CSOCNN-MODEL";

struct NamedTensor {
  std::string name;
  const Tensor* tensor;
};

std::vector<NamedTensor> tensors_of(const LayerSpec& layer, const LayerParams<float>& p) {
  switch (layer.kind) {
    case LayerKind::conv2d:
    case LayerKind::dense:
      return {{"kernel", &p.weight}, {"bias", &p.bias}};
    case LayerKind::batch_norm:
      return {{"gamma", &p.weight},
              {"beta", &p.bias},
              {"moving_mean", &p.running_mean},
              {"moving_variance", &p.running_var}};
    default:
      return {};
  }
}

Tensor* slot_of(LayerParams<float>& p, const std::string& name) {
  if (name == "kernel" || name == "gamma") return &p.weight;
  if (name == "bias" || name == "beta") return &p.bias;
  if (name == "moving_mean") return &p.running_mean;
  if (name == "moving_variance") return &p.running_var;
  return nullptr;
}

void append_le(std::string& out, float v) {
  const auto bits = std::bit_cast<std::uint32_t>(v);
  for (int b = 0; b < 4; ++b) out.push_back(static_cast<char>((bits >> (8 * b)) & 0xffu));
}

float read_le(const unsigned char* p) {
  std::uint32_t bits = 0;
  for (int b = 0; b < 4; ++b) bits |= static_cast<std::uint32_t>(p[b]) << (8 * b);
  return std::bit_cast<float>(bits);
}

}  // namespace

std::string serialize_model(const Network& network,
                            const std::vector<std::string>& class_names,
                            const nlohmann::json& metadata) {
  nlohmann::json manifest;
  manifest["format"] = "csocnn-model";
  manifest["format_version"] = kModelFormatVersion;
  manifest["input_shape"] = network.input_shape();
  manifest["batch_norm"] = {{"epsilon", network.batch_norm_config().epsilon},
                            {"momentum", network.batch_norm_config().momentum},
                            {"debias", network.batch_norm_config().debias},
                            {"updates", network.batch_norm_updates()}};
  manifest["class_names"] = class_names;

  nlohmann::json layers = nlohmann::json::array();
  for (const auto& l : network.layers()) {
    layers.push_back({{"kind", to_string(l.kind)},
                      {"kernel", {l.kernel_h, l.kernel_w}},
                      {"units", l.units},
                      {"padding", to_string(l.padding)},
                      {"activation", to_string(l.activation)}});
  }
  manifest["layers"] = std::move(layers);

  std::string blob;
  nlohmann::json tensors = nlohmann::json::array();
  for (std::size_t i = 0; i < network.layers().size(); ++i) {
    for (const auto& [name, t] : tensors_of(network.layers()[i], network.params()[i])) {
      tensors.push_back({{"layer", i},
                         {"name", name},
                         {"shape", t->shape()},
                         {"offset", blob.size()},
                         {"bytes", t->size() * 4}});
      for (float v : t->data()) append_le(blob, v);
    }
  }
  manifest["tensors"] = std::move(tensors);
  manifest["blob_bytes"] = blob.size();
  manifest["metadata"] = metadata.is_null() ? nlohmann::json::object() : metadata;

  const std::string text = manifest.dump(1);
  std::string out;
  out.reserve(text.size() + blob.size() + 64);
  out += kMagic;
  out += ' ';
  out += std::to_string(kModelFormatVersion);
  out += '\n';
  out += std::to_string(text.size());
  out += '\n';
  out += text;
  out += '\n';
  out += blob;
  return out;
}

ModelFile parse_model(std::string_view bytes) {
  auto fail = [](const std::string& why) -> ModelFormatError {
    return ModelFormatError("model file: " + why);
  };

  const auto eol1 = bytes.find('\n');
  if (eol1 == std::string_view::npos || bytes.substr(0, kMagic.size()) != kMagic) {
    throw fail("missing CSOCNN-MODEL header");
  }
  const std::string version_text(bytes.substr(kMagic.size(), eol1 - kMagic.size()));
  const auto digits = version_text.find_first_not_of(' ');
  int version = -1;
  if (digits != std::string::npos) {
    const char* first = version_text.data() + digits;
    const char* last = version_text.data() + version_text.size();
    const auto [end, ec] = std::from_chars(first, last, version);
    if (ec != std::errc() || end != last) version = -1;
  }
  if (version != kModelFormatVersion) {
    throw fail("unsupported format version '" + version_text + "'");
  }
  const auto eol2 = bytes.find('\n', eol1 + 1);
  if (eol2 == std::string_view::npos) throw fail("missing manifest length");
  std::size_t manifest_len = 0;
  try {
    manifest_len = std::stoul(std::string(bytes.substr(eol1 + 1, eol2 - eol1 - 1)));
  } catch (const std::exception&) {
    throw fail("bad manifest length");
  }
  const std::size_t manifest_start = eol2 + 1;
  if (manifest_start + manifest_len + 1 > bytes.size()) throw fail("truncated manifest");

  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(bytes.substr(manifest_start, manifest_len));
  } catch (const nlohmann::json::exception& e) {
    throw fail(std::string("manifest is not valid JSON: ") + e.what());
  }
  if (bytes[manifest_start + manifest_len] != '\n') throw fail("manifest not terminated");
  const std::string_view blob = bytes.substr(manifest_start + manifest_len + 1);

  try {
    if (manifest.at("format") != "csocnn-model" ||
        manifest.at("format_version").get<int>() != kModelFormatVersion) {
      throw fail("manifest format/version mismatch");
    }
    const auto blob_bytes = manifest.at("blob_bytes").get<std::size_t>();
    if (blob.size() != blob_bytes) {
      throw fail("blob is " + std::to_string(blob.size()) + " bytes, manifest declares " +
                 std::to_string(blob_bytes));
    }

    std::vector<LayerSpec> layers;
    for (const auto& l : manifest.at("layers")) {
      LayerSpec spec;
      spec.kind = layer_kind_from_string(l.at("kind").get<std::string>());
      spec.kernel_h = l.at("kernel").at(0).get<std::size_t>();
      spec.kernel_w = l.at("kernel").at(1).get<std::size_t>();
      spec.units = l.at("units").get<std::size_t>();
      spec.padding = padding_from_string(l.at("padding").get<std::string>());
      spec.activation = activation_from_string(l.at("activation").get<std::string>());
      layers.push_back(spec);
    }
    const auto input_shape = manifest.at("input_shape").get<Shape>();
    const auto& bn_entry = manifest.at("batch_norm");
    BatchNormConfig bn{bn_entry.at("epsilon").get<double>(),
                       bn_entry.at("momentum").get<double>(),
                       bn_entry.value("debias", true)};

    std::vector<LayerParams<float>> params(layers.size());
    const auto* data = reinterpret_cast<const unsigned char*>(blob.data());
    for (const auto& t : manifest.at("tensors")) {
      const auto layer = t.at("layer").get<std::size_t>();
      const auto name = t.at("name").get<std::string>();
      const auto shape = t.at("shape").get<Shape>();
      const auto offset = t.at("offset").get<std::size_t>();
      const auto nbytes = t.at("bytes").get<std::size_t>();
      if (layer >= params.size()) throw fail("tensor refers to missing layer");
      Tensor* slot = slot_of(params[layer], name);
      if (slot == nullptr) throw fail("unknown tensor name '" + name + "'");
      if (nbytes != shape_size(shape) * 4 || offset > blob.size() ||
          nbytes > blob.size() - offset) {
        throw fail("tensor '" + name + "' of layer " + std::to_string(layer) +
                   " lies outside the blob");
      }
      std::vector<float> values(shape_size(shape));
      for (std::size_t k = 0; k < values.size(); ++k) values[k] = read_le(data + offset + 4 * k);
      *slot = Tensor(shape, std::move(values));
    }

    ModelFile file{Network(std::move(layers), input_shape, std::move(params), bn),
                   manifest.at("class_names").get<std::vector<std::string>>(),
                   manifest.value("metadata", nlohmann::json::object())};
    file.network.set_batch_norm_updates(bn_entry.value("updates", std::uint64_t{0}));
    if (!file.class_names.empty() && file.class_names.size() != file.network.num_classes()) {
      throw fail("class name count does not match the output layer");
    }
    return file;
  } catch (const ModelFormatError&) {
    throw;
  } catch (const nlohmann::json::exception& e) {
    throw fail(std::string("malformed manifest: ") + e.what());
  } catch (const Error& e) {
    throw fail(e.what());
  }
}

void save_model(const std::filesystem::path& path, const Network& network,
                const std::vector<std::string>& class_names, const nlohmann::json& metadata) {
  const std::string bytes = serialize_model(network, class_names, metadata);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

ModelFile load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open model file '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_model(buffer.str());
}

}  // namespace csocnn::nn
