#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "csocnn/nn/network.hpp"

namespace csocnn::nn {

inline constexpr int kModelFormatVersion = 1;

// On-disk model layout:
//
//   CSOCNN-MODEL <format version>\n
//   <manifest length in bytes>\n
//   <JSON manifest>\n
//   <blob: little-endian float32, every tensor in layer order, row-major>
//
// The manifest lists layer specs, input shape, class names and, per tensor,
// its byte offset into the blob. `metadata` is carried verbatim (the CLI
// stores the scaler statistics there).
struct ModelFile {
  Network network;
  std::vector<std::string> class_names;
  nlohmann::json metadata;
};

std::string serialize_model(const Network& network,
                            const std::vector<std::string>& class_names,
                            const nlohmann::json& metadata = nlohmann::json::object());

// Throws ModelFormatError on any header/manifest/blob inconsistency.
ModelFile parse_model(std::string_view bytes);

// Throws IoError when the file cannot be written.
void save_model(const std::filesystem::path& path, const Network& network,
                const std::vector<std::string>& class_names,
                const nlohmann::json& metadata = nlohmann::json::object());

// Throws IoError when the file cannot be read, ModelFormatError otherwise.
ModelFile load_model(const std::filesystem::path& path);

}  // namespace csocnn::nn
