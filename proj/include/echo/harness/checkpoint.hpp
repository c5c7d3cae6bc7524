#pragma once

#include "echo/autograd/tape.hpp"
#include "echo/model/config.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <string>

namespace echo {

inline constexpr int kCheckpointFormatVersion = 1;

/// Directory with manifest.json (format version, kind, config, config hash,
/// tensor names/shapes/offsets, extra metadata) and params.bin (float32
/// little-endian, in manifest order).
struct Archive {
  std::string kind;
  nlohmann::json config;
  std::string config_hash;
  ag::ParamStore params;
  nlohmann::json extra = nlohmann::json::object();
};

/// Writes via a temporary sibling directory and renames it into place, so an
/// interrupted save leaves the previous archive intact.
void save_archive(const std::filesystem::path& dir, const Archive& archive);
/// Throws DataError on a missing/invalid manifest, a hash that does not match
/// the stored config, or a truncated params.bin.
Archive load_archive(const std::filesystem::path& dir);

struct Checkpoint {
  ModelConfig config;
  ag::ParamStore params;
  nlohmann::json extra = nlohmann::json::object();
};

void save_checkpoint(const std::filesystem::path& dir, const ModelConfig& config,
                     const ag::ParamStore& params, const nlohmann::json& extra = nlohmann::json::object());
Checkpoint load_checkpoint(const std::filesystem::path& dir);
/// As above, and throws DataError when the checkpoint's config hash differs
/// from that of `expected`.
Checkpoint load_checkpoint(const std::filesystem::path& dir, const ModelConfig& expected);

}  // namespace echo
