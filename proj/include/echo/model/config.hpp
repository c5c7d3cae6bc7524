#pragma once

#include "echo/core/types.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <string>
#include <vector>

namespace echo {

/// Per-agent input/output layout of the pose encoder and decoder.
struct AgentSpec {
  int joints = 22;
  Representation rep = Representation::euclidean_xyz;
  /// Network units per input unit: poses are divided by this before encoding
  /// and decoder outputs multiplied by it (mm -> m for xyz by default).
  double pose_scale = 1000.0;

  int width() const { return joints * coords_per_joint(rep); }
  bool operator==(const AgentSpec&) const = default;
};

struct ModelConfig {
  int seq_len = 60;  // T
  int D = 128;
  int n_layers_sa = 4;
  int n_heads = 4;
  int ffn_mult = 2;
  int k_mlp = 2;
  int mlp_expansion = 2;
  int K_refine = 2;
  /// Stacked cross-attention blocks per refinement direction.
  int ca_depth = 1;
  double dropout = 0.0;
  bool use_text = true;
  bool use_dct = false;
  bool use_tempmlp = true;
  bool use_residual_baseline = true;
  bool share_ca_weights = false;
  std::array<AgentSpec, 2> agents{};
  std::vector<std::string> intent_vocab{"handshake", "mirror", "circle"};
  /// Width of externally computed intent vectors; 0 disables that path.
  int intent_precomputed_dim = 0;

  /// Throws UsageError on a broken invariant.
  void validate() const;
  /// Both agents use the same encoder/decoder when their layouts agree.
  bool shared_agent_mlps() const { return agents[0] == agents[1]; }
  int vocab_index(const std::string& label) const;

  bool operator==(const ModelConfig&) const = default;
};

void to_json(nlohmann::json& j, const AgentSpec& a);
void from_json(const nlohmann::json& j, AgentSpec& a);
void to_json(nlohmann::json& j, const ModelConfig& c);
/// Missing keys keep their defaults.
void from_json(const nlohmann::json& j, ModelConfig& c);

/// Stable 64-bit FNV-1a hash of the canonical JSON form, as 16 hex digits.
std::string config_hash(const nlohmann::json& canonical);
std::string config_hash(const ModelConfig& c);

}  // namespace echo
