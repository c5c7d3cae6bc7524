#include "echo/model/config.hpp"

#include "echo/errors.hpp"

#include <cstdio>

namespace echo {

using nlohmann::json;

void ModelConfig::validate() const {
  auto fail = [](const std::string& m) { throw UsageError("model config: " + m); };
  if (seq_len < 2) fail("seq_len must be >= 2");
  if (D <= 0 || n_heads <= 0 || D % n_heads != 0) fail("D must be divisible by n_heads");
  if (n_layers_sa < 0) fail("n_layers_sa must be >= 0");
  if (ffn_mult < 1) fail("ffn_mult must be >= 1");
  if (k_mlp < 0) fail("k_mlp must be >= 0");
  if (mlp_expansion < 1) fail("mlp_expansion must be >= 1");
  if (K_refine < 0) fail("K_refine must be >= 0");
  if (ca_depth < 1) fail("ca_depth must be >= 1");
  if (dropout < 0.0 || dropout >= 1.0) fail("dropout must be in [0, 1)");
  if (intent_precomputed_dim < 0) fail("intent_precomputed_dim must be >= 0");
  if (use_text && intent_vocab.empty()) fail("use_text needs a non-empty intent_vocab");
  for (const auto& a : agents) {
    if (a.joints <= 0) fail("agent joints must be positive");
    if (!(a.pose_scale > 0.0)) fail("agent pose_scale must be positive");
  }
}

int ModelConfig::vocab_index(const std::string& label) const {
  for (size_t i = 0; i < intent_vocab.size(); ++i) {
    if (intent_vocab[i] == label) return static_cast<int>(i);
  }
  return -1;
}

void to_json(json& j, const AgentSpec& a) {
  j = json{{"joints", a.joints},
           {"representation", std::string(to_string(a.rep))},
           {"pose_scale", a.pose_scale}};
}

void from_json(const json& j, AgentSpec& a) {
  a.joints = j.value("joints", a.joints);
  if (j.contains("representation")) {
    a.rep = representation_from_string(j.at("representation").get<std::string>());
    if (!j.contains("pose_scale")) a.pose_scale = a.rep == Representation::euclidean_xyz ? 1000.0 : 1.0;
  }
  a.pose_scale = j.value("pose_scale", a.pose_scale);
}

void to_json(json& j, const ModelConfig& c) {
  j = json{{"seq_len", c.seq_len},
           {"D", c.D},
           {"n_layers_sa", c.n_layers_sa},
           {"n_heads", c.n_heads},
           {"ffn_mult", c.ffn_mult},
           {"k_mlp", c.k_mlp},
           {"mlp_expansion", c.mlp_expansion},
           {"K_refine", c.K_refine},
           {"ca_depth", c.ca_depth},
           {"dropout", c.dropout},
           {"use_text", c.use_text},
           {"use_dct", c.use_dct},
           {"use_tempmlp", c.use_tempmlp},
           {"use_residual_baseline", c.use_residual_baseline},
           {"share_ca_weights", c.share_ca_weights},
           {"agents", c.agents},
           {"intent_vocab", c.intent_vocab},
           {"intent_precomputed_dim", c.intent_precomputed_dim}};
}

void from_json(const json& j, ModelConfig& c) {
  c.seq_len = j.value("seq_len", c.seq_len);
  c.D = j.value("D", c.D);
  c.n_layers_sa = j.value("n_layers_sa", c.n_layers_sa);
  c.n_heads = j.value("n_heads", c.n_heads);
  c.ffn_mult = j.value("ffn_mult", c.ffn_mult);
  c.k_mlp = j.value("k_mlp", c.k_mlp);
  c.mlp_expansion = j.value("mlp_expansion", c.mlp_expansion);
  c.K_refine = j.value("K_refine", c.K_refine);
  c.ca_depth = j.value("ca_depth", c.ca_depth);
  c.dropout = j.value("dropout", c.dropout);
  c.use_text = j.value("use_text", c.use_text);
  c.use_dct = j.value("use_dct", c.use_dct);
  c.use_tempmlp = j.value("use_tempmlp", c.use_tempmlp);
  c.use_residual_baseline = j.value("use_residual_baseline", c.use_residual_baseline);
  c.share_ca_weights = j.value("share_ca_weights", c.share_ca_weights);
  if (j.contains("agents")) {
    const auto& a = j.at("agents");
    if (a.size() != 2) throw UsageError("model config: agents must list exactly 2 entries");
    c.agents[0] = a[0].get<AgentSpec>();
    c.agents[1] = a[1].get<AgentSpec>();
  }
  if (j.contains("intent_vocab")) c.intent_vocab = j.at("intent_vocab").get<std::vector<std::string>>();
  c.intent_precomputed_dim = j.value("intent_precomputed_dim", c.intent_precomputed_dim);
}

std::string config_hash(const json& canonical) {
  const std::string text = canonical.dump();
  uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string config_hash(const ModelConfig& c) { return config_hash(json(c)); }

}  // namespace echo
