#pragma once

#include "echo/autograd/tape.hpp"
#include "echo/core/types.hpp"
#include "echo/datasets/datasets.hpp"
#include "echo/model/config.hpp"
#include "echo/rng.hpp"

#include <array>
#include <map>
#include <string>
#include <utility>

namespace echo {

/// Latent token sequence: T x D, or (T+1) x D with the intent token in row 0.
struct LatentMotion {
  Matrix tokens;
  bool has_intent_token = false;

  int frames() const { return static_cast<int>(tokens.rows()) - (has_intent_token ? 1 : 0); }
};

struct IntentEmbedding {
  enum class Source { vocab_table, precomputed_file, null_token };
  Eigen::RowVectorXd vector;
  Source source = Source::vocab_table;
  int index = -1;
};

enum class InitMode {
  /// Residual output projections, temporal-MLP output maps and the final
  /// decoder layer start at zero, so the network starts as the zero-velocity
  /// predictor.
  zero_residual,
  /// Every parameter random; used by gradient checks and shape tests.
  random,
};

struct ForwardOptions {
  bool training = false;
  /// Dropout masks; required when training with dropout > 0.
  Rng* rng = nullptr;
};

/// Dual-agent forecaster: pose encoder, intent token, self-attention encoder
/// with temporal MLP, K rounds of dual cross-attention, pose decoder with the
/// last observed pose added back.
class EchoModel {
 public:
  explicit EchoModel(ModelConfig cfg, uint64_t seed = 0, InitMode mode = InitMode::zero_residual);
  /// Adopts existing parameters (e.g. from a checkpoint); names and shapes
  /// must match what `cfg` builds.
  EchoModel(ModelConfig cfg, ag::ParamStore params);

  const ModelConfig& config() const { return cfg_; }
  ag::ParamStore& params() { return params_; }
  const ag::ParamStore& params() const { return params_; }

  static ag::ParamStore build_parameters(const ModelConfig& cfg, uint64_t seed, InitMode mode);

  /// Fills the frozen table of externally computed intent vectors. Every
  /// vocabulary label needs an entry of width intent_precomputed_dim.
  void load_precomputed_intents(const std::map<std::string, Vector>& vectors);

  // ---- graph building blocks ---------------------------------------------
  ag::Var encode_poses(ag::Tape& tape, const Motion& padded, int agent) const;
  ag::Var intent_token(ag::Tape& tape, const std::string& label) const;
  ag::Var single_motion_encode(ag::Tape& tape, ag::Var e_ind, ag::Var intent,
                               const ForwardOptions& opt = {}) const;
  ag::Var temporal_smooth(ag::Tape& tape, ag::Var e) const;
  std::pair<ag::Var, ag::Var> social_refine(ag::Tape& tape, ag::Var e0, ag::Var e1,
                                            const ForwardOptions& opt = {}) const;
  /// Decoded poses in input units, T x (J*n).
  ag::Var decode_poses(ag::Tape& tape, ag::Var e_soc, const Pose& x_ref, int agent) const;

  struct Graph {
    std::array<ag::Var, 2> pred;      // decoded social outputs
    std::array<ag::Var, 2> pred_ind;  // decoded individual outputs
    std::array<ag::Var, 2> e_ind_hat;
    std::array<ag::Var, 2> e_soc_hat;
  };
  Graph forward(ag::Tape& tape, const TrainingSample& sample, const ForwardOptions& opt = {}) const;

  // ---- value-level API -----------------------------------------------------
  LatentMotion encode_poses(const Motion& padded, int agent) const;
  IntentEmbedding embed_intent(const std::string& label) const;
  LatentMotion single_motion_encode(const LatentMotion& e_ind, const IntentEmbedding& intent) const;
  LatentMotion temporal_smooth(const LatentMotion& e) const;
  std::pair<LatentMotion, LatentMotion> social_refine(const LatentMotion& e0,
                                                      const LatentMotion& e1) const;
  Motion decode_poses(const LatentMotion& e_soc, const Pose& x_ref, int agent, double fps) const;

  struct Prediction {
    std::array<Motion, 2> motions;
    std::array<LatentMotion, 2> e_ind_hat;
    std::array<LatentMotion, 2> e_soc_hat;
  };
  /// Full forward pass in inference mode.
  Prediction predict(const TrainingSample& sample) const;

 private:
  ag::Var mlp2(ag::Tape& tape, const std::string& prefix, ag::Var x) const;
  ag::Var attention_block(ag::Tape& tape, const std::string& prefix, ag::Var query, ag::Var context,
                          bool cross, const ForwardOptions& opt) const;
  ag::Var dropout(ag::Tape& tape, ag::Var x, const ForwardOptions& opt) const;
  std::string agent_prefix(const std::string& kind, int agent) const;
  void check_agent_input(const Motion& m, int agent) const;

  ModelConfig cfg_;
  ag::ParamStore params_;
  Matrix positional_;  // T x D
  Matrix dct_;         // T x T
};

/// Every future frame (and every observed frame) set to the last observed pose.
std::array<Motion, 2> zero_velocity_baseline(const TrainingSample& sample);

/// Parameter-name prefixes grouping the network into its components, for
/// per-group gradient checks and reporting.
std::vector<std::string> parameter_groups(const ag::ParamStore& params);

}  // namespace echo
