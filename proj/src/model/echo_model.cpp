#include "echo/model/echo_model.hpp"

#include "echo/errors.hpp"
#include "echo/model/temporal.hpp"

#include <cmath>
#include <set>

namespace echo {

namespace {

enum class Init { weight, bias, residual_out, gamma, beta, table, frozen_zero };

class ParamBuilder {
 public:
  ParamBuilder(ag::ParamStore& store, uint64_t seed, InitMode mode)
      : store_(store), rng_(mix_seed(seed, 0x5eed)), mode_(mode) {}

  void add(const std::string& name, int rows, int cols, Init init) {
    Matrix m(rows, cols);
    const bool random = mode_ == InitMode::random;
    auto gauss = [&](double std) {
      for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = std * rng_.normal();
    };
    switch (init) {
      case Init::weight:
        gauss(1.0 / std::sqrt(static_cast<double>(rows)));
        break;
      case Init::residual_out:
        if (random) {
          gauss(1.0 / std::sqrt(static_cast<double>(rows)));
        } else {
          m.setZero();
        }
        break;
      case Init::bias:
        if (random) {
          gauss(0.1);
        } else {
          m.setZero();
        }
        break;
      case Init::gamma:
        if (random) {
          gauss(0.1);
          m.array() += 1.0;
        } else {
          m.setOnes();
        }
        break;
      case Init::beta:
        if (random) {
          gauss(0.1);
        } else {
          m.setZero();
        }
        break;
      case Init::table:
        gauss(1.0);
        break;
      case Init::frozen_zero:
        m.setZero();
        break;
    }
    store_.add(name, std::move(m), init != Init::frozen_zero);
  }

  void linear(const std::string& prefix, int in, int out, bool residual_out = false) {
    add(prefix + ".weight", in, out, residual_out ? Init::residual_out : Init::weight);
    add(prefix + ".bias", 1, out, residual_out ? Init::residual_out : Init::bias);
  }

  void layer_norm(const std::string& prefix, int width) {
    add(prefix + ".gamma", 1, width, Init::gamma);
    add(prefix + ".beta", 1, width, Init::beta);
  }

  void attention_block(const std::string& prefix, int D, int ffn_width, bool cross) {
    layer_norm(prefix + ".ln_q", D);
    if (cross) layer_norm(prefix + ".ln_kv", D);
    linear(prefix + ".attn.wq", D, D);
    linear(prefix + ".attn.wk", D, D);
    linear(prefix + ".attn.wv", D, D);
    linear(prefix + ".attn.wo", D, D, true);
    layer_norm(prefix + ".ln_ffn", D);
    linear(prefix + ".ffn.l1", D, ffn_width);
    linear(prefix + ".ffn.l2", ffn_width, D, true);
  }

 private:
  ag::ParamStore& store_;
  Rng rng_;
  InitMode mode_;
};

std::string ca_prefix(const ModelConfig& cfg, int iteration, int direction, int layer) {
  const int dir = cfg.share_ca_weights ? 0 : direction;
  return "ca." + std::to_string(iteration) + "." + std::to_string(dir) + "." + std::to_string(layer);
}

}  // namespace

ag::ParamStore EchoModel::build_parameters(const ModelConfig& cfg, uint64_t seed, InitMode mode) {
  cfg.validate();
  ag::ParamStore store;
  ParamBuilder b(store, seed, mode);
  const int D = cfg.D;
  const int agents = cfg.shared_agent_mlps() ? 1 : 2;
  for (int a = 0; a < agents; ++a) {
    const std::string p = "pose_enc." + std::to_string(a);
    b.linear(p + ".l1", cfg.agents[a].width(), D);
    b.linear(p + ".l2", D, D);
  }
  b.add("intent.null", 1, D, Init::table);
  if (!cfg.intent_vocab.empty()) {
    if (cfg.intent_precomputed_dim > 0) {
      b.add("intent.precomputed", static_cast<int>(cfg.intent_vocab.size()),
            cfg.intent_precomputed_dim, Init::frozen_zero);
      if (cfg.intent_precomputed_dim != D) b.linear("intent.proj", cfg.intent_precomputed_dim, D);
    } else {
      b.add("intent.table", static_cast<int>(cfg.intent_vocab.size()), D, Init::table);
    }
  }
  for (int l = 0; l < cfg.n_layers_sa; ++l) {
    b.attention_block("sa." + std::to_string(l), D, cfg.ffn_mult * D, false);
  }
  if (cfg.use_tempmlp) {
    const int rows = cfg.seq_len + 1;
    const int hidden = cfg.mlp_expansion * rows;
    for (int k = 0; k < cfg.k_mlp; ++k) {
      const std::string p = "tmlp." + std::to_string(k);
      b.add(p + ".l1.weight", hidden, rows, Init::weight);
      b.add(p + ".l1.bias", hidden, 1, Init::bias);
      b.add(p + ".l2.weight", rows, hidden, Init::residual_out);
      b.add(p + ".l2.bias", rows, 1, Init::residual_out);
    }
  }
  const int directions = cfg.share_ca_weights ? 1 : 2;
  for (int it = 0; it < cfg.K_refine; ++it) {
    for (int dir = 0; dir < directions; ++dir) {
      for (int l = 0; l < cfg.ca_depth; ++l) {
        b.attention_block(ca_prefix(cfg, it, dir, l), D, cfg.ffn_mult * D, true);
      }
    }
  }
  for (int a = 0; a < agents; ++a) {
    const std::string p = "pose_dec." + std::to_string(a);
    b.linear(p + ".l1", D, D);
    b.linear(p + ".l2", D, cfg.agents[a].width(), true);
  }
  store.round_to_f32();
  return store;
}

EchoModel::EchoModel(ModelConfig cfg, uint64_t seed, InitMode mode)
    : EchoModel(cfg, build_parameters(cfg, seed, mode)) {}

EchoModel::EchoModel(ModelConfig cfg, ag::ParamStore params)
    : cfg_(std::move(cfg)), params_(std::move(params)) {
  cfg_.validate();
  const ag::ParamStore expected = build_parameters(cfg_, 0, InitMode::zero_residual);
  if (expected.size() != params_.size()) {
    throw DataError("parameter set has " + std::to_string(params_.size()) + " tensors, config needs " +
                    std::to_string(expected.size()));
  }
  for (const auto& e : expected.entries()) {
    if (!params_.contains(e.name)) throw DataError("missing parameter '" + e.name + "'");
    const Matrix& got = params_.at(e.name);
    if (got.rows() != e.value.rows() || got.cols() != e.value.cols()) {
      throw DataError("parameter '" + e.name + "' has shape " + std::to_string(got.rows()) + "x" +
                      std::to_string(got.cols()) + ", expected " + std::to_string(e.value.rows()) +
                      "x" + std::to_string(e.value.cols()));
    }
  }
  positional_ = sinusoidal_embedding(cfg_.seq_len, cfg_.D);
  dct_ = dct_matrix(cfg_.seq_len);
}

void EchoModel::load_precomputed_intents(const std::map<std::string, Vector>& vectors) {
  if (cfg_.intent_precomputed_dim <= 0) {
    throw UsageError("model was configured without precomputed intent vectors");
  }
  Matrix& table = params_.at("intent.precomputed");
  for (size_t i = 0; i < cfg_.intent_vocab.size(); ++i) {
    const auto& label = cfg_.intent_vocab[i];
    auto it = vectors.find(label);
    if (it == vectors.end()) throw DataError("no precomputed intent vector for '" + label + "'");
    if (it->second.size() != cfg_.intent_precomputed_dim) {
      throw DataError("precomputed intent '" + label + "' has width " +
                      std::to_string(it->second.size()) + ", expected " +
                      std::to_string(cfg_.intent_precomputed_dim));
    }
    if (!it->second.allFinite()) throw DataError("precomputed intent '" + label + "' is not finite");
    table.row(static_cast<Eigen::Index>(i)) = it->second.transpose().cast<float>().cast<double>();
  }
}

std::string EchoModel::agent_prefix(const std::string& kind, int agent) const {
  return kind + "." + std::to_string(cfg_.shared_agent_mlps() ? 0 : agent);
}

void EchoModel::check_agent_input(const Motion& m, int agent) const {
  const AgentSpec& spec = cfg_.agents.at(static_cast<size_t>(agent));
  if (m.width() != spec.width() || m.representation() != spec.rep) {
    throw DataError("agent " + std::to_string(agent) + " input width " + std::to_string(m.width()) +
                    " (" + std::string(to_string(m.representation())) +
                    ") does not match encoder width " + std::to_string(spec.width()));
  }
  if (m.frames() != cfg_.seq_len) {
    throw DataError("agent " + std::to_string(agent) + " has " + std::to_string(m.frames()) +
                    " frames, model expects T=" + std::to_string(cfg_.seq_len));
  }
}

ag::Var EchoModel::mlp2(ag::Tape& tape, const std::string& prefix, ag::Var x) const {
  ag::Var h = ag::gelu(ag::linear(x, tape.param(prefix + ".l1.weight"), tape.param(prefix + ".l1.bias")));
  return ag::linear(h, tape.param(prefix + ".l2.weight"), tape.param(prefix + ".l2.bias"));
}

ag::Var EchoModel::dropout(ag::Tape& tape, ag::Var x, const ForwardOptions& opt) const {
  if (!opt.training || cfg_.dropout <= 0.0) return x;
  if (opt.rng == nullptr) throw std::logic_error("dropout in training needs an rng");
  const double keep = 1.0 - cfg_.dropout;
  Matrix mask(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < mask.size(); ++i) {
    mask.data()[i] = opt.rng->uniform() < keep ? 1.0 / keep : 0.0;
  }
  return ag::hadamard(x, tape.constant(std::move(mask)));
}

ag::Var EchoModel::attention_block(ag::Tape& tape, const std::string& p, ag::Var query,
                                   ag::Var context, bool cross, const ForwardOptions& opt) const {
  auto P = [&](const std::string& name) { return tape.param(p + name); };
  ag::Var q_in = ag::layer_norm(query, P(".ln_q.gamma"), P(".ln_q.beta"));
  ag::Var kv_in = cross ? ag::layer_norm(context, P(".ln_kv.gamma"), P(".ln_kv.beta")) : q_in;
  ag::Var q = ag::linear(q_in, P(".attn.wq.weight"), P(".attn.wq.bias"));
  ag::Var k = ag::linear(kv_in, P(".attn.wk.weight"), P(".attn.wk.bias"));
  ag::Var v = ag::linear(kv_in, P(".attn.wv.weight"), P(".attn.wv.bias"));
  ag::Var att = ag::attention(q, k, v, cfg_.n_heads);
  ag::Var out = ag::linear(att, P(".attn.wo.weight"), P(".attn.wo.bias"));
  ag::Var x = ag::add(query, dropout(tape, out, opt));
  ag::Var h = ag::layer_norm(x, P(".ln_ffn.gamma"), P(".ln_ffn.beta"));
  h = ag::gelu(ag::linear(h, P(".ffn.l1.weight"), P(".ffn.l1.bias")));
  h = ag::linear(h, P(".ffn.l2.weight"), P(".ffn.l2.bias"));
  return ag::add(x, dropout(tape, h, opt));
}

ag::Var EchoModel::encode_poses(ag::Tape& tape, const Motion& padded, int agent) const {
  check_agent_input(padded, agent);
  const double inv = 1.0 / cfg_.agents[agent].pose_scale;
  ag::Var x = tape.constant(padded.data() * inv);
  return mlp2(tape, agent_prefix("pose_enc", agent), x);
}

ag::Var EchoModel::intent_token(ag::Tape& tape, const std::string& label) const {
  if (!cfg_.use_text) return tape.param("intent.null");
  const int idx = cfg_.vocab_index(label);
  if (idx < 0) throw DataError("unknown intent label '" + label + "'");
  if (cfg_.intent_precomputed_dim > 0) {
    ag::Var raw = ag::gather_rows(tape.param("intent.precomputed"), {idx});
    if (cfg_.intent_precomputed_dim == cfg_.D) return raw;
    return ag::linear(raw, tape.param("intent.proj.weight"), tape.param("intent.proj.bias"));
  }
  return ag::gather_rows(tape.param("intent.table"), {idx});
}

ag::Var EchoModel::single_motion_encode(ag::Tape& tape, ag::Var e_ind, ag::Var intent,
                                        const ForwardOptions& opt) const {
  if (e_ind.rows() != cfg_.seq_len || e_ind.cols() != cfg_.D) {
    throw DataError("single-motion encoder expects " + std::to_string(cfg_.seq_len) + " tokens of width " +
                    std::to_string(cfg_.D) + ", got " + std::to_string(e_ind.rows()) + "x" +
                    std::to_string(e_ind.cols()));
  }
  ag::Var x = ag::concat_rows(intent, ag::add(e_ind, tape.constant(positional_)));
  for (int l = 0; l < cfg_.n_layers_sa; ++l) {
    x = attention_block(tape, "sa." + std::to_string(l), x, x, false, opt);
  }
  if (cfg_.use_tempmlp) x = temporal_smooth(tape, x);
  return x;
}

ag::Var EchoModel::temporal_smooth(ag::Tape& tape, ag::Var e) const {
  if (!cfg_.use_tempmlp) return e;
  for (int k = 0; k < cfg_.k_mlp; ++k) {
    const std::string p = "tmlp." + std::to_string(k);
    ag::Var h = ag::add_col(ag::matmul(tape.param(p + ".l1.weight"), e), tape.param(p + ".l1.bias"));
    h = ag::gelu(h);
    h = ag::add_col(ag::matmul(tape.param(p + ".l2.weight"), h), tape.param(p + ".l2.bias"));
    e = ag::add(e, h);
  }
  return e;
}

std::pair<ag::Var, ag::Var> EchoModel::social_refine(ag::Tape& tape, ag::Var e0, ag::Var e1,
                                                     const ForwardOptions& opt) const {
  if (e0.rows() != e1.rows() || e0.cols() != e1.cols()) {
    throw DataError("social_refine: agent latents differ in shape");
  }
  for (int it = 0; it < cfg_.K_refine; ++it) {
    for (int l = 0; l < cfg_.ca_depth; ++l) e0 = attention_block(tape, ca_prefix(cfg_, it, 0, l), e0, e1, true, opt);
    for (int l = 0; l < cfg_.ca_depth; ++l) e1 = attention_block(tape, ca_prefix(cfg_, it, 1, l), e1, e0, true, opt);
  }
  return {e0, e1};
}

ag::Var EchoModel::decode_poses(ag::Tape& tape, ag::Var e_soc, const Pose& x_ref, int agent) const {
  const AgentSpec& spec = cfg_.agents.at(static_cast<size_t>(agent));
  if (e_soc.rows() != cfg_.seq_len + 1) throw DataError("decode_poses: latent lacks the intent token");
  if (x_ref.values.size() != spec.width()) {
    throw DataError("decode_poses: reference pose width " + std::to_string(x_ref.values.size()) +
                    " != decoder width " + std::to_string(spec.width()));
  }
  ag::Var tokens = ag::slice_rows(e_soc, 1, cfg_.seq_len);
  if (cfg_.use_dct) tokens = ag::matmul(tape.constant(dct_.transpose()), tokens);
  ag::Var out = ag::scale(mlp2(tape, agent_prefix("pose_dec", agent), tokens), spec.pose_scale);
  if (cfg_.use_residual_baseline) out = ag::add_row(out, tape.constant(x_ref.flat()));
  return out;
}

EchoModel::Graph EchoModel::forward(ag::Tape& tape, const TrainingSample& sample,
                                    const ForwardOptions& opt) const {
  Graph g;
  for (int i = 0; i < 2; ++i) {
    ag::Var e = encode_poses(tape, sample.x_ind[i], i);
    if (cfg_.use_dct) e = ag::matmul(tape.constant(dct_), e);
    g.e_ind_hat[i] = single_motion_encode(tape, e, intent_token(tape, sample.intent), opt);
  }
  auto [s0, s1] = social_refine(tape, g.e_ind_hat[0], g.e_ind_hat[1], opt);
  g.e_soc_hat = {s0, s1};
  for (int i = 0; i < 2; ++i) {
    g.pred[i] = decode_poses(tape, g.e_soc_hat[i], sample.x_ref[i], i);
    g.pred_ind[i] = decode_poses(tape, g.e_ind_hat[i], sample.x_ref[i], i);
  }
  return g;
}

// ---- value-level ------------------------------------------------------------

LatentMotion EchoModel::encode_poses(const Motion& padded, int agent) const {
  ag::Tape tape(&params_);
  return {encode_poses(tape, padded, agent).value(), false};
}

IntentEmbedding EchoModel::embed_intent(const std::string& label) const {
  ag::Tape tape(&params_);
  IntentEmbedding out;
  out.vector = intent_token(tape, label).value().row(0);
  if (!cfg_.use_text) {
    out.source = IntentEmbedding::Source::null_token;
  } else {
    out.index = cfg_.vocab_index(label);
    out.source = cfg_.intent_precomputed_dim > 0 ? IntentEmbedding::Source::precomputed_file
                                                 : IntentEmbedding::Source::vocab_table;
  }
  return out;
}

LatentMotion EchoModel::single_motion_encode(const LatentMotion& e_ind,
                                             const IntentEmbedding& intent) const {
  if (e_ind.has_intent_token) throw DataError("single_motion_encode: input already has an intent token");
  ag::Tape tape(&params_);
  ag::Var out = single_motion_encode(tape, tape.constant(e_ind.tokens),
                                     tape.constant(Matrix(intent.vector)), {});
  return {out.value(), true};
}

LatentMotion EchoModel::temporal_smooth(const LatentMotion& e) const {
  ag::Tape tape(&params_);
  return {temporal_smooth(tape, tape.constant(e.tokens)).value(), e.has_intent_token};
}

std::pair<LatentMotion, LatentMotion> EchoModel::social_refine(const LatentMotion& e0,
                                                               const LatentMotion& e1) const {
  ag::Tape tape(&params_);
  auto [a, b] = social_refine(tape, tape.constant(e0.tokens), tape.constant(e1.tokens), {});
  return {LatentMotion{a.value(), e0.has_intent_token}, LatentMotion{b.value(), e1.has_intent_token}};
}

Motion EchoModel::decode_poses(const LatentMotion& e_soc, const Pose& x_ref, int agent,
                               double fps) const {
  if (!e_soc.has_intent_token) throw DataError("decode_poses: latent lacks the intent token");
  ag::Tape tape(&params_);
  const AgentSpec& spec = cfg_.agents.at(static_cast<size_t>(agent));
  return Motion(decode_poses(tape, tape.constant(e_soc.tokens), x_ref, agent).value(), spec.joints,
                spec.rep, fps);
}

EchoModel::Prediction EchoModel::predict(const TrainingSample& sample) const {
  ag::Tape tape(&params_);
  const Graph g = forward(tape, sample, {});
  Prediction p;
  for (int i = 0; i < 2; ++i) {
    const AgentSpec& spec = cfg_.agents[i];
    p.motions[i] = Motion(g.pred[i].value(), spec.joints, spec.rep, sample.x_ind[i].fps());
    p.e_ind_hat[i] = {g.e_ind_hat[i].value(), true};
    p.e_soc_hat[i] = {g.e_soc_hat[i].value(), true};
  }
  return p;
}

std::array<Motion, 2> zero_velocity_baseline(const TrainingSample& sample) {
  std::array<Motion, 2> out;
  for (int i = 0; i < 2; ++i) {
    const Motion& x = sample.x_ind[i];
    Matrix m(x.frames(), x.width());
    const Eigen::RowVectorXd ref = sample.x_ref[i].flat();
    for (int t = 0; t < x.frames(); ++t) m.row(t) = ref;
    out[i] = Motion(std::move(m), x.joints(), x.representation(), x.fps());
  }
  return out;
}

std::vector<std::string> parameter_groups(const ag::ParamStore& params) {
  std::vector<std::string> groups;
  std::set<std::string> seen;
  for (const auto& e : params.entries()) {
    if (!e.trainable) continue;
    // Group by the first two dotted components, e.g. "sa.0" or "pose_enc.0".
    auto first = e.name.find('.');
    auto second = first == std::string::npos ? std::string::npos : e.name.find('.', first + 1);
    std::string g = e.name.substr(0, second);
    if (g.rfind("ca.", 0) == 0) {
      auto third = e.name.find('.', second + 1);
      g = e.name.substr(0, third);
    }
    if (seen.insert(g).second) groups.push_back(g);
  }
  return groups;
}

}  // namespace echo
