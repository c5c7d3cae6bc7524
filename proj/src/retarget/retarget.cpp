#include "echo/retarget/retarget.hpp"

#include "echo/autograd/optim.hpp"
#include "echo/core/chain.hpp"
#include "echo/errors.hpp"
#include "echo/harness/checkpoint.hpp"
#include "echo/rng.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace echo {

using nlohmann::json;

// ---- kinematics ----------------------------------------------------------------

Matrix forward_kinematics(const KinematicChain& chain, const Pose& angles) {
  if (angles.rep != Representation::joint_angle) throw DataError("forward_kinematics needs joint_angle input");
  if (angles.joints() != chain.dof()) {
    throw DataError("chain '" + chain.name() + "' has " + std::to_string(chain.dof()) + " DOF, got " +
                    std::to_string(angles.joints()) + " angles");
  }
  const auto& joints = chain.joints();
  std::vector<RigidTransform> frames(joints.size());
  for (size_t i = 0; i < joints.size(); ++i) {
    const ChainJoint& cj = joints[i];
    const double q = angles.values(static_cast<Eigen::Index>(i), 0);
    if (!std::isfinite(q) || q < cj.lo || q > cj.hi) {
      std::ostringstream msg;
      msg << "joint " << i << " of chain '" << chain.name() << "' angle " << q << " outside limits [" << cj.lo
          << ", " << cj.hi << "]";
      throw DataError(msg.str());
    }
    const RigidTransform rot{axis_angle(cj.axis, q), Vec3::Zero()};
    const RigidTransform local = cj.origin * rot;
    frames[i] = cj.parent < 0 ? local : frames[static_cast<size_t>(cj.parent)] * local;
  }
  const auto& markers = chain.end_effectors();
  Matrix out(static_cast<Eigen::Index>(markers.size()), 3);
  for (size_t m = 0; m < markers.size(); ++m) {
    out.row(static_cast<Eigen::Index>(m)) =
        frames[static_cast<size_t>(markers[m].joint)].apply(markers[m].offset_mm).transpose();
  }
  return out;
}

std::vector<Pose> sample_joint_angles(const KinematicChain& chain, uint64_t seed, int count) {
  if (count < 1) throw UsageError("sample_joint_angles needs count >= 1");
  Rng rng(seed);
  std::vector<Pose> out;
  out.reserve(static_cast<size_t>(count));
  for (int s = 0; s < count; ++s) {
    Matrix q(chain.dof(), 1);
    for (int i = 0; i < chain.dof(); ++i) {
      const ChainJoint& cj = chain.joints()[static_cast<size_t>(i)];
      q(i, 0) = rng.uniform(cj.lo, cj.hi);
    }
    out.push_back(Pose{std::move(q), Representation::joint_angle});
  }
  return out;
}

// ---- config --------------------------------------------------------------------------

std::string to_string(HumanRep r) {
  return r == HumanRep::local_rotations ? "local_rotations" : "euclidean_xyz";
}

HumanRep human_rep_from_string(const std::string& s) {
  if (s == "local_rotations") return HumanRep::local_rotations;
  if (s == "euclidean_xyz") return HumanRep::euclidean_xyz;
  throw UsageError("unknown human representation '" + s + "' (expected local_rotations or euclidean_xyz)");
}

void SharedLatentConfig::validate() const {
  if (D_latent <= 0) throw UsageError("D_latent must be > 0");
  if (hidden <= 0) throw UsageError("hidden must be > 0");
  if (robots.empty()) throw UsageError("at least one robot chain is required");
  if (steps < 0 || batch_size < 1) throw UsageError("steps must be >= 0 and batch_size >= 1");
  if (!(lr > 0.0)) throw UsageError("lr must be > 0");
  for (double w : {w_reconstruction, w_cycle, w_alignment}) {
    if (!std::isfinite(w) || w < 0.0) throw UsageError("retarget loss weights must be >= 0");
  }
}

void to_json(json& j, const SharedLatentConfig& c) {
  j = json{{"D_latent", c.D_latent},   {"hidden", c.hidden},
           {"robots", c.robots},       {"human_rep", to_string(c.human_rep)},
           {"w_reconstruction", c.w_reconstruction}, {"w_cycle", c.w_cycle},
           {"w_alignment", c.w_alignment},           {"steps", c.steps},
           {"batch_size", c.batch_size},             {"lr", c.lr},
           {"seed", c.seed}};
}

void from_json(const json& j, SharedLatentConfig& c) {
  for (const auto& [k, v] : j.items()) {
    static const std::vector<std::string> allowed{"D_latent", "hidden", "robots", "human_rep",
                                                  "w_reconstruction", "w_cycle", "w_alignment", "steps",
                                                  "batch_size", "lr", "seed"};
    if (std::find(allowed.begin(), allowed.end(), k) == allowed.end()) {
      throw UsageError("unknown key '" + k + "' in shared latent config");
    }
  }
  c.D_latent = j.value("D_latent", c.D_latent);
  c.hidden = j.value("hidden", c.hidden);
  c.robots = j.value("robots", c.robots);
  if (j.contains("human_rep")) c.human_rep = human_rep_from_string(j.at("human_rep").get<std::string>());
  c.w_reconstruction = j.value("w_reconstruction", c.w_reconstruction);
  c.w_cycle = j.value("w_cycle", c.w_cycle);
  c.w_alignment = j.value("w_alignment", c.w_alignment);
  c.steps = j.value("steps", c.steps);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.lr = j.value("lr", c.lr);
  c.seed = j.value("seed", c.seed);
}

// ---- human data -----------------------------------------------------------------------

Vector human_features(const Pose& pose, HumanRep rep) {
  if (rep == HumanRep::local_rotations) {
    if (pose.rep != Representation::joint_angle) {
      throw DataError("local_rotations mode expects a joint_angle pose of axis-angle components");
    }
    return pose.values.col(0);
  }
  if (pose.rep != Representation::euclidean_xyz) throw DataError("euclidean_xyz mode expects an xyz pose");
  Vector f(3 * pose.joints());
  for (int j = 0; j < pose.joints(); ++j) {
    f.segment<3>(3 * j) = (pose.values.row(j) - pose.values.row(0)).transpose() / 1000.0;
  }
  return f;
}

std::vector<Pose> sample_human_poses(const SkeletonSpec& skeleton, HumanRep rep, uint64_t seed, int count,
                                     double amplitude_rad) {
  if (count < 1) throw UsageError("sample_human_poses needs count >= 1");
  Rng rng(seed);
  const int J = skeleton.joints();
  std::vector<Pose> out;
  for (int s = 0; s < count; ++s) {
    std::vector<Vec3> aa(static_cast<size_t>(J), Vec3::Zero());
    for (int j = 1; j < J; ++j) {
      Vec3 axis(rng.normal(), rng.normal(), rng.normal());
      if (axis.norm() < 1e-9) axis = Vec3::UnitZ();
      aa[static_cast<size_t>(j)] = axis.normalized() * rng.uniform(-amplitude_rad, amplitude_rad);
    }
    if (rep == HumanRep::local_rotations) {
      Matrix v(3 * (J - 1), 1);
      for (int j = 1; j < J; ++j) v.block<3, 1>(3 * (j - 1), 0) = aa[static_cast<size_t>(j)];
      out.push_back(Pose{std::move(v), Representation::joint_angle});
      continue;
    }
    Matrix pos(J, 3);
    std::vector<Mat3> global(static_cast<size_t>(J));
    for (int j = 0; j < J; ++j) {
      const Vec3& a = aa[static_cast<size_t>(j)];
      const Mat3 local = a.norm() > 0 ? axis_angle(a.normalized(), a.norm()) : Mat3::Identity();
      const int p = skeleton.parents()[static_cast<size_t>(j)];
      if (p < 0) {
        global[static_cast<size_t>(j)] = local;
        pos.row(j) = skeleton.rest_offsets().row(j);
      } else {
        global[static_cast<size_t>(j)] = global[static_cast<size_t>(p)] * local;
        pos.row(j) = pos.row(p) +
                     (global[static_cast<size_t>(p)] * skeleton.rest_offsets().row(j).transpose()).transpose();
      }
    }
    out.push_back(Pose{std::move(pos), Representation::euclidean_xyz});
  }
  return out;
}

// ---- networks ------------------------------------------------------------------------------

namespace {

std::string human_prefix(const std::string& part) { return "human." + part; }
std::string robot_prefix(const std::string& chain, const std::string& part) { return "robot." + chain + "." + part; }

void add_mlp(ag::ParamStore& ps, Rng& rng, const std::string& prefix, int in, int hidden, int out) {
  auto weight = [&](int r, int c) {
    Matrix w(r, c);
    const double s = 1.0 / std::sqrt(static_cast<double>(r));
    for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = s * rng.normal();
    return w;
  };
  ps.add(prefix + ".l1.weight", weight(in, hidden));
  ps.add(prefix + ".l1.bias", Matrix::Zero(1, hidden));
  ps.add(prefix + ".l2.weight", weight(hidden, out));
  ps.add(prefix + ".l2.bias", Matrix::Zero(1, out));
}

ag::Var mlp(ag::Tape& tape, const std::string& prefix, ag::Var x) {
  ag::Var h = ag::gelu(ag::linear(x, tape.param(prefix + ".l1.weight"), tape.param(prefix + ".l1.bias")));
  return ag::linear(h, tape.param(prefix + ".l2.weight"), tape.param(prefix + ".l2.bias"));
}

Vector apply_mlp(const RetargetParams& p, const std::string& prefix, const Vector& x) {
  ag::Tape tape(&p.params);
  Matrix row = x.transpose();
  return mlp(tape, prefix, tape.constant(std::move(row))).value().row(0).transpose();
}

const KinematicChain& chain_of(const RetargetParams& p, const std::string& id) {
  const auto it = p.chains.find(id);
  if (it == p.chains.end()) throw UsageError("unknown chain id '" + id + "'");
  return it->second;
}

Matrix stack(const std::vector<Vector>& rows) {
  Matrix m(static_cast<Eigen::Index>(rows.size()), rows.empty() ? 0 : rows[0].size());
  for (size_t i = 0; i < rows.size(); ++i) m.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
  return m;
}

// Squared distance between the first and second moments of two latent batches.
ag::Var moment_gap(ag::Tape& tape, ag::Var a, ag::Var b) {
  const Matrix ones_a = Matrix::Constant(1, a.rows(), 1.0 / static_cast<double>(a.rows()));
  const Matrix ones_b = Matrix::Constant(1, b.rows(), 1.0 / static_cast<double>(b.rows()));
  ag::Var ma = ag::matmul(tape.constant(ones_a), a);
  ag::Var mb = ag::matmul(tape.constant(ones_b), b);
  ag::Var va = ag::sub(ag::matmul(tape.constant(ones_a), ag::hadamard(a, a)), ag::hadamard(ma, ma));
  ag::Var vb = ag::sub(ag::matmul(tape.constant(ones_b), ag::hadamard(b, b)), ag::hadamard(mb, mb));
  return ag::add(ag::sum_squares(ag::sub(ma, mb)), ag::sum_squares(ag::sub(va, vb)));
}

}  // namespace

RetargetParams init_retarget(const SharedLatentConfig& cfg, const std::map<std::string, KinematicChain>& chains,
                             int human_dim) {
  cfg.validate();
  if (human_dim <= 0) throw DataError("human feature width must be > 0");
  RetargetParams p;
  p.config = cfg;
  p.human_dim = human_dim;
  Rng rng(mix_seed(cfg.seed, 0xae7a));
  add_mlp(p.params, rng, human_prefix("enc"), human_dim, cfg.hidden, cfg.D_latent);
  add_mlp(p.params, rng, human_prefix("dec"), cfg.D_latent, cfg.hidden, human_dim);
  for (const auto& id : cfg.robots) {
    const auto it = chains.find(id);
    if (it == chains.end()) throw UsageError("robot chain '" + id + "' not provided");
    p.chains.emplace(id, it->second);
    add_mlp(p.params, rng, robot_prefix(id, "enc"), it->second.dof(), cfg.hidden, cfg.D_latent);
    add_mlp(p.params, rng, robot_prefix(id, "dec"), cfg.D_latent, cfg.hidden, it->second.dof());
  }
  p.params.round_to_f32();
  return p;
}

RetargetTraining train_shared_space(const std::vector<Pose>& human_poses,
                                    const std::map<std::string, std::vector<Pose>>& robot_samples,
                                    const std::map<std::string, KinematicChain>& chains,
                                    const SharedLatentConfig& cfg) {
  cfg.validate();
  if (human_poses.empty()) throw DataError("no human poses for retarget training");
  std::vector<Vector> human;
  for (const auto& p : human_poses) human.push_back(human_features(p, cfg.human_rep));
  std::map<std::string, std::vector<Vector>> robots;
  for (const auto& id : cfg.robots) {
    const auto it = robot_samples.find(id);
    if (it == robot_samples.end() || it->second.empty()) throw DataError("no samples for robot chain '" + id + "'");
    for (const auto& q : it->second) robots[id].push_back(q.values.col(0));
  }

  RetargetTraining out;
  out.params = init_retarget(cfg, chains, static_cast<int>(human[0].size()));
  for (const auto& [id, rows] : robots) {
    if (rows[0].size() != out.params.chains.at(id).dof()) {
      throw DataError("robot samples for '" + id + "' do not match the chain DOF");
    }
  }
  ag::AdamW opt(out.params.params, {cfg.lr, 0.9, 0.999, 1e-8, 0.0});
  Rng rng(mix_seed(cfg.seed, 0xba7c));
  const double nr = static_cast<double>(cfg.robots.size());

  auto draw = [&](const std::vector<Vector>& pool) {
    std::vector<Vector> b;
    for (int i = 0; i < cfg.batch_size; ++i) b.push_back(pool[rng.below(pool.size())]);
    return stack(b);
  };

  for (int step = 0; step < cfg.steps; ++step) {
    ag::Tape tape(&out.params.params);
    ag::Var xh = tape.constant(draw(human));
    ag::Var zh = mlp(tape, human_prefix("enc"), xh);
    ag::Var zh_target = tape.constant(zh.value());
    std::vector<ag::Var> rec{ag::mse(mlp(tape, human_prefix("dec"), zh), xh)};
    std::vector<ag::Var> cyc, align;
    for (const auto& id : cfg.robots) {
      ag::Var xr = tape.constant(draw(robots.at(id)));
      ag::Var zr = mlp(tape, robot_prefix(id, "enc"), xr);
      rec.push_back(ag::scale(ag::mse(mlp(tape, robot_prefix(id, "dec"), zr), xr), 1.0 / nr));
      ag::Var back = mlp(tape, robot_prefix(id, "enc"), mlp(tape, robot_prefix(id, "dec"), zh));
      cyc.push_back(ag::scale(ag::mse(back, zh_target), 1.0 / nr));
      align.push_back(ag::scale(moment_gap(tape, zh, zr), 1.0 / nr));
    }
    ag::Var l_rec = ag::sum(rec), l_cyc = ag::sum(cyc), l_align = ag::sum(align);
    ag::Var total = ag::sum({ag::scale(l_rec, cfg.w_reconstruction), ag::scale(l_cyc, cfg.w_cycle),
                             ag::scale(l_align, cfg.w_alignment)});
    const RetargetLogRow row{step, l_rec.scalar(), l_cyc.scalar(), l_align.scalar(), total.scalar()};
    if (!std::isfinite(row.total)) {
      std::ostringstream msg;
      msg << "retarget training diverged at step " << step << ": reconstruction=" << row.reconstruction
          << " cycle=" << row.cycle << " alignment=" << row.alignment;
      throw NumericError(msg.str());
    }
    out.log.push_back(row);
    tape.backward(total);
    ag::GradStore g(out.params.params);
    tape.accumulate(g);
    opt.step(out.params.params, g, cfg.lr);
  }
  out.params.trained = true;
  return out;
}

Vector encode_human(const RetargetParams& p, const Vector& features) {
  if (features.size() != p.human_dim) {
    throw DataError("human feature width " + std::to_string(features.size()) + " != " + std::to_string(p.human_dim));
  }
  return apply_mlp(p, human_prefix("enc"), features);
}

Vector decode_human(const RetargetParams& p, const Vector& z) { return apply_mlp(p, human_prefix("dec"), z); }

Vector encode_robot(const RetargetParams& p, const std::string& chain, const Vector& angles) {
  if (angles.size() != chain_of(p, chain).dof()) throw DataError("angle count does not match chain '" + chain + "'");
  return apply_mlp(p, robot_prefix(chain, "enc"), angles);
}

Vector decode_robot(const RetargetParams& p, const std::string& chain, const Vector& z) {
  chain_of(p, chain);
  return apply_mlp(p, robot_prefix(chain, "dec"), z);
}

RetargetOutput retarget_pose(const Pose& human_pose, const std::string& chain, const RetargetParams& p,
                             bool require_trained) {
  if (require_trained && !p.trained) throw UsageError("retarget parameters are untrained");
  const KinematicChain& kc = chain_of(p, chain);
  const Vector q = decode_robot(p, chain, encode_human(p, human_features(human_pose, p.config.human_rep)));
  RetargetOutput out{Pose{Matrix(kc.dof(), 1), Representation::joint_angle}, 0};
  for (int i = 0; i < kc.dof(); ++i) {
    const ChainJoint& cj = kc.joints()[static_cast<size_t>(i)];
    const double c = std::clamp(q[i], cj.lo, cj.hi);
    if (c != q[i]) ++out.clamped;
    out.angles.values(i, 0) = c;
  }
  return out;
}

std::vector<RetargetRow> evaluate_retarget(const RetargetParams& p, const RetargetTestSet& test) {
  std::vector<RetargetRow> rows;
  if (!test.human.empty()) {
    double acc = 0.0;
    for (const auto& h : test.human) {
      const Vector f = human_features(h, p.config.human_rep);
      acc += (decode_human(p, encode_human(p, f)) - f).squaredNorm() / static_cast<double>(f.size());
    }
    rows.push_back({"reconstruction_mse", "human", acc / static_cast<double>(test.human.size())});
  }
  for (const auto& id : p.config.robots) {
    const KinematicChain& kc = chain_of(p, id);
    const auto it = test.robots.find(id);
    if (it != test.robots.end() && !it->second.empty()) {
      double acc = 0.0;
      for (const auto& q : it->second) {
        const Vector a = q.values.col(0);
        acc += (decode_robot(p, id, encode_robot(p, id, a)) - a).squaredNorm() / kc.dof();
      }
      rows.push_back({"reconstruction_mse", id, acc / static_cast<double>(it->second.size())});
    }
    if (!test.human.empty()) {
      double cyc = 0.0;
      int clamped = 0;
      for (const auto& h : test.human) {
        const Vector z = encode_human(p, human_features(h, p.config.human_rep));
        const RetargetOutput r = retarget_pose(h, id, p, false);
        clamped += r.clamped;
        cyc += (encode_robot(p, id, r.angles.values.col(0)) - z).squaredNorm() / static_cast<double>(z.size());
      }
      const double n = static_cast<double>(test.human.size());
      rows.push_back({"cycle_error", id, cyc / n});
      rows.push_back({"clamp_rate", id, clamped / (n * kc.dof())});
    }
  }
  return rows;
}

double retarget_value(const std::vector<RetargetRow>& rows, const std::string& quantity,
                      const std::string& embodiment) {
  for (const auto& r : rows) {
    if (r.quantity == quantity && r.embodiment == embodiment) return r.value;
  }
  throw DataError("no " + quantity + " row for " + embodiment);
}

std::string retarget_csv(const std::vector<RetargetRow>& rows) {
  std::ostringstream out;
  out << "quantity,embodiment,value\n";
  char buf[64];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%.17g", r.value);
    out << r.quantity << "," << r.embodiment << "," << buf << "\n";
  }
  return out.str();
}

void save_retarget(const std::filesystem::path& dir, const RetargetParams& p) {
  json cfg = p.config;
  cfg["human_dim"] = p.human_dim;
  json chains = json::object();
  for (const auto& [id, c] : p.chains) chains[id] = json::parse(chain_to_json_text(c));
  save_archive(dir, Archive{"retarget", cfg, config_hash(cfg), p.params,
                            json{{"trained", p.trained}, {"chains", chains}}});
}

RetargetParams load_retarget(const std::filesystem::path& dir, const std::map<std::string, KinematicChain>& chains) {
  Archive a = load_archive(dir);
  if (a.kind != "retarget") throw DataError(dir.string() + " holds a '" + a.kind + "' archive, not a retarget model");
  RetargetParams p;
  json cfg = a.config;
  p.human_dim = cfg.at("human_dim").get<int>();
  cfg.erase("human_dim");
  p.config = cfg.get<SharedLatentConfig>();
  const RetargetParams fresh = init_retarget(p.config, chains, p.human_dim);
  p.chains = fresh.chains;
  if (fresh.params.size() != a.params.size()) throw DataError("retarget archive does not match its config");
  for (size_t i = 0; i < a.params.size(); ++i) {
    const auto& want = fresh.params.entries()[i];
    const auto& have = a.params.entries()[i];
    if (want.name != have.name || want.value.rows() != have.value.rows() || want.value.cols() != have.value.cols()) {
      throw DataError("retarget archive tensor '" + have.name + "' does not match its config");
    }
  }
  p.params = std::move(a.params);
  p.trained = a.extra.value("trained", false);
  return p;
}

}  // namespace echo
