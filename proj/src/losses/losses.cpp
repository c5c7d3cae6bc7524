#include "echo/losses/losses.hpp"

#include "echo/core/skeleton.hpp"
#include "echo/errors.hpp"
#include "echo/kernels/kernels.hpp"

#include <cmath>

namespace echo {

void LossWeights::validate() const {
  for (double w : {w_ind, w_soc, w_int, w_bone}) {
    if (!std::isfinite(w) || w < 0.0) throw UsageError("loss weights must be finite and >= 0");
  }
}

std::vector<int> supervised_frames(int T, int observed_len, bool supervise_observed) {
  std::vector<int> rows;
  for (int t = supervise_observed ? 0 : observed_len; t < T; ++t) rows.push_back(t);
  if (rows.empty()) throw DataError("no supervised frames");
  return rows;
}

namespace {

void require_xyz(const Motion& m, const char* what) {
  if (m.representation() != Representation::euclidean_xyz) {
    throw DataError(std::string(what) + " needs euclidean_xyz motions");
  }
}

void require_same_frames(const Motion& a, const Motion& b, const char* what) {
  if (a.frames() != b.frames()) {
    throw DataError(std::string(what) + ": frame counts differ (" + std::to_string(a.frames()) +
                    " vs " + std::to_string(b.frames()) + ")");
  }
}

}  // namespace

std::vector<Matrix> distance_matrix(const Motion& x0, const Motion& x1) {
  require_xyz(x0, "distance_matrix");
  require_xyz(x1, "distance_matrix");
  require_same_frames(x0, x1, "distance_matrix");
  const Matrix flat = kernels::omp::distance_matrix(x0.data(), x1.data());
  std::vector<Matrix> out;
  out.reserve(static_cast<size_t>(x0.frames()));
  for (int t = 0; t < x0.frames(); ++t) {
    Matrix m(x0.joints(), x1.joints());
    for (int j = 0; j < x0.joints(); ++j) {
      for (int k = 0; k < x1.joints(); ++k) m(j, k) = flat(t, j * x1.joints() + k);
    }
    out.push_back(std::move(m));
  }
  return out;
}

double motion_mse(const Motion& pred, const Motion& target, const std::vector<int>& frames) {
  if (pred.width() != target.width() || pred.representation() != target.representation()) {
    throw DataError("prediction width " + std::to_string(pred.width()) + " != target width " +
                    std::to_string(target.width()));
  }
  require_same_frames(pred, target, "motion_mse");
  double acc = 0.0;
  for (int t : frames) acc += (pred.data().row(t) - target.data().row(t)).squaredNorm();
  return acc / (static_cast<double>(frames.size()) * pred.width());
}

double loss_individual(const EchoModel& model, int agent, const LatentMotion& e_ind_hat,
                       const Motion& target, const Pose& x_ref, const std::vector<int>& frames) {
  return motion_mse(model.decode_poses(e_ind_hat, x_ref, agent, target.fps()), target, frames);
}

double loss_social(const EchoModel& model, int agent, const LatentMotion& e_soc_hat,
                   const Motion& target, const Pose& x_ref, const std::vector<int>& frames) {
  return motion_mse(model.decode_poses(e_soc_hat, x_ref, agent, target.fps()), target, frames);
}

double loss_interaction(const Motion& pred0, const Motion& pred1, const Motion& gt0,
                        const Motion& gt1, const std::vector<int>& frames) {
  for (const Motion* m : {&pred0, &pred1, &gt0, &gt1}) require_xyz(*m, "loss_interaction");
  require_same_frames(pred0, gt0, "loss_interaction");
  require_same_frames(pred1, gt1, "loss_interaction");
  require_same_frames(pred0, pred1, "loss_interaction");
  if (pred0.joints() != gt0.joints() || pred1.joints() != gt1.joints()) {
    throw DataError("loss_interaction: joint counts differ between prediction and ground truth");
  }
  return kernels::omp::interaction_loss(pred0.data(), pred1.data(), gt0.data(), gt1.data(), frames,
                                        false)
      .loss;
}

double loss_bone(const Motion& pred, const Vector& reference_lengths, const SkeletonSpec& skeleton,
                 const std::vector<int>& frames) {
  require_xyz(pred, "loss_bone");
  if (pred.joints() != skeleton.joints() || reference_lengths.size() != skeleton.joints() - 1) {
    throw DataError("loss_bone: prediction has J=" + std::to_string(pred.joints()) +
                    ", skeleton J=" + std::to_string(skeleton.joints()));
  }
  for (int t : frames) {
    if (!pred.data().row(t).allFinite()) {
      throw NumericError("loss_bone: non-finite prediction at frame " + std::to_string(t));
    }
  }
  return kernels::omp::bone_loss(pred.data(), reference_lengths, skeleton.parents(), frames, false).loss;
}

Vector reference_bone_lengths(const Motion& observed, const SkeletonSpec& skeleton) {
  Vector acc = Vector::Zero(skeleton.joints() - 1);
  for (int t = 0; t < observed.frames(); ++t) acc += bone_lengths(observed.pose(t), skeleton);
  return acc / observed.frames();
}

LossBreakdown total_loss(const LossComponents& c, const LossWeights& w) {
  w.validate();
  LossBreakdown b;
  b.l_ind = 0.5 * (c.l_ind[0] + c.l_ind[1]);
  b.l_soc = 0.5 * (c.l_soc[0] + c.l_soc[1]);
  int bones = 0;
  for (int i = 0; i < 2; ++i) {
    if (c.l_bone[i] && c.kinds[i] == Representation::euclidean_xyz) {
      b.l_bone += *c.l_bone[i];
      ++bones;
    }
  }
  if (bones > 0) b.l_bone /= bones;
  const bool both_human = c.kinds[0] == Representation::euclidean_xyz &&
                          c.kinds[1] == Representation::euclidean_xyz;
  if (c.l_int && both_human) b.l_int = *c.l_int;
  b.total = w.w_ind * b.l_ind + w.w_soc * b.l_soc + w.w_int * b.l_int + w.w_bone * b.l_bone;
  return b;
}

// ---- graph ops ----------------------------------------------------------------

ag::Var interaction_loss_op(ag::Var pred0, ag::Var pred1, const Matrix& gt0, const Matrix& gt1,
                            const std::vector<int>& frames) {
  auto r = kernels::omp::interaction_loss(pred0.value(), pred1.value(), gt0, gt1, frames, true);
  Matrix out(1, 1);
  out(0, 0) = r.loss;
  const int i0 = pred0.id, i1 = pred1.id;
  return pred0.tape->record(std::move(out), {pred0, pred1},
                            [i0, i1, g0 = std::move(r.grad0), g1 = std::move(r.grad1)](
                                ag::Tape& t, const Matrix& g) {
                              t.add_grad(i0, g(0, 0) * g0);
                              t.add_grad(i1, g(0, 0) * g1);
                            });
}

ag::Var bone_loss_op(ag::Var pred, const Vector& reference, const std::vector<int>& parents,
                     const std::vector<int>& frames) {
  auto r = kernels::omp::bone_loss(pred.value(), reference, parents, frames, true);
  Matrix out(1, 1);
  out(0, 0) = r.loss;
  const int ip = pred.id;
  return pred.tape->record(std::move(out), {pred},
                           [ip, gr = std::move(r.grad)](ag::Tape& t, const Matrix& g) {
                             t.add_grad(ip, g(0, 0) * gr);
                           });
}

ag::Var frames_mse_op(ag::Var pred, const Matrix& target, const std::vector<int>& frames) {
  if (static_cast<int>(frames.size()) == pred.rows()) return ag::mse(pred, pred.tape->constant(target));
  Matrix sel(static_cast<Eigen::Index>(frames.size()), target.cols());
  for (size_t r = 0; r < frames.size(); ++r) sel.row(static_cast<Eigen::Index>(r)) = target.row(frames[r]);
  return ag::mse(ag::gather_rows(pred, frames), pred.tape->constant(std::move(sel)));
}

SampleLoss sample_loss(ag::Tape& tape, const EchoModel& model, const TrainingSample& sample,
                       const LossWeights& weights, const AgentSkeletons& skeletons,
                       bool supervise_observed, const ForwardOptions& opt) {
  weights.validate();
  const auto g = model.forward(tape, sample, opt);
  const auto frames = supervised_frames(sample.frames(), sample.observed_len, supervise_observed);

  std::vector<ag::Var> ind, soc, bone;
  LossComponents comp;
  for (int i = 0; i < 2; ++i) {
    const Motion& target = sample.target[i];
    comp.kinds[i] = target.representation();
    ind.push_back(frames_mse_op(g.pred_ind[i], target.data(), frames));
    soc.push_back(frames_mse_op(g.pred[i], target.data(), frames));
    comp.l_ind[i] = ind.back().scalar();
    comp.l_soc[i] = soc.back().scalar();
    if (target.representation() == Representation::euclidean_xyz && skeletons[i] != nullptr) {
      const SkeletonSpec& sk = *skeletons[i];
      if (sk.joints() != target.joints()) {
        throw DataError("agent " + std::to_string(i) + " skeleton has J=" + std::to_string(sk.joints()) +
                        " but motion has J=" + std::to_string(target.joints()));
      }
      const Vector ref = reference_bone_lengths(target.slice(0, sample.observed_len), sk);
      bone.push_back(bone_loss_op(g.pred[i], ref, sk.parents(), frames));
      comp.l_bone[i] = bone.back().scalar();
    }
  }
  const bool both_human = comp.kinds[0] == Representation::euclidean_xyz &&
                          comp.kinds[1] == Representation::euclidean_xyz;
  std::optional<ag::Var> inter;
  if (both_human) {
    inter = interaction_loss_op(g.pred[0], g.pred[1], sample.target[0].data(),
                                sample.target[1].data(), frames);
    comp.l_int = inter->scalar();
  }

  SampleLoss out;
  out.values = total_loss(comp, weights);
  std::vector<ag::Var> terms;
  terms.push_back(ag::scale(ag::add(ind[0], ind[1]), 0.5 * weights.w_ind));
  terms.push_back(ag::scale(ag::add(soc[0], soc[1]), 0.5 * weights.w_soc));
  if (inter) terms.push_back(ag::scale(*inter, weights.w_int));
  if (!bone.empty()) {
    terms.push_back(ag::scale(ag::sum(bone), weights.w_bone / static_cast<double>(bone.size())));
  }
  out.total = ag::sum(terms);
  return out;
}

}  // namespace echo
