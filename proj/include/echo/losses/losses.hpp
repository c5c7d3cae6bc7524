#pragma once

#include "echo/autograd/tape.hpp"
#include "echo/core/types.hpp"
#include "echo/datasets/datasets.hpp"
#include "echo/model/echo_model.hpp"

#include <array>
#include <optional>
#include <vector>

namespace echo {

struct LossWeights {
  double w_ind = 1.0;
  double w_soc = 1.0;
  double w_int = 1.0;
  double w_bone = 1.0;

  /// Throws UsageError for negative or non-finite weights.
  void validate() const;
};

/// Frames a loss is evaluated on: all T frames, or only the future N..T-1.
std::vector<int> supervised_frames(int T, int observed_len, bool supervise_observed);

/// T matrices of J0 x J1 distances between agent 0 and agent 1 joints.
std::vector<Matrix> distance_matrix(const Motion& x0, const Motion& x1);

/// Mean squared error over every element of the selected frames.
double motion_mse(const Motion& pred, const Motion& target, const std::vector<int>& frames);

/// MSE between the decoded individual latent and the ground truth.
double loss_individual(const EchoModel& model, int agent, const LatentMotion& e_ind_hat,
                       const Motion& target, const Pose& x_ref, const std::vector<int>& frames);
/// Same functional form on the socially refined latent.
double loss_social(const EchoModel& model, int agent, const LatentMotion& e_soc_hat,
                   const Motion& target, const Pose& x_ref, const std::vector<int>& frames);
double loss_interaction(const Motion& pred0, const Motion& pred1, const Motion& gt0,
                        const Motion& gt1, const std::vector<int>& frames);
double loss_bone(const Motion& pred, const Vector& reference_lengths, const SkeletonSpec& skeleton,
                 const std::vector<int>& frames);

/// Per-subject reference: mean bone lengths over the given observed frames.
Vector reference_bone_lengths(const Motion& observed, const SkeletonSpec& skeleton);

/// Per-agent loss terms of one sample. Terms that do not apply (robot agents,
/// missing skeleton) are empty.
struct LossComponents {
  std::array<double, 2> l_ind{};
  std::array<double, 2> l_soc{};
  std::array<std::optional<double>, 2> l_bone;
  std::optional<double> l_int;
  std::array<Representation, 2> kinds{Representation::euclidean_xyz, Representation::euclidean_xyz};
};

struct LossBreakdown {
  double l_ind = 0.0;
  double l_soc = 0.0;
  double l_int = 0.0;
  double l_bone = 0.0;
  double total = 0.0;
};

/// w_ind*L_ind + w_soc*L_soc + w_int*L_int + w_bone*L_bone, with L_ind, L_soc
/// and L_bone averaged over the agents they apply to. L_int and L_bone never
/// include joint-angle agents.
LossBreakdown total_loss(const LossComponents& components, const LossWeights& weights);

// ---- graph versions used for training ----------------------------------------

ag::Var interaction_loss_op(ag::Var pred0, ag::Var pred1, const Matrix& gt0, const Matrix& gt1,
                            const std::vector<int>& frames);
ag::Var bone_loss_op(ag::Var pred, const Vector& reference, const std::vector<int>& parents,
                     const std::vector<int>& frames);
ag::Var frames_mse_op(ag::Var pred, const Matrix& target, const std::vector<int>& frames);

/// Skeletons per agent for the bone loss (nullptr: no bone term for it).
using AgentSkeletons = std::array<const SkeletonSpec*, 2>;

struct SampleLoss {
  ag::Var total;
  LossBreakdown values;
};

/// Forward pass plus every loss term on one sample, recorded on `tape`.
SampleLoss sample_loss(ag::Tape& tape, const EchoModel& model, const TrainingSample& sample,
                       const LossWeights& weights, const AgentSkeletons& skeletons,
                       bool supervise_observed, const ForwardOptions& opt = {});

}  // namespace echo
