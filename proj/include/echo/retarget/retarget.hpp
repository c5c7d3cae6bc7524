#pragma once

#include "echo/autograd/tape.hpp"
#include "echo/core/types.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace echo {

// ---- kinematics ----------------------------------------------------------------

/// Marker positions (M x 3, mm) for joint angles (dof x 1, joint_angle).
/// Throws DataError on a DOF mismatch or an angle outside its limits.
Matrix forward_kinematics(const KinematicChain& chain, const Pose& angles);

/// `count` poses drawn uniformly within the joint limits.
std::vector<Pose> sample_joint_angles(const KinematicChain& chain, uint64_t seed, int count);

// ---- shared latent space -----------------------------------------------------------

enum class HumanRep { local_rotations, euclidean_xyz };

std::string to_string(HumanRep r);
HumanRep human_rep_from_string(const std::string& s);

struct SharedLatentConfig {
  int D_latent = 16;
  int hidden = 64;
  /// Chain ids; each must be present in the chain map passed to training.
  std::vector<std::string> robots;
  HumanRep human_rep = HumanRep::local_rotations;
  double w_reconstruction = 1.0;
  double w_cycle = 1.0;
  double w_alignment = 1.0;
  int steps = 1500;
  int batch_size = 64;
  double lr = 2e-3;
  uint64_t seed = 0;

  void validate() const;
};

void to_json(nlohmann::json& j, const SharedLatentConfig& c);
void from_json(const nlohmann::json& j, SharedLatentConfig& c);

/// Human pose as a feature vector for the human encoder.
/// local_rotations: a joint_angle Pose holding 3 axis-angle components per
/// non-root joint. euclidean_xyz: joint positions relative to the root, in m.
Vector human_features(const Pose& pose, HumanRep rep);

/// Random human poses for the toy pipeline: per non-root joint a random axis
/// and an angle in [-amplitude, amplitude]; xyz poses are obtained by posing
/// the skeleton.
std::vector<Pose> sample_human_poses(const SkeletonSpec& skeleton, HumanRep rep, uint64_t seed,
                                     int count, double amplitude_rad = 0.6);

/// Encoders and decoders per embodiment around one latent space.
struct RetargetParams {
  SharedLatentConfig config;
  std::map<std::string, KinematicChain> chains;
  int human_dim = 0;
  ag::ParamStore params;
  bool trained = false;
};

/// Freshly initialized (untrained) parameters.
RetargetParams init_retarget(const SharedLatentConfig& cfg, const std::map<std::string, KinematicChain>& chains,
                             int human_dim);

struct RetargetLogRow {
  int step = 0;
  double reconstruction = 0.0;
  double cycle = 0.0;
  double alignment = 0.0;
  double total = 0.0;
};

struct RetargetTraining {
  RetargetParams params;
  std::vector<RetargetLogRow> log;
};

RetargetTraining train_shared_space(const std::vector<Pose>& human_poses,
                                    const std::map<std::string, std::vector<Pose>>& robot_samples,
                                    const std::map<std::string, KinematicChain>& chains,
                                    const SharedLatentConfig& cfg);

Vector encode_human(const RetargetParams& p, const Vector& features);
Vector decode_human(const RetargetParams& p, const Vector& z);
Vector encode_robot(const RetargetParams& p, const std::string& chain, const Vector& angles);
Vector decode_robot(const RetargetParams& p, const std::string& chain, const Vector& z);

struct RetargetOutput {
  Pose angles;
  int clamped = 0;
};

/// D_robot(E_human(p)) clamped to the joint limits.
RetargetOutput retarget_pose(const Pose& human_pose, const std::string& chain, const RetargetParams& p,
                             bool require_trained = true);

struct RetargetTestSet {
  std::vector<Pose> human;
  std::map<std::string, std::vector<Pose>> robots;
};

struct RetargetRow {
  std::string quantity;
  std::string embodiment;
  double value = 0.0;
};

/// reconstruction_mse per embodiment, cycle_error and clamp_rate per robot.
std::vector<RetargetRow> evaluate_retarget(const RetargetParams& p, const RetargetTestSet& test);
double retarget_value(const std::vector<RetargetRow>& rows, const std::string& quantity,
                      const std::string& embodiment);
std::string retarget_csv(const std::vector<RetargetRow>& rows);

void save_retarget(const std::filesystem::path& dir, const RetargetParams& p);
/// Chains are taken from `chains` by id and must cover the stored robots.
RetargetParams load_retarget(const std::filesystem::path& dir,
                             const std::map<std::string, KinematicChain>& chains);

}  // namespace echo
