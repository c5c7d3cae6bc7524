#include "echo/core/types.hpp"

#include "echo/errors.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

namespace echo {

int coords_per_joint(Representation rep) {
  return rep == Representation::euclidean_xyz ? 3 : 1;
}

std::string_view to_string(Representation rep) {
  return rep == Representation::euclidean_xyz ? "euclidean_xyz" : "joint_angle";
}

Representation representation_from_string(std::string_view name) {
  if (name == "euclidean_xyz") return Representation::euclidean_xyz;
  if (name == "joint_angle") return Representation::joint_angle;
  throw DataError("unknown representation '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------

SkeletonSpec::SkeletonSpec(std::vector<std::string> joint_names, std::vector<int> parents,
                           Matrix rest_offsets_mm) {
  const auto count = joint_names.size();
  if (count == 0) throw DataError("skeleton has no joints");
  if (parents.size() != count || static_cast<size_t>(rest_offsets_mm.rows()) != count ||
      rest_offsets_mm.cols() != 3) {
    throw DataError("skeleton field sizes disagree: " + std::to_string(count) + " names, " +
                    std::to_string(parents.size()) + " parents, " +
                    std::to_string(rest_offsets_mm.rows()) + "x" +
                    std::to_string(rest_offsets_mm.cols()) + " offsets");
  }
  std::unordered_set<std::string> seen;
  for (const auto& n : joint_names) {
    if (!seen.insert(n).second) throw DataError("duplicate joint name '" + n + "'");
  }
  const int J = static_cast<int>(count);
  int roots = 0;
  for (int j = 0; j < J; ++j) {
    if (parents[j] == -1) {
      ++roots;
    } else if (parents[j] < 0 || parents[j] >= J || parents[j] == j) {
      throw DataError("joint '" + joint_names[j] + "' has invalid parent index " +
                      std::to_string(parents[j]));
    }
  }
  if (roots != 1) {
    throw DataError("skeleton must have exactly one root, found " + std::to_string(roots));
  }

  // Stable topological order: repeatedly place joints whose parent is placed.
  std::vector<int> order;
  std::vector<int> new_index(count, -1);
  order.reserve(count);
  while (static_cast<int>(order.size()) < J) {
    bool progress = false;
    for (int j = 0; j < J; ++j) {
      if (new_index[j] >= 0) continue;
      if (parents[j] == -1 || new_index[parents[j]] >= 0) {
        new_index[j] = static_cast<int>(order.size());
        order.push_back(j);
        progress = true;
      }
    }
    if (!progress) {
      for (int j = 0; j < J; ++j) {
        if (new_index[j] < 0) {
          throw DataError("joint '" + joint_names[j] +
                          "' is not reachable from the root (parents form a cycle); "
                          "topological order impossible");
        }
      }
    }
  }

  names_.resize(count);
  parents_.resize(count);
  offsets_.resize(J, 3);
  for (int k = 0; k < J; ++k) {
    const int j = order[k];
    names_[k] = joint_names[j];
    parents_[k] = parents[j] == -1 ? -1 : new_index[parents[j]];
    offsets_.row(k) = rest_offsets_mm.row(j);
  }
  if (!offsets_.allFinite()) throw DataError("skeleton rest offsets contain NaN/Inf");
  for (int k = 1; k < J; ++k) {
    if (!(offsets_.row(k).norm() > 0.0)) {
      throw DataError("joint '" + names_[k] + "' has non-positive rest bone length");
    }
  }
}

Vector SkeletonSpec::rest_bone_lengths() const {
  Vector out(joints() - 1);
  for (int j = 1; j < joints(); ++j) out[j - 1] = offsets_.row(j).norm();
  return out;
}

// ---------------------------------------------------------------------------

Eigen::RowVectorXd Pose::flat() const {
  Eigen::RowVectorXd out(values.size());
  for (Eigen::Index j = 0; j < values.rows(); ++j) {
    for (Eigen::Index c = 0; c < values.cols(); ++c) out[j * values.cols() + c] = values(j, c);
  }
  return out;
}

Pose Pose::from_flat(const Eigen::RowVectorXd& flat, int joints, Representation rep) {
  const int n = coords_per_joint(rep);
  if (flat.size() != joints * n) {
    throw DataError("pose width " + std::to_string(flat.size()) + " != J*n = " +
                    std::to_string(joints * n));
  }
  Pose p{Matrix(joints, n), rep};
  for (int j = 0; j < joints; ++j) {
    for (int c = 0; c < n; ++c) p.values(j, c) = flat[j * n + c];
  }
  return p;
}

// ---------------------------------------------------------------------------

Motion::Motion(Matrix frames, int joints, Representation rep, double fps)
    : data_(std::move(frames)), joints_(joints), rep_(rep), fps_(fps) {
  if (joints <= 0) throw DataError("motion must have at least one joint");
  if (data_.cols() != joints * coords_per_joint(rep)) {
    throw DataError("motion width " + std::to_string(data_.cols()) + " != J*n = " +
                    std::to_string(joints * coords_per_joint(rep)));
  }
}

Pose Motion::pose(int t) const {
  return Pose::from_flat(data_.row(t), joints_, rep_);
}

Vec3 Motion::position(int t, int j) const {
  return data_.block<1, 3>(t, 3 * j).transpose();
}

Motion Motion::slice(int begin, int end) const {
  if (begin < 0 || end > frames() || begin > end) throw DataError("motion slice out of range");
  return Motion(data_.middleRows(begin, end - begin), joints_, rep_, fps_);
}

bool Motion::operator==(const Motion& o) const {
  return joints_ == o.joints_ && rep_ == o.rep_ && fps_ == o.fps_ &&
         data_.rows() == o.data_.rows() && data_.cols() == o.data_.cols() &&
         data_ == o.data_;
}

// ---------------------------------------------------------------------------

SocialScene::SocialScene(std::array<Motion, kAgents> agents, std::string intent, int observed_len)
    : agents_(std::move(agents)), intent_(std::move(intent)), observed_len_(observed_len) {
  const Motion& a = agents_[0];
  const Motion& b = agents_[1];
  if (a.frames() != b.frames()) {
    throw DataError("agent frame counts differ: " + std::to_string(a.frames()) + " vs " +
                    std::to_string(b.frames()));
  }
  if (a.fps() != b.fps()) throw DataError("agent fps values differ");
  if (!(a.fps() > 0.0)) throw DataError("scene fps must be positive");
  if (observed_len < 1 || observed_len >= a.frames()) {
    throw DataError("observed_len " + std::to_string(observed_len) + " outside [1, " +
                    std::to_string(a.frames()) + ")");
  }
}

namespace {
std::array<Motion, SocialScene::kAgents> to_pair(std::vector<Motion> agents) {
  if (agents.size() != SocialScene::kAgents) {
    throw DataError("scene must be dyadic (2 agents), got " + std::to_string(agents.size()));
  }
  return {std::move(agents[0]), std::move(agents[1])};
}
}  // namespace

SocialScene::SocialScene(std::vector<Motion> agents, std::string intent, int observed_len)
    : SocialScene(to_pair(std::move(agents)), std::move(intent), observed_len) {}

// ---------------------------------------------------------------------------

KinematicChain::KinematicChain(std::vector<ChainJoint> joints, std::vector<Marker> end_effectors,
                               std::string name)
    : joints_(std::move(joints)), markers_(std::move(end_effectors)), name_(std::move(name)) {
  if (joints_.empty()) throw DataError("kinematic chain has no joints");
  for (size_t j = 0; j < joints_.size(); ++j) {
    const auto& jt = joints_[j];
    const std::string label = "chain joint " + std::to_string(j);
    if (std::abs(jt.axis.norm() - 1.0) > 1e-9) {
      throw DataError(label + ": axis is not unit-norm (|axis| = " +
                      std::to_string(jt.axis.norm()) + ")");
    }
    if (!(jt.lo < jt.hi)) throw DataError(label + ": joint limits inverted (lo >= hi)");
    if (jt.parent >= static_cast<int>(j) || jt.parent < -1) {
      throw DataError(label + ": parent must precede the joint (topological order)");
    }
    if (!jt.origin.rotation.allFinite() || !jt.origin.translation_mm.allFinite()) {
      throw DataError(label + ": origin transform not finite");
    }
  }
  for (const auto& m : markers_) {
    if (m.joint < 0 || m.joint >= dof()) {
      throw DataError("end effector references missing joint " + std::to_string(m.joint));
    }
  }
}

}  // namespace echo
