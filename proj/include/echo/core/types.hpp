#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <array>
#include <string>
#include <string_view>
#include <vector>

namespace echo {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// How a joint is parameterized: xyz position in mm (n=3) or a single joint
/// angle in radians (n=1).
enum class Representation { euclidean_xyz, joint_angle };

int coords_per_joint(Representation rep);
std::string_view to_string(Representation rep);
Representation representation_from_string(std::string_view name);

/// Static human skeleton: joint names, parent indices (root = -1, index 0) and
/// rest offsets from each joint's parent, in millimeters.
///
/// Construction validates and re-indexes to topological order, so every
/// non-root joint has a parent with a smaller index.
class SkeletonSpec {
 public:
  SkeletonSpec(std::vector<std::string> joint_names, std::vector<int> parents,
               Matrix rest_offsets_mm);

  int joints() const { return static_cast<int>(names_.size()); }
  const std::vector<std::string>& joint_names() const { return names_; }
  const std::vector<int>& parents() const { return parents_; }
  /// J x 3, row j is the offset of joint j from its parent (row 0 is the root
  /// position in the rest pose).
  const Matrix& rest_offsets() const { return offsets_; }

  /// Rest bone lengths for joints 1..J-1.
  Vector rest_bone_lengths() const;

  bool operator==(const SkeletonSpec&) const = default;

 private:
  std::vector<std::string> names_;
  std::vector<int> parents_;
  Matrix offsets_;
};

/// A single pose: J x n values.
struct Pose {
  Matrix values;
  Representation rep = Representation::euclidean_xyz;

  int joints() const { return static_cast<int>(values.rows()); }
  /// Flattened row vector of length J*n, joint-major.
  Eigen::RowVectorXd flat() const;
  static Pose from_flat(const Eigen::RowVectorXd& flat, int joints, Representation rep);
};

/// Time-ordered poses stored as a T x (J*n) matrix; joint j coordinate c lives
/// in column j*n + c.
class Motion {
 public:
  Motion() = default;
  Motion(Matrix frames, int joints, Representation rep, double fps);

  int frames() const { return static_cast<int>(data_.rows()); }
  int joints() const { return joints_; }
  int coords() const { return coords_per_joint(rep_); }
  int width() const { return static_cast<int>(data_.cols()); }
  Representation representation() const { return rep_; }
  double fps() const { return fps_; }
  const Matrix& data() const { return data_; }

  Pose pose(int t) const;
  /// Position of joint j at frame t; euclidean_xyz only.
  Vec3 position(int t, int j) const;

  /// Frames [begin, end).
  Motion slice(int begin, int end) const;

  bool operator==(const Motion&) const;

 private:
  Matrix data_;
  int joints_ = 0;
  Representation rep_ = Representation::euclidean_xyz;
  double fps_ = 0.0;
};

/// A dyadic scene: exactly two agent motions sharing T and fps, a text intent,
/// and the number of observed frames N (frames 0..N-1 observed).
class SocialScene {
 public:
  static constexpr int kAgents = 2;

  SocialScene(std::array<Motion, kAgents> agents, std::string intent, int observed_len);
  /// Rejects anything but two agents.
  SocialScene(std::vector<Motion> agents, std::string intent, int observed_len);

  const Motion& agent(int i) const { return agents_.at(static_cast<size_t>(i)); }
  const std::array<Motion, kAgents>& agents() const { return agents_; }
  const std::string& intent() const { return intent_; }
  int observed_len() const { return observed_len_; }
  int frames() const { return agents_[0].frames(); }
  double fps() const { return agents_[0].fps(); }

  bool operator==(const SocialScene&) const = default;

 private:
  std::array<Motion, kAgents> agents_;
  std::string intent_;
  int observed_len_ = 0;
};

struct RigidTransform {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation_mm = Vec3::Zero();

  RigidTransform operator*(const RigidTransform& rhs) const {
    return {rotation * rhs.rotation, rotation * rhs.translation_mm + translation_mm};
  }
  Vec3 apply(const Vec3& p) const { return rotation * p + translation_mm; }
};

struct ChainJoint {
  Vec3 axis = Vec3::UnitZ();
  RigidTransform origin;  // parent joint frame -> this joint frame, before rotation
  double lo = 0.0;
  double hi = 0.0;
  int parent = -1;
};

/// A marker rigidly attached to a joint frame.
struct Marker {
  int joint = 0;
  Vec3 offset_mm = Vec3::Zero();
};

/// Revolute-only robot kinematic tree in topological order.
class KinematicChain {
 public:
  KinematicChain(std::vector<ChainJoint> joints, std::vector<Marker> end_effectors,
                 std::string name = {});

  int dof() const { return static_cast<int>(joints_.size()); }
  const std::vector<ChainJoint>& joints() const { return joints_; }
  const std::vector<Marker>& end_effectors() const { return markers_; }
  const std::string& name() const { return name_; }

 private:
  std::vector<ChainJoint> joints_;
  std::vector<Marker> markers_;
  std::string name_;
};

}  // namespace echo
