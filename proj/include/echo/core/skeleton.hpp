#pragma once

#include "echo/core/types.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace echo {

SkeletonSpec load_skeleton(const std::filesystem::path& path);
void save_skeleton(const SkeletonSpec& skeleton, const std::filesystem::path& path);
SkeletonSpec skeleton_from_json_text(const std::string& text);
std::string skeleton_to_json_text(const SkeletonSpec& skeleton);

/// Joint positions of the rest pose (offsets composed along the tree), J x 3.
Matrix rest_pose(const SkeletonSpec& skeleton);

/// Distance between every non-root joint and its parent, in skeleton order.
Vector bone_lengths(const Pose& pose, const SkeletonSpec& skeleton);

struct ValidationIssue {
  enum class Kind { non_finite, joint_mismatch, bad_fps, representation } kind;
  int frame = -1;
  int joint = -1;
  std::string message;
};

/// Empty result means the motion is usable with this skeleton.
std::vector<ValidationIssue> validate_motion(const Motion& motion, const SkeletonSpec& skeleton);

/// Skeleton-free checks (finite values, fps > 0).
std::vector<ValidationIssue> validate_motion(const Motion& motion);

/// Five-joint toy body used by the synthetic generator and the tiny tests:
/// pelvis, spine, head, left hand, right hand.
SkeletonSpec toy_skeleton();

}  // namespace echo
