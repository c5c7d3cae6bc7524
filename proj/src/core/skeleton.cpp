#include "echo/core/skeleton.hpp"

#include "echo/errors.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>
#include <sstream>

namespace echo {

using nlohmann::json;

namespace {

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

SkeletonSpec skeleton_from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
    auto names = j.at("joint_names").get<std::vector<std::string>>();
    auto parents = j.at("parents").get<std::vector<int>>();
    const auto& offs = j.at("rest_offsets_mm");
    Matrix offsets(static_cast<Eigen::Index>(offs.size()), 3);
    for (size_t r = 0; r < offs.size(); ++r) {
      auto row = offs[r].get<std::vector<double>>();
      if (row.size() != 3) throw DataError("rest offset row " + std::to_string(r) + " is not xyz");
      for (int c = 0; c < 3; ++c) offsets(static_cast<Eigen::Index>(r), c) = row[c];
    }
    return SkeletonSpec(std::move(names), std::move(parents), std::move(offsets));
  } catch (const json::exception& e) {
    throw DataError(std::string("skeleton parse failure: ") + e.what());
  }
}

std::string skeleton_to_json_text(const SkeletonSpec& skeleton) {
  json j;
  j["joint_names"] = skeleton.joint_names();
  j["parents"] = skeleton.parents();
  json offs = json::array();
  for (int r = 0; r < skeleton.joints(); ++r) {
    offs.push_back({skeleton.rest_offsets()(r, 0), skeleton.rest_offsets()(r, 1),
                    skeleton.rest_offsets()(r, 2)});
  }
  j["rest_offsets_mm"] = std::move(offs);
  return j.dump(2) + "\n";
}

SkeletonSpec load_skeleton(const std::filesystem::path& path) {
  return skeleton_from_json_text(read_text(path));
}

void save_skeleton(const SkeletonSpec& skeleton, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << skeleton_to_json_text(skeleton);
}

Matrix rest_pose(const SkeletonSpec& skeleton) {
  Matrix pos(skeleton.joints(), 3);
  for (int j = 0; j < skeleton.joints(); ++j) {
    const int p = skeleton.parents()[j];
    pos.row(j) = skeleton.rest_offsets().row(j);
    if (p >= 0) pos.row(j) += pos.row(p);
  }
  return pos;
}

Vector bone_lengths(const Pose& pose, const SkeletonSpec& skeleton) {
  if (pose.rep != Representation::euclidean_xyz) {
    throw DataError("bone_lengths needs an euclidean_xyz pose");
  }
  if (pose.joints() != skeleton.joints()) {
    throw DataError("pose has " + std::to_string(pose.joints()) + " joints, skeleton has " +
                    std::to_string(skeleton.joints()));
  }
  Vector out(skeleton.joints() - 1);
  for (int j = 1; j < skeleton.joints(); ++j) {
    out[j - 1] = (pose.values.row(j) - pose.values.row(skeleton.parents()[j])).norm();
  }
  return out;
}

std::vector<ValidationIssue> validate_motion(const Motion& motion) {
  std::vector<ValidationIssue> issues;
  if (!(motion.fps() > 0.0)) {
    issues.push_back({ValidationIssue::Kind::bad_fps, -1, -1,
                      "fps must be positive, got " + std::to_string(motion.fps())});
  }
  const int n = motion.coords();
  for (int t = 0; t < motion.frames(); ++t) {
    for (int j = 0; j < motion.joints(); ++j) {
      bool finite = true;
      for (int c = 0; c < n; ++c) finite = finite && std::isfinite(motion.data()(t, j * n + c));
      if (!finite) {
        issues.push_back({ValidationIssue::Kind::non_finite, t, j,
                          "non-finite value at frame " + std::to_string(t) + ", joint " +
                              std::to_string(j)});
      }
    }
  }
  return issues;
}

std::vector<ValidationIssue> validate_motion(const Motion& motion, const SkeletonSpec& skeleton) {
  auto issues = validate_motion(motion);
  if (motion.joints() != skeleton.joints()) {
    issues.push_back({ValidationIssue::Kind::joint_mismatch, -1, -1,
                      "motion has J=" + std::to_string(motion.joints()) + " but skeleton has J=" +
                          std::to_string(skeleton.joints())});
  }
  if (motion.representation() != Representation::euclidean_xyz) {
    issues.push_back({ValidationIssue::Kind::representation, -1, -1,
                      "skeleton motions must be euclidean_xyz"});
  }
  return issues;
}

SkeletonSpec toy_skeleton() {
  Matrix offsets(5, 3);
  offsets << 0.0, 900.0, 0.0,  //
      0.0, 300.0, 0.0,         //
      0.0, 250.0, 0.0,         //
      -200.0, 100.0, 0.0,      //
      200.0, 100.0, 0.0;
  return SkeletonSpec({"pelvis", "spine", "head", "left_hand", "right_hand"}, {-1, 0, 1, 1, 1},
                      offsets);
}

}  // namespace echo
