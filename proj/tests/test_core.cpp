#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "echo/core/chain.hpp"
#include "echo/core/skeleton.hpp"
#include "echo/errors.hpp"
#include "test_util.hpp"

#include <filesystem>
#include <numbers>

using namespace echo;
using echo::testing::data_path;

namespace {

SkeletonSpec two_joint() {
  Matrix off(2, 3);
  off << 0, 0, 0, 0, 0, 100;
  return SkeletonSpec({"root", "child"}, {-1, 0}, off);
}

Pose xyz_pose(const Matrix& m) { return Pose{m, Representation::euclidean_xyz}; }

}  // namespace

TEST_CASE("two-joint skeleton has one 100 mm bone") {
  const auto sk = skeleton_from_json_text(
      R"({"joint_names":["root","child"],"parents":[-1,0],"rest_offsets_mm":[[0,0,0],[0,0,100]]})");
  CHECK(sk.joints() == 2);
  REQUIRE(sk.rest_bone_lengths().size() == 1);
  CHECK(sk.rest_bone_lengths()(0) == 100.0);
}

TEST_CASE("parent cycle is rejected with the joint name") {
  Matrix off = Matrix::Ones(3, 3);
  try {
    SkeletonSpec({"root", "a", "b"}, {-1, 2, 1}, off);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("topological") != std::string::npos);
    CHECK(msg.find("'a'") != std::string::npos);
  }
}

TEST_CASE("non-positive bone names the joint") {
  Matrix off(2, 3);
  off << 0, 0, 0, 0, 0, 0;
  CHECK_THROWS_WITH_AS(SkeletonSpec({"root", "tip"}, {-1, 0}, off), doctest::Contains("'tip'"), DataError);
}

TEST_CASE("skeletons are re-indexed so parents come first") {
  Matrix off(3, 3);
  off << 0, 0, 10, 0, 0, 0, 0, 20, 0;
  const SkeletonSpec sk({"leaf", "root", "mid"}, {2, -1, 1}, off);
  CHECK(sk.joint_names() == std::vector<std::string>{"root", "mid", "leaf"});
  CHECK(sk.parents() == std::vector<int>{-1, 0, 1});
  CHECK(sk.rest_offsets().row(2) == Eigen::RowVector3d(0, 0, 10));
}

TEST_CASE("bundled 22-joint skeleton loads") {
  const auto sk = load_skeleton(data_path("skeletons/intergen22.json"));
  CHECK(sk.joints() == 22);
  CHECK(sk.parents()[0] == -1);
}

TEST_CASE("bone_lengths: 3-4-5") {
  Matrix p(2, 3);
  p << 0, 0, 0, 3, 4, 0;
  const Vector len = bone_lengths(xyz_pose(p), two_joint());
  REQUIRE(len.size() == 1);
  CHECK(len(0) == 5.0);
}

TEST_CASE("bone_lengths of the rest pose equal the rest lengths") {
  const auto sk = toy_skeleton();
  const Vector len = bone_lengths(xyz_pose(rest_pose(sk)), sk);
  CHECK((len - sk.rest_bone_lengths()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("bone_lengths: scaling and rigid motion") {
  Rng rng(11);
  const auto sk = toy_skeleton();
  const Matrix p = echo::testing::random_matrix(rng, sk.joints(), 3, 300.0);
  const Vector base = bone_lengths(xyz_pose(p), sk);
  const Vector doubled = bone_lengths(xyz_pose(2.0 * p), sk);
  for (Eigen::Index i = 0; i < base.size(); ++i) CHECK(doubled(i) == doctest::Approx(2.0 * base(i)).epsilon(1e-12));

  const Mat3 R = axis_angle(Vec3(1, 2, 3).normalized(), 0.7);
  const Eigen::RowVector3d t(120, -40, 9);
  Matrix moved = (p * R.transpose()).rowwise() + t;
  const Vector rigid = bone_lengths(xyz_pose(moved), sk);
  for (Eigen::Index i = 0; i < base.size(); ++i) CHECK(echo::testing::rel_error(rigid(i), base(i)) < 1e-9);
}

TEST_CASE("bone_lengths rejects mismatches") {
  CHECK_THROWS_AS(bone_lengths(Pose{Matrix::Zero(2, 1), Representation::joint_angle}, two_joint()), DataError);
  CHECK_THROWS_AS(bone_lengths(xyz_pose(Matrix::Zero(3, 3)), two_joint()), DataError);
}

TEST_CASE("validate_motion reports problems") {
  const auto sk = toy_skeleton();
  Matrix frames = Matrix::Zero(6, 15);
  for (int t = 0; t < 6; ++t) frames.row(t) = xyz_pose(rest_pose(sk)).flat();
  CHECK(validate_motion(Motion(frames, 5, Representation::euclidean_xyz, 30), sk).empty());

  Matrix bad = frames;
  bad(3, 4) = std::nan("");
  const auto issues = validate_motion(Motion(bad, 5, Representation::euclidean_xyz, 30), sk);
  REQUIRE(issues.size() == 1);
  CHECK(issues[0].kind == ValidationIssue::Kind::non_finite);
  CHECK(issues[0].frame == 3);
  CHECK(issues[0].joint == 1);

  const auto sk22 = load_skeleton(data_path("skeletons/intergen22.json"));
  const auto mism = validate_motion(Motion(frames, 5, Representation::euclidean_xyz, 30), sk22);
  REQUIRE(!mism.empty());
  CHECK(mism[0].kind == ValidationIssue::Kind::joint_mismatch);

  const auto no_fps = validate_motion(Motion(frames, 5, Representation::euclidean_xyz, 0.0));
  REQUIRE(no_fps.size() == 1);
  CHECK(no_fps[0].kind == ValidationIssue::Kind::bad_fps);
}

TEST_CASE("skeleton save/load round-trips exactly") {
  const auto sk = load_skeleton(data_path("skeletons/intergen22.json"));
  const auto path = std::filesystem::temp_directory_path() / "echo_test_skeleton.json";
  save_skeleton(sk, path);
  CHECK(load_skeleton(path) == sk);
  std::filesystem::remove(path);
}

TEST_CASE("chain files") {
  const auto one = chain_from_json_text(
      R"({"joints":[{"axis":[0,0,1],"limits_rad":[-3.141592653589793,3.141592653589793]}],"end_effectors":[0]})");
  CHECK(one.dof() == 1);

  CHECK_THROWS_WITH_AS(chain_from_json_text(R"({"joints":[{"axis":[0,0,2],"limits_rad":[-1,1]}]})"),
                       doctest::Contains("unit-norm"), DataError);
  CHECK_THROWS_AS(chain_from_json_text(R"({"joints":[{"axis":[0,0,1],"limits_rad":[1,-1]}]})"), DataError);

  const auto planar = load_chain(data_path("chains/planar3.json"));
  CHECK(planar.dof() == 3);
  CHECK(planar.end_effectors().size() == 2);

  const auto again = chain_from_json_text(chain_to_json_text(planar));
  CHECK(again.dof() == planar.dof());
  CHECK(again.end_effectors().size() == planar.end_effectors().size());
}

TEST_CASE("axis_angle quarter turn about z") {
  const Mat3 R = axis_angle(Vec3::UnitZ(), std::numbers::pi / 2);
  const Vec3 v = R * Vec3(100, 0, 0);
  CHECK(std::abs(v.x()) < 1e-12);
  CHECK(std::abs(v.y() - 100.0) < 1e-12);
}

TEST_CASE("motion accessors and slicing") {
  Matrix m(3, 6);
  m << 0, 1, 2, 3, 4, 5,  //
      6, 7, 8, 9, 10, 11,  //
      12, 13, 14, 15, 16, 17;
  const Motion x(m, 2, Representation::euclidean_xyz, 25.0);
  CHECK(x.frames() == 3);
  CHECK(x.width() == 6);
  CHECK(x.position(1, 1) == Vec3(9, 10, 11));
  CHECK(x.pose(2).values(0, 2) == 14);
  const Motion s = x.slice(1, 3);
  CHECK(s.frames() == 2);
  CHECK(s.data()(0, 0) == 6);
  CHECK(s.fps() == 25.0);
  CHECK_THROWS_AS(x.slice(2, 4), DataError);
  CHECK_THROWS_AS(Motion(m, 4, Representation::euclidean_xyz, 25.0), DataError);
}

TEST_CASE("scenes are dyadic with matching length") {
  Rng rng(3);
  const Motion a = echo::testing::random_motion(rng, 4, 2);
  const Motion b = echo::testing::random_motion(rng, 4, 2);
  const Motion c = echo::testing::random_motion(rng, 5, 2);
  CHECK_NOTHROW(SocialScene(std::vector<Motion>{a, b}, "x", 2));
  CHECK_THROWS_AS(SocialScene(std::vector<Motion>{a}, "x", 2), DataError);
  CHECK_THROWS_AS(SocialScene(std::vector<Motion>{a, b, a}, "x", 2), DataError);
  CHECK_THROWS_AS(SocialScene(std::vector<Motion>{a, c}, "x", 2), DataError);
  CHECK_THROWS_AS(SocialScene(std::vector<Motion>{a, b}, "x", 4), DataError);
  CHECK_THROWS_AS(SocialScene(std::vector<Motion>{a, b}, "x", 0), DataError);
}

TEST_CASE("representation names") {
  CHECK(to_string(Representation::joint_angle) == "joint_angle");
  CHECK(representation_from_string("euclidean_xyz") == Representation::euclidean_xyz);
  CHECK_THROWS_AS(representation_from_string("quat"), DataError);
}
