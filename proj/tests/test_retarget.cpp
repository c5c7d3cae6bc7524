#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "echo/core/chain.hpp"
#include "echo/core/skeleton.hpp"
#include "echo/errors.hpp"
#include "echo/retarget/retarget.hpp"
#include "test_util.hpp"

#include <filesystem>
#include <numbers>

using namespace echo;
using echo::testing::data_path;

namespace {

constexpr double kPi = std::numbers::pi;

Pose angles(std::initializer_list<double> qs) {
  Matrix m(static_cast<Eigen::Index>(qs.size()), 1);
  int i = 0;
  for (double q : qs) m(i++, 0) = q;
  return Pose{m, Representation::joint_angle};
}

KinematicChain with_base(const KinematicChain& c, const RigidTransform& base) {
  auto joints = c.joints();
  joints[0].origin = base * joints[0].origin;
  return KinematicChain(joints, c.end_effectors(), c.name());
}

SharedLatentConfig small_config() {
  SharedLatentConfig cfg;
  cfg.D_latent = 8;
  cfg.hidden = 32;
  cfg.robots = {"planar3"};
  cfg.steps = 150;
  cfg.batch_size = 32;
  return cfg;
}

}  // namespace

TEST_CASE("forward kinematics hand cases") {
  const auto planar = load_chain(data_path("chains/planar3.json"));
  const Matrix home = forward_kinematics(planar, angles({0, 0, 0}));
  CHECK((home.row(0) - Eigen::RowVector3d(200, 0, 0)).norm() == 0.0);
  CHECK((home.row(1) - Eigen::RowVector3d(280, 0, 0)).norm() == 0.0);

  const auto rev = load_chain(data_path("chains/revolute1.json"));
  const Matrix tip = forward_kinematics(rev, angles({kPi / 2}));
  CHECK(std::abs(tip(0, 0)) < 1e-9);
  CHECK(std::abs(tip(0, 1) - 100.0) < 1e-9);
  CHECK(std::abs(tip(0, 2)) < 1e-9);

  // Elbow at 90 degrees: second link and marker turn to +y.
  const Matrix bent = forward_kinematics(planar, angles({0, kPi / 2, 0}));
  CHECK((bent.row(0) - Eigen::RowVector3d(100, 100, 0)).norm() < 1e-9);
  CHECK((bent.row(1) - Eigen::RowVector3d(100, 180, 0)).norm() < 1e-9);
}

TEST_CASE("forward kinematics errors") {
  const auto planar = load_chain(data_path("chains/planar3.json"));
  CHECK_THROWS_WITH_AS(forward_kinematics(planar, angles({0, 2.0, 0})), doctest::Contains("joint 1"), DataError);
  CHECK_THROWS_AS(forward_kinematics(planar, angles({0, 0})), DataError);
  CHECK_THROWS_AS(forward_kinematics(planar, Pose{Matrix::Zero(3, 1), Representation::euclidean_xyz}), DataError);
}

TEST_CASE("forward kinematics is rigid under a base transform") {
  const auto arm = load_chain(data_path("chains/arm4.json"));
  const RigidTransform base{axis_angle(Vec3(1, 2, 3).normalized(), 0.7), Vec3(30, -40, 500)};
  const auto moved = with_base(arm, base);
  for (const auto& q : sample_joint_angles(arm, 4, 50)) {
    const Matrix a = forward_kinematics(arm, q), b = forward_kinematics(moved, q);
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      CHECK((base.apply(a.row(i).transpose()) - b.row(i).transpose()).norm() < 1e-9);
      for (Eigen::Index k = 0; k < i; ++k) {
        CHECK(std::abs((a.row(i) - a.row(k)).norm() - (b.row(i) - b.row(k)).norm()) < 1e-9);
      }
    }
  }
}

TEST_CASE("joint sampling") {
  const auto planar = load_chain(data_path("chains/planar3.json"));
  const int n = 10000;
  const auto qs = sample_joint_angles(planar, 21, n);
  CHECK(qs.size() == static_cast<size_t>(n));
  for (int i = 0; i < planar.dof(); ++i) {
    const auto& cj = planar.joints()[static_cast<size_t>(i)];
    double mean = 0;
    for (const auto& q : qs) {
      CHECK(q.values(i, 0) >= cj.lo);
      CHECK(q.values(i, 0) <= cj.hi);
      mean += q.values(i, 0);
    }
    mean /= n;
    // Uniform law: sd = width / sqrt(12).
    const double se = (cj.hi - cj.lo) / std::sqrt(12.0) / std::sqrt(static_cast<double>(n));
    CHECK(std::abs(mean - 0.5 * (cj.lo + cj.hi)) < 3 * se);
  }
  const auto again = sample_joint_angles(planar, 21, 5);
  for (int s = 0; s < 5; ++s) CHECK(again[s].values == qs[s].values);
  CHECK_THROWS_AS(sample_joint_angles(planar, 1, 0), UsageError);
}

TEST_CASE("config validation") {
  SharedLatentConfig cfg = small_config();
  CHECK_NOTHROW(cfg.validate());
  cfg.robots.clear();
  CHECK_THROWS(cfg.validate());
  cfg = small_config();
  cfg.D_latent = 0;
  CHECK_THROWS(cfg.validate());
  CHECK(human_rep_from_string(to_string(HumanRep::euclidean_xyz)) == HumanRep::euclidean_xyz);
  CHECK_THROWS(human_rep_from_string("quaternions"));
}

TEST_CASE("training, retargeting and persistence") {
  const auto sk = toy_skeleton();
  const std::map<std::string, KinematicChain> chains{{"planar3", load_chain(data_path("chains/planar3.json"))}};
  const auto cfg = small_config();
  const auto human = sample_human_poses(sk, cfg.human_rep, 1, 256);
  const std::map<std::string, std::vector<Pose>> robots{{"planar3", sample_joint_angles(chains.at("planar3"), 2, 256)}};

  const auto run = train_shared_space(human, robots, chains, cfg);
  const auto rerun = train_shared_space(human, robots, chains, cfg);
  CHECK(run.params.params == rerun.params.params);
  CHECK(run.params.trained);
  REQUIRE(!run.log.empty());
  CHECK(run.log.back().total < run.log.front().total);

  const RetargetTestSet test{sample_human_poses(sk, cfg.human_rep, 9, 64),
                             {{"planar3", sample_joint_angles(chains.at("planar3"), 10, 64)}}};
  const auto trained = evaluate_retarget(run.params, test);
  const auto fresh = evaluate_retarget(init_retarget(cfg, chains, run.params.human_dim), test);
  CHECK(retarget_value(trained, "reconstruction_mse", "planar3") <
        retarget_value(fresh, "reconstruction_mse", "planar3"));
  const double clamp = retarget_value(trained, "clamp_rate", "planar3");
  CHECK(clamp >= 0.0);
  CHECK(clamp <= 1.0);
  CHECK(retarget_csv(trained).rfind("quantity,embodiment,value\n", 0) == 0);

  const auto out = retarget_pose(test.human[0], "planar3", run.params);
  CHECK(out.angles.joints() == 3);
  CHECK(out.angles.values == retarget_pose(test.human[0], "planar3", run.params).angles.values);
  CHECK_NOTHROW(forward_kinematics(chains.at("planar3"), out.angles));
  CHECK_THROWS(retarget_pose(test.human[0], "arm4", run.params));
  CHECK_THROWS_AS(retarget_pose(test.human[0], "planar3", init_retarget(cfg, chains, run.params.human_dim)),
                  UsageError);

  const auto dir = std::filesystem::temp_directory_path() / "echo_test_retarget";
  std::filesystem::remove_all(dir);
  save_retarget(dir, run.params);
  const auto back = load_retarget(dir, chains);
  CHECK(back.params == run.params.params);
  CHECK(back.trained);
  CHECK(evaluate_retarget(back, test)[0].value == trained[0].value);
  std::filesystem::remove_all(dir);
}

TEST_CASE("reconstruction MSE of the zero map") {
  // All-zero parameters decode everything to zero, so the MSE is mean q^2.
  const std::map<std::string, KinematicChain> chains{{"planar3", load_chain(data_path("chains/planar3.json"))}};
  auto p = init_retarget(small_config(), chains, 12);
  for (auto& e : p.params.entries()) e.value.setZero();
  const auto qs = sample_joint_angles(chains.at("planar3"), 3, 20);
  double want = 0;
  for (const auto& q : qs) want += q.values.squaredNorm() / 3.0;
  const auto rows = evaluate_retarget(p, {{}, {{"planar3", qs}}});
  CHECK(std::abs(retarget_value(rows, "reconstruction_mse", "planar3") - want / 20) < 1e-12);
}
