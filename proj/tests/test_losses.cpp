#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "echo/core/chain.hpp"
#include "echo/core/skeleton.hpp"
#include "echo/errors.hpp"
#include "echo/losses/losses.hpp"
#include "test_util.hpp"

using namespace echo;
using echo::testing::random_matrix;
using echo::testing::random_motion;
using echo::testing::rel_error;

namespace {

Motion xyz(const Matrix& m) { return Motion(m, static_cast<int>(m.cols() / 3), Representation::euclidean_xyz, 30.0); }

std::vector<int> all_frames(int T) { return supervised_frames(T, 1, true); }

ModelConfig tiny(int T, int J) {
  ModelConfig c;
  c.seq_len = T;
  c.D = 16;
  c.n_heads = 2;
  c.n_layers_sa = 1;
  c.K_refine = 1;
  c.agents[0].joints = J;
  c.agents[1].joints = J;
  return c;
}

double mse_oracle(const Matrix& a, const Matrix& b, const std::vector<int>& frames) {
  double s = 0;
  int n = 0;
  for (int t : frames) {
    for (Eigen::Index c = 0; c < a.cols(); ++c) {
      s += (a(t, c) - b(t, c)) * (a(t, c) - b(t, c));
      ++n;
    }
  }
  return s / n;
}

double dm_loss_oracle(const Motion& p0, const Motion& p1, const Motion& g0, const Motion& g1,
                      const std::vector<int>& frames) {
  double s = 0;
  int n = 0;
  for (int t : frames) {
    for (int j = 0; j < p0.joints(); ++j) {
      for (int k = 0; k < p1.joints(); ++k) {
        const double d = (p0.position(t, j) - p1.position(t, k)).norm() - (g0.position(t, j) - g1.position(t, k)).norm();
        s += d * d;
        ++n;
      }
    }
  }
  return s / n;
}

SkeletonSpec chain_skeleton(int J) {
  Matrix off = Matrix::Zero(J, 3);
  std::vector<int> parents;
  std::vector<std::string> names;
  for (int j = 0; j < J; ++j) {
    parents.push_back(j - 1);
    names.push_back("j" + std::to_string(j));
    if (j) off(j, 0) = 150.0;
  }
  return SkeletonSpec(names, parents, off);
}

}  // namespace

TEST_CASE("distance matrix") {
  Rng rng(1);
  const Motion a = random_motion(rng, 4, 3);
  for (const auto& m : distance_matrix(a, a)) CHECK(m.diagonal().cwiseAbs().maxCoeff() == 0.0);

  const Eigen::RowVectorXd shift = Eigen::RowVector3d(100, -7, 33).replicate(1, 3);
  const Motion b = random_motion(rng, 4, 3);
  const auto before = distance_matrix(a, b);
  const auto after = distance_matrix(xyz(a.data().rowwise() + shift), xyz(b.data().rowwise() + shift));
  for (size_t t = 0; t < before.size(); ++t) CHECK((before[t] - after[t]).cwiseAbs().maxCoeff() < 1e-9);

  Matrix p0(1, 3), p1(1, 3);
  p0 << 0, 0, 0;
  p1 << 0, 3, 4;
  const auto dm = distance_matrix(xyz(p0), xyz(p1));
  REQUIRE(dm.size() == 1);
  CHECK(dm[0](0, 0) == 5.0);

  CHECK_THROWS_AS(distance_matrix(a, random_motion(rng, 5, 3)), DataError);
  CHECK_THROWS_AS(distance_matrix(a, Motion(Matrix::Zero(4, 2), 2, Representation::joint_angle, 30)), DataError);
}

TEST_CASE("individual and social losses") {
  Rng rng(2);
  const int T = 5, J = 3;
  const EchoModel zero(tiny(T, J));
  const Pose ref = Pose::from_flat(random_matrix(rng, 1, 3 * J, 100.0), J, Representation::euclidean_xyz);
  const LatentMotion e{random_matrix(rng, T + 1, 16), true};
  const auto frames = all_frames(T);

  const Motion same = xyz(ref.flat().replicate(T, 1));
  CHECK(loss_individual(zero, 0, e, same, ref, frames) == 0.0);
  const Motion offset = xyz(same.data().array() + 7.0);
  CHECK(loss_individual(zero, 0, e, offset, ref, frames) == doctest::Approx(49.0).epsilon(1e-12));

  const EchoModel m(tiny(T, J), 3, InitMode::random);
  for (int rep = 0; rep < 10; ++rep) {
    const LatentMotion ei{random_matrix(rng, T + 1, 16), true};
    const Motion target = random_motion(rng, T, J);
    const auto fr = supervised_frames(T, 2, rep % 2 == 0);
    const Motion decoded = m.decode_poses(ei, ref, 1, 30.0);
    const double l = loss_individual(m, 1, ei, target, ref, fr);
    CHECK(rel_error(l, mse_oracle(decoded.data(), target.data(), fr)) < 1e-9);
    CHECK(loss_social(m, 1, ei, target, ref, fr) == l);
  }
}

TEST_CASE("interaction loss") {
  Rng rng(3);
  const Motion g0 = random_motion(rng, 4, 2), g1 = random_motion(rng, 4, 3);
  CHECK(loss_interaction(g0, g1, g0, g1, all_frames(4)) == 0.0);

  for (int rep = 0; rep < 20; ++rep) {
    const Eigen::RowVectorXd c3 = random_matrix(rng, 1, 3, 50.0);
    const Motion p0 = xyz(g0.data().rowwise() + Eigen::RowVectorXd(c3.replicate(1, 2)));
    const Motion p1 = xyz(g1.data().rowwise() + Eigen::RowVectorXd(c3.replicate(1, 3)));
    CHECK(std::abs(loss_interaction(p0, p1, g0, g1, all_frames(4))) < 1e-9);
    CHECK(motion_mse(p0, g0, all_frames(4)) > 0.0);
  }

  for (int rep = 0; rep < 20; ++rep) {
    const int T = 1 + static_cast<int>(rng.below(8)), J0 = 1 + static_cast<int>(rng.below(5)),
              J1 = 1 + static_cast<int>(rng.below(5));
    const Motion a0 = random_motion(rng, T, J0), a1 = random_motion(rng, T, J1);
    const Motion b0 = random_motion(rng, T, J0), b1 = random_motion(rng, T, J1);
    const auto fr = all_frames(T);
    CHECK(rel_error(loss_interaction(a0, a1, b0, b1, fr), dm_loss_oracle(a0, a1, b0, b1, fr)) < 1e-9);
  }

  Matrix q0(1, 3), q1(1, 3), r0(1, 3), r1(1, 3);
  q0 << 0, 0, 0;
  q1 << 40, 0, 0;
  r0 << 0, 0, 0;
  r1 << 50, 0, 0;
  CHECK(loss_interaction(xyz(q0), xyz(q1), xyz(r0), xyz(r1), {0}) == 100.0);
}

TEST_CASE("bone loss") {
  Rng rng(4);
  const auto sk = toy_skeleton();
  const Matrix rest = rest_pose(sk);
  const Vector ref = sk.rest_bone_lengths();
  const Mat3 R = axis_angle(Vec3(0.2, 1, -0.3).normalized(), 1.1);
  Matrix moved = (rest * R.transpose()).rowwise() + Eigen::RowVector3d(300, 20, -50);
  const Motion rigid = xyz(Pose{moved, Representation::euclidean_xyz}.flat().replicate(3, 1));
  CHECK(loss_bone(rigid, ref, sk, all_frames(3)) < 1e-18);

  const Motion doubled = xyz(Pose{2.0 * rest, Representation::euclidean_xyz}.flat().replicate(2, 1));
  CHECK(rel_error(loss_bone(doubled, ref, sk, all_frames(2)), ref.squaredNorm() / ref.size()) < 1e-12);

  Matrix nan = doubled.data();
  nan(1, 4) = std::nan("");
  CHECK_THROWS_AS(loss_bone(xyz(nan), ref, sk, all_frames(2)), NumericError);
  CHECK_THROWS_AS(loss_bone(random_motion(rng, 2, 3), ref, sk, all_frames(2)), DataError);

  // Reference lengths: mean over the observed frames.
  const Motion two = xyz((Matrix(2, 15) << Pose{rest, Representation::euclidean_xyz}.flat(),
                          Pose{2.0 * rest, Representation::euclidean_xyz}.flat())
                             .finished());
  CHECK((reference_bone_lengths(two, sk) - 1.5 * ref).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("total loss weighting and robot exclusion") {
  LossComponents c;
  CHECK(total_loss(c, {}).total == 0.0);

  c.l_ind = {3.0, 5.0};
  c.l_soc = {1.0, 2.0};
  c.l_int = 7.0;
  c.l_bone = {11.0, 13.0};
  const auto all = total_loss(c, {});
  CHECK(all.l_ind == 4.0);
  CHECK(all.l_soc == 1.5);
  CHECK(all.l_int == 7.0);
  CHECK(all.l_bone == 12.0);
  CHECK(all.total == 4.0 + 1.5 + 7.0 + 12.0);
  CHECK(total_loss(c, {2, 0, 0, 0}).total == 2.0 * all.l_ind);

  c.kinds[1] = Representation::joint_angle;
  const auto robot = total_loss(c, {});
  CHECK(robot.l_int == 0.0);
  CHECK(robot.l_bone == 11.0);
  CHECK(robot.total == 4.0 + 1.5 + 11.0);

  CHECK_THROWS_AS(total_loss(c, {1, -1, 1, 1}), UsageError);
  CHECK_THROWS_AS(LossWeights({1, 1, std::nan(""), 1}).validate(), UsageError);
}

TEST_CASE("supervised frames") {
  CHECK(supervised_frames(5, 2, true) == std::vector<int>{0, 1, 2, 3, 4});
  CHECK(supervised_frames(5, 2, false) == std::vector<int>{2, 3, 4});
}

TEST_CASE("loss ops: finite-difference gradients") {
  Rng rng(5);
  const int T = 4, J = 3;
  const auto sk = chain_skeleton(J);
  const auto fr = supervised_frames(T, 2, false);
  const Matrix p0 = random_matrix(rng, T, 3 * J, 100), p1 = random_matrix(rng, T, 3 * J, 100);
  Matrix g0 = random_matrix(rng, T, 3 * J, 100), g1 = random_matrix(rng, T, 3 * J, 100);
  g1.array() += 400.0;
  const Vector ref = Vector::Constant(J - 1, 150.0);

  using Op = std::function<ag::Var(ag::Tape&, ag::Var)>;
  auto check = [&](const Matrix& x0, const Op& op) {
    ag::ParamStore ps;
    ps.add("x", x0);
    ag::Tape t(&ps);
    const ag::Var y = op(t, t.param("x"));
    t.backward(y);
    const Matrix an = t.grad(t.param("x"));
    auto f = [&](const Matrix& x) {
      ag::ParamStore q;
      q.add("x", x);
      ag::Tape u(&q);
      return op(u, u.param("x")).scalar();
    };
    return echo::testing::max_grad_error(f, x0, an, 1e-4, 1e-6);
  };
  CHECK(check(p0, [&](ag::Tape&, ag::Var x) { return frames_mse_op(x, g0, fr); }) < 1e-4);
  CHECK(check(p0, [&](ag::Tape& t, ag::Var x) { return interaction_loss_op(x, t.constant(p1), g0, g1, fr); }) < 1e-4);
  CHECK(check(p1, [&](ag::Tape& t, ag::Var x) { return interaction_loss_op(t.constant(p0), x, g0, g1, fr); }) < 1e-4);
  CHECK(check(p0, [&](ag::Tape&, ag::Var x) { return bone_loss_op(x, ref, sk.parents(), fr); }) < 1e-4);
}

TEST_CASE("individual loss gradient through the decoder") {
  Rng rng(6);
  const int T = 5, J = 3;
  const EchoModel m(tiny(T, J), 8, InitMode::random);
  const Pose ref = Pose::from_flat(random_matrix(rng, 1, 3 * J, 100.0), J, Representation::euclidean_xyz);
  const Motion target = random_motion(rng, T, J);
  const auto fr = all_frames(T);
  const Matrix e0 = random_matrix(rng, T + 1, 16);

  ag::ParamStore ps = m.params();
  ps.add("probe.latent", e0);
  ag::Tape t(&ps);
  const ag::Var y = frames_mse_op(m.decode_poses(t, t.param("probe.latent"), ref, 0), target.data(), fr);
  CHECK(rel_error(y.scalar(), loss_individual(m, 0, {e0, true}, target, ref, fr)) < 1e-12);
  t.backward(y);
  const Matrix an = t.grad(t.param("probe.latent"));
  auto f = [&](const Matrix& e) { return loss_individual(m, 0, {e, true}, target, ref, fr); };
  CHECK(echo::testing::max_grad_error(f, e0, an, 1e-5, 1e-6) < 1e-4);
}

TEST_CASE("sample loss matches the value-level losses") {
  Rng rng(7);
  const int T = 6, J = 3;
  const auto sk = chain_skeleton(J);
  const EchoModel m(tiny(T, J), 4, InitMode::random);
  std::array<Motion, 2> ag{random_motion(rng, T, J), random_motion(rng, T, J)};
  const TrainingSample s = window_scene(SocialScene(ag, "circle", 3), 3, T);
  ag::Tape t(&m.params());
  const auto sl = sample_loss(t, m, s, {}, {&sk, &sk}, true);
  const auto p = m.predict(s);
  const auto fr = all_frames(T);

  LossComponents c;
  for (int i = 0; i < 2; ++i) {
    c.l_ind[i] = loss_individual(m, i, p.e_ind_hat[i], s.target[i], s.x_ref[i], fr);
    c.l_soc[i] = loss_social(m, i, p.e_soc_hat[i], s.target[i], s.x_ref[i], fr);
    c.l_bone[i] = loss_bone(p.motions[i], reference_bone_lengths(s.target[i].slice(0, 3), sk), sk, fr);
  }
  c.l_int = loss_interaction(p.motions[0], p.motions[1], s.target[0], s.target[1], fr);
  const auto ref = total_loss(c, {});
  CHECK(rel_error(sl.values.total, ref.total) < 1e-12);
  CHECK(rel_error(sl.total.scalar(), ref.total) < 1e-12);
  CHECK(rel_error(sl.values.l_int, ref.l_int) < 1e-12);
  CHECK(rel_error(sl.values.l_bone, ref.l_bone) < 1e-12);
}
