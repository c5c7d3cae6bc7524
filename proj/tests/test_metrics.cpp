#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "echo/core/skeleton.hpp"
#include "echo/datasets/datasets.hpp"
#include "echo/errors.hpp"
#include "echo/metrics/metrics.hpp"
#include "echo/model/echo_model.hpp"
#include "test_util.hpp"

#include <filesystem>

using namespace echo;
using echo::testing::random_motion;
using echo::testing::rel_error;

namespace {

Motion single_frame(std::initializer_list<double> xyz) {
  Matrix m(1, static_cast<Eigen::Index>(xyz.size()));
  int c = 0;
  for (double v : xyz) m(0, c++) = v;
  return Motion(m, static_cast<int>(xyz.size() / 3), Representation::euclidean_xyz, 30.0);
}

double norm3(const Matrix& a, const Matrix& b, int t, int j, int ra = -1, int rb = -1) {
  double s = 0;
  for (int c = 0; c < 3; ++c) {
    double x = a(t, 3 * j + c), y = b(t, 3 * j + c);
    if (ra >= 0) x -= a(t, 3 * ra + c);
    if (rb >= 0) y -= b(t, 3 * rb + c);
    s += (x - y) * (x - y);
  }
  return std::sqrt(s);
}

double jpe_loop(const std::vector<Motion>& p, const std::vector<Motion>& g, int t, bool aligned) {
  double s = 0;
  int n = 0;
  for (size_t i = 0; i < p.size(); ++i) {
    for (int j = 0; j < p[i].joints(); ++j) {
      s += aligned ? norm3(p[i].data(), g[i].data(), t, j, 0, 0) : norm3(p[i].data(), g[i].data(), t, j);
      ++n;
    }
  }
  return s / n;
}

double fde_loop(const std::vector<Motion>& p, const std::vector<Motion>& g) {
  double s = 0;
  for (size_t i = 0; i < p.size(); ++i) s += norm3(p[i].data(), g[i].data(), p[i].frames() - 1, 0);
  return s / static_cast<double>(p.size());
}

Motion translated(const Motion& m, const Vec3& d) {
  Matrix x = m.data();
  for (int j = 0; j < m.joints(); ++j) x.middleCols(3 * j, 3).rowwise() += d.transpose();
  return Motion(x, m.joints(), m.representation(), m.fps());
}

}  // namespace

TEST_CASE("hand cases") {
  // JPE: one agent, two joints, one displaced by (3,4,0).
  CHECK(std::abs(jpe({single_frame({3, 4, 0, 7, 7, 7})}, {single_frame({0, 0, 0, 7, 7, 7})}, 0) - 2.5) < 1e-12);
  // AJPE: root exact, the other joint off by 5 mm.
  CHECK(std::abs(ajpe({single_frame({1, 1, 1, 4, 5, 1})}, {single_frame({1, 1, 1, 1, 1, 1})}, 0) - 2.5) < 1e-12);
  // FDE: one of two agents has a final root offset of (0,0,12).
  const std::vector<Motion> p{single_frame({0, 0, 12}), single_frame({5, 5, 5})};
  const std::vector<Motion> g{single_frame({0, 0, 0}), single_frame({5, 5, 5})};
  CHECK(std::abs(fde(p, g) - 6.0) < 1e-12);
  CHECK(fde(g, g) == 0.0);
}

TEST_CASE("loop oracles on random instances") {
  Rng rng(11);
  for (int rep = 0; rep < 200; ++rep) {
    const int T = 1 + static_cast<int>(rng.below(8)), J = 1 + static_cast<int>(rng.below(5));
    std::vector<Motion> p, g;
    for (int a = 0; a < 2; ++a) {
      p.push_back(random_motion(rng, T, J));
      g.push_back(random_motion(rng, T, J));
    }
    const int t = static_cast<int>(rng.below(static_cast<uint64_t>(T)));
    CHECK(rel_error(jpe(p, g, t), jpe_loop(p, g, t, false)) < 1e-9);
    CHECK(rel_error(ajpe(p, g, t), jpe_loop(p, g, t, true)) < 1e-9);
    CHECK(rel_error(fde(p, g), fde_loop(p, g)) < 1e-9);
    CHECK(rel_error(mpjpe(p[0], g[0], t), jpe_loop({p[0]}, {g[0]}, t, false)) < 1e-9);
    CHECK(mpjpe(p[0], g[0], t) == jpe({p[0]}, {g[0]}, t));
    CHECK(jpe(p, g, t) == jpe(g, p, t));
  }
}

TEST_CASE("translation behaviour") {
  Rng rng(12);
  const std::vector<Motion> g{random_motion(rng, 3, 4), random_motion(rng, 3, 4)};
  const std::vector<Motion> p{translated(g[0], {10, 0, 0}), translated(g[1], {-3, 8, 1})};
  CHECK(jpe(p, g, 1) > 0);
  CHECK(ajpe(p, g, 1) < 1e-12);
  CHECK(std::abs(jpe({p[0]}, {g[0]}, 2) - 10.0) < 1e-12);
}

TEST_CASE("fde scores only the final frame") {
  Rng rng(13);
  const std::vector<Motion> g{random_motion(rng, 5, 3), random_motion(rng, 5, 3)};
  std::vector<Motion> p = g;
  Matrix x = p[0].data();
  x.topRows(4).array() += 50.0;
  p[0] = Motion(x, 3, Representation::euclidean_xyz, 30.0);
  CHECK(fde(p, g) == 0.0);
  CHECK(fde_at(p, g, 2) > 0.0);
}

TEST_CASE("metric errors") {
  Rng rng(14);
  const std::vector<Motion> a{random_motion(rng, 3, 2)}, b{random_motion(rng, 3, 3)};
  CHECK_THROWS_AS(jpe(a, b, 0), DataError);
  CHECK_THROWS_AS(jpe(a, a, 3), DataError);
  CHECK_THROWS_AS(fde({}, {}), DataError);
  const Motion angles(Matrix::Zero(3, 4), 4, Representation::joint_angle, 30.0);
  CHECK_THROWS_AS(mpjpe(angles, angles, 0), DataError);
}

TEST_CASE("horizon frame mapping") {
  CHECK(horizon_frame(30.0, 15, 60, 1.5) == 15 + 44);
  CHECK(horizon_frame(30.0, 15, 60, 0.2) == 15 + 5);
  CHECK_THROWS_WITH_AS(horizon_frame(25.0, 15, 60, 1.5), doctest::Contains("25 fps"), DataError);
  CHECK_THROWS_AS(horizon_frame(30.0, 15, 59, 1.5), DataError);
  CHECK_THROWS_AS(horizon_frame(30.0, 15, 60, 0.0), DataError);
}

TEST_CASE("evaluation aggregates per-sample values by their mean") {
  const auto sk = toy_skeleton();
  std::vector<TrainingSample> samples;
  for (uint64_t seed = 0; seed < 6; ++seed) {
    samples.push_back(window_scene(synthesize_dyadic_scene("circle", seed, 60, 30.0, sk, {.observed_len = 15}), 15, 60));
  }
  const auto f = baseline_forecaster();
  const EvalOptions opt;
  const auto rep = evaluate_model(f, samples, opt);
  const auto serial = evaluate_model(f, samples, {.parallel = false});
  CHECK(rep.rows.size() == 12);
  for (size_t h = 0; h < opt.horizons.size(); ++h) {
    double acc_j = 0, acc_a = 0, acc_f = 0;
    for (const auto& s : samples) {
      const auto pred = zero_velocity_baseline(s);
      const std::vector<Motion> p(pred.begin(), pred.end()), g(s.target.begin(), s.target.end());
      const int t = 14 + static_cast<int>(std::lround(opt.horizons[h] * 30));
      acc_j += jpe_loop(p, g, t, false);
      acc_a += jpe_loop(p, g, t, true);
      double fd = 0;
      for (int a = 0; a < 2; ++a) fd += norm3(p[a].data(), g[a].data(), t, 0);
      acc_f += fd / 2;
    }
    const double n = static_cast<double>(samples.size());
    CHECK(rel_error(rep.value("JPE", opt.horizons[h]), acc_j / n) < 1e-9);
    CHECK(rel_error(rep.value("AJPE", opt.horizons[h]), acc_a / n) < 1e-9);
    CHECK(rel_error(rep.value("FDE", opt.horizons[h]), acc_f / n) < 1e-9);
    CHECK(rep.value("JPE", opt.horizons[h]) == serial.value("JPE", opt.horizons[h]));
  }
  CHECK(rep.metadata.at("frame_mapping") == "0.20s->frame20;0.50s->frame29;1.00s->frame44;1.50s->frame59");
  CHECK_THROWS_AS(evaluate_model(f, samples, {.horizons = {0.25}}), DataError);
  CHECK_THROWS_AS(rep.value("JPE", 0.3), DataError);
}

TEST_CASE("baseline on a static scene scores zero") {
  const Motion still0(Matrix(Eigen::RowVectorXd::Random(15).replicate(60, 1)), 5, Representation::euclidean_xyz, 30.0);
  const Motion still1(Matrix(Eigen::RowVectorXd::Random(15).replicate(60, 1)), 5, Representation::euclidean_xyz, 30.0);
  const SocialScene scene(std::array<Motion, 2>{still0, still1}, "mirror", 15);
  const auto rep = evaluate_model(baseline_forecaster(), {window_scene(scene, 15, 60)});
  for (const auto& r : rep.rows) CHECK(r.value_mm == 0.0);
}

TEST_CASE("report CSV round trip") {
  MetricsReport rep;
  rep.rows = {{"JPE", 0.2, 30.125}, {"FDE", 1.5, 1.0 / 3.0}};
  rep.metadata["dataset"] = "synthetic";
  rep.metadata["checkpoint"] = "abc: def";
  const auto path = std::filesystem::temp_directory_path() / "echo_test_report.csv";
  rep.write_csv(path);
  const auto back = MetricsReport::read_csv(path);
  CHECK(back.metadata == rep.metadata);
  REQUIRE(back.rows.size() == 2);
  CHECK(back.value("JPE", 0.2) == 30.125);
  CHECK(back.value("FDE", 1.5) == 1.0 / 3.0);
  CHECK(rep.to_csv().find("metric,horizon_s,value_mm\n") != std::string::npos);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(MetricsReport::read_csv(path), DataError);
}
