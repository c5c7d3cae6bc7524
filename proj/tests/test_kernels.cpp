#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "echo/kernels/kernels.hpp"
#include "test_util.hpp"

#include <numeric>

using namespace echo;
using echo::testing::random_matrix;

namespace {

std::vector<int> iota(int n, int from = 0) {
  std::vector<int> r(static_cast<size_t>(n - from));
  std::iota(r.begin(), r.end(), from);
  return r;
}

double dist(const Matrix& a, int t, int j, const Matrix& b, int k) {
  double s = 0;
  for (int c = 0; c < 3; ++c) s += (a(t, 3 * j + c) - b(t, 3 * k + c)) * (a(t, 3 * j + c) - b(t, 3 * k + c));
  return std::sqrt(s);
}

double interaction_oracle(const Matrix& p0, const Matrix& p1, const Matrix& g0, const Matrix& g1,
                          const std::vector<int>& rows) {
  const int J0 = static_cast<int>(p0.cols() / 3), J1 = static_cast<int>(p1.cols() / 3);
  double s = 0;
  for (int t : rows) {
    for (int j = 0; j < J0; ++j) {
      for (int k = 0; k < J1; ++k) {
        const double d = dist(p0, t, j, p1, k) - dist(g0, t, j, g1, k);
        s += d * d;
      }
    }
  }
  return s / (static_cast<double>(rows.size()) * J0 * J1);
}

double bone_oracle(const Matrix& p, const Vector& ref, const std::vector<int>& parents, const std::vector<int>& rows) {
  double s = 0;
  int n = 0;
  for (int t : rows) {
    for (size_t j = 1; j < parents.size(); ++j) {
      const double d = dist(p, t, static_cast<int>(j), p, parents[j]) - ref(static_cast<Eigen::Index>(j) - 1);
      s += d * d;
      ++n;
    }
  }
  return s / n;
}

bool same_bits(const Matrix& a, const Matrix& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         std::memcmp(a.data(), b.data(), sizeof(double) * static_cast<size_t>(a.size())) == 0;
}

}  // namespace

TEST_CASE("distance matrix matches loops and is thread-invariant") {
  Rng rng(1);
  const Matrix a = random_matrix(rng, 7, 3 * 4, 100), b = random_matrix(rng, 7, 3 * 5, 100);
  const Matrix s = kernels::serial::distance_matrix(a, b);
  REQUIRE(s.rows() == 7);
  REQUIRE(s.cols() == 20);
  for (int t = 0; t < 7; ++t)
    for (int j = 0; j < 4; ++j)
      for (int k = 0; k < 5; ++k) CHECK(s(t, j * 5 + k) == doctest::Approx(dist(a, t, j, b, k)).epsilon(1e-14));
  for (int n : {1, 2, 4}) {
    kernels::set_threads(n);
    CHECK(same_bits(s, kernels::omp::distance_matrix(a, b)));
  }
}

TEST_CASE("interaction loss: oracle, gradients, serial == omp") {
  Rng rng(2);
  for (int rep = 0; rep < 20; ++rep) {
    const int T = 1 + static_cast<int>(rng.below(8)), J0 = 1 + static_cast<int>(rng.below(5)),
              J1 = 1 + static_cast<int>(rng.below(5));
    const Matrix p0 = random_matrix(rng, T, 3 * J0, 100), p1 = random_matrix(rng, T, 3 * J1, 100);
    const Matrix g0 = random_matrix(rng, T, 3 * J0, 100), g1 = random_matrix(rng, T, 3 * J1, 100);
    const auto rows = iota(T, static_cast<int>(rng.below(static_cast<uint64_t>(T))));
    const auto s = kernels::serial::interaction_loss(p0, p1, g0, g1, rows, true);
    CHECK(echo::testing::rel_error(s.loss, interaction_oracle(p0, p1, g0, g1, rows)) < 1e-12);
    for (int n : {1, 3}) {
      kernels::set_threads(n);
      const auto o = kernels::omp::interaction_loss(p0, p1, g0, g1, rows, true);
      CHECK(std::memcmp(&o.loss, &s.loss, sizeof(double)) == 0);
      CHECK(same_bits(o.grad0, s.grad0));
      CHECK(same_bits(o.grad1, s.grad1));
    }
    auto f0 = [&](const Matrix& x) { return interaction_oracle(x, p1, g0, g1, rows); };
    auto f1 = [&](const Matrix& x) { return interaction_oracle(p0, x, g0, g1, rows); };
    CHECK(echo::testing::max_grad_error(f0, p0, s.grad0, 1e-4, 1e-6) < 1e-4);
    CHECK(echo::testing::max_grad_error(f1, p1, s.grad1, 1e-4, 1e-6) < 1e-4);
  }
}

TEST_CASE("interaction loss: coincident joints get a zero subgradient") {
  Matrix p0(1, 3), p1(1, 3), g0(1, 3), g1(1, 3);
  p0 << 1, 2, 3;
  p1 << 1, 2, 3;
  g0 << 0, 0, 0;
  g1 << 0, 3, 4;
  const auto r = kernels::serial::interaction_loss(p0, p1, g0, g1, {0}, true);
  CHECK(r.loss == 25.0);
  CHECK(r.grad0.allFinite());
  CHECK(r.grad0.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("bone loss: oracle, gradients, serial == omp") {
  Rng rng(3);
  const std::vector<int> parents{-1, 0, 1, 1, 1};
  for (int rep = 0; rep < 20; ++rep) {
    const int T = 1 + static_cast<int>(rng.below(8));
    const Matrix p = random_matrix(rng, T, 15, 200);
    Vector ref(4);
    for (int i = 0; i < 4; ++i) ref(i) = rng.uniform(50, 400);
    const auto rows = iota(T);
    const auto s = kernels::serial::bone_loss(p, ref, parents, rows, true);
    CHECK(echo::testing::rel_error(s.loss, bone_oracle(p, ref, parents, rows)) < 1e-12);
    kernels::set_threads(4);
    const auto o = kernels::omp::bone_loss(p, ref, parents, rows, true);
    CHECK(std::memcmp(&o.loss, &s.loss, sizeof(double)) == 0);
    CHECK(same_bits(o.grad, s.grad));
    auto f = [&](const Matrix& x) { return bone_oracle(x, ref, parents, rows); };
    CHECK(echo::testing::max_grad_error(f, p, s.grad, 1e-4, 1e-6) < 1e-4);
  }
}

TEST_CASE("mean joint error") {
  Matrix a = Matrix::Zero(2, 6), b = Matrix::Zero(2, 6);
  b(1, 0) = 3;
  b(1, 1) = 4;
  CHECK(kernels::serial::mean_joint_error(a, b, 1, false) == 2.5);
  CHECK(kernels::serial::mean_joint_error(a, b, 1, true) == 12.5);
  CHECK(kernels::serial::mean_joint_error(a, b, 0, false) == 0.0);
}

TEST_CASE("thread count control") {
  kernels::set_threads(1);
  CHECK(kernels::max_threads() == 1);
}
