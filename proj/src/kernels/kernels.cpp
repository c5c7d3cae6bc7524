#include "echo/kernels/kernels.hpp"

#include <cmath>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace echo::kernels {

namespace {

int joints_of(const Matrix& m) { return static_cast<int>(m.cols() / 3); }

void distance_row(const Matrix& a, const Matrix& b, int t, Matrix& out) {
  const int J0 = joints_of(a), J1 = joints_of(b);
  for (int j = 0; j < J0; ++j) {
    const auto pa = a.block<1, 3>(t, 3 * j);
    for (int k = 0; k < J1; ++k) out(t, j * J1 + k) = (pa - b.block<1, 3>(t, 3 * k)).norm();
  }
}

// Squared-error partial for one frame; writes that frame's gradient rows.
double interaction_frame(const Matrix& p0, const Matrix& p1, const Matrix& g0, const Matrix& g1,
                         int t, double inv_count, InteractionResult* grads) {
  const int J0 = joints_of(p0), J1 = joints_of(p1);
  double acc = 0.0;
  for (int j = 0; j < J0; ++j) {
    const Eigen::RowVector3d a = p0.block<1, 3>(t, 3 * j);
    const Eigen::RowVector3d ga = g0.block<1, 3>(t, 3 * j);
    for (int k = 0; k < J1; ++k) {
      const Eigen::RowVector3d delta = a - p1.block<1, 3>(t, 3 * k);
      const double dp = delta.norm();
      const Eigen::RowVector3d delta_gt = ga - g1.block<1, 3>(t, 3 * k);
      const double dg = delta_gt.norm();
      const double diff = dp - dg;
      acc += diff * diff;
      if (grads != nullptr && dp > 0.0) {
        const Eigen::RowVector3d g = (2.0 * diff * inv_count / dp) * delta;
        grads->grad0.block<1, 3>(t, 3 * j) += g;
        grads->grad1.block<1, 3>(t, 3 * k) -= g;
      }
    }
  }
  return acc;
}

double bone_frame(const Matrix& pred, const Vector& ref, const std::vector<int>& parents, int t,
                  double inv_count, BoneResult* grads) {
  double acc = 0.0;
  for (size_t j = 1; j < parents.size(); ++j) {
    const int p = parents[j];
    const Eigen::RowVector3d delta =
        pred.block<1, 3>(t, 3 * static_cast<int>(j)) - pred.block<1, 3>(t, 3 * p);
    const double len = delta.norm();
    const double diff = len - ref[static_cast<Eigen::Index>(j) - 1];
    acc += diff * diff;
    if (grads != nullptr && len > 0.0) {
      const Eigen::RowVector3d g = (2.0 * diff * inv_count / len) * delta;
      grads->grad.block<1, 3>(t, 3 * static_cast<int>(j)) += g;
      grads->grad.block<1, 3>(t, 3 * p) -= g;
    }
  }
  return acc;
}

void check_interaction_shapes(const Matrix& p0, const Matrix& p1, const Matrix& g0, const Matrix& g1) {
  if (p0.rows() != p1.rows() || p0.rows() != g0.rows() || p0.rows() != g1.rows() ||
      p0.cols() != g0.cols() || p1.cols() != g1.cols() || p0.cols() % 3 != 0 || p1.cols() % 3 != 0) {
    throw std::invalid_argument("interaction_loss: shape mismatch");
  }
}

double sum_in_order(const std::vector<double>& partial) {
  double s = 0.0;
  for (double v : partial) s += v;
  return s;
}

}  // namespace

// ---- serial -------------------------------------------------------------------

namespace serial {

Matrix distance_matrix(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) throw std::invalid_argument("distance_matrix: frame count mismatch");
  Matrix out(a.rows(), joints_of(a) * joints_of(b));
  for (int t = 0; t < a.rows(); ++t) distance_row(a, b, t, out);
  return out;
}

InteractionResult interaction_loss(const Matrix& pred0, const Matrix& pred1, const Matrix& gt0,
                                   const Matrix& gt1, const std::vector<int>& rows, bool want_grad) {
  check_interaction_shapes(pred0, pred1, gt0, gt1);
  InteractionResult r;
  if (want_grad) {
    r.grad0 = Matrix::Zero(pred0.rows(), pred0.cols());
    r.grad1 = Matrix::Zero(pred1.rows(), pred1.cols());
  }
  const double inv = 1.0 / (static_cast<double>(rows.size()) * joints_of(pred0) * joints_of(pred1));
  std::vector<double> partial(rows.size());
  for (size_t i = 0; i < rows.size(); ++i) {
    partial[i] = interaction_frame(pred0, pred1, gt0, gt1, rows[i], inv, want_grad ? &r : nullptr);
  }
  r.loss = sum_in_order(partial) * inv;
  return r;
}

BoneResult bone_loss(const Matrix& pred, const Vector& reference, const std::vector<int>& parents,
                     const std::vector<int>& rows, bool want_grad) {
  if (static_cast<Eigen::Index>(parents.size()) * 3 != pred.cols() ||
      reference.size() + 1 != static_cast<Eigen::Index>(parents.size())) {
    throw std::invalid_argument("bone_loss: skeleton/prediction mismatch");
  }
  BoneResult r;
  if (want_grad) r.grad = Matrix::Zero(pred.rows(), pred.cols());
  const double inv = 1.0 / (static_cast<double>(rows.size()) * static_cast<double>(reference.size()));
  std::vector<double> partial(rows.size());
  for (size_t i = 0; i < rows.size(); ++i) {
    partial[i] = bone_frame(pred, reference, parents, rows[i], inv, want_grad ? &r : nullptr);
  }
  r.loss = sum_in_order(partial) * inv;
  return r;
}

double mean_joint_error(const Matrix& pred, const Matrix& gt, int t, bool squared) {
  const int J = joints_of(pred);
  double acc = 0.0;
  for (int j = 0; j < J; ++j) {
    const double d2 = (pred.block<1, 3>(t, 3 * j) - gt.block<1, 3>(t, 3 * j)).squaredNorm();
    acc += squared ? d2 : std::sqrt(d2);
  }
  return acc / J;
}

}  // namespace serial

// ---- OpenMP -------------------------------------------------------------------

namespace omp {

Matrix distance_matrix(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) throw std::invalid_argument("distance_matrix: frame count mismatch");
  Matrix out(a.rows(), joints_of(a) * joints_of(b));
  const int T = static_cast<int>(a.rows());
#pragma omp parallel for schedule(static)
  for (int t = 0; t < T; ++t) distance_row(a, b, t, out);
  return out;
}

InteractionResult interaction_loss(const Matrix& pred0, const Matrix& pred1, const Matrix& gt0,
                                   const Matrix& gt1, const std::vector<int>& rows, bool want_grad) {
  check_interaction_shapes(pred0, pred1, gt0, gt1);
  InteractionResult r;
  if (want_grad) {
    r.grad0 = Matrix::Zero(pred0.rows(), pred0.cols());
    r.grad1 = Matrix::Zero(pred1.rows(), pred1.cols());
  }
  const double inv = 1.0 / (static_cast<double>(rows.size()) * joints_of(pred0) * joints_of(pred1));
  std::vector<double> partial(rows.size());
  const int n = static_cast<int>(rows.size());
  // Distinct frames touch disjoint gradient rows.
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) {
    partial[i] = interaction_frame(pred0, pred1, gt0, gt1, rows[i], inv, want_grad ? &r : nullptr);
  }
  r.loss = sum_in_order(partial) * inv;
  return r;
}

BoneResult bone_loss(const Matrix& pred, const Vector& reference, const std::vector<int>& parents,
                     const std::vector<int>& rows, bool want_grad) {
  if (static_cast<Eigen::Index>(parents.size()) * 3 != pred.cols() ||
      reference.size() + 1 != static_cast<Eigen::Index>(parents.size())) {
    throw std::invalid_argument("bone_loss: skeleton/prediction mismatch");
  }
  BoneResult r;
  if (want_grad) r.grad = Matrix::Zero(pred.rows(), pred.cols());
  const double inv = 1.0 / (static_cast<double>(rows.size()) * static_cast<double>(reference.size()));
  std::vector<double> partial(rows.size());
  const int n = static_cast<int>(rows.size());
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) {
    partial[i] = bone_frame(pred, reference, parents, rows[i], inv, want_grad ? &r : nullptr);
  }
  r.loss = sum_in_order(partial) * inv;
  return r;
}

}  // namespace omp

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

void set_threads(int n) {
#ifdef _OPENMP
  omp_set_num_threads(n < 1 ? 1 : n);
#else
  (void)n;
#endif
}

}  // namespace echo::kernels
