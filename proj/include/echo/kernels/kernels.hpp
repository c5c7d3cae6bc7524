#pragma once

// Data-parallel inner loops shared by the losses and metrics. Each kernel has a
// serial reference and an OpenMP version; both reduce per-frame partials in
// frame order, so their results are bitwise identical for any thread count.

#include "echo/core/types.hpp"

#include <vector>

namespace echo::kernels {

/// Frames are T x 3J matrices (xyz per joint, joint-major).
struct InteractionResult {
  double loss = 0.0;
  Matrix grad0;  // d loss / d pred0, same shape as pred0 (empty if not requested)
  Matrix grad1;
};

struct BoneResult {
  double loss = 0.0;
  Matrix grad;
};

namespace serial {

/// T x (J0*J1): entry [t, j*J1 + k] = |a_j(t) - b_k(t)|.
Matrix distance_matrix(const Matrix& a, const Matrix& b);

/// Mean over frames `rows` and all joint pairs of (DM(pred) - DM(gt))^2.
InteractionResult interaction_loss(const Matrix& pred0, const Matrix& pred1, const Matrix& gt0,
                                   const Matrix& gt1, const std::vector<int>& rows, bool want_grad);

/// Mean over frames `rows` and bones of (|p_j - p_parent(j)| - ref_j)^2.
BoneResult bone_loss(const Matrix& pred, const Vector& reference, const std::vector<int>& parents,
                     const std::vector<int>& rows, bool want_grad);

/// Per-joint Euclidean error at frame t, averaged over joints (or squared).
double mean_joint_error(const Matrix& pred, const Matrix& gt, int t, bool squared);

}  // namespace serial

namespace omp {

Matrix distance_matrix(const Matrix& a, const Matrix& b);
InteractionResult interaction_loss(const Matrix& pred0, const Matrix& pred1, const Matrix& gt0,
                                   const Matrix& gt1, const std::vector<int>& rows, bool want_grad);
BoneResult bone_loss(const Matrix& pred, const Vector& reference, const std::vector<int>& parents,
                     const std::vector<int>& rows, bool want_grad);

}  // namespace omp

/// Number of threads OpenMP regions will use (1 when built without OpenMP).
int max_threads();
/// Forces single-threaded execution for bit-reproducible runs.
void set_threads(int n);

}  // namespace echo::kernels
