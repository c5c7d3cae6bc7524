#pragma once

#include "echo/core/types.hpp"

#include <functional>
#include <string>
#include <unordered_map>
#include <vector>

namespace echo::ag {

/// Named trainable (or frozen) matrices, kept in insertion order so manifests
/// and flat archives are stable.
class ParamStore {
 public:
  struct Entry {
    std::string name;
    Matrix value;
    bool trainable = true;
  };

  Matrix& add(const std::string& name, Matrix init, bool trainable = true);
  bool contains(const std::string& name) const { return index_.count(name) != 0; }
  int index(const std::string& name) const;
  Matrix& at(const std::string& name) { return entries_[index(name)].value; }
  const Matrix& at(const std::string& name) const { return entries_[index(name)].value; }

  std::vector<Entry>& entries() { return entries_; }
  const std::vector<Entry>& entries() const { return entries_; }
  size_t size() const { return entries_.size(); }
  /// Total number of scalars across all entries.
  size_t scalar_count() const;
  size_t trainable_scalar_count() const;

  /// Round every value to the nearest float32 so the f32 archive is lossless.
  void round_to_f32();

  bool operator==(const ParamStore& other) const;

 private:
  std::vector<Entry> entries_;
  std::unordered_map<std::string, int> index_;
};

/// Gradients aligned index-for-index with a ParamStore.
struct GradStore {
  std::vector<Matrix> grads;

  GradStore() = default;
  explicit GradStore(const ParamStore& params);
  void zero();
  void add(const GradStore& other);
  void scale(double s);
};

class Tape;

/// Handle to a node on a Tape.
struct Var {
  Tape* tape = nullptr;
  int id = -1;

  const Matrix& value() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  double scalar() const { return value()(0, 0); }
};

/// Records a computation as a DAG in creation order; backward() walks it in
/// reverse. Not thread-safe: one tape per thread.
class Tape {
 public:
  /// Called with the output gradient; adds into parents via add_grad.
  using Backward = std::function<void(Tape&, const Matrix&)>;

  explicit Tape(const ParamStore* params = nullptr) : params_(params) {}

  Var constant(Matrix value);
  /// Leaf bound to a stored parameter; repeated calls return the same node.
  Var param(const std::string& name);
  /// Generic op node. parents lists the nodes whose gradients `fn` writes.
  Var record(Matrix value, const std::vector<Var>& parents, Backward fn);

  const Matrix& value(int id) const { return nodes_[id].value; }
  bool needs_grad(int id) const { return nodes_[id].needs_grad; }
  void add_grad(int id, const Matrix& g);

  /// Seeds d(root)/d(root) = 1; root must be 1x1.
  void backward(Var root);
  /// Gradient of the last backward root w.r.t. node v (zeros if unreached).
  Matrix grad(Var v) const;
  /// Adds parameter gradients of the last backward pass into out.
  void accumulate(GradStore& out) const;

  size_t size() const { return nodes_.size(); }
  const ParamStore* params() const { return params_; }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool needs_grad = false;
    Backward backward;
  };

  std::vector<Node> nodes_;
  const ParamStore* params_;
  std::unordered_map<int, int> param_nodes_;  // store index -> node id
};

// ---- ops -------------------------------------------------------------------

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var scale(Var a, double s);
/// Elementwise product.
Var hadamard(Var a, Var b);
Var matmul(Var a, Var b);
Var transpose(Var a);
/// a (R x C) + bias (1 x C) broadcast over rows.
Var add_row(Var a, Var bias);
/// a (R x C) + bias (R x 1) broadcast over columns.
Var add_col(Var a, Var bias);
Var gelu(Var a);
Var tanh(Var a);
/// Row-wise layer normalization with affine gamma/beta (1 x C each).
Var layer_norm(Var x, Var gamma, Var beta, double eps = 1e-5);
/// Scaled dot-product multi-head attention on already projected inputs.
Var attention(Var q, Var k, Var v, int heads);
Var concat_rows(Var top, Var bottom);
Var slice_rows(Var a, Eigen::Index begin, Eigen::Index count);
/// Selected rows in order (gradient scatters back).
Var gather_rows(Var a, const std::vector<int>& rows);
Var sum_squares(Var a);
/// Mean of squared differences over every element.
Var mse(Var a, Var b);
Var sum(const std::vector<Var>& terms);
/// Returns x W + b.
Var linear(Var x, Var weight, Var bias);

/// Exact gelu used by the op, exposed for tests.
double gelu_scalar(double x);

}  // namespace echo::ag
