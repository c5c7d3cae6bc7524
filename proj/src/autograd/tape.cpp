#include "echo/autograd/tape.hpp"

#include "echo/errors.hpp"

#include <cmath>
#include <numbers>

namespace echo::ag {

Matrix& ParamStore::add(const std::string& name, Matrix init, bool trainable) {
  if (contains(name)) throw std::logic_error("duplicate parameter '" + name + "'");
  index_[name] = static_cast<int>(entries_.size());
  entries_.push_back({name, std::move(init), trainable});
  return entries_.back().value;
}

int ParamStore::index(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw DataError("unknown parameter '" + name + "'");
  return it->second;
}

size_t ParamStore::scalar_count() const {
  size_t n = 0;
  for (const auto& e : entries_) n += static_cast<size_t>(e.value.size());
  return n;
}

size_t ParamStore::trainable_scalar_count() const {
  size_t n = 0;
  for (const auto& e : entries_) {
    if (e.trainable) n += static_cast<size_t>(e.value.size());
  }
  return n;
}

void ParamStore::round_to_f32() {
  for (auto& e : entries_) {
    e.value = e.value.unaryExpr([](double v) { return static_cast<double>(static_cast<float>(v)); });
  }
}

bool ParamStore::operator==(const ParamStore& other) const {
  if (entries_.size() != other.entries_.size()) return false;
  for (size_t i = 0; i < entries_.size(); ++i) {
    const auto& a = entries_[i];
    const auto& b = other.entries_[i];
    if (a.name != b.name || a.trainable != b.trainable || a.value.rows() != b.value.rows() ||
        a.value.cols() != b.value.cols() || a.value != b.value) {
      return false;
    }
  }
  return true;
}

GradStore::GradStore(const ParamStore& params) {
  grads.reserve(params.size());
  for (const auto& e : params.entries()) grads.push_back(Matrix::Zero(e.value.rows(), e.value.cols()));
}

void GradStore::zero() {
  for (auto& g : grads) g.setZero();
}

void GradStore::add(const GradStore& other) {
  for (size_t i = 0; i < grads.size(); ++i) grads[i] += other.grads[i];
}

void GradStore::scale(double s) {
  for (auto& g : grads) g *= s;
}

// ---------------------------------------------------------------------------

const Matrix& Var::value() const { return tape->value(id); }

Var Tape::constant(Matrix value) {
  nodes_.push_back({std::move(value), Matrix(), false, nullptr});
  return {this, static_cast<int>(nodes_.size()) - 1};
}

Var Tape::param(const std::string& name) {
  if (params_ == nullptr) throw std::logic_error("tape has no parameter store");
  const int idx = params_->index(name);
  auto it = param_nodes_.find(idx);
  if (it != param_nodes_.end()) return {this, it->second};
  const auto& entry = params_->entries()[idx];
  nodes_.push_back({entry.value, Matrix(), entry.trainable, nullptr});
  const int id = static_cast<int>(nodes_.size()) - 1;
  param_nodes_[idx] = id;
  return {this, id};
}

Var Tape::record(Matrix value, const std::vector<Var>& parents, Backward fn) {
  bool needs = false;
  for (const auto& p : parents) needs = needs || nodes_[p.id].needs_grad;
  nodes_.push_back({std::move(value), Matrix(), needs, needs ? Backward(std::move(fn)) : Backward()});
  return {this, static_cast<int>(nodes_.size()) - 1};
}

void Tape::add_grad(int id, const Matrix& g) {
  Node& n = nodes_[id];
  if (!n.needs_grad) return;
  if (n.grad.size() == 0) {
    n.grad = g;
  } else {
    n.grad += g;
  }
}

void Tape::backward(Var root) {
  if (root.rows() != 1 || root.cols() != 1) throw std::logic_error("backward root must be scalar");
  for (auto& n : nodes_) n.grad.resize(0, 0);
  nodes_[root.id].grad = Matrix::Ones(1, 1);
  for (int id = root.id; id >= 0; --id) {
    Node& n = nodes_[id];
    if (n.backward && n.grad.size() != 0) {
      // Copy: the callback may touch other nodes but never this one.
      const Matrix g = n.grad;
      n.backward(*this, g);
    }
  }
}

Matrix Tape::grad(Var v) const {
  const Node& n = nodes_[v.id];
  if (n.grad.size() == 0) return Matrix::Zero(n.value.rows(), n.value.cols());
  return n.grad;
}

void Tape::accumulate(GradStore& out) const {
  for (const auto& [idx, node] : param_nodes_) {
    const Matrix& g = nodes_[node].grad;
    if (g.size() != 0) out.grads[idx] += g;
  }
}

// ---------------------------------------------------------------------------

namespace {

void check_same_shape(Var a, Var b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::logic_error(std::string(op) + ": shape mismatch " + std::to_string(a.rows()) + "x" +
                           std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                           std::to_string(b.cols()));
  }
}

}  // namespace

double gelu_scalar(double x) { return 0.5 * x * (1.0 + std::erf(x / std::numbers::sqrt2)); }

Var add(Var a, Var b) {
  check_same_shape(a, b, "add");
  const int ia = a.id, ib = b.id;
  return a.tape->record(a.value() + b.value(), {a, b}, [ia, ib](Tape& t, const Matrix& g) {
    t.add_grad(ia, g);
    t.add_grad(ib, g);
  });
}

Var sub(Var a, Var b) {
  check_same_shape(a, b, "sub");
  const int ia = a.id, ib = b.id;
  return a.tape->record(a.value() - b.value(), {a, b}, [ia, ib](Tape& t, const Matrix& g) {
    t.add_grad(ia, g);
    t.add_grad(ib, -g);
  });
}

Var scale(Var a, double s) {
  const int ia = a.id;
  return a.tape->record(a.value() * s, {a},
                        [ia, s](Tape& t, const Matrix& g) { t.add_grad(ia, g * s); });
}

Var hadamard(Var a, Var b) {
  check_same_shape(a, b, "hadamard");
  const int ia = a.id, ib = b.id;
  return a.tape->record(a.value().cwiseProduct(b.value()), {a, b},
                        [ia, ib](Tape& t, const Matrix& g) {
                          if (t.needs_grad(ia)) t.add_grad(ia, g.cwiseProduct(t.value(ib)));
                          if (t.needs_grad(ib)) t.add_grad(ib, g.cwiseProduct(t.value(ia)));
                        });
}

Var matmul(Var a, Var b) {
  if (a.cols() != b.rows()) {
    throw std::logic_error("matmul: inner dimensions " + std::to_string(a.cols()) + " vs " +
                           std::to_string(b.rows()));
  }
  const int ia = a.id, ib = b.id;
  return a.tape->record(a.value() * b.value(), {a, b}, [ia, ib](Tape& t, const Matrix& g) {
    if (t.needs_grad(ia)) t.add_grad(ia, g * t.value(ib).transpose());
    if (t.needs_grad(ib)) t.add_grad(ib, t.value(ia).transpose() * g);
  });
}

Var transpose(Var a) {
  const int ia = a.id;
  return a.tape->record(a.value().transpose(), {a},
                        [ia](Tape& t, const Matrix& g) { t.add_grad(ia, g.transpose()); });
}

Var add_row(Var a, Var bias) {
  if (bias.rows() != 1 || bias.cols() != a.cols()) throw std::logic_error("add_row: bias shape");
  const int ia = a.id, ib = bias.id;
  Matrix out = a.value().rowwise() + bias.value().row(0);
  return a.tape->record(std::move(out), {a, bias}, [ia, ib](Tape& t, const Matrix& g) {
    t.add_grad(ia, g);
    if (t.needs_grad(ib)) t.add_grad(ib, g.colwise().sum());
  });
}

Var add_col(Var a, Var bias) {
  if (bias.cols() != 1 || bias.rows() != a.rows()) throw std::logic_error("add_col: bias shape");
  const int ia = a.id, ib = bias.id;
  Matrix out = a.value().colwise() + bias.value().col(0);
  return a.tape->record(std::move(out), {a, bias}, [ia, ib](Tape& t, const Matrix& g) {
    t.add_grad(ia, g);
    if (t.needs_grad(ib)) t.add_grad(ib, g.rowwise().sum());
  });
}

Var gelu(Var a) {
  const int ia = a.id;
  Matrix out = a.value().unaryExpr([](double x) { return gelu_scalar(x); });
  return a.tape->record(std::move(out), {a}, [ia](Tape& t, const Matrix& g) {
    const double inv_sqrt_2pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);
    Matrix d = t.value(ia).unaryExpr([inv_sqrt_2pi](double x) {
      return 0.5 * (1.0 + std::erf(x / std::numbers::sqrt2)) +
             x * std::exp(-0.5 * x * x) * inv_sqrt_2pi;
    });
    t.add_grad(ia, g.cwiseProduct(d));
  });
}

Var tanh(Var a) {
  const int ia = a.id;
  Matrix out = a.value().array().tanh().matrix();
  Matrix y = out;
  return a.tape->record(std::move(out), {a}, [ia, y](Tape& t, const Matrix& g) {
    t.add_grad(ia, g.cwiseProduct((1.0 - y.array().square()).matrix()));
  });
}

Var layer_norm(Var x, Var gamma, Var beta, double eps) {
  const Eigen::Index C = x.cols();
  if (gamma.rows() != 1 || gamma.cols() != C || beta.rows() != 1 || beta.cols() != C) {
    throw std::logic_error("layer_norm: affine shape");
  }
  const Matrix& X = x.value();
  Matrix xhat(X.rows(), C);
  Vector inv_std(X.rows());
  for (Eigen::Index r = 0; r < X.rows(); ++r) {
    const double mu = X.row(r).mean();
    const double var = (X.row(r).array() - mu).square().mean();
    inv_std[r] = 1.0 / std::sqrt(var + eps);
    xhat.row(r) = (X.row(r).array() - mu) * inv_std[r];
  }
  Matrix out = (xhat.array().rowwise() * gamma.value().row(0).array()).matrix();
  out.rowwise() += beta.value().row(0);
  const int ix = x.id, ig = gamma.id, ib = beta.id;
  return x.tape->record(std::move(out), {x, gamma, beta},
                        [ix, ig, ib, xhat, inv_std, C](Tape& t, const Matrix& g) {
                          const auto& gam = t.value(ig);
                          if (t.needs_grad(ig)) t.add_grad(ig, g.cwiseProduct(xhat).colwise().sum());
                          if (t.needs_grad(ib)) t.add_grad(ib, g.colwise().sum());
                          if (!t.needs_grad(ix)) return;
                          Matrix dx(g.rows(), C);
                          for (Eigen::Index r = 0; r < g.rows(); ++r) {
                            Eigen::RowVectorXd dxh = g.row(r).cwiseProduct(gam.row(0));
                            const double m1 = dxh.mean();
                            const double m2 = dxh.cwiseProduct(xhat.row(r)).mean();
                            dx.row(r) = inv_std[r] *
                                        (dxh.array() - m1 - xhat.row(r).array() * m2).matrix();
                          }
                          t.add_grad(ix, dx);
                        });
}

Var attention(Var q, Var k, Var v, int heads) {
  const Eigen::Index D = q.cols();
  if (k.cols() != D || v.cols() != D || k.rows() != v.rows() || heads <= 0 || D % heads != 0) {
    throw std::logic_error("attention: incompatible shapes or head count");
  }
  const Eigen::Index dh = D / heads;
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));
  const Matrix& Q = q.value();
  const Matrix& K = k.value();
  const Matrix& V = v.value();
  Matrix out(Q.rows(), D);
  std::vector<Matrix> probs(static_cast<size_t>(heads));
  for (int h = 0; h < heads; ++h) {
    Matrix s = Q.middleCols(h * dh, dh) * K.middleCols(h * dh, dh).transpose() * inv_sqrt;
    for (Eigen::Index r = 0; r < s.rows(); ++r) {
      const double m = s.row(r).maxCoeff();
      s.row(r) = (s.row(r).array() - m).exp().matrix();
      s.row(r) /= s.row(r).sum();
    }
    out.middleCols(h * dh, dh) = s * V.middleCols(h * dh, dh);
    probs[h] = std::move(s);
  }
  const int iq = q.id, ik = k.id, iv = v.id;
  return q.tape->record(
      std::move(out), {q, k, v},
      [iq, ik, iv, heads, dh, inv_sqrt, probs = std::move(probs)](Tape& t, const Matrix& g) {
        const Matrix& Q = t.value(iq);
        const Matrix& K = t.value(ik);
        const Matrix& V = t.value(iv);
        Matrix dQ = Matrix::Zero(Q.rows(), Q.cols());
        Matrix dK = Matrix::Zero(K.rows(), K.cols());
        Matrix dV = Matrix::Zero(V.rows(), V.cols());
        for (int h = 0; h < heads; ++h) {
          const Matrix& P = probs[h];
          const auto gh = g.middleCols(h * dh, dh);
          dV.middleCols(h * dh, dh) = P.transpose() * gh;
          Matrix dP = gh * V.middleCols(h * dh, dh).transpose();
          Vector rowdot = (dP.cwiseProduct(P)).rowwise().sum();
          Matrix dS = P.cwiseProduct((dP.colwise() - rowdot));
          dQ.middleCols(h * dh, dh) = dS * K.middleCols(h * dh, dh) * inv_sqrt;
          dK.middleCols(h * dh, dh) = dS.transpose() * Q.middleCols(h * dh, dh) * inv_sqrt;
        }
        t.add_grad(iq, dQ);
        t.add_grad(ik, dK);
        t.add_grad(iv, dV);
      });
}

Var concat_rows(Var top, Var bottom) {
  if (top.cols() != bottom.cols()) throw std::logic_error("concat_rows: column mismatch");
  Matrix out(top.rows() + bottom.rows(), top.cols());
  out.topRows(top.rows()) = top.value();
  out.bottomRows(bottom.rows()) = bottom.value();
  const int it = top.id, ib = bottom.id;
  const Eigen::Index rt = top.rows(), rb = bottom.rows();
  return top.tape->record(std::move(out), {top, bottom}, [it, ib, rt, rb](Tape& t, const Matrix& g) {
    t.add_grad(it, g.topRows(rt));
    t.add_grad(ib, g.bottomRows(rb));
  });
}

Var slice_rows(Var a, Eigen::Index begin, Eigen::Index count) {
  if (begin < 0 || count < 0 || begin + count > a.rows()) {
    throw std::logic_error("slice_rows: out of range");
  }
  const int ia = a.id;
  const Eigen::Index rows = a.rows(), cols = a.cols();
  return a.tape->record(a.value().middleRows(begin, count), {a},
                        [ia, begin, count, rows, cols](Tape& t, const Matrix& g) {
                          Matrix full = Matrix::Zero(rows, cols);
                          full.middleRows(begin, count) = g;
                          t.add_grad(ia, full);
                        });
}

Var gather_rows(Var a, const std::vector<int>& rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), a.cols());
  for (size_t r = 0; r < rows.size(); ++r) out.row(static_cast<Eigen::Index>(r)) = a.value().row(rows[r]);
  const int ia = a.id;
  const Eigen::Index nr = a.rows(), nc = a.cols();
  return a.tape->record(std::move(out), {a}, [ia, rows, nr, nc](Tape& t, const Matrix& g) {
    Matrix full = Matrix::Zero(nr, nc);
    for (size_t r = 0; r < rows.size(); ++r) full.row(rows[r]) += g.row(static_cast<Eigen::Index>(r));
    t.add_grad(ia, full);
  });
}

Var sum_squares(Var a) {
  Matrix out(1, 1);
  out(0, 0) = a.value().squaredNorm();
  const int ia = a.id;
  return a.tape->record(std::move(out), {a}, [ia](Tape& t, const Matrix& g) {
    t.add_grad(ia, 2.0 * g(0, 0) * t.value(ia));
  });
}

Var mse(Var a, Var b) {
  check_same_shape(a, b, "mse");
  const double n = static_cast<double>(a.value().size());
  Matrix out(1, 1);
  out(0, 0) = (a.value() - b.value()).squaredNorm() / n;
  const int ia = a.id, ib = b.id;
  return a.tape->record(std::move(out), {a, b}, [ia, ib, n](Tape& t, const Matrix& g) {
    Matrix d = (2.0 * g(0, 0) / n) * (t.value(ia) - t.value(ib));
    t.add_grad(ib, -d);
    t.add_grad(ia, d);
  });
}

Var sum(const std::vector<Var>& terms) {
  if (terms.empty()) throw std::logic_error("sum of no terms");
  Var acc = terms.front();
  for (size_t i = 1; i < terms.size(); ++i) acc = add(acc, terms[i]);
  return acc;
}

Var linear(Var x, Var weight, Var bias) { return add_row(matmul(x, weight), bias); }

}  // namespace echo::ag
