#include "echo/autograd/optim.hpp"

#include <cmath>

namespace echo::ag {

namespace {

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace

AdamW::AdamW(const ParamStore& params, AdamWOptions opt) : opt_(opt) {
  for (const auto& e : params.entries()) {
    m_.push_back(Matrix::Zero(e.value.rows(), e.value.cols()));
    v_.push_back(Matrix::Zero(e.value.rows(), e.value.cols()));
    decay_.push_back(ends_with(e.name, ".weight"));
  }
}

void AdamW::step(ParamStore& params, const GradStore& grads, double lr) {
  ++t_;
  const double bc1 = 1.0 - std::pow(opt_.beta1, t_);
  const double bc2 = 1.0 - std::pow(opt_.beta2, t_);
  auto& entries = params.entries();
  for (size_t i = 0; i < entries.size(); ++i) {
    if (!entries[i].trainable) continue;
    const Matrix& g = grads.grads[i];
    m_[i] = opt_.beta1 * m_[i] + (1.0 - opt_.beta1) * g;
    v_[i] = opt_.beta2 * v_[i] + (1.0 - opt_.beta2) * g.cwiseProduct(g);
    Matrix& w = entries[i].value;
    if (decay_[i]) w *= 1.0 - lr * opt_.weight_decay;
    w.array() -= lr * (m_[i].array() / bc1) / ((v_[i].array() / bc2).sqrt() + opt_.eps);
  }
  params.round_to_f32();
}

}  // namespace echo::ag
