#pragma once

#include "echo/autograd/tape.hpp"

#include <vector>

namespace echo::ag {

struct AdamWOptions {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 1e-2;
};

/// Adam with decoupled weight decay. Decay applies to `.weight` matrices
/// only; frozen entries are never touched. Parameters are rounded to float32
/// after each step.
class AdamW {
 public:
  AdamW(const ParamStore& params, AdamWOptions opt);
  void step(ParamStore& params, const GradStore& grads, double lr);
  int steps() const { return t_; }

 private:
  AdamWOptions opt_;
  std::vector<Matrix> m_, v_;
  std::vector<bool> decay_;
  int t_ = 0;
};

}  // namespace echo::ag
