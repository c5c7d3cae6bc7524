#pragma once

#include "echo/autograd/optim.hpp"
#include "echo/autograd/tape.hpp"
#include "echo/harness/train_config.hpp"
#include "echo/losses/losses.hpp"
#include "echo/model/echo_model.hpp"

#include <filesystem>
#include <functional>
#include <vector>

namespace echo {

/// Learning rate for `step` (0-based) of `epoch`: a per-step linear ramp to
/// lr over the warmup epochs, then lr * gamma^(epoch - warmup).
double learning_rate(const TrainConfig& cfg, int epoch, int step, int steps_per_epoch);

/// Mean loss and gradient over a batch. Samples run in parallel into
/// per-sample buffers which are reduced in batch order, so the result does
/// not depend on the thread count.
struct BatchResult {
  LossBreakdown loss;
  ag::GradStore grads;
};
BatchResult batch_gradient(const EchoModel& model, const std::vector<const TrainingSample*>& batch,
                           const LossWeights& weights, const AgentSkeletons& skeletons,
                           bool supervise_observed, uint64_t dropout_seed);

struct LossRow {
  int step = 0;
  LossBreakdown loss;
};

struct TrainResult {
  std::vector<LossRow> curve;
  int steps = 0;
  int epochs_run = 0;
};

struct TrainHooks {
  /// Called after each logged step (before the parameter update).
  std::function<void(const LossRow&)> on_step;
  /// Called at each epoch end with the updated model.
  std::function<void(int epoch, const EchoModel&)> on_epoch_end;
};

/// Runs the schedule over `data.train`, updating `model` in place. Throws
/// NumericError on a non-finite loss or gradient before applying the step.
TrainResult train_model(EchoModel& model, const TrainConfig& cfg, const ResolvedData& data,
                        const TrainHooks& hooks = {});

std::string loss_curve_csv(const std::vector<LossRow>& curve);
std::string loss_csv_header();
std::string loss_csv_line(const LossRow& row);

}  // namespace echo
