#include "echo/harness/training.hpp"

#include "echo/errors.hpp"
#include "echo/rng.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numeric>

namespace echo {

double learning_rate(const TrainConfig& cfg, int epoch, int step, int steps_per_epoch) {
  if (epoch < cfg.warmup_epochs) {
    const double done = static_cast<double>(epoch) * steps_per_epoch + step + 1;
    return cfg.lr * done / (static_cast<double>(cfg.warmup_epochs) * steps_per_epoch);
  }
  return cfg.lr * std::pow(cfg.gamma, epoch - cfg.warmup_epochs);
}

// ---- batches -------------------------------------------------------------------------

BatchResult batch_gradient(const EchoModel& model, const std::vector<const TrainingSample*>& batch,
                           const LossWeights& weights, const AgentSkeletons& skeletons,
                           bool supervise_observed, uint64_t dropout_seed) {
  const int n = static_cast<int>(batch.size());
  if (n == 0) throw std::logic_error("empty batch");
  std::vector<ag::GradStore> grads(batch.size());
  std::vector<LossBreakdown> losses(batch.size());
  std::vector<std::exception_ptr> errors(batch.size());
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < n; ++i) {
    try {
      Rng rng(mix_seed(dropout_seed, static_cast<uint64_t>(i)));
      ag::Tape tape(&model.params());
      ForwardOptions opt;
      opt.training = true;
      opt.rng = &rng;
      const SampleLoss sl =
          sample_loss(tape, model, *batch[i], weights, skeletons, supervise_observed, opt);
      tape.backward(sl.total);
      grads[i] = ag::GradStore(model.params());
      tape.accumulate(grads[i]);
      losses[i] = sl.values;
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  BatchResult r;
  r.grads = std::move(grads[0]);
  r.loss = losses[0];
  for (int i = 1; i < n; ++i) {
    r.grads.add(grads[i]);
    r.loss.l_ind += losses[i].l_ind;
    r.loss.l_soc += losses[i].l_soc;
    r.loss.l_int += losses[i].l_int;
    r.loss.l_bone += losses[i].l_bone;
    r.loss.total += losses[i].total;
  }
  const double inv = 1.0 / n;
  r.grads.scale(inv);
  r.loss.l_ind *= inv;
  r.loss.l_soc *= inv;
  r.loss.l_int *= inv;
  r.loss.l_bone *= inv;
  r.loss.total *= inv;
  return r;
}

// ---- loop ------------------------------------------------------------------------------

namespace {

bool finite_grads(const ag::GradStore& g) {
  return std::all_of(g.grads.begin(), g.grads.end(), [](const Matrix& m) { return m.allFinite(); });
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

TrainResult train_model(EchoModel& model, const TrainConfig& cfg, const ResolvedData& data,
                        const TrainHooks& hooks) {
  cfg.validate();
  if (data.train.empty()) throw DataError("training split is empty");
  const int n = static_cast<int>(data.train.size());
  const int bs = std::min(cfg.batch_size, n);
  const int steps_per_epoch = (n + bs - 1) / bs;
  ag::AdamW opt(model.params(), {cfg.lr, cfg.beta1, cfg.beta2, 1e-8, cfg.weight_decay});
  const AgentSkeletons skeletons = data.skeleton_ptrs();

  TrainResult res;
  std::vector<int> order(static_cast<size_t>(n));
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    Rng shuffle(mix_seed(cfg.seed, 0x5eed0000ull + static_cast<uint64_t>(epoch)));
    for (int i = n - 1; i > 0; --i) {
      std::swap(order[static_cast<size_t>(i)], order[shuffle.below(static_cast<uint64_t>(i) + 1)]);
    }
    for (int step = 0; step < steps_per_epoch; ++step) {
      std::vector<const TrainingSample*> batch;
      for (int k = step * bs; k < std::min(n, (step + 1) * bs); ++k) batch.push_back(&data.train[order[k]]);
      const BatchResult br = batch_gradient(model, batch, cfg.loss_weights, skeletons, cfg.supervise_observed,
                                            mix_seed(cfg.seed, static_cast<uint64_t>(res.steps)));
      if (!std::isfinite(br.loss.total) || !finite_grads(br.grads)) {
        throw NumericError("non-finite loss at step " + std::to_string(res.steps) + " (epoch " +
                           std::to_string(epoch) + "): total=" + fmt(br.loss.total) + " l_ind=" +
                           fmt(br.loss.l_ind) + " l_soc=" + fmt(br.loss.l_soc) + " l_int=" +
                           fmt(br.loss.l_int) + " l_bone=" + fmt(br.loss.l_bone));
      }
      res.curve.push_back({res.steps, br.loss});
      if (hooks.on_step) hooks.on_step(res.curve.back());
      opt.step(model.params(), br.grads, learning_rate(cfg, epoch, step, steps_per_epoch));
      ++res.steps;
      if (cfg.max_steps > 0 && res.steps >= cfg.max_steps) break;
    }
    res.epochs_run = epoch + 1;
    if (hooks.on_epoch_end) hooks.on_epoch_end(epoch, model);
    if (cfg.max_steps > 0 && res.steps >= cfg.max_steps) break;
  }
  return res;
}

std::string loss_csv_header() { return "step,l_ind,l_soc,l_int,l_bone,total\n"; }

std::string loss_csv_line(const LossRow& r) {
  return std::to_string(r.step) + "," + fmt(r.loss.l_ind) + "," + fmt(r.loss.l_soc) + "," + fmt(r.loss.l_int) +
         "," + fmt(r.loss.l_bone) + "," + fmt(r.loss.total) + "\n";
}

std::string loss_curve_csv(const std::vector<LossRow>& curve) {
  std::string out = loss_csv_header();
  for (const auto& r : curve) out += loss_csv_line(r);
  return out;
}

}  // namespace echo
