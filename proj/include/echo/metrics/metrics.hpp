#pragma once

#include "echo/core/types.hpp"
#include "echo/datasets/datasets.hpp"
#include "echo/model/echo_model.hpp"

#include <array>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

namespace echo {

struct MetricOptions {
  /// Score squared distances instead of distances (comparison only).
  bool squared = false;
  /// Root joint index for AJPE and FDE.
  int root = 0;
};

/// Mean joint position error over all agents and joints at frame t.
double jpe(const std::vector<Motion>& pred, const std::vector<Motion>& gt, int t,
           const MetricOptions& opt = {});
/// JPE after subtracting each agent's own root position.
double ajpe(const std::vector<Motion>& pred, const std::vector<Motion>& gt, int t,
            const MetricOptions& opt = {});
/// Root displacement at the final frame, averaged over agents.
double fde(const std::vector<Motion>& pred, const std::vector<Motion>& gt,
           const MetricOptions& opt = {});
/// Root displacement at frame t, averaged over agents.
double fde_at(const std::vector<Motion>& pred, const std::vector<Motion>& gt, int t,
              const MetricOptions& opt = {});
double mpjpe(const Motion& pred, const Motion& gt, int t, const MetricOptions& opt = {});

/// Frame index scored for horizon h seconds: N - 1 + h*fps. Throws DataError
/// when h*fps is not an integer or the frame lies outside [N, T).
int horizon_frame(double fps, int observed_len, int total_frames, double horizon_s);

struct MetricRow {
  std::string metric;
  double horizon_s = 0.0;
  double value_mm = 0.0;
};

struct MetricsReport {
  std::vector<MetricRow> rows;
  /// Written as `# key: value` lines ahead of the CSV header.
  std::map<std::string, std::string> metadata;

  double value(const std::string& metric, double horizon_s) const;
  std::string to_csv() const;
  void write_csv(const std::filesystem::path& path) const;
  static MetricsReport read_csv(const std::filesystem::path& path);
};

/// Predictor signature shared by the model and the baseline.
using Forecaster = std::function<std::array<Motion, 2>(const TrainingSample&)>;

Forecaster model_forecaster(const EchoModel& model);
Forecaster baseline_forecaster();

struct EvalOptions {
  std::vector<double> horizons{0.2, 0.5, 1.0, 1.5};
  MetricOptions metric;
  /// Evaluate samples in parallel; results are identical either way.
  bool parallel = true;
};

/// Per-sample metric values: [metric][horizon index][sample].
struct PerSampleMetrics {
  std::vector<std::string> metrics;
  std::vector<double> horizons;
  std::vector<std::vector<std::vector<double>>> values;
};

/// JPE, AJPE and FDE at every horizon for xyz-only samples; MPJPE of the
/// xyz agent for mixed human/robot samples.
PerSampleMetrics per_sample_metrics(const Forecaster& f, const std::vector<TrainingSample>& samples,
                                    const EvalOptions& opt = {});

/// Arithmetic mean over samples for each metric and horizon.
MetricsReport evaluate_model(const Forecaster& f, const std::vector<TrainingSample>& samples,
                             const EvalOptions& opt = {});

}  // namespace echo
