#pragma once

#include "echo/harness/train_config.hpp"
#include "echo/harness/training.hpp"
#include "echo/metrics/metrics.hpp"
#include "echo/retarget/retarget.hpp"

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace echo {

/// Builds the model config a training run will use: the configured model
/// with the dataset's layout adopted, validated.
ModelConfig resolve_model_config(const TrainConfig& cfg, const ResolvedData& data);

/// Holds the refinement parameter budget fixed when K_refine changes from
/// `reference_K`: fewer rounds get deeper per-direction cross-attention, and
/// K = 0 moves the whole budget into extra self-attention layers.
void apply_refine_budget(ModelConfig& cfg, int K, int reference_K);

// ---- train ----------------------------------------------------------------------

struct TrainOutputs {
  TrainResult result;
  ModelConfig model;
  std::filesystem::path final_checkpoint;
};

/// Writes <out>/loss.csv, <out>/checkpoint_last (every epoch end, last good),
/// <out>/checkpoint_final and optional numbered checkpoints. On a non-finite
/// loss the CSV and checkpoint_last are left in place and NumericError
/// propagates.
TrainOutputs cmd_train(const TrainConfig& cfg, const std::filesystem::path& out_dir,
                       std::ostream* log = nullptr);

// ---- eval -------------------------------------------------------------------------

struct EvalRequest {
  std::filesystem::path checkpoint;
  /// Empty: the test split of the dataset the checkpoint was trained on.
  std::optional<DatasetSpec> data;
  std::vector<double> horizons{0.2, 0.5, 1.0, 1.5};
  /// When set, the checkpoint must hash to this model config.
  std::optional<ModelConfig> expected;
  std::filesystem::path out_dir;
  /// Samples written to predictions.json for stick-figure plots.
  int prediction_samples = 2;
};

struct EvalOutputs {
  MetricsReport model;
  MetricsReport baseline;
};

/// Writes metrics_model.csv, metrics_baseline.csv and predictions.json.
EvalOutputs cmd_eval(const EvalRequest& req);

/// Evaluates an in-memory model and the zero-velocity baseline on samples.
EvalOutputs evaluate_with_baseline(const EchoModel& model, const std::vector<TrainingSample>& samples,
                                   const std::vector<double>& horizons, const std::string& dataset_label);

// ---- ablate ----------------------------------------------------------------------------

struct Toggle {
  std::string name;
  std::string value;
};

/// Parses `name=value`; names: use_dct, use_tempmlp, use_text,
/// use_residual_baseline, w_ind_zero (on/off) and K_refine (integer).
Toggle parse_toggle(const std::string& text);
/// Applies a toggle to a copy of the config.
TrainConfig apply_toggle(const TrainConfig& base, const Toggle& t);
std::string toggle_label(const Toggle& t);

struct AblationRow {
  std::string variant;
  MetricRow row;
};

/// Trains and evaluates the unmodified config and each toggled variant
/// under the same seed and budget. Writes <out>/<variant>/... and
/// <out>/ablation.csv (variant,metric,horizon_s,value_mm).
std::vector<AblationRow> cmd_ablate(const TrainConfig& base, const std::vector<Toggle>& toggles,
                                    const std::filesystem::path& out_dir, std::ostream* log = nullptr);

// ---- retarget ----------------------------------------------------------------------------

struct RetargetCommandConfig {
  SharedLatentConfig latent;
  /// chain id -> chain file.
  std::map<std::string, std::string> chains;
  /// Human data: skeleton for synthetic poses (empty: toy skeleton).
  std::string skeleton;
  int train_human = 2000;
  int train_robot = 2000;
  int test_count = 500;
  double human_amplitude_rad = 0.6;
  uint64_t data_seed = 0;
  /// Optional forecasting composition: checkpoint + scene data; agent 1's
  /// predicted motion is retargeted onto `compose_chain`.
  std::string forecast_checkpoint;
  std::string compose_chain;
  std::string compose_data;
};

RetargetCommandConfig load_retarget_config(const std::filesystem::path& path);
RetargetCommandConfig retarget_config_from_json_text(const std::string& text,
                                                     const std::filesystem::path& base_dir = {});

struct RetargetOutputs {
  RetargetParams params;
  std::vector<RetargetRow> trained;
  std::vector<RetargetRow> untrained;
  std::optional<Motion> composed;
};

/// Writes <out>/retarget_checkpoint, <out>/retarget_eval.csv (trained and
/// untrained rows, embodiment suffixed ":untrained"), <out>/retarget_loss.csv
/// and, when composing, <out>/composed_robot.json.
RetargetOutputs cmd_retarget(const RetargetCommandConfig& cfg, const std::filesystem::path& out_dir,
                             std::ostream* log = nullptr);

// ---- report --------------------------------------------------------------------------------

struct ReportOutputs {
  std::vector<std::filesystem::path> plots;
  std::filesystem::path summary;
};

/// Reads every metrics CSV in `run_dir` (and loss.csv / predictions.json
/// when present) and writes SVG plots plus summary.csv into `run_dir`.
ReportOutputs cmd_report(const std::filesystem::path& run_dir, std::optional<int> scene = std::nullopt);

}  // namespace echo
