#pragma once

#include "echo/datasets/datasets.hpp"
#include "echo/losses/losses.hpp"
#include "echo/model/config.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace echo {

/// Where samples come from. `source` is "synthetic", "scenes" (a directory of
/// scene files or a single file) or "chico" (human + robot files).
struct DatasetSpec {
  std::string source = "synthetic";

  // synthetic
  std::vector<std::string> kinds{"handshake", "mirror", "circle"};
  int train_scenes = 8;
  int test_scenes = 8;
  int frames = 60;
  int observed_len = 15;
  uint64_t seed = 0;
  SyntheticOptions synthetic;

  // files
  std::string path;
  double observed_s = 0.5;
  double predicted_s = 1.5;
  /// Window stride in frames; 0 means non-overlapping windows.
  int stride = 0;
  /// Last fraction of files (sorted by name) held out for evaluation.
  double test_fraction = 0.2;

  // both
  double fps = 30.0;
  /// Skeleton for the bone loss and synthetic animation; empty: toy skeleton
  /// for synthetic data, no bone term for files.
  std::string skeleton;
};

void to_json(nlohmann::json& j, const DatasetSpec& d);
void from_json(const nlohmann::json& j, DatasetSpec& d);

/// Parses a `--data` argument: a directory or file of scenes, a dataset JSON
/// file containing a "source" key, or `synthetic[:key=value,...]` with keys
/// kinds (|-separated), scenes, frames, observed, seed, fps.
DatasetSpec parse_data_argument(const std::string& arg);

struct TrainConfig {
  int epochs = 150;
  int warmup_epochs = 5;
  double gamma = 0.97;
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double weight_decay = 1e-2;
  int batch_size = 8;
  /// Stop after this many optimizer steps; 0 means run every epoch.
  int max_steps = 0;
  uint64_t seed = 0;
  bool supervise_observed = true;
  /// Also keep a numbered checkpoint every this many epochs; 0 disables.
  int checkpoint_every = 0;
  std::vector<double> horizons{0.2, 0.5, 1.0, 1.5};
  DatasetSpec dataset;
  ModelConfig model;
  LossWeights loss_weights;

  /// Throws UsageError on a broken invariant.
  void validate() const;
};

void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);

/// Reads a JSON config; unknown keys are rejected. ECHO_SEED, when set,
/// overrides `seed`.
TrainConfig load_train_config(const std::filesystem::path& path);
TrainConfig train_config_from_json_text(const std::string& text);
/// Applies the ECHO_SEED environment override, if present.
void apply_seed_override(uint64_t& seed);

/// Resolved samples plus the per-agent skeletons used by the bone loss.
struct ResolvedData {
  std::vector<TrainingSample> train;
  std::vector<TrainingSample> test;
  std::array<std::optional<SkeletonSpec>, 2> skeletons;
  /// Layout implied by the data: T, per-agent joints/representation, intents.
  int frames = 0;
  std::array<int, 2> joints{};
  std::array<Representation, 2> reps{};
  std::vector<std::string> intents;

  AgentSkeletons skeleton_ptrs() const;
};

ResolvedData resolve_dataset(const DatasetSpec& spec);

/// Copies the data layout (T, agent joints and representations, and, for
/// file datasets, the intent vocabulary) into a model config.
void adopt_data_layout(ModelConfig& cfg, const ResolvedData& data, const DatasetSpec& spec);

}  // namespace echo
