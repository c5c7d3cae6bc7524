#include "echo/harness/train_config.hpp"

#include "echo/core/skeleton.hpp"
#include "echo/errors.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

namespace echo {

using nlohmann::json;

namespace {

void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw UsageError(where + " must be a JSON object");
  for (const auto& [k, v] : j.items()) {
    if (!allowed.count(k)) throw UsageError("unknown key '" + k + "' in " + where);
  }
}

template <typename T>
void get_opt(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

void to_json(json& j, const DatasetSpec& d) {
  j = json{{"source", d.source},
           {"kinds", d.kinds},
           {"train_scenes", d.train_scenes},
           {"test_scenes", d.test_scenes},
           {"frames", d.frames},
           {"observed_len", d.observed_len},
           {"seed", d.seed},
           {"delay", d.synthetic.delay},
           {"keyframe_spacing", d.synthetic.keyframe_spacing},
           {"joint_amplitude_rad", d.synthetic.joint_amplitude_rad},
           {"root_wander_mm", d.synthetic.root_wander_mm},
           {"separation_mm", d.synthetic.separation_mm},
           {"path", d.path},
           {"observed_s", d.observed_s},
           {"predicted_s", d.predicted_s},
           {"stride", d.stride},
           {"test_fraction", d.test_fraction},
           {"fps", d.fps},
           {"skeleton", d.skeleton}};
}

void from_json(const json& j, DatasetSpec& d) {
  reject_unknown(j,
                 {"source", "kinds", "train_scenes", "test_scenes", "frames", "observed_len", "seed",
                  "delay", "keyframe_spacing", "joint_amplitude_rad", "root_wander_mm",
                  "separation_mm", "path", "observed_s", "predicted_s", "stride", "test_fraction",
                  "fps", "skeleton"},
                 "dataset");
  get_opt(j, "source", d.source);
  get_opt(j, "kinds", d.kinds);
  get_opt(j, "train_scenes", d.train_scenes);
  get_opt(j, "test_scenes", d.test_scenes);
  get_opt(j, "frames", d.frames);
  get_opt(j, "observed_len", d.observed_len);
  get_opt(j, "seed", d.seed);
  get_opt(j, "delay", d.synthetic.delay);
  get_opt(j, "keyframe_spacing", d.synthetic.keyframe_spacing);
  get_opt(j, "joint_amplitude_rad", d.synthetic.joint_amplitude_rad);
  get_opt(j, "root_wander_mm", d.synthetic.root_wander_mm);
  get_opt(j, "separation_mm", d.synthetic.separation_mm);
  get_opt(j, "path", d.path);
  get_opt(j, "observed_s", d.observed_s);
  get_opt(j, "predicted_s", d.predicted_s);
  get_opt(j, "stride", d.stride);
  get_opt(j, "test_fraction", d.test_fraction);
  get_opt(j, "fps", d.fps);
  get_opt(j, "skeleton", d.skeleton);
}

DatasetSpec parse_data_argument(const std::string& arg) {
  DatasetSpec d;
  if (arg.rfind("synthetic", 0) == 0) {
    d.source = "synthetic";
    if (arg.size() > 9) {
      if (arg[9] != ':') throw UsageError("expected synthetic[:key=value,...], got '" + arg + "'");
      std::istringstream ss(arg.substr(10));
      std::string item;
      while (std::getline(ss, item, ',')) {
        const auto eq = item.find('=');
        if (eq == std::string::npos) throw UsageError("expected key=value in '" + item + "'");
        const std::string k = item.substr(0, eq), v = item.substr(eq + 1);
        try {
          if (k == "kinds") {
            d.kinds.clear();
            std::istringstream ks(v);
            std::string kind;
            while (std::getline(ks, kind, '|')) d.kinds.push_back(kind);
          } else if (k == "scenes") {
            d.test_scenes = std::stoi(v);
          } else if (k == "frames") {
            d.frames = std::stoi(v);
          } else if (k == "observed") {
            d.observed_len = std::stoi(v);
          } else if (k == "seed") {
            d.seed = std::stoull(v);
          } else if (k == "fps") {
            d.fps = std::stod(v);
          } else {
            throw UsageError("unknown synthetic data key '" + k + "'");
          }
        } catch (const std::logic_error& e) {
          if (dynamic_cast<const UsageError*>(&e) == nullptr) {
            throw UsageError("bad value for '" + k + "': " + v);
          }
          throw;
        }
      }
    }
    return d;
  }
  const std::filesystem::path p(arg);
  if (!std::filesystem::exists(p)) throw DataError("data path does not exist: " + arg);
  if (std::filesystem::is_regular_file(p) && p.extension() == ".json") {
    std::ifstream f(p);
    json j;
    try {
      j = json::parse(f);
    } catch (const json::exception& e) {
      throw DataError(arg + ": " + e.what());
    }
    if (j.is_object() && j.contains("source")) return j.get<DatasetSpec>();
  }
  d.source = "scenes";
  d.path = arg;
  d.test_fraction = 1.0;
  return d;
}

void TrainConfig::validate() const {
  if (epochs < 1) throw UsageError("epochs must be >= 1");
  if (warmup_epochs < 0 || warmup_epochs > epochs) throw UsageError("warmup_epochs must be in [0, epochs]");
  if (!(lr > 0.0)) throw UsageError("lr must be > 0");
  if (!(gamma > 0.0)) throw UsageError("gamma must be > 0");
  if (batch_size < 1) throw UsageError("batch_size must be >= 1");
  if (max_steps < 0) throw UsageError("max_steps must be >= 0");
  if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0) throw UsageError("betas must be in [0, 1)");
  if (weight_decay < 0.0) throw UsageError("weight_decay must be >= 0");
  if (horizons.empty()) throw UsageError("at least one horizon is required");
  loss_weights.validate();
}

void to_json(json& j, const TrainConfig& c) {
  j = json{{"epochs", c.epochs},
           {"warmup_epochs", c.warmup_epochs},
           {"gamma", c.gamma},
           {"lr", c.lr},
           {"betas", {c.beta1, c.beta2}},
           {"weight_decay", c.weight_decay},
           {"batch_size", c.batch_size},
           {"max_steps", c.max_steps},
           {"seed", c.seed},
           {"supervise_observed", c.supervise_observed},
           {"checkpoint_every", c.checkpoint_every},
           {"horizons", c.horizons},
           {"dataset", c.dataset},
           {"model", c.model},
           {"loss_weights",
            {{"w_ind", c.loss_weights.w_ind},
             {"w_soc", c.loss_weights.w_soc},
             {"w_int", c.loss_weights.w_int},
             {"w_bone", c.loss_weights.w_bone}}}};
}

void from_json(const json& j, TrainConfig& c) {
  reject_unknown(j,
                 {"epochs", "warmup_epochs", "gamma", "lr", "betas", "weight_decay", "batch_size",
                  "max_steps", "seed", "supervise_observed", "checkpoint_every", "horizons",
                  "dataset", "model", "loss_weights"},
                 "train config");
  get_opt(j, "epochs", c.epochs);
  get_opt(j, "warmup_epochs", c.warmup_epochs);
  get_opt(j, "gamma", c.gamma);
  get_opt(j, "lr", c.lr);
  if (j.contains("betas")) {
    const auto b = j.at("betas").get<std::vector<double>>();
    if (b.size() != 2) throw UsageError("betas must have two entries");
    c.beta1 = b[0];
    c.beta2 = b[1];
  }
  get_opt(j, "weight_decay", c.weight_decay);
  get_opt(j, "batch_size", c.batch_size);
  get_opt(j, "max_steps", c.max_steps);
  get_opt(j, "seed", c.seed);
  get_opt(j, "supervise_observed", c.supervise_observed);
  get_opt(j, "checkpoint_every", c.checkpoint_every);
  get_opt(j, "horizons", c.horizons);
  if (j.contains("dataset")) c.dataset = j.at("dataset").get<DatasetSpec>();
  if (j.contains("model")) c.model = j.at("model").get<ModelConfig>();
  if (j.contains("loss_weights")) {
    const json& w = j.at("loss_weights");
    reject_unknown(w, {"w_ind", "w_soc", "w_int", "w_bone"}, "loss_weights");
    get_opt(w, "w_ind", c.loss_weights.w_ind);
    get_opt(w, "w_soc", c.loss_weights.w_soc);
    get_opt(w, "w_int", c.loss_weights.w_int);
    get_opt(w, "w_bone", c.loss_weights.w_bone);
  }
}

void apply_seed_override(uint64_t& seed) {
  if (const char* env = std::getenv("ECHO_SEED"); env != nullptr && *env != '\0') {
    try {
      size_t used = 0;
      seed = std::stoull(env, &used);
      if (used != std::string(env).size()) throw std::invalid_argument("trailing characters");
    } catch (const std::exception&) {
      throw UsageError(std::string("ECHO_SEED must be a non-negative integer, got '") + env + "'");
    }
  }
}

TrainConfig train_config_from_json_text(const std::string& text) {
  TrainConfig c;
  try {
    c = json::parse(text).get<TrainConfig>();
  } catch (const json::exception& e) {
    throw UsageError(std::string("config parse failure: ") + e.what());
  }
  apply_seed_override(c.seed);
  c.validate();
  return c;
}

TrainConfig load_train_config(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw UsageError("cannot read config " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  try {
    return train_config_from_json_text(ss.str());
  } catch (const UsageError& e) {
    throw UsageError(path.string() + ": " + e.what());
  }
}

// ---- dataset resolution -----------------------------------------------------------

AgentSkeletons ResolvedData::skeleton_ptrs() const {
  return {skeletons[0] ? &*skeletons[0] : nullptr, skeletons[1] ? &*skeletons[1] : nullptr};
}

namespace {

std::vector<std::filesystem::path> scene_files(const std::string& path) {
  const std::filesystem::path p(path);
  if (path.empty()) throw UsageError("dataset path is empty");
  if (!std::filesystem::exists(p)) throw DataError("dataset path does not exist: " + path);
  std::vector<std::filesystem::path> files;
  if (std::filesystem::is_directory(p)) {
    for (const auto& e : std::filesystem::directory_iterator(p)) {
      if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
  } else {
    files.push_back(p);
  }
  if (files.empty()) throw DataError("no .json scene files in " + path);
  return files;
}

void record_layout(ResolvedData& out, const TrainingSample& s) {
  for (int i = 0; i < 2; ++i) {
    out.joints[i] = s.target[i].joints();
    out.reps[i] = s.target[i].representation();
  }
  out.frames = s.frames();
}

}  // namespace

ResolvedData resolve_dataset(const DatasetSpec& spec) {
  ResolvedData out;
  if (spec.source == "synthetic") {
    if (spec.kinds.empty()) throw UsageError("synthetic dataset needs at least one kind");
    if (spec.train_scenes < 0 || spec.test_scenes < 0) throw UsageError("scene counts must be >= 0");
    const SkeletonSpec sk = spec.skeleton.empty() ? toy_skeleton() : load_skeleton(spec.skeleton);
    SyntheticOptions opt = spec.synthetic;
    opt.observed_len = spec.observed_len;
    auto make = [&](int count, uint64_t base, std::vector<TrainingSample>& dst) {
      for (int i = 0; i < count; ++i) {
        const std::string& kind = spec.kinds[static_cast<size_t>(i) % spec.kinds.size()];
        const SocialScene scene = synthesize_dyadic_scene(kind, mix_seed(base, static_cast<uint64_t>(i)),
                                                          spec.frames, spec.fps, sk, opt);
        dst.push_back(window_scene(scene, scene.observed_len(), spec.frames));
      }
    };
    make(spec.train_scenes, spec.seed, out.train);
    make(spec.test_scenes, mix_seed(spec.seed, 0x7e57), out.test);
    out.skeletons = {sk, sk};
    out.intents = spec.kinds;
  } else if (spec.source == "scenes" || spec.source == "chico") {
    const bool chico = spec.source == "chico";
    const auto files = scene_files(spec.path);
    if (spec.test_fraction < 0.0 || spec.test_fraction > 1.0) throw UsageError("test_fraction must be in [0, 1]");
    size_t n_test = static_cast<size_t>(std::lround(spec.test_fraction * static_cast<double>(files.size())));
    if (spec.test_fraction > 0.0 && n_test == 0) n_test = 1;
    n_test = std::min(n_test, files.size());
    std::set<std::string> intents;
    for (size_t f = 0; f < files.size(); ++f) {
      const SocialScene scene = chico ? load_chico_sequence(files[f]) : load_scene_file(files[f]);
      const WindowLengths w = window_lengths(scene.fps(), spec.observed_s, spec.predicted_s);
      const int stride = spec.stride > 0 ? spec.stride : w.total;
      std::vector<TrainingSample> windows;
      try {
        windows = sliding_windows(scene, w.observed, w.total, stride);
      } catch (const DataError& e) {
        throw DataError(files[f].string() + ": " + e.what());
      }
      auto& dst = f + n_test >= files.size() ? out.test : out.train;
      for (auto& s : windows) {
        if (out.frames != 0 && (s.frames() != out.frames || s.target[0].joints() != out.joints[0] ||
                                s.target[1].joints() != out.joints[1] ||
                                s.target[0].representation() != out.reps[0] ||
                                s.target[1].representation() != out.reps[1])) {
          throw DataError(files[f].string() + ": layout differs from earlier files");
        }
        record_layout(out, s);
        dst.push_back(std::move(s));
      }
      intents.insert(scene.intent());
    }
    out.intents.assign(intents.begin(), intents.end());
    if (!spec.skeleton.empty()) {
      const SkeletonSpec sk = load_skeleton(spec.skeleton);
      for (int i = 0; i < 2; ++i) {
        if (out.reps[i] == Representation::euclidean_xyz && out.joints[i] == sk.joints()) out.skeletons[i] = sk;
      }
    }
  } else {
    throw UsageError("unknown dataset source '" + spec.source + "' (expected synthetic, scenes or chico)");
  }
  const auto& any = !out.train.empty() ? out.train : out.test;
  if (any.empty()) throw DataError("dataset produced no samples");
  record_layout(out, any.front());
  return out;
}

void adopt_data_layout(ModelConfig& cfg, const ResolvedData& data, const DatasetSpec& spec) {
  cfg.seq_len = data.frames;
  for (int i = 0; i < 2; ++i) {
    if (cfg.agents[i].rep != data.reps[i] && data.reps[i] == Representation::joint_angle) {
      cfg.agents[i].pose_scale = 1.0;
    }
    cfg.agents[i].joints = data.joints[i];
    cfg.agents[i].rep = data.reps[i];
  }
  if (spec.source != "synthetic") cfg.intent_vocab = data.intents;
}

}  // namespace echo
