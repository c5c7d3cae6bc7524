#include "echo/harness/commands.hpp"

#include "echo/core/chain.hpp"
#include "echo/core/skeleton.hpp"
#include "echo/errors.hpp"
#include "echo/harness/checkpoint.hpp"
#include "echo/harness/plots.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace echo {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw DataError("cannot write " + p.string());
  f << text;
}

std::string read_text(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  if (!f) throw DataError("cannot read " + p.string());
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt_horizon(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

void say(std::ostream* log, const std::string& msg) {
  if (log != nullptr) *log << msg << std::endl;
}

json motion_rows(const Motion& m) {
  json rows = json::array();
  for (int t = 0; t < m.frames(); ++t) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.data().cols(); ++c) row.push_back(m.data()(t, c));
    rows.push_back(row);
  }
  return rows;
}

std::string dataset_label(const DatasetSpec& d) {
  if (d.source == "synthetic") {
    std::string kinds;
    for (const auto& k : d.kinds) kinds += (kinds.empty() ? "" : "|") + k;
    return "synthetic(" + kinds + ",seed=" + std::to_string(d.seed) + ")";
  }
  return d.source + ":" + d.path;
}

}  // namespace

ModelConfig resolve_model_config(const TrainConfig& cfg, const ResolvedData& data) {
  ModelConfig m = cfg.model;
  adopt_data_layout(m, data, cfg.dataset);
  m.validate();
  return m;
}

void apply_refine_budget(ModelConfig& cfg, int K, int reference_K) {
  if (K < 0) throw UsageError("K_refine must be >= 0");
  if (K == reference_K) {
    cfg.K_refine = K;
    return;
  }
  const int blocks = reference_K * cfg.ca_depth;  // per direction
  if (K == 0) {
    cfg.n_layers_sa += blocks * (cfg.share_ca_weights ? 1 : 2);
    cfg.K_refine = 0;
    return;
  }
  if (blocks % K != 0) {
    throw UsageError("cannot hold the refinement budget fixed: " + std::to_string(blocks) +
                     " cross-attention blocks per direction do not split into K_refine=" + std::to_string(K));
  }
  cfg.ca_depth = blocks / K;
  cfg.K_refine = K;
}

// ---- train --------------------------------------------------------------------------------

TrainOutputs cmd_train(const TrainConfig& cfg, const fs::path& out_dir, std::ostream* log) {
  cfg.validate();
  const ResolvedData data = resolve_dataset(cfg.dataset);
  TrainOutputs out;
  out.model = resolve_model_config(cfg, data);
  EchoModel model(out.model, cfg.seed, InitMode::zero_residual);
  fs::create_directories(out_dir);

  TrainConfig resolved = cfg;
  resolved.model = out.model;
  const json train_json = resolved;

  std::ofstream loss(out_dir / "loss.csv", std::ios::binary);
  if (!loss) throw DataError("cannot write " + (out_dir / "loss.csv").string());
  loss << loss_csv_header();

  say(log, "training on " + std::to_string(data.train.size()) + " samples, " +
               std::to_string(model.params().trainable_scalar_count()) + " parameters");
  TrainHooks hooks;
  hooks.on_step = [&](const LossRow& r) { loss << loss_csv_line(r) << std::flush; };
  hooks.on_epoch_end = [&](int epoch, const EchoModel& m) {
    const json extra{{"train_config", train_json}, {"epoch", epoch}};
    save_checkpoint(out_dir / "checkpoint_last", m.config(), m.params(), extra);
    if (cfg.checkpoint_every > 0 && (epoch + 1) % cfg.checkpoint_every == 0) {
      char name[32];
      std::snprintf(name, sizeof name, "checkpoint_epoch%04d", epoch + 1);
      save_checkpoint(out_dir / name, m.config(), m.params(), extra);
    }
  };
  out.result = train_model(model, cfg, data, hooks);
  const json extra{{"train_config", train_json}, {"epoch", out.result.epochs_run - 1}, {"steps", out.result.steps}};
  out.final_checkpoint = out_dir / "checkpoint_final";
  save_checkpoint(out.final_checkpoint, model.config(), model.params(), extra);
  if (!out.result.curve.empty()) {
    say(log, "loss " + fmt(out.result.curve.front().loss.total) + " -> " + fmt(out.result.curve.back().loss.total) +
                 " after " + std::to_string(out.result.steps) + " steps");
  }
  return out;
}

// ---- eval ----------------------------------------------------------------------------------

EvalOutputs evaluate_with_baseline(const EchoModel& model, const std::vector<TrainingSample>& samples,
                                   const std::vector<double>& horizons, const std::string& label) {
  EvalOptions opt;
  opt.horizons = horizons;
  EvalOutputs out;
  out.model = evaluate_model(model_forecaster(model), samples, opt);
  out.baseline = evaluate_model(baseline_forecaster(), samples, opt);
  out.model.metadata["dataset"] = label;
  out.model.metadata["predictor"] = "model";
  out.model.metadata["checkpoint_hash"] = config_hash(model.config());
  out.baseline.metadata["dataset"] = label;
  out.baseline.metadata["predictor"] = "zero_velocity";
  return out;
}

EvalOutputs cmd_eval(const EvalRequest& req) {
  const Checkpoint ck = req.expected ? load_checkpoint(req.checkpoint, *req.expected) : load_checkpoint(req.checkpoint);
  DatasetSpec spec;
  if (req.data) {
    spec = *req.data;
  } else {
    if (!ck.extra.contains("train_config")) {
      throw UsageError("checkpoint has no training dataset recorded; pass --data");
    }
    spec = ck.extra.at("train_config").at("dataset").get<DatasetSpec>();
  }
  const ResolvedData data = resolve_dataset(spec);
  const auto& samples = data.test.empty() ? data.train : data.test;
  const ModelConfig& mc = ck.config;
  if (data.frames != mc.seq_len) {
    throw DataError("dataset windows have T=" + std::to_string(data.frames) + " but the checkpoint expects T=" +
                    std::to_string(mc.seq_len));
  }
  for (int i = 0; i < 2; ++i) {
    if (data.joints[i] != mc.agents[i].joints || data.reps[i] != mc.agents[i].rep) {
      throw DataError("agent " + std::to_string(i) + " layout (J=" + std::to_string(data.joints[i]) + ", " +
                      std::string(to_string(data.reps[i])) + ") does not match the checkpoint (J=" +
                      std::to_string(mc.agents[i].joints) + ", " + std::string(to_string(mc.agents[i].rep)) + ")");
    }
  }
  const EchoModel model(ck.config, ck.params);
  EvalOutputs out = evaluate_with_baseline(model, samples, req.horizons, dataset_label(spec));

  if (!req.out_dir.empty()) {
    fs::create_directories(req.out_dir);
    out.model.write_csv(req.out_dir / "metrics_model.csv");
    out.baseline.write_csv(req.out_dir / "metrics_baseline.csv");

    json preds{{"fps", samples[0].target[0].fps()}, {"observed_len", samples[0].observed_len}};
    json parents = json::array();
    for (int i = 0; i < 2; ++i) {
      parents.push_back(data.skeletons[i] ? json(data.skeletons[i]->parents()) : json(nullptr));
    }
    preds["parents"] = parents;
    json list = json::array();
    const int n = std::min<int>(req.prediction_samples, static_cast<int>(samples.size()));
    for (int s = 0; s < n; ++s) {
      const auto pred = model.predict(samples[static_cast<size_t>(s)]).motions;
      json agents = json::array();
      for (int i = 0; i < 2; ++i) {
        agents.push_back({{"joints", samples[static_cast<size_t>(s)].target[i].joints()},
                          {"representation", std::string(to_string(samples[static_cast<size_t>(s)].target[i].representation()))},
                          {"gt", motion_rows(samples[static_cast<size_t>(s)].target[i])},
                          {"pred", motion_rows(pred[i])}});
      }
      list.push_back({{"index", s}, {"intent", samples[static_cast<size_t>(s)].intent}, {"agents", agents}});
    }
    preds["samples"] = list;
    write_text(req.out_dir / "predictions.json", preds.dump() + "\n");
  }
  return out;
}

// ---- ablate ---------------------------------------------------------------------------------

namespace {

const std::set<std::string> kBoolToggles{"use_dct", "use_tempmlp", "use_text", "use_residual_baseline",
                                         "w_ind_zero"};

bool parse_on_off(const std::string& v, const std::string& name) {
  if (v == "on" || v == "true" || v == "1") return true;
  if (v == "off" || v == "false" || v == "0") return false;
  throw UsageError("toggle " + name + " expects on/off, got '" + v + "'");
}

}  // namespace

Toggle parse_toggle(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos) throw UsageError("toggle must be name=value, got '" + text + "'");
  Toggle t{text.substr(0, eq), text.substr(eq + 1)};
  if (kBoolToggles.count(t.name)) {
    t.value = parse_on_off(t.value, t.name) ? "on" : "off";
  } else if (t.name == "K_refine") {
    try {
      size_t used = 0;
      const int k = std::stoi(t.value, &used);
      if (used != t.value.size() || k < 0) throw std::invalid_argument("");
      t.value = std::to_string(k);
    } catch (const std::exception&) {
      throw UsageError("K_refine expects a non-negative integer, got '" + t.value + "'");
    }
  } else {
    throw UsageError("unknown toggle '" + t.name +
                     "' (supported: use_dct, use_tempmlp, use_text, use_residual_baseline, w_ind_zero, K_refine)");
  }
  return t;
}

TrainConfig apply_toggle(const TrainConfig& base, const Toggle& t) {
  TrainConfig c = base;
  const bool on = t.value == "on";
  if (t.name == "use_dct") {
    c.model.use_dct = on;
  } else if (t.name == "use_tempmlp") {
    c.model.use_tempmlp = on;
  } else if (t.name == "use_text") {
    c.model.use_text = on;
  } else if (t.name == "use_residual_baseline") {
    c.model.use_residual_baseline = on;
  } else if (t.name == "w_ind_zero") {
    if (on) c.loss_weights.w_ind = 0.0;
  } else if (t.name == "K_refine") {
    apply_refine_budget(c.model, std::stoi(t.value), base.model.K_refine);
  } else {
    throw UsageError("unknown toggle '" + t.name + "'");
  }
  return c;
}

std::string toggle_label(const Toggle& t) { return t.name + "=" + t.value; }

std::vector<AblationRow> cmd_ablate(const TrainConfig& base, const std::vector<Toggle>& toggles,
                                    const fs::path& out_dir, std::ostream* log) {
  std::vector<std::pair<std::string, TrainConfig>> variants{{"default", base}};
  for (const auto& t : toggles) variants.emplace_back(toggle_label(t), apply_toggle(base, t));
  fs::create_directories(out_dir);

  std::vector<AblationRow> rows;
  std::optional<MetricsReport> baseline;
  for (const auto& [label, cfg] : variants) {
    say(log, "variant " + label);
    std::string dir = label;
    std::replace(dir.begin(), dir.end(), '=', '_');
    const TrainOutputs trained = cmd_train(cfg, out_dir / dir, log);
    const ResolvedData data = resolve_dataset(cfg.dataset);
    const Checkpoint ck = load_checkpoint(trained.final_checkpoint);
    const EchoModel model(ck.config, ck.params);
    const auto& samples = data.test.empty() ? data.train : data.test;
    EvalOutputs ev = evaluate_with_baseline(model, samples, cfg.horizons, dataset_label(cfg.dataset));
    ev.model.metadata["variant"] = label;
    ev.model.write_csv(out_dir / dir / "metrics_model.csv");
    for (const auto& r : ev.model.rows) rows.push_back({label, r});
    if (!baseline) baseline = ev.baseline;
  }
  for (const auto& r : baseline->rows) rows.push_back({"zero_velocity", r});

  std::ostringstream csv;
  csv << "variant,metric,horizon_s,value_mm\n";
  for (const auto& r : rows) {
    csv << r.variant << "," << r.row.metric << "," << fmt_horizon(r.row.horizon_s) << "," << fmt(r.row.value_mm)
        << "\n";
  }
  write_text(out_dir / "ablation.csv", csv.str());
  return rows;
}

// ---- retarget ----------------------------------------------------------------------------------

RetargetCommandConfig retarget_config_from_json_text(const std::string& text, const fs::path& base_dir) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw UsageError(std::string("config parse failure: ") + e.what());
  }
  static const std::set<std::string> allowed{"latent", "chains", "skeleton", "train_human", "train_robot",
                                             "test_count", "human_amplitude_rad", "data_seed",
                                             "forecast_checkpoint", "compose_chain", "compose_data"};
  if (!j.is_object()) throw UsageError("retarget config must be a JSON object");
  for (const auto& [k, v] : j.items()) {
    if (!allowed.count(k)) throw UsageError("unknown key '" + k + "' in retarget config");
  }
  auto resolve = [&](const std::string& p) -> std::string {
    if (p.empty() || fs::path(p).is_absolute() || base_dir.empty()) return p;
    return (base_dir / p).lexically_normal().string();
  };
  RetargetCommandConfig c;
  try {
    if (j.contains("latent")) c.latent = j.at("latent").get<SharedLatentConfig>();
    const json chains = j.value("chains", json::object());
    for (const auto& [id, path] : chains.items()) c.chains[id] = resolve(path.get<std::string>());
    c.skeleton = resolve(j.value("skeleton", std::string()));
    c.train_human = j.value("train_human", c.train_human);
    c.train_robot = j.value("train_robot", c.train_robot);
    c.test_count = j.value("test_count", c.test_count);
    c.human_amplitude_rad = j.value("human_amplitude_rad", c.human_amplitude_rad);
    c.data_seed = j.value("data_seed", c.data_seed);
    c.forecast_checkpoint = resolve(j.value("forecast_checkpoint", std::string()));
    c.compose_chain = j.value("compose_chain", std::string());
    c.compose_data = j.value("compose_data", std::string());
    if (!c.compose_data.empty() && c.compose_data.rfind("synthetic", 0) != 0) c.compose_data = resolve(c.compose_data);
  } catch (const json::exception& e) {
    throw UsageError(std::string("retarget config: ") + e.what());
  }
  if (c.chains.empty()) throw UsageError("retarget config lists no chains");
  if (c.latent.robots.empty()) {
    for (const auto& [id, p] : c.chains) c.latent.robots.push_back(id);
  }
  apply_seed_override(c.latent.seed);
  return c;
}

RetargetCommandConfig load_retarget_config(const fs::path& path) {
  std::ifstream f(path);
  if (!f) throw UsageError("cannot read config " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  return retarget_config_from_json_text(ss.str(), path.parent_path());
}

RetargetOutputs cmd_retarget(const RetargetCommandConfig& cfg, const fs::path& out_dir, std::ostream* log) {
  std::map<std::string, KinematicChain> chains;
  for (const auto& [id, path] : cfg.chains) {
    if (!fs::exists(path)) throw DataError("missing chain file for '" + id + "': " + path);
    chains.emplace(id, load_chain(path));
  }
  const SkeletonSpec sk = cfg.skeleton.empty() ? toy_skeleton() : load_skeleton(cfg.skeleton);
  const HumanRep rep = cfg.latent.human_rep;
  const auto human_train = sample_human_poses(sk, rep, mix_seed(cfg.data_seed, 1), cfg.train_human, cfg.human_amplitude_rad);
  RetargetTestSet test;
  test.human = sample_human_poses(sk, rep, mix_seed(cfg.data_seed, 2), cfg.test_count, cfg.human_amplitude_rad);
  std::map<std::string, std::vector<Pose>> robot_train;
  uint64_t stream = 10;
  for (const auto& id : cfg.latent.robots) {
    const auto it = chains.find(id);
    if (it == chains.end()) throw UsageError("robot '" + id + "' has no chain file");
    robot_train[id] = sample_joint_angles(it->second, mix_seed(cfg.data_seed, stream++), cfg.train_robot);
    test.robots[id] = sample_joint_angles(it->second, mix_seed(cfg.data_seed, stream++), cfg.test_count);
  }

  say(log, "training shared latent space for " + std::to_string(cfg.latent.robots.size()) + " robot(s)");
  RetargetTraining tr = train_shared_space(human_train, robot_train, chains, cfg.latent);
  RetargetOutputs out;
  out.params = std::move(tr.params);
  out.trained = evaluate_retarget(out.params, test);
  const RetargetParams untrained =
      init_retarget(cfg.latent, chains, static_cast<int>(human_features(human_train[0], rep).size()));
  out.untrained = evaluate_retarget(untrained, test);

  fs::create_directories(out_dir);
  save_retarget(out_dir / "retarget_checkpoint", out.params);
  std::vector<RetargetRow> all = out.trained;
  for (auto r : out.untrained) {
    r.embodiment += ":untrained";
    all.push_back(r);
  }
  write_text(out_dir / "retarget_eval.csv", retarget_csv(all));
  std::ostringstream loss;
  loss << "step,reconstruction,cycle,alignment,total\n";
  for (const auto& r : tr.log) {
    loss << r.step << "," << fmt(r.reconstruction) << "," << fmt(r.cycle) << "," << fmt(r.alignment) << ","
         << fmt(r.total) << "\n";
  }
  write_text(out_dir / "retarget_loss.csv", loss.str());

  if (!cfg.forecast_checkpoint.empty()) {
    if (rep != HumanRep::euclidean_xyz) {
      throw UsageError("composing with a forecaster needs latent.human_rep = euclidean_xyz");
    }
    const std::string chain = cfg.compose_chain.empty() ? cfg.latent.robots.front() : cfg.compose_chain;
    const Checkpoint ck = load_checkpoint(cfg.forecast_checkpoint);
    const EchoModel model(ck.config, ck.params);
    DatasetSpec spec;
    if (!cfg.compose_data.empty()) {
      spec = parse_data_argument(cfg.compose_data);
    } else if (ck.extra.contains("train_config")) {
      spec = ck.extra.at("train_config").at("dataset").get<DatasetSpec>();
    } else {
      throw UsageError("compose_data is required when the checkpoint records no dataset");
    }
    const ResolvedData data = resolve_dataset(spec);
    const auto& samples = data.test.empty() ? data.train : data.test;
    const Motion pred = model.predict(samples.front()).motions[1];
    if (pred.representation() != Representation::euclidean_xyz || 3 * pred.joints() != out.params.human_dim) {
      throw DataError("forecast agent 1 has J=" + std::to_string(pred.joints()) +
                      ", which does not match the retarget human layout");
    }
    const int dof = out.params.chains.at(chain).dof();
    Matrix q(pred.frames(), dof);
    for (int t = 0; t < pred.frames(); ++t) {
      q.row(t) = retarget_pose(pred.pose(t), chain, out.params).angles.values.col(0).transpose();
    }
    out.composed = Motion(std::move(q), dof, Representation::joint_angle, pred.fps());
    json frames = json::array();
    for (int t = 0; t < out.composed->frames(); ++t) {
      json row = json::array();
      for (int i = 0; i < dof; ++i) row.push_back(json::array({out.composed->data()(t, i)}));
      frames.push_back(row);
    }
    write_text(out_dir / "composed_robot.json",
               json{{"fps", pred.fps()}, {"chain", chain}, {"representation", "joint_angle"}, {"frames", frames}}.dump() +
                   "\n");
  }
  return out;
}

// ---- report -------------------------------------------------------------------------------------

namespace {

bool is_metrics_csv(const fs::path& p) {
  std::ifstream f(p);
  std::string line;
  while (std::getline(f, line)) {
    if (line.empty() || line[0] == '#') continue;
    return line == "metric,horizon_s,value_mm";
  }
  return false;
}

std::vector<std::vector<double>> read_numeric_csv(const fs::path& p, std::vector<std::string>& header) {
  std::ifstream f(p);
  std::string line;
  std::vector<std::vector<double>> rows;
  header.clear();
  while (std::getline(f, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    std::string cell;
    if (header.empty()) {
      while (std::getline(ss, cell, ',')) header.push_back(cell);
      continue;
    }
    std::vector<double> row;
    while (std::getline(ss, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw DataError(p.string() + ": non-numeric cell '" + cell + "'");
      }
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix pose_rows(const json& frames, int t, int joints) {
  Matrix m(joints, 3);
  for (int j = 0; j < joints; ++j) {
    for (int c = 0; c < 3; ++c) m(j, c) = frames.at(t).at(3 * j + c).get<double>();
  }
  return m;
}

}  // namespace

ReportOutputs cmd_report(const fs::path& run_dir, std::optional<int> scene) {
  if (!fs::is_directory(run_dir)) throw DataError("run directory not found: " + run_dir.string());
  std::vector<fs::path> metric_files;
  for (const auto& e : fs::directory_iterator(run_dir)) {
    if (e.is_regular_file() && e.path().extension() == ".csv" && e.path().filename() != "summary.csv" &&
        is_metrics_csv(e.path())) {
      metric_files.push_back(e.path());
    }
  }
  std::sort(metric_files.begin(), metric_files.end());
  const bool has_loss = fs::exists(run_dir / "loss.csv");
  if (metric_files.empty()) {
    throw DataError("no metrics CSVs in " + run_dir.string() +
                    "; expected metrics_model.csv and metrics_baseline.csv (from `echo eval --out " +
                    run_dir.string() + "`) and optionally loss.csv (from `echo train`)");
  }

  ReportOutputs out;
  std::ostringstream summary;
  summary << "source,metric,horizon_s,value_mm\n";
  for (const auto& f : metric_files) {
    const MetricsReport rep = MetricsReport::read_csv(f);
    std::vector<std::string> metrics;
    std::vector<double> horizons;
    for (const auto& r : rep.rows) {
      if (std::find(metrics.begin(), metrics.end(), r.metric) == metrics.end()) metrics.push_back(r.metric);
      if (std::find(horizons.begin(), horizons.end(), r.horizon_s) == horizons.end()) horizons.push_back(r.horizon_s);
      summary << f.stem().string() << "," << r.metric << "," << fmt_horizon(r.horizon_s) << "," << fmt(r.value_mm)
              << "\n";
    }
    std::vector<std::string> labels;
    for (double h : horizons) labels.push_back(fmt_horizon(h) + " s");
    std::vector<Series> series;
    for (const auto& m : metrics) {
      Series s{m, {}};
      for (double h : horizons) {
        double v = NAN;
        for (const auto& r : rep.rows) {
          if (r.metric == m && r.horizon_s == h) v = r.value_mm;
        }
        s.y.push_back(v);
      }
      series.push_back(std::move(s));
    }
    const fs::path plot = run_dir / (f.stem().string() + ".svg");
    write_text(plot, svg_bar_plot(f.stem().string(), labels, series, "mm"));
    out.plots.push_back(plot);
  }

  if (has_loss) {
    std::vector<std::string> header;
    const auto rows = read_numeric_csv(run_dir / "loss.csv", header);
    if (!rows.empty()) {
      std::vector<double> x;
      std::vector<Series> series;
      for (size_t c = 1; c < header.size(); ++c) series.push_back({header[c], {}});
      for (const auto& r : rows) {
        x.push_back(r.at(0));
        for (size_t c = 1; c < header.size() && c < r.size(); ++c) series[c - 1].y.push_back(r[c]);
      }
      const fs::path plot = run_dir / "loss_curve.svg";
      write_text(plot, svg_line_plot("training loss", x, series, true));
      out.plots.push_back(plot);
      summary << "loss.csv,final_total,," << fmt(rows.back().back()) << "\n";
    }
  }

  const fs::path preds_path = run_dir / "predictions.json";
  if (fs::exists(preds_path)) {
    json preds;
    try {
      preds = json::parse(read_text(preds_path));
    } catch (const json::exception& e) {
      throw DataError(preds_path.string() + ": " + e.what());
    }
    const auto& samples = preds.at("samples");
    if (scene && (*scene < 0 || *scene >= static_cast<int>(samples.size()))) {
      throw UsageError("scene " + std::to_string(*scene) + " not in predictions.json (has " +
                       std::to_string(samples.size()) + ")");
    }
    const int N = preds.at("observed_len").get<int>();
    for (int s = 0; s < static_cast<int>(samples.size()); ++s) {
      if (scene && s != *scene) continue;
      std::vector<StickLayer> layers;
      const char* colors[2] = {"#1f77b4", "#d62728"};
      for (int i = 0; i < 2; ++i) {
        const auto& a = samples[static_cast<size_t>(s)].at("agents").at(static_cast<size_t>(i));
        if (a.at("representation").get<std::string>() != "euclidean_xyz") continue;
        const int J = a.at("joints").get<int>();
        const int T = static_cast<int>(a.at("gt").size());
        std::vector<int> parents;
        if (!preds.at("parents").at(static_cast<size_t>(i)).is_null()) {
          parents = preds.at("parents").at(static_cast<size_t>(i)).get<std::vector<int>>();
        }
        for (int t : {N - 1, (N - 1 + T - 1) / 2, T - 1}) {
          const double opacity = t == T - 1 ? 1.0 : 0.35;
          layers.push_back({pose_rows(a.at("gt"), t, J), parents, colors[i], false, opacity});
          layers.push_back({pose_rows(a.at("pred"), t, J), parents, colors[i], true, opacity});
        }
      }
      const fs::path plot = run_dir / ("stick_scene" + std::to_string(s) + ".svg");
      write_text(plot, svg_stick_figure("scene " + std::to_string(s) + " (" +
                                            samples[static_cast<size_t>(s)].value("intent", std::string()) + ")",
                                        layers));
      out.plots.push_back(plot);
    }
  } else if (scene) {
    throw DataError("stick figure requested but " + preds_path.string() + " is missing");
  }

  out.summary = run_dir / "summary.csv";
  write_text(out.summary, summary.str());
  return out;
}

}  // namespace echo
