#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "echo/errors.hpp"
#include "echo/harness/checkpoint.hpp"
#include "echo/harness/commands.hpp"
#include "echo/harness/train_config.hpp"
#include "echo/harness/training.hpp"
#include "echo/kernels/kernels.hpp"
#include "test_util.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace echo;
using echo::testing::data_path;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("echo_test_" + name);
  fs::remove_all(p);
  return p;
}

TrainConfig tiny() {
  TrainConfig c = load_train_config(data_path("configs/tiny_train.json"));
  c.epochs = 2;
  return c;
}

struct SeedEnv {
  explicit SeedEnv(const char* v) { ::setenv("ECHO_SEED", v, 1); }
  ~SeedEnv() { ::unsetenv("ECHO_SEED"); }
};

}  // namespace

TEST_CASE("learning rate schedule") {
  TrainConfig c;
  c.lr = 0.01;
  c.warmup_epochs = 5;
  c.gamma = 0.9;
  const int spe = 4;
  for (int e = 0; e < 5; ++e) {
    for (int s = 0; s < spe; ++s) {
      CHECK(learning_rate(c, e, s, spe) == doctest::Approx(0.01 * (e * spe + s + 1) / 20.0).epsilon(1e-15));
    }
  }
  CHECK(learning_rate(c, 4, 3, spe) == doctest::Approx(0.01).epsilon(1e-15));
  for (int e = 5; e < 30; ++e) {
    double want = 0.01;
    for (int k = 5; k < e; ++k) want *= 0.9;
    CHECK(learning_rate(c, e, 2, spe) == doctest::Approx(want).epsilon(1e-13));
  }
  c.warmup_epochs = 0;
  CHECK(learning_rate(c, 0, 0, spe) == 0.01);
}

TEST_CASE("config parsing") {
  const TrainConfig c = tiny();
  CHECK(c.model.D == 16);
  CHECK(c.dataset.frames == 12);
  CHECK(c.beta2 == 0.999);
  CHECK_THROWS_WITH_AS(train_config_from_json_text(R"({"epochs": 3, "learning_rate": 1})"),
                       doctest::Contains("learning_rate"), UsageError);
  CHECK_THROWS_AS(train_config_from_json_text(R"({"epochs": 0})"), UsageError);
  CHECK_THROWS_AS(train_config_from_json_text("{"), UsageError);

  nlohmann::json j = c;
  const TrainConfig back = j.get<TrainConfig>();
  CHECK(nlohmann::json(back) == j);
}

TEST_CASE("ECHO_SEED overrides the config seed") {
  {
    SeedEnv env("42");
    CHECK(train_config_from_json_text(R"({"seed": 7})").seed == 42);
  }
  CHECK(train_config_from_json_text(R"({"seed": 7})").seed == 7);
  SeedEnv bad("x1");
  CHECK_THROWS_AS(train_config_from_json_text(R"({"seed": 7})"), UsageError);
}

TEST_CASE("data argument parsing") {
  const auto d = parse_data_argument("synthetic:kinds=mirror|circle,scenes=5,frames=24,observed=8,seed=3");
  CHECK(d.source == "synthetic");
  CHECK(d.kinds == std::vector<std::string>{"mirror", "circle"});
  CHECK(d.test_scenes == 5);
  CHECK(d.frames == 24);
  CHECK(d.observed_len == 8);
  CHECK(d.seed == 3);
  CHECK_THROWS(parse_data_argument("synthetic:colour=red"));
}

TEST_CASE("toggles") {
  const TrainConfig c = tiny();
  CHECK(apply_toggle(c, parse_toggle("use_dct=on")).model.use_dct);
  CHECK(!apply_toggle(c, parse_toggle("use_text=off")).model.use_text);
  CHECK(!apply_toggle(c, parse_toggle("use_tempmlp=off")).model.use_tempmlp);
  CHECK(!apply_toggle(c, parse_toggle("use_residual_baseline=off")).model.use_residual_baseline);
  CHECK(apply_toggle(c, parse_toggle("w_ind_zero=on")).loss_weights.w_ind == 0.0);
  CHECK(toggle_label(parse_toggle("K_refine=0")) == "K_refine=0");
  CHECK_THROWS_AS(parse_toggle("use_dct"), UsageError);
  CHECK_THROWS_AS(apply_toggle(c, parse_toggle("use_dct=maybe")), UsageError);
  CHECK_THROWS_AS(apply_toggle(c, parse_toggle("colour=on")), UsageError);
}

TEST_CASE("refinement budget keeps the parameter count") {
  ModelConfig base;
  base.seq_len = 12;
  base.D = 16;
  base.n_heads = 2;
  base.K_refine = 2;
  base.agents = {AgentSpec{5}, AgentSpec{5}};
  const auto count = [](const ModelConfig& c) {
    return EchoModel::build_parameters(c, 0, InitMode::zero_residual).scalar_count();
  };
  ModelConfig one = base;
  apply_refine_budget(one, 1, 2);
  CHECK(one.ca_depth == 2);
  CHECK(count(one) == count(base));

  // K = 0 trades cross-attention blocks for self-attention layers; they differ
  // only by the key/value layer norm.
  ModelConfig zero = base;
  apply_refine_budget(zero, 0, 2);
  CHECK(zero.K_refine == 0);
  const double ratio = static_cast<double>(count(zero)) / static_cast<double>(count(base));
  CHECK(ratio > 0.99);
  CHECK(ratio <= 1.0);

  ModelConfig three = base;
  CHECK_THROWS_AS(apply_refine_budget(three, 3, 2), UsageError);
}

TEST_CASE("checkpoint round trip and corruption") {
  ModelConfig cfg;
  cfg.seq_len = 12;
  cfg.D = 16;
  cfg.n_heads = 2;
  cfg.agents = {AgentSpec{5}, AgentSpec{5}};
  const EchoModel model(cfg, 5, InitMode::random);
  const auto dir = scratch("ckpt");
  save_checkpoint(dir, cfg, model.params(), {{"epoch", 3}});
  const Checkpoint ck = load_checkpoint(dir, cfg);
  CHECK(ck.config == cfg);
  CHECK(ck.params == model.params());
  CHECK(ck.extra.at("epoch") == 3);

  const auto dir2 = scratch("ckpt2");
  save_checkpoint(dir2, ck.config, ck.params, ck.extra);
  CHECK(slurp(dir / "params.bin") == slurp(dir2 / "params.bin"));
  CHECK(slurp(dir / "manifest.json") == slurp(dir2 / "manifest.json"));

  ModelConfig other = cfg;
  other.D = 32;
  CHECK_THROWS_WITH_AS(load_checkpoint(dir, other), doctest::Contains("hash"), DataError);

  // Manifest edited without updating its hash.
  std::string manifest = slurp(dir2 / "manifest.json");
  const auto at = manifest.find("\"n_layers_sa\": 4");
  REQUIRE(at != std::string::npos);
  manifest.replace(at, 16, "\"n_layers_sa\": 5");
  std::ofstream(dir2 / "manifest.json") << manifest;
  CHECK_THROWS_WITH_AS(load_checkpoint(dir2), doctest::Contains("hash"), DataError);

  const std::string bin = slurp(dir / "params.bin");
  std::ofstream(dir / "params.bin", std::ios::binary) << bin.substr(0, bin.size() - 4);
  CHECK_THROWS_WITH_AS(load_checkpoint(dir), doctest::Contains("truncated"), DataError);
  CHECK_THROWS_AS(load_checkpoint(scratch("missing")), DataError);
  fs::remove_all(dir);
  fs::remove_all(dir2);
}

TEST_CASE("training is deterministic and thread-invariant") {
  const TrainConfig c = tiny();
  const ResolvedData data = resolve_dataset(c.dataset);
  const ModelConfig mc = resolve_model_config(c, data);
  EchoModel a(mc, c.seed), b(mc, c.seed);
  kernels::set_threads(4);
  const auto ra = train_model(a, c, data);
  kernels::set_threads(1);
  const auto rb = train_model(b, c, data);
  kernels::set_threads(4);
  REQUIRE(ra.curve.size() == rb.curve.size());
  for (size_t i = 0; i < ra.curve.size(); ++i) CHECK(ra.curve[i].loss.total == rb.curve[i].loss.total);
  CHECK(a.params() == b.params());
  CHECK(ra.epochs_run == 2);
  CHECK(loss_curve_csv(ra.curve).rfind(loss_csv_header(), 0) == 0);

  TrainConfig capped = c;
  capped.max_steps = 1;
  EchoModel m(mc, c.seed);
  CHECK(train_model(m, capped, data).steps == 1);
}

TEST_CASE("an untrained model evaluates like the baseline") {
  const TrainConfig c = tiny();
  const ResolvedData data = resolve_dataset(c.dataset);
  const EchoModel model(resolve_model_config(c, data), c.seed);
  const auto out = evaluate_with_baseline(model, data.test, c.horizons, "synthetic");
  REQUIRE(out.model.rows.size() == out.baseline.rows.size());
  for (size_t i = 0; i < out.model.rows.size(); ++i) {
    CHECK(out.model.rows[i].value_mm == out.baseline.rows[i].value_mm);
  }
}

TEST_CASE("train, eval and report commands") {
  const auto run = scratch("run");
  const auto t = cmd_train(tiny(), run);
  CHECK(fs::exists(run / "loss.csv"));
  CHECK(fs::exists(run / "checkpoint_last" / "manifest.json"));
  CHECK(fs::exists(t.final_checkpoint / "params.bin"));

  EvalRequest req;
  req.checkpoint = t.final_checkpoint;
  req.horizons = {0.1, 0.2};
  req.out_dir = run;
  const auto e = cmd_eval(req);
  CHECK(fs::exists(run / "metrics_model.csv"));
  CHECK(MetricsReport::read_csv(run / "metrics_model.csv").value("JPE", 0.2) == e.model.value("JPE", 0.2));

  const auto rep = cmd_report(run);
  CHECK(!rep.plots.empty());
  CHECK(fs::exists(rep.summary));

  const auto empty = scratch("empty_run");
  fs::create_directories(empty);
  CHECK_THROWS_WITH_AS(cmd_report(empty), doctest::Contains("no metrics"), DataError);
  CHECK_THROWS_AS(cmd_report(scratch("absent")), DataError);
  fs::remove_all(run);
  fs::remove_all(empty);
}

TEST_CASE("retarget config") {
  const auto c = load_retarget_config(data_path("configs/retarget_toy.json"));
  CHECK(c.latent.D_latent == 8);
  REQUIRE(c.chains.count("planar3") == 1);
  CHECK(fs::exists(c.chains.at("planar3")));
  CHECK_THROWS(retarget_config_from_json_text(R"({"latent": {"D_latent": 8}, "chainz": {}})"));
}
