// echo: command-line front end for training, evaluation, ablation,
// retargeting and reporting.

#include "echo/errors.hpp"
#include "echo/harness/commands.hpp"
#include "echo/kernels/kernels.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <sstream>

namespace {

std::vector<double> parse_horizons(const std::string& text) {
  std::vector<double> out;
  std::istringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw echo::UsageError("bad horizon '" + item + "' in --horizons");
    }
  }
  if (out.empty()) throw echo::UsageError("--horizons is empty");
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dyadic motion forecasting toolkit"};
  app.require_subcommand(1);
  bool deterministic = false;
  app.add_flag("--deterministic", deterministic, "Single-threaded, bit-reproducible execution");

  std::string config, train_out, eval_out, ablate_out, retarget_out, ckpt, data, horizons = "0.2,0.5,1.0,1.5", run_dir;
  std::vector<std::string> toggles;
  int scene = -1;

  auto* train = app.add_subcommand("train", "Train a forecaster");
  train->add_option("--config", config, "Train config (JSON)")->required();
  train->add_option("--out", train_out, "Run directory")->default_val("runs/train");
  train->add_flag("--deterministic", deterministic);

  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint against the zero-velocity baseline");
  eval->add_option("--ckpt", ckpt, "Checkpoint directory")->required();
  eval->add_option("--data", data, "Scene dir/file, dataset JSON, or synthetic[:key=value,...]");
  eval->add_option("--horizons", horizons, "Comma-separated horizons in seconds");
  eval->add_option("--config", config, "Train config whose model shape the checkpoint must match");
  eval->add_option("--out", eval_out, "Output directory (default: the checkpoint's parent)");
  eval->add_flag("--deterministic", deterministic);

  auto* ablate = app.add_subcommand("ablate", "Train and evaluate toggled variants");
  ablate->add_option("--config", config, "Train config (JSON)")->required();
  ablate->add_option("--toggle", toggles, "name=value; repeatable")->required();
  ablate->add_option("--out", ablate_out, "Output directory")->default_val("runs/ablate");
  ablate->add_flag("--deterministic", deterministic);

  auto* retarget = app.add_subcommand("retarget", "Train and evaluate the human-robot shared space");
  retarget->add_option("--config", config, "Retarget config (JSON)")->required();
  retarget->add_option("--out", retarget_out, "Output directory")->default_val("runs/retarget");
  retarget->add_flag("--deterministic", deterministic);

  auto* report = app.add_subcommand("report", "Plot a run directory");
  report->add_option("--run", run_dir, "Run directory")->required();
  report->add_option("--scene", scene, "Only draw this predictions.json sample");
  report->add_flag("--deterministic", deterministic);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (deterministic) echo::kernels::set_threads(1);
    if (*train) {
      echo::cmd_train(echo::load_train_config(config), train_out, &std::cerr);
      std::cout << train_out << "\n";
    } else if (*eval) {
      echo::EvalRequest req;
      req.checkpoint = ckpt;
      if (!data.empty()) req.data = echo::parse_data_argument(data);
      req.horizons = parse_horizons(horizons);
      if (!config.empty()) {
        const auto tc = echo::load_train_config(config);
        req.expected = echo::resolve_model_config(tc, echo::resolve_dataset(tc.dataset));
      }
      const std::filesystem::path ck(ckpt);
      req.out_dir = eval_out.empty() ? (ck.has_parent_path() ? ck.parent_path() : std::filesystem::path(".")) : std::filesystem::path(eval_out);
      const auto res = echo::cmd_eval(req);
      std::cout << "model\n" << res.model.to_csv() << "zero_velocity\n" << res.baseline.to_csv();
    } else if (*ablate) {
      std::vector<echo::Toggle> parsed;
      for (const auto& t : toggles) parsed.push_back(echo::parse_toggle(t));
      echo::cmd_ablate(echo::load_train_config(config), parsed, ablate_out, &std::cerr);
      std::cout << (std::filesystem::path(ablate_out) / "ablation.csv").string() << "\n";
    } else if (*retarget) {
      const auto res = echo::cmd_retarget(echo::load_retarget_config(config), retarget_out, &std::cerr);
      std::cout << echo::retarget_csv(res.trained);
    } else if (*report) {
      const auto res = echo::cmd_report(run_dir, scene >= 0 ? std::optional<int>(scene) : std::nullopt);
      for (const auto& p : res.plots) std::cout << p.string() << "\n";
      std::cout << res.summary.string() << "\n";
    }
  } catch (const echo::UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const echo::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const echo::NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return 3;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
