// Command-line front end: run, verify, sweep.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <thread>

#include <CLI11.hpp>

#include "chemofront/harness.hpp"

namespace {

unsigned default_threads() {
  if (const char* env = std::getenv("CHEMOFRONT_THREADS")) {
    try {
      const int n = std::stoi(env);
      if (n > 0) return static_cast<unsigned>(n);
    } catch (const std::exception&) {
    }
    std::cerr << "warning: ignoring CHEMOFRONT_THREADS=" << env << '\n';
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace

int main(int argc, char** argv) {
  using namespace chemofront;
  CLI::App app{"Accelerating fronts of a parabolic-elliptic chemotaxis model with logistic source"};
  app.require_subcommand(1);
  // --h is the grid spacing, so help is long-form only.
  app.set_help_flag("--help", "Print this help message and exit");

  std::string config_path, sweep_dir, out_dir;
  std::optional<double> h, t_end;
  unsigned threads = default_threads();

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--out", out_dir, "Output directory (default: output_dir from the config)");
    sub->add_option("--h", h, "Override the grid spacing")->check(CLI::PositiveNumber);
    sub->add_option("--t-end", t_end, "Override the final time")->check(CLI::NonNegativeNumber);
  };
  auto* run_cmd = app.add_subcommand("run", "Simulate one config and write its artifacts");
  run_cmd->add_option("config", config_path, "Config JSON")->required();
  add_common(run_cmd);
  auto* verify_cmd = app.add_subcommand("verify", "Simulate one config and run its checks");
  verify_cmd->add_option("config", config_path, "Config JSON")->required();
  add_common(verify_cmd);
  auto* sweep_cmd = app.add_subcommand("sweep", "Verify every config in a directory in parallel");
  sweep_cmd->add_option("dir", sweep_dir, "Directory of config JSON files")->required();
  add_common(sweep_cmd);
  for (auto* sub : {run_cmd, verify_cmd, sweep_cmd})
    sub->add_option("--threads", threads, "Worker threads (env CHEMOFRONT_THREADS)")
        ->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kExitConfig;
  }

  ConfigOverrides overrides{h, t_end, std::nullopt};
  try {
    if (*sweep_cmd) {
      const std::filesystem::path root = out_dir.empty() ? "out/sweep" : out_dir;
      return cmd_sweep(sweep_dir, root, threads, std::cerr, overrides);
    }
    if (!out_dir.empty()) overrides.output_dir = out_dir;
    const auto cfg = load_config(config_path, overrides);
    if (*run_cmd) return cmd_run(cfg, cfg.output_dir, std::cerr);
    return cmd_verify(cfg, cfg.output_dir, std::cerr);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNumerical;
  }
}
