// vilab: craft images that drag out auto-regressive captioning, then meter
// the energy-latency cost. Subcommands cover the full pipeline: dataset
// generation, training, attacking, evaluation, ablations, transfer, metering.

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "verbose/config.hpp"
#include "verbose/errors.hpp"
#include "verbose/experiment.hpp"
#include "verbose/rng.hpp"
#include "verbose/version.hpp"

int main(int argc, char** argv) {
  CLI::App app{"vilab: verbose-image energy-latency laboratory"};
  app.set_version_flag("--version", verbose::kVersion);
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::optional<uint64_t> seed;
  std::string out_dir;
  int jobs = -1;
  app.add_option("--config", config_path, "experiment config file (ini)");
  app.add_option("--seed", seed, "override the command's primary seed");
  app.add_option("--out", out_dir, "override the output directory");
  app.add_option("--jobs", jobs, "worker pool size (0 = all cores)");

  auto* gen = app.add_subcommand("gen-data", "generate the synthetic dataset");
  auto* train = app.add_subcommand("train", "train the toy captioning model");
  auto* attack =
      app.add_subcommand("attack", "craft verbose images and baselines");
  auto* eval =
      app.add_subcommand("eval", "evaluate saved images under the policies");
  auto* ablate = app.add_subcommand("ablate", "run an ablation suite");
  std::string suite;
  ablate->add_option("suite", suite, "losses | schedule | epsilon | policy | maxlen")
      ->required();
  auto* transfer =
      app.add_subcommand("transfer", "craft on model A, evaluate on A and B");
  auto* meter =
      app.add_subcommand("meter", "forced-length cost sweep and linear fits");

  CLI11_PARSE(app, argc, argv);

  try {
    verbose::ExperimentConfig cfg;
    if (!config_path.empty()) cfg = verbose::load_config(config_path);
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    if (jobs >= 0) cfg.jobs = jobs;

    if (gen->parsed()) {
      if (seed) cfg.data_seed = *seed;
      return verbose::cmd_gen_data(cfg);
    }
    if (train->parsed()) {
      if (seed) cfg.train_seed = *seed;
      return verbose::cmd_train(cfg);
    }
    if (attack->parsed()) {
      if (seed) cfg.attack.seed = *seed;
      return verbose::cmd_attack(cfg);
    }
    if (eval->parsed()) {
      if (seed) cfg.eval_seed = *seed;
      return verbose::cmd_eval(cfg);
    }
    if (ablate->parsed()) {
      if (seed) cfg.attack.seed = *seed;
      return verbose::cmd_ablate(cfg, suite);
    }
    if (transfer->parsed()) {
      if (seed) cfg.attack.seed = *seed;
      return verbose::cmd_transfer(cfg);
    }
    if (meter->parsed()) {
      return verbose::cmd_meter(cfg);
    }
    std::cerr << "error: no subcommand\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
