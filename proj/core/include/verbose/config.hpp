#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "verbose/attack.hpp"
#include "verbose/decode.hpp"

namespace verbose {

// Flat key = value text grouped in [section] headers. '#' starts a comment
// line. Unknown sections or keys are hard errors so that a typo in an
// experiment sweep cannot pass silently.
struct IniDoc {
  // section -> key -> value, plus the line each key was defined on
  std::map<std::string, std::map<std::string, std::string>> sections;

  bool has(const std::string& section, const std::string& key) const;
  std::string get(const std::string& section, const std::string& key,
                  const std::string& fallback) const;
};

IniDoc parse_ini(const std::string& text, const std::string& origin = "config");
IniDoc parse_ini_file(const std::string& path);

// Numeric parsing accepts plain decimals and "a/b" fractions (so pixel-scale
// budgets read naturally as 8/255).
float parse_number(const std::string& text, const std::string& what);

struct ExperimentConfig {
  // [paths]
  std::string model_path;
  std::string model_b_path;
  std::string dataset_path;
  std::string out_dir = "out";

  // [data]
  int data_count = 256;
  uint64_t data_seed = 7;

  // [train]
  int epochs = 20;
  float lr = 0.05f;
  uint64_t train_seed = 1;
  int holdout = 64;
  int d_model = 64, hidden = 64, enc_hidden = 64, patch = 8;
  float gate_max_mean_len = 10.f;
  float gate_min_grammar = 0.8f;

  // [attack]
  AttackConfig attack;

  // [eval]
  std::vector<std::string> policy_specs = {"greedy"};
  int eval_images = 50;
  uint64_t eval_seed = 9;
  int max_len = 256;
  float temperature = 1.f;
  float gate_min_ratio = 0.f;  // 0 disables the gate

  // [run]
  int jobs = 0;  // 0 = hardware concurrency
  bool run_noise = true, run_sponge = true, run_nicg = true;
  double joules_per_flop = 1e-9;

  // verbatim text this config was loaded from (echoed into reports)
  std::string raw_text;

  // Policies with max_len/temperature/seed stamped in.
  std::vector<DecodePolicy> eval_policies() const;
  DecodePolicy primary_policy() const;

  void validate() const;
};

ExperimentConfig load_config(const std::string& path);
ExperimentConfig config_from_ini(const IniDoc& ini);

}  // namespace verbose
