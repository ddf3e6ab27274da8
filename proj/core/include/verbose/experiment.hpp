#pragma once

#include <string>
#include <vector>

#include "verbose/attack.hpp"
#include "verbose/config.hpp"
#include "verbose/dataset.hpp"
#include "verbose/meter.hpp"
#include "verbose/report.hpp"
#include "verbose/vlm.hpp"

namespace verbose {

// --- reusable building blocks (also used by the acceptance suite) -----------

// The dataset tail reserved for evaluation.
std::vector<SynthSample> eval_slice(const std::vector<SynthSample>& data,
                                    int count);

struct HoldoutMetrics {
  double mean_len = 0.0;
  double grammar_frac = 0.0;
};
HoldoutMetrics holdout_metrics(const ToyVlm& m,
                               const std::vector<SynthSample>& samples,
                               const DecodePolicy& policy);

enum class AttackMethod { verbose, noise, sponge, nicg };
const char* method_name(AttackMethod m);

// Fans per-image attacks out to a worker pool. Per-image seeds are derived
// from cfg.seed and the image index, so results are identical for any job
// count. jobs == 0 means hardware concurrency.
std::vector<AttackResult> craft_batch(const ToyVlm& m,
                                      const std::vector<SynthSample>& images,
                                      const AttackConfig& cfg,
                                      AttackMethod method, int jobs);

// Evaluates one image set under `policy`, appending rows tagged with
// `method`. Metering runs serially. image_ids give the dataset indices;
// dists are (linf, l2) per image, zero for originals.
void evaluate_into(Report& report, const ToyVlm& m,
                   const std::vector<Tensor>& images,
                   const std::vector<int>& image_ids,
                   const std::vector<std::pair<float, float>>& dists,
                   const std::string& method, const DecodePolicy& policy,
                   double joules_per_flop, uint64_t eval_seed);

// Crafts verbose images plus the enabled baselines and evaluates everything
// under the primary policy. Artifacts (adv images, curves, traces, report
// files) land in out_dir when it is non-empty.
Report run_attack_experiment(const ToyVlm& m,
                             const std::vector<SynthSample>& samples,
                             const ExperimentConfig& cfg,
                             const std::string& out_dir);

// --- CLI commands (return a process exit status) ----------------------------

int cmd_gen_data(const ExperimentConfig& cfg);
int cmd_train(const ExperimentConfig& cfg);
int cmd_attack(const ExperimentConfig& cfg);
int cmd_eval(const ExperimentConfig& cfg);
int cmd_ablate(const ExperimentConfig& cfg, const std::string& suite);
int cmd_transfer(const ExperimentConfig& cfg);
int cmd_meter(const ExperimentConfig& cfg);

}  // namespace verbose
