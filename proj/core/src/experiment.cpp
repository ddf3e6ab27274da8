#include "verbose/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <thread>

#include <json.hpp>

#include "verbose/decode.hpp"
#include "verbose/errors.hpp"
#include "verbose/rng.hpp"
#include "verbose/tensor_io.hpp"
#include "verbose/version.hpp"

namespace fs = std::filesystem;

namespace verbose {

std::vector<SynthSample> eval_slice(const std::vector<SynthSample>& data,
                                    int count) {
  if (count < 1 || count > static_cast<int>(data.size())) {
    throw UsageError("eval_slice: count out of range");
  }
  return {data.end() - count, data.end()};
}

HoldoutMetrics holdout_metrics(const ToyVlm& m,
                               const std::vector<SynthSample>& samples,
                               const DecodePolicy& policy) {
  HoldoutMetrics hm;
  if (samples.empty()) return hm;
  int grammatical = 0;
  long long total_len = 0;
  for (const SynthSample& s : samples) {
    GenerationTrace t = generate(m, s.image, policy);
    total_len += t.length();
    if (t.eos_emitted && m.vocab.matches_grammar(t.tokens)) ++grammatical;
  }
  hm.mean_len = static_cast<double>(total_len) / samples.size();
  hm.grammar_frac = static_cast<double>(grammatical) / samples.size();
  return hm;
}

const char* method_name(AttackMethod m) {
  switch (m) {
    case AttackMethod::verbose:
      return "verbose";
    case AttackMethod::noise:
      return "noise";
    case AttackMethod::sponge:
      return "sponge";
    case AttackMethod::nicg:
      return "nicg";
  }
  return "?";
}

std::vector<AttackResult> craft_batch(const ToyVlm& m,
                                      const std::vector<SynthSample>& images,
                                      const AttackConfig& cfg,
                                      AttackMethod method, int jobs) {
  const size_t n = images.size();
  std::vector<AttackResult> results(n);
  if (n == 0) return results;

  int workers = jobs > 0 ? jobs
                         : static_cast<int>(std::thread::hardware_concurrency());
  workers = std::max(1, std::min<int>(workers, static_cast<int>(n)));

  std::atomic<size_t> next{0};
  std::mutex err_mu;
  std::exception_ptr first_error;

  auto work = [&] {
    while (true) {
      const size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        AttackConfig per_image = cfg;
        per_image.seed = mix_seed(cfg.seed, i);
        switch (method) {
          case AttackMethod::verbose:
            results[i] = craft_verbose_image(m, images[i].image, per_image);
            break;
          case AttackMethod::noise: {
            AttackResult r;
            r.x_adv =
                baseline_noise(images[i].image, cfg.epsilon, per_image.seed);
            r.linf_dist = linf_distance(r.x_adv, images[i].image);
            r.l2_dist = l2_distance(r.x_adv, images[i].image);
            results[i] = std::move(r);
            break;
          }
          case AttackMethod::sponge:
            results[i] = baseline_sponge(m, images[i].image, per_image);
            break;
          case AttackMethod::nicg:
            results[i] = baseline_nicg(m, images[i].image, per_image);
            break;
        }
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mu);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };

  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (std::thread& t : pool) t.join();
  }
  if (first_error) std::rethrow_exception(first_error);
  return results;
}

void evaluate_into(Report& report, const ToyVlm& m,
                   const std::vector<Tensor>& images,
                   const std::vector<int>& image_ids,
                   const std::vector<std::pair<float, float>>& dists,
                   const std::string& method, const DecodePolicy& policy,
                   double joules_per_flop, uint64_t eval_seed) {
  for (size_t i = 0; i < images.size(); ++i) {
    DecodePolicy per_image = policy;
    per_image.seed = mix_seed(eval_seed, image_ids[i]);
    auto [trace, reading] =
        meter_generation(m, images[i], per_image, joules_per_flop);
    ImageRow row;
    row.method = method;
    row.policy = policy.name();
    row.image_id = image_ids[i];
    row.seed = per_image.seed;
    row.length = reading.tokens;
    row.flops = reading.flops;
    row.proxy_energy = reading.proxy_energy;
    row.wall_seconds = reading.wall_seconds;
    row.linf = dists.empty() ? 0.0 : dists[i].first;
    row.l2 = dists.empty() ? 0.0 : dists[i].second;
    row.stop_reason = trace.stop_reason == StopReason::eos ? "eos" : "max_len";
    report.rows.push_back(std::move(row));
  }
}

namespace {

std::vector<int> iota_ids(size_t n) {
  std::vector<int> ids(n);
  for (size_t i = 0; i < n; ++i) ids[i] = static_cast<int>(i);
  return ids;
}

std::vector<Tensor> original_images(const std::vector<SynthSample>& samples) {
  std::vector<Tensor> out;
  out.reserve(samples.size());
  for (const SynthSample& s : samples) out.push_back(s.image);
  return out;
}

void write_report_files(const std::string& out_dir, const Report& report) {
  fs::create_directories(out_dir);
  write_rows_csv((fs::path(out_dir) / "rows.csv").string(), report);
  write_histogram_txt((fs::path(out_dir) / "hist.txt").string(), report);
  write_summary_json((fs::path(out_dir) / "summary.json").string(), report,
                     kVersion);
}

void save_adversarial(const std::string& out_dir, const std::string& method,
                      const std::vector<AttackResult>& results,
                      bool with_curves) {
  char name[64];
  for (size_t i = 0; i < results.size(); ++i) {
    std::snprintf(name, sizeof(name), "adv_%s_%05zu.vft1", method.c_str(), i);
    write_vft1_file((fs::path(out_dir) / name).string(), results[i].x_adv);
    if (with_curves && !results[i].curves.empty()) {
      std::snprintf(name, sizeof(name), "curves_%s_%05zu.csv", method.c_str(),
                    i);
      std::ofstream f(fs::path(out_dir) / name);
      f << "iter,l1,l2,l3,lam1,lam2,lam3,n\n";
      for (const CurveRow& r : results[i].curves) {
        char line[256];
        std::snprintf(line, sizeof(line),
                      "%d,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%d\n", r.iter, r.l1,
                      r.l2, r.l3, r.lam1, r.lam2, r.lam3, r.n);
        f << line;
      }
    }
  }
}

std::vector<std::pair<float, float>> result_dists(
    const std::vector<AttackResult>& results) {
  std::vector<std::pair<float, float>> out;
  out.reserve(results.size());
  for (const AttackResult& r : results) out.emplace_back(r.linf_dist, r.l2_dist);
  return out;
}

std::vector<Tensor> result_images(const std::vector<AttackResult>& results) {
  std::vector<Tensor> out;
  out.reserve(results.size());
  for (const AttackResult& r : results) out.push_back(r.x_adv);
  return out;
}

}  // namespace

Report run_attack_experiment(const ToyVlm& m,
                             const std::vector<SynthSample>& samples,
                             const ExperimentConfig& cfg,
                             const std::string& out_dir) {
  Report report;
  report.config_echo = cfg.raw_text;
  report.seeds = {cfg.attack.seed, cfg.eval_seed};
  report.hist_max_len = cfg.max_len;

  const DecodePolicy primary = cfg.primary_policy();
  const auto ids = iota_ids(samples.size());
  const auto originals = original_images(samples);

  evaluate_into(report, m, originals, ids, {}, "original", primary,
                cfg.joules_per_flop, cfg.eval_seed);

  std::vector<AttackMethod> methods = {AttackMethod::verbose};
  if (cfg.run_noise) methods.push_back(AttackMethod::noise);
  if (cfg.run_sponge) methods.push_back(AttackMethod::sponge);
  if (cfg.run_nicg) methods.push_back(AttackMethod::nicg);

  for (AttackMethod method : methods) {
    const auto results = craft_batch(m, samples, cfg.attack, method, cfg.jobs);
    if (!out_dir.empty()) {
      fs::create_directories(out_dir);
      save_adversarial(out_dir, method_name(method), results,
                       method == AttackMethod::verbose);
    }
    evaluate_into(report, m, result_images(results), ids, result_dists(results),
                  method_name(method), primary, cfg.joules_per_flop,
                  cfg.eval_seed);
  }

  if (!out_dir.empty()) {
    // export the per-step trace of each verbose image under the primary policy
    for (size_t i = 0; i < samples.size(); ++i) {
      char name[64];
      std::snprintf(name, sizeof(name), "adv_verbose_%05zu.vft1", i);
      const fs::path img = fs::path(out_dir) / name;
      if (!fs::exists(img)) continue;
      DecodePolicy per_image = primary;
      per_image.seed = mix_seed(cfg.eval_seed, static_cast<int>(i));
      GenerationTrace t = generate(m, read_vft1_file(img.string()), per_image);
      std::snprintf(name, sizeof(name), "trace_verbose_%05zu.csv", i);
      std::ofstream f(fs::path(out_dir) / name);
      write_trace_csv(f, t, m.vocab.eos_id);
    }
    write_report_files(out_dir, report);
  }
  return report;
}

// --- commands ----------------------------------------------------------------

int cmd_gen_data(const ExperimentConfig& cfg) {
  if (cfg.dataset_path.empty()) {
    throw ConfigError("gen-data: [paths] dataset is required");
  }
  const auto data = synth_dataset(cfg.data_count, cfg.data_seed);
  save_dataset(cfg.dataset_path, data);
  std::cout << "gen-data: wrote " << data.size() << " samples to "
            << cfg.dataset_path << "\n";
  return 0;
}

int cmd_train(const ExperimentConfig& cfg) {
  if (cfg.dataset_path.empty() || cfg.model_path.empty()) {
    throw ConfigError("train: [paths] dataset and model are required");
  }
  const auto data = load_dataset(cfg.dataset_path);
  if (cfg.holdout < 0 || cfg.holdout >= static_cast<int>(data.size())) {
    throw ConfigError("train: holdout out of range");
  }
  const std::vector<SynthSample> train_split(data.begin(),
                                             data.end() - cfg.holdout);
  const std::vector<SynthSample> holdout_split(data.end() - cfg.holdout,
                                               data.end());

  ToyVlm model = init_model(mix_seed(cfg.train_seed, 0xA11), cfg.d_model,
                            cfg.hidden, cfg.enc_hidden, cfg.patch);
  TrainReport tr =
      train(model, train_split, cfg.epochs, cfg.lr, mix_seed(cfg.train_seed, 0x5FF));

  DecodePolicy greedy;
  greedy.max_len = cfg.max_len;
  HoldoutMetrics hm = holdout_metrics(model, holdout_split, greedy);

  save_model(model, cfg.model_path);

  fs::create_directories(cfg.out_dir);
  nlohmann::ordered_json j;
  j["version"] = kVersion;
  j["epochs"] = tr.epochs;
  j["epoch_loss"] = tr.epoch_loss;
  j["final_loss"] = tr.final_loss;
  j["holdout_mean_len"] = hm.mean_len;
  j["holdout_grammar_frac"] = hm.grammar_frac;
  std::ofstream f(fs::path(cfg.out_dir) / "train_report.json");
  f << j.dump(2) << "\n";

  std::cout << "train: final loss " << tr.final_loss << ", holdout mean len "
            << hm.mean_len << ", grammar " << hm.grammar_frac * 100 << "%\n";
  if (hm.mean_len > cfg.gate_max_mean_len ||
      hm.grammar_frac < cfg.gate_min_grammar) {
    std::cerr << "train: holdout gate failed (mean len <= "
              << cfg.gate_max_mean_len << ", grammar >= "
              << cfg.gate_min_grammar << " required)\n";
    return 1;
  }
  return 0;
}

int cmd_attack(const ExperimentConfig& cfg) {
  if (cfg.dataset_path.empty() || cfg.model_path.empty()) {
    throw ConfigError("attack: [paths] dataset and model are required");
  }
  const ToyVlm model = load_model(cfg.model_path);
  const auto data = load_dataset(cfg.dataset_path);
  const auto samples = eval_slice(data, cfg.eval_images);

  Report report = run_attack_experiment(model, samples, cfg, cfg.out_dir);

  const auto ratios = report.length_ratios();
  const std::string policy = cfg.primary_policy().name();
  const auto it = ratios.find({"verbose", policy});
  const double ratio = it == ratios.end() ? 0.0 : it->second;
  for (const MethodAggregate& a : report.aggregates()) {
    std::cout << "attack: " << a.method << " mean length " << a.mean_length
              << " (std " << a.std_length << ")\n";
  }
  std::cout << "attack: verbose/original length ratio " << ratio << "\n";
  if (cfg.gate_min_ratio > 0.f && ratio < cfg.gate_min_ratio) {
    std::cerr << "attack: ratio gate failed (need >= " << cfg.gate_min_ratio
              << ")\n";
    return 1;
  }
  return 0;
}

int cmd_eval(const ExperimentConfig& cfg) {
  if (cfg.dataset_path.empty() || cfg.model_path.empty()) {
    throw ConfigError("eval: [paths] dataset and model are required");
  }
  const ToyVlm model = load_model(cfg.model_path);
  const auto data = load_dataset(cfg.dataset_path);
  const auto samples = eval_slice(data, cfg.eval_images);
  const auto ids = iota_ids(samples.size());

  Report report;
  report.config_echo = cfg.raw_text;
  report.seeds = {cfg.eval_seed};
  report.hist_max_len = cfg.max_len;

  // adversarial sets emitted by a previous attack run, if any
  std::vector<std::pair<std::string, std::vector<Tensor>>> adv_sets;
  for (const char* method : {"verbose", "noise", "sponge", "nicg"}) {
    std::vector<Tensor> images;
    for (size_t i = 0;; ++i) {
      char name[64];
      std::snprintf(name, sizeof(name), "adv_%s_%05zu.vft1", method, i);
      const fs::path p = fs::path(cfg.out_dir) / name;
      if (!fs::exists(p)) break;
      images.push_back(read_vft1_file(p.string()));
    }
    if (!images.empty()) adv_sets.emplace_back(method, std::move(images));
  }

  for (const DecodePolicy& policy : cfg.eval_policies()) {
    evaluate_into(report, model, original_images(samples), ids, {}, "original",
                  policy, cfg.joules_per_flop, cfg.eval_seed);
    for (const auto& [method, images] : adv_sets) {
      if (images.size() != samples.size()) {
        throw UsageError("eval: adversarial set size mismatch for " + method);
      }
      evaluate_into(report, model, images, ids, {}, method, policy,
                    cfg.joules_per_flop, cfg.eval_seed);
    }
  }

  const std::string eval_dir = (fs::path(cfg.out_dir) / "eval").string();
  write_report_files(eval_dir, report);
  for (const MethodAggregate& a : report.aggregates()) {
    std::cout << "eval: " << a.method << " under " << a.policy
              << " mean length " << a.mean_length << "\n";
  }
  return 0;
}

namespace {

std::string sanitize_cell(std::string name) {
  for (char& c : name) {
    if (c == '/' || c == '+' || c == ':' || c == '.') c = '_';
  }
  return name;
}

void write_comparison_csv(const std::string& path,
                          const std::vector<std::pair<std::string, Report>>& cells,
                          const std::string& policy) {
  std::ofstream f(path);
  f << "cell,mean_length_original,mean_length_verbose,ratio,mean_linf,mean_l2\n";
  for (const auto& [name, report] : cells) {
    const auto aggs = report.aggregates();
    const MethodAggregate* orig = report.find("original", policy, aggs);
    const MethodAggregate* verb = report.find("verbose", policy, aggs);
    if (!orig || !verb) continue;
    char line[256];
    std::snprintf(line, sizeof(line), "%s,%.9g,%.9g,%.9g,%.9g,%.9g\n",
                  name.c_str(), orig->mean_length, verb->mean_length,
                  orig->mean_length > 0 ? verb->mean_length / orig->mean_length
                                        : 0.0,
                  verb->mean_linf, verb->mean_l2);
    f << line;
  }
}

}  // namespace

int cmd_ablate(const ExperimentConfig& cfg, const std::string& suite) {
  if (cfg.dataset_path.empty() || cfg.model_path.empty()) {
    throw ConfigError("ablate: [paths] dataset and model are required");
  }
  const ToyVlm model = load_model(cfg.model_path);
  const auto data = load_dataset(cfg.dataset_path);
  const auto samples = eval_slice(data, cfg.eval_images);
  const fs::path suite_dir = fs::path(cfg.out_dir) / ("ablate_" + suite);
  fs::create_directories(suite_dir);

  std::vector<std::pair<std::string, Report>> cells;
  const std::string policy = cfg.primary_policy().name();

  auto run_cell = [&](const std::string& name, const ExperimentConfig& cell_cfg) {
    const std::string dir = (suite_dir / sanitize_cell(name)).string();
    Report r = run_attack_experiment(model, samples, cell_cfg, dir);
    cells.emplace_back(name, std::move(r));
    std::cout << "ablate[" << suite << "] cell " << name << " done\n";
  };

  ExperimentConfig base = cfg;
  base.run_noise = base.run_sponge = base.run_nicg = false;

  if (suite == "losses") {
    const char* combos[] = {"l1",    "l2",    "l3",      "l1+l2",
                            "l1+l3", "l2+l3", "l1+l2+l3"};
    for (const char* combo : combos) {
      ExperimentConfig c = base;
      c.attack.use_l1 = std::string(combo).find("l1") != std::string::npos;
      c.attack.use_l2 = std::string(combo).find("l2") != std::string::npos;
      c.attack.use_l3 = std::string(combo).find("l3") != std::string::npos;
      run_cell(combo, c);
    }
  } else if (suite == "schedule") {
    const std::pair<const char*, std::pair<bool, bool>> modes[] = {
        {"none", {false, false}},
        {"decay", {true, false}},
        {"momentum", {false, true}},
        {"decay+momentum", {true, true}}};
    for (const auto& [name, flags] : modes) {
      ExperimentConfig c = base;
      c.attack.use_decay = flags.first;
      c.attack.use_momentum = flags.second;
      run_cell(name, c);
    }
  } else if (suite == "epsilon") {
    for (int mag : {2, 4, 8, 16, 32}) {
      ExperimentConfig c = base;
      c.attack.epsilon = static_cast<float>(mag) / 255.f;
      c.attack.alpha = std::min(c.attack.alpha, c.attack.epsilon);
      run_cell("eps" + std::to_string(mag), c);
    }
  } else if (suite == "policy" || suite == "maxlen") {
    // craft once, evaluate each cell on the same adversarial images
    const auto results =
        craft_batch(model, samples, base.attack, AttackMethod::verbose, base.jobs);
    const auto adv = result_images(results);
    const auto dists = result_dists(results);
    const auto ids = iota_ids(samples.size());
    auto eval_cell = [&](const std::string& name, const DecodePolicy& pol) {
      Report r;
      r.config_echo = cfg.raw_text;
      r.seeds = {cfg.attack.seed, cfg.eval_seed};
      r.hist_max_len = pol.max_len;
      evaluate_into(r, model, original_images(samples), ids, {}, "original",
                    pol, cfg.joules_per_flop, cfg.eval_seed);
      evaluate_into(r, model, adv, ids, dists, "verbose", pol,
                    cfg.joules_per_flop, cfg.eval_seed);
      write_report_files((suite_dir / sanitize_cell(name)).string(), r);
      cells.emplace_back(name, std::move(r));
      std::cout << "ablate[" << suite << "] cell " << name << " done\n";
    };
    if (suite == "policy") {
      for (const char* spec : {"greedy", "beam:5", "top_k:10", "nucleus:0.9"}) {
        DecodePolicy pol = DecodePolicy::parse(spec);
        pol.max_len = cfg.max_len;
        pol.temperature = cfg.temperature;
        pol.seed = cfg.eval_seed;
        eval_cell(spec, pol);
      }
    } else {
      for (int len : {32, 64, 128, 256}) {
        DecodePolicy pol;  // greedy
        pol.max_len = len;
        pol.temperature = cfg.temperature;
        pol.seed = cfg.eval_seed;
        eval_cell("maxlen" + std::to_string(len), pol);
      }
    }
    // comparison rows keyed per cell policy, handled below with per-cell names
  } else {
    throw ConfigError("ablate: unknown suite '" + suite +
                      "' (losses, schedule, epsilon, policy, maxlen)");
  }

  // comparison table; for policy/maxlen suites each cell has its own policy
  if (suite == "policy" || suite == "maxlen") {
    std::ofstream f(suite_dir / "comparison.csv");
    f << "cell,mean_length_original,mean_length_verbose,ratio\n";
    for (const auto& [name, report] : cells) {
      const auto aggs = report.aggregates();
      for (const MethodAggregate& a : aggs) {
        if (a.method != "verbose") continue;
        const MethodAggregate* orig = report.find("original", a.policy, aggs);
        char line[256];
        std::snprintf(line, sizeof(line), "%s,%.9g,%.9g,%.9g\n", name.c_str(),
                      orig->mean_length, a.mean_length,
                      orig->mean_length > 0
                          ? a.mean_length / orig->mean_length
                          : 0.0);
        f << line;
      }
    }
  } else {
    write_comparison_csv((suite_dir / "comparison.csv").string(), cells, policy);
  }
  std::cout << "ablate[" << suite << "]: " << cells.size() << " cells -> "
            << suite_dir.string() << "\n";
  return 0;
}

int cmd_transfer(const ExperimentConfig& cfg) {
  if (cfg.dataset_path.empty() || cfg.model_path.empty() ||
      cfg.model_b_path.empty()) {
    throw ConfigError("transfer: [paths] dataset, model and model_b are required");
  }
  const ToyVlm model_a = load_model(cfg.model_path);
  const ToyVlm model_b = load_model(cfg.model_b_path);
  const auto data = load_dataset(cfg.dataset_path);
  const auto samples = eval_slice(data, cfg.eval_images);
  const auto ids = iota_ids(samples.size());
  const DecodePolicy primary = cfg.primary_policy();

  const auto results =
      craft_batch(model_a, samples, cfg.attack, AttackMethod::verbose, cfg.jobs);
  const auto adv = result_images(results);
  const auto dists = result_dists(results);

  Report report;
  report.config_echo = cfg.raw_text;
  report.seeds = {cfg.attack.seed, cfg.eval_seed};
  report.hist_max_len = cfg.max_len;
  evaluate_into(report, model_a, original_images(samples), ids, {},
                "original_a", primary, cfg.joules_per_flop, cfg.eval_seed);
  evaluate_into(report, model_b, original_images(samples), ids, {}, "original",
                primary, cfg.joules_per_flop, cfg.eval_seed);
  evaluate_into(report, model_a, adv, ids, dists, "whitebox", primary,
                cfg.joules_per_flop, cfg.eval_seed);
  evaluate_into(report, model_b, adv, ids, dists, "blackbox", primary,
                cfg.joules_per_flop, cfg.eval_seed);

  const std::string dir = (fs::path(cfg.out_dir) / "transfer").string();
  write_report_files(dir, report);
  for (const MethodAggregate& a : report.aggregates()) {
    std::cout << "transfer: " << a.method << " mean length " << a.mean_length
              << "\n";
  }
  return 0;
}

int cmd_meter(const ExperimentConfig& cfg) {
  if (cfg.dataset_path.empty() || cfg.model_path.empty()) {
    throw ConfigError("meter: [paths] dataset and model are required");
  }
  const ToyVlm model = load_model(cfg.model_path);
  const auto data = load_dataset(cfg.dataset_path);
  const Tensor& image = data.back().image;

  const int lengths[] = {8, 16, 32, 64, 128, 256};
  constexpr int kReps = 5;

  fs::create_directories(cfg.out_dir);
  std::ofstream csv(fs::path(cfg.out_dir) / "meter.csv");
  csv << "image_id,policy,N,decoder_calls,flops,wall_seconds,proxy_energy\n";

  std::vector<std::pair<double, double>> flops_points;
  std::vector<std::pair<double, double>> wall_points;
  for (int n : lengths) {
    std::vector<double> reps;
    double flops = 0.0;
    for (int rep = 0; rep < kReps; ++rep) {
      auto [trace, reading] = meter_forced(model, image, n, cfg.joules_per_flop);
      reps.push_back(reading.wall_seconds);
      flops = reading.flops;
      char line[256];
      std::snprintf(line, sizeof(line), "%d,forced,%d,%d,%.17g,%.17g,%.17g\n",
                    0, reading.tokens, reading.decoder_calls, reading.flops,
                    reading.wall_seconds, reading.proxy_energy);
      csv << line;
    }
    std::sort(reps.begin(), reps.end());
    flops_points.emplace_back(n, flops);
    wall_points.emplace_back(n, reps[kReps / 2]);
  }
  const LinearFit flops_fit = fit_linear(flops_points);
  const LinearFit wall_fit = fit_linear(wall_points);

  nlohmann::ordered_json j;
  j["version"] = kVersion;
  j["flops_fit"] = {{"slope", flops_fit.slope},
                    {"intercept", flops_fit.intercept},
                    {"r_squared", flops_fit.r_squared}};
  j["wall_fit"] = {{"slope", wall_fit.slope},
                   {"intercept", wall_fit.intercept},
                   {"r_squared", wall_fit.r_squared}};
  std::ofstream f(fs::path(cfg.out_dir) / "meter_fit.json");
  f << j.dump(2) << "\n";

  std::cout << "meter: flops vs N R^2 = " << flops_fit.r_squared
            << ", wall vs N R^2 = " << wall_fit.r_squared << "\n";
  return 0;
}

}  // namespace verbose
