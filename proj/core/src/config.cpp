#include "verbose/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include "verbose/errors.hpp"

namespace verbose {

namespace {

std::string trim(const std::string& s) {
  size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

}  // namespace

bool IniDoc::has(const std::string& section, const std::string& key) const {
  auto it = sections.find(section);
  return it != sections.end() && it->second.count(key) > 0;
}

std::string IniDoc::get(const std::string& section, const std::string& key,
                        const std::string& fallback) const {
  auto it = sections.find(section);
  if (it == sections.end()) return fallback;
  auto kt = it->second.find(key);
  return kt == it->second.end() ? fallback : kt->second;
}

IniDoc parse_ini(const std::string& text, const std::string& origin) {
  IniDoc doc;
  std::istringstream in(text);
  std::string line;
  std::string section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    if (t.front() == '[') {
      if (t.back() != ']' || t.size() < 3) {
        throw ConfigError(origin + ":" + std::to_string(lineno) +
                          ": malformed section header");
      }
      section = trim(t.substr(1, t.size() - 2));
      doc.sections[section];  // register even if empty
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(origin + ":" + std::to_string(lineno) +
                        ": expected key = value");
    }
    if (section.empty()) {
      throw ConfigError(origin + ":" + std::to_string(lineno) +
                        ": key outside any [section]");
    }
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    if (key.empty()) {
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
    }
    if (doc.sections[section].count(key)) {
      throw ConfigError(origin + ":" + std::to_string(lineno) +
                        ": duplicate key '" + key + "'");
    }
    doc.sections[section][key] = value;
  }
  return doc;
}

IniDoc parse_ini_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("config: cannot open " + path);
  std::ostringstream buf;
  buf << f.rdbuf();
  return parse_ini(buf.str(), path);
}

float parse_number(const std::string& text, const std::string& what) {
  try {
    const auto slash = text.find('/');
    if (slash != std::string::npos) {
      const float num = std::stof(text.substr(0, slash));
      const float den = std::stof(text.substr(slash + 1));
      if (den == 0.f) throw ConfigError(what + ": division by zero");
      return num / den;
    }
    size_t used = 0;
    const float v = std::stof(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception&) {
    throw ConfigError(what + ": cannot parse number '" + text + "'");
  }
}

namespace {

int parse_int(const std::string& text, const std::string& what) {
  try {
    size_t used = 0;
    const int v = std::stoi(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw ConfigError(what + ": cannot parse integer '" + text + "'");
  }
}

uint64_t parse_u64(const std::string& text, const std::string& what) {
  try {
    size_t used = 0;
    const uint64_t v = std::stoull(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw ConfigError(what + ": cannot parse seed '" + text + "'");
  }
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, ',')) {
    item.erase(std::remove_if(item.begin(), item.end(),
                              [](unsigned char c) { return std::isspace(c); }),
               item.end());
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

// every key the schema knows, per section
const std::map<std::string, std::set<std::string>> kSchema = {
    {"paths", {"model", "model_b", "dataset", "out"}},
    {"data", {"count", "seed"}},
    {"train",
     {"epochs", "lr", "seed", "holdout", "d_model", "hidden", "enc_hidden",
      "patch", "gate_max_mean_len", "gate_min_grammar"}},
    {"attack",
     {"epsilon", "alpha", "iters", "a1", "b1", "a2", "b2", "a3", "b3",
      "momentum", "unroll", "decode", "losses", "schedule", "seed"}},
    {"eval",
     {"policies", "images", "seed", "max_len", "temperature",
      "gate_min_ratio"}},
    {"run", {"jobs", "baselines", "joules_per_flop"}},
};

void check_schema(const IniDoc& ini) {
  for (const auto& [section, keys] : ini.sections) {
    auto it = kSchema.find(section);
    if (it == kSchema.end()) {
      throw ConfigError("config: unknown section [" + section + "]");
    }
    for (const auto& [key, value] : keys) {
      if (!it->second.count(key)) {
        throw ConfigError("config: unknown key '" + key + "' in [" + section +
                          "]");
      }
    }
  }
}

}  // namespace

std::vector<DecodePolicy> ExperimentConfig::eval_policies() const {
  std::vector<DecodePolicy> out;
  for (const std::string& spec : policy_specs) {
    DecodePolicy p = DecodePolicy::parse(spec);
    p.max_len = max_len;
    p.temperature = temperature;
    p.seed = eval_seed;
    out.push_back(p);
  }
  return out;
}

DecodePolicy ExperimentConfig::primary_policy() const {
  return eval_policies().front();
}

void ExperimentConfig::validate() const {
  if (policy_specs.empty()) throw ConfigError("config: eval policies empty");
  if (eval_images < 1) throw ConfigError("config: eval images must be >= 1");
  if (data_count < 1) throw ConfigError("config: data count must be >= 1");
  if (max_len < 1) throw ConfigError("config: max_len must be >= 1");
  if (jobs < 0) throw ConfigError("config: jobs must be >= 0");
  attack.validate();
  for (const auto& p : eval_policies()) p.validate();
}

ExperimentConfig config_from_ini(const IniDoc& ini) {
  check_schema(ini);
  ExperimentConfig cfg;
  auto num = [&](const char* sec, const char* key, float fallback) {
    const std::string raw = ini.get(sec, key, "");
    return raw.empty() ? fallback
                       : parse_number(raw, std::string(sec) + "." + key);
  };
  auto integer = [&](const char* sec, const char* key, int fallback) {
    const std::string raw = ini.get(sec, key, "");
    return raw.empty() ? fallback
                       : parse_int(raw, std::string(sec) + "." + key);
  };
  auto seed64 = [&](const char* sec, const char* key, uint64_t fallback) {
    const std::string raw = ini.get(sec, key, "");
    return raw.empty() ? fallback
                       : parse_u64(raw, std::string(sec) + "." + key);
  };

  cfg.model_path = ini.get("paths", "model", cfg.model_path);
  cfg.model_b_path = ini.get("paths", "model_b", cfg.model_b_path);
  cfg.dataset_path = ini.get("paths", "dataset", cfg.dataset_path);
  cfg.out_dir = ini.get("paths", "out", cfg.out_dir);

  cfg.data_count = integer("data", "count", cfg.data_count);
  cfg.data_seed = seed64("data", "seed", cfg.data_seed);

  cfg.epochs = integer("train", "epochs", cfg.epochs);
  cfg.lr = num("train", "lr", cfg.lr);
  cfg.train_seed = seed64("train", "seed", cfg.train_seed);
  cfg.holdout = integer("train", "holdout", cfg.holdout);
  cfg.d_model = integer("train", "d_model", cfg.d_model);
  cfg.hidden = integer("train", "hidden", cfg.hidden);
  cfg.enc_hidden = integer("train", "enc_hidden", cfg.enc_hidden);
  cfg.patch = integer("train", "patch", cfg.patch);
  cfg.gate_max_mean_len =
      num("train", "gate_max_mean_len", cfg.gate_max_mean_len);
  cfg.gate_min_grammar = num("train", "gate_min_grammar", cfg.gate_min_grammar);

  AttackConfig& a = cfg.attack;
  a.epsilon = num("attack", "epsilon", a.epsilon);
  a.alpha = num("attack", "alpha", a.alpha);
  a.iters = integer("attack", "iters", a.iters);
  a.a1 = num("attack", "a1", a.a1);
  a.b1 = num("attack", "b1", a.b1);
  a.a2 = num("attack", "a2", a.a2);
  a.b2 = num("attack", "b2", a.b2);
  a.a3 = num("attack", "a3", a.a3);
  a.b3 = num("attack", "b3", a.b3);
  a.momentum = num("attack", "momentum", a.momentum);
  a.unroll = integer("attack", "unroll", a.unroll);
  a.seed = seed64("attack", "seed", a.seed);
  const std::string decode = ini.get("attack", "decode", "greedy");
  if (decode == "greedy") {
    a.sample_during_attack = false;
  } else if (decode == "sample") {
    a.sample_during_attack = true;
  } else {
    throw ConfigError("config: attack.decode must be greedy or sample");
  }
  const std::string losses = ini.get("attack", "losses", "l1+l2+l3");
  a.use_l1 = losses.find("l1") != std::string::npos;
  a.use_l2 = losses.find("l2") != std::string::npos;
  a.use_l3 = losses.find("l3") != std::string::npos;
  if (!a.use_l1 && !a.use_l2 && !a.use_l3) {
    throw ConfigError("config: attack.losses selects no loss");
  }
  const std::string schedule = ini.get("attack", "schedule", "decay+momentum");
  if (schedule == "none") {
    a.use_decay = a.use_momentum = false;
  } else if (schedule == "decay") {
    a.use_decay = true;
    a.use_momentum = false;
  } else if (schedule == "momentum") {
    a.use_decay = false;
    a.use_momentum = true;
  } else if (schedule == "decay+momentum") {
    a.use_decay = a.use_momentum = true;
  } else {
    throw ConfigError("config: attack.schedule must be one of none, decay, "
                      "momentum, decay+momentum");
  }

  const std::string policies = ini.get("eval", "policies", "");
  if (!policies.empty()) cfg.policy_specs = split_list(policies);
  cfg.eval_images = integer("eval", "images", cfg.eval_images);
  cfg.eval_seed = seed64("eval", "seed", cfg.eval_seed);
  cfg.max_len = integer("eval", "max_len", cfg.max_len);
  cfg.temperature = num("eval", "temperature", cfg.temperature);
  cfg.gate_min_ratio = num("eval", "gate_min_ratio", cfg.gate_min_ratio);

  cfg.jobs = integer("run", "jobs", cfg.jobs);
  const std::string baselines = ini.get("run", "baselines", "noise,sponge,nicg");
  cfg.run_noise = cfg.run_sponge = cfg.run_nicg = false;
  if (baselines != "none") {
    for (const std::string& b : split_list(baselines)) {
      if (b == "noise") {
        cfg.run_noise = true;
      } else if (b == "sponge") {
        cfg.run_sponge = true;
      } else if (b == "nicg") {
        cfg.run_nicg = true;
      } else {
        throw ConfigError("config: unknown baseline '" + b + "'");
      }
    }
  }
  cfg.joules_per_flop =
      static_cast<double>(num("run", "joules_per_flop", 1e-9f));

  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("config: cannot open " + path);
  std::ostringstream buf;
  buf << f.rdbuf();
  ExperimentConfig cfg = config_from_ini(parse_ini(buf.str(), path));
  cfg.raw_text = buf.str();
  return cfg;
}

}  // namespace verbose
