#include "verbose/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "verbose/errors.hpp"

namespace verbose {

namespace {

using Key = std::pair<std::string, std::string>;

std::map<Key, std::vector<const ImageRow*>> group_rows(
    const std::vector<ImageRow>& rows) {
  std::map<Key, std::vector<const ImageRow*>> groups;
  for (const ImageRow& r : rows) groups[{r.method, r.policy}].push_back(&r);
  return groups;
}

MethodAggregate aggregate_group(const Key& key,
                                const std::vector<const ImageRow*>& rows) {
  MethodAggregate a;
  a.method = key.first;
  a.policy = key.second;
  a.images = static_cast<int>(rows.size());
  double sum_len = 0.0, sum_len2 = 0.0;
  for (const ImageRow* r : rows) {
    sum_len += r->length;
    sum_len2 += static_cast<double>(r->length) * r->length;
    a.mean_flops += r->flops;
    a.mean_proxy_energy += r->proxy_energy;
    a.mean_wall_seconds += r->wall_seconds;
    a.mean_linf += r->linf;
    a.mean_l2 += r->l2;
  }
  const double n = static_cast<double>(a.images);
  a.mean_length = sum_len / n;
  const double var = std::max(sum_len2 / n - a.mean_length * a.mean_length, 0.0);
  a.std_length = std::sqrt(var);
  a.mean_flops /= n;
  a.mean_proxy_energy /= n;
  a.mean_wall_seconds /= n;
  a.mean_linf /= n;
  a.mean_l2 /= n;
  return a;
}

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

std::vector<MethodAggregate> Report::aggregates() const {
  std::vector<MethodAggregate> out;
  for (const auto& [key, group] : group_rows(rows)) {
    out.push_back(aggregate_group(key, group));
  }
  return out;
}

std::map<std::pair<std::string, std::string>, std::vector<int>>
Report::histograms() const {
  std::map<Key, std::vector<int>> out;
  const double width =
      static_cast<double>(hist_max_len) / static_cast<double>(hist_bins);
  for (const auto& [key, group] : group_rows(rows)) {
    std::vector<int>& bins = out[key];
    bins.assign(hist_bins, 0);
    for (const ImageRow* r : group) {
      int b = static_cast<int>(static_cast<double>(r->length) / width);
      b = std::min(std::max(b, 0), hist_bins - 1);
      bins[b]++;
    }
  }
  return out;
}

std::map<std::pair<std::string, std::string>, double> Report::length_ratios()
    const {
  std::map<Key, double> out;
  const auto aggs = aggregates();
  for (const MethodAggregate& a : aggs) {
    if (a.method == "original") continue;
    const MethodAggregate* base = find("original", a.policy, aggs);
    if (base && base->mean_length > 0.0) {
      out[{a.method, a.policy}] = a.mean_length / base->mean_length;
    }
  }
  return out;
}

const MethodAggregate* Report::find(
    const std::string& method, const std::string& policy,
    const std::vector<MethodAggregate>& aggs) const {
  for (const MethodAggregate& a : aggs) {
    if (a.method == method && a.policy == policy) return &a;
  }
  return nullptr;
}

void write_rows_csv(const std::string& path, const Report& report) {
  std::ofstream f(path);
  if (!f) throw FormatError("report: cannot write " + path);
  f << "method,policy,image_id,seed,length,flops,proxy_energy,wall_seconds,"
       "linf,l2,stop_reason\n";
  for (const ImageRow& r : report.rows) {
    f << r.method << ',' << r.policy << ',' << r.image_id << ',' << r.seed
      << ',' << r.length << ',' << fmt_double(r.flops) << ','
      << fmt_double(r.proxy_energy) << ',' << fmt_double(r.wall_seconds) << ','
      << fmt_double(r.linf) << ',' << fmt_double(r.l2) << ',' << r.stop_reason
      << '\n';
  }
}

void write_histogram_txt(const std::string& path, const Report& report) {
  std::ofstream f(path);
  if (!f) throw FormatError("report: cannot write " + path);
  const double width = static_cast<double>(report.hist_max_len) /
                       static_cast<double>(report.hist_bins);
  f << "# method policy bin_lo bin_hi count\n";
  for (const auto& [key, bins] : report.histograms()) {
    for (int b = 0; b < static_cast<int>(bins.size()); ++b) {
      f << key.first << ' ' << key.second << ' '
        << static_cast<int>(b * width) << ' '
        << static_cast<int>((b + 1) * width) << ' ' << bins[b] << '\n';
    }
  }
}

std::string summary_json_string(const Report& report,
                                const std::string& version) {
  nlohmann::ordered_json j;
  j["version"] = version;
  j["seeds"] = report.seeds;
  j["config"] = report.config_echo;
  nlohmann::ordered_json methods = nlohmann::ordered_json::array();
  int max_images = 0;
  for (const MethodAggregate& a : report.aggregates()) {
    max_images = std::max(max_images, a.images);
    nlohmann::ordered_json ja;
    ja["method"] = a.method;
    ja["policy"] = a.policy;
    ja["images"] = a.images;
    ja["mean_length"] = a.mean_length;
    ja["std_length"] = a.std_length;
    ja["mean_flops"] = a.mean_flops;
    ja["mean_proxy_energy"] = a.mean_proxy_energy;
    ja["mean_linf"] = a.mean_linf;
    ja["mean_l2"] = a.mean_l2;
    methods.push_back(ja);
  }
  j["images"] = max_images;
  j["methods"] = methods;
  nlohmann::ordered_json ratios = nlohmann::ordered_json::object();
  for (const auto& [key, ratio] : report.length_ratios()) {
    ratios[key.first + "|" + key.second] = ratio;
  }
  j["length_ratio_vs_original"] = ratios;
  return j.dump(2) + "\n";
}

void write_summary_json(const std::string& path, const Report& report,
                        const std::string& version) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw FormatError("report: cannot write " + path);
  f << summary_json_string(report, version);
}

bool aggregates_match_rows_csv(const std::string& csv_path,
                               const Report& report, double tol) {
  std::ifstream f(csv_path);
  if (!f) throw FormatError("report: cannot read " + csv_path);
  std::string line;
  std::getline(f, line);  // header
  std::vector<ImageRow> parsed;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    ImageRow r;
    std::istringstream ss(line);
    std::string field;
    auto next = [&]() {
      if (!std::getline(ss, field, ',')) {
        throw FormatError("report: short CSV row");
      }
      return field;
    };
    r.method = next();
    r.policy = next();
    r.image_id = std::stoi(next());
    r.seed = std::stoull(next());
    r.length = std::stoi(next());
    r.flops = std::stod(next());
    r.proxy_energy = std::stod(next());
    r.wall_seconds = std::stod(next());
    r.linf = std::stod(next());
    r.l2 = std::stod(next());
    r.stop_reason = next();
    parsed.push_back(std::move(r));
  }
  Report reparsed;
  reparsed.rows = std::move(parsed);
  reparsed.hist_max_len = report.hist_max_len;
  reparsed.hist_bins = report.hist_bins;

  const auto a = report.aggregates();
  const auto b = reparsed.aggregates();
  if (a.size() != b.size()) return false;
  for (size_t i = 0; i < a.size(); ++i) {
    if (a[i].method != b[i].method || a[i].policy != b[i].policy ||
        a[i].images != b[i].images) {
      return false;
    }
    const double diffs[] = {
        std::abs(a[i].mean_length - b[i].mean_length),
        std::abs(a[i].std_length - b[i].std_length),
        std::abs(a[i].mean_flops - b[i].mean_flops),
        std::abs(a[i].mean_proxy_energy - b[i].mean_proxy_energy),
        std::abs(a[i].mean_wall_seconds - b[i].mean_wall_seconds),
        std::abs(a[i].mean_linf - b[i].mean_linf),
        std::abs(a[i].mean_l2 - b[i].mean_l2)};
    for (double d : diffs) {
      if (!(d <= tol)) return false;
    }
  }
  return true;
}

}  // namespace verbose
