#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace verbose {

struct ImageRow {
  std::string method;
  std::string policy;
  int image_id = 0;
  uint64_t seed = 0;
  int length = 0;
  double flops = 0.0;
  double proxy_energy = 0.0;
  double wall_seconds = 0.0;
  double linf = 0.0;
  double l2 = 0.0;
  std::string stop_reason;
};

struct MethodAggregate {
  std::string method;
  std::string policy;
  int images = 0;
  double mean_length = 0.0;
  double std_length = 0.0;
  double mean_flops = 0.0;
  double mean_proxy_energy = 0.0;
  double mean_wall_seconds = 0.0;
  double mean_linf = 0.0;
  double mean_l2 = 0.0;
};

// Everything an experiment emits. Aggregates and histograms are always
// derived from the rows, so the emitted numbers are recomputable from the
// per-image CSV.
struct Report {
  std::vector<ImageRow> rows;
  std::string config_echo;  // the raw config text the run was started with
  std::vector<uint64_t> seeds;
  int hist_max_len = 256;
  int hist_bins = 16;

  std::vector<MethodAggregate> aggregates() const;
  // (method, policy) -> bin counts over [0, hist_max_len]
  std::map<std::pair<std::string, std::string>, std::vector<int>> histograms()
      const;
  // mean-length ratios vs the "original" rows of the same policy
  std::map<std::pair<std::string, std::string>, double> length_ratios() const;

  const MethodAggregate* find(const std::string& method,
                              const std::string& policy,
                              const std::vector<MethodAggregate>& aggs) const;
};

void write_rows_csv(const std::string& path, const Report& report);
void write_histogram_txt(const std::string& path, const Report& report);

// Deliberately excludes wall-clock so two identical runs emit identical
// bytes; timing lives in the rows CSV.
void write_summary_json(const std::string& path, const Report& report,
                        const std::string& version);
std::string summary_json_string(const Report& report,
                                const std::string& version);

// Re-reads a rows CSV and checks every aggregate against recomputation.
bool aggregates_match_rows_csv(const std::string& csv_path,
                               const Report& report, double tol = 1e-9);

}  // namespace verbose
