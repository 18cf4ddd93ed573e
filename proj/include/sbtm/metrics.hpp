#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "sbtm/dynamic_network.hpp"

namespace sbtm {

// Hubert-Arabie adjusted Rand index between two partitions of the same
// element set. Labels are arbitrary integers; permutation invariant.
double adjusted_rand_index(const std::vector<int>& p1,
                           const std::vector<int>& p2);

// Per-step partition agreement across runs, with a bootstrap band on the
// mean (percentile method).
struct AriReport {
  std::vector<std::vector<double>> per_run;  // [step][run]
  std::vector<double> mean, lo, hi;          // per step

  void write_csv(const std::string& path) const;
};

AriReport ari_report(const std::vector<std::vector<double>>& per_step_values,
                     int bootstrap_resamples = 1000, std::uint64_t seed = 1);

// Standard-normal cumulative distribution and its inverse.
double normal_cdf(double x);
double normal_quantile(double p);

// Kolmogorov-Smirnov diagnostics of standardized values against N(0,1).
struct NormalityReport {
  std::vector<double> standardized;  // sorted
  std::vector<double> theoretical;   // normal quantiles at (i-0.5)/n
  double ks_stat = 0.0;
  double ks_pvalue = 1.0;
  bool degenerate = false;  // constant input

  void write_csv(const std::string& path) const;
};

NormalityReport qq_standardized(const std::vector<double>& values,
                                const std::vector<double>& means,
                                const std::vector<double>& sds);

// Pooled histogram of edge durations over one or many networks.
struct DurationHistogram {
  std::map<int, long long> counts;
  long long total = 0;

  double frequency(int d) const;
  // fraction of maximal runs lasting >= d steps
  double fraction_at_least(int d) const;
  void write_csv(const std::string& path, bool normalized) const;
};

DurationHistogram duration_report(const std::vector<DynamicNetwork>& nets);

}  // namespace sbtm
