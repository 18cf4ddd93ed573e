#include "sbtm/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <unordered_map>

#include "sbtm/rng.hpp"

namespace sbtm {

double adjusted_rand_index(const std::vector<int>& p1,
                           const std::vector<int>& p2) {
  if (p1.size() != p2.size())
    throw DataError("adjusted_rand_index: partitions cover different sets");
  const std::size_t n = p1.size();
  if (n == 0) throw DataError("adjusted_rand_index: empty partitions");

  auto compress = [](const std::vector<int>& p) {
    std::unordered_map<int, int> remap;
    std::vector<int> out(p.size());
    for (std::size_t i = 0; i < p.size(); ++i)
      out[i] = remap.emplace(p[i], static_cast<int>(remap.size())).first->second;
    return std::pair{out, static_cast<int>(remap.size())};
  };
  auto [a, ka] = compress(p1);
  auto [b, kb] = compress(p2);

  std::vector<long long> row(ka, 0), col(kb, 0);
  std::vector<std::vector<long long>> cont(ka, std::vector<long long>(kb, 0));
  for (std::size_t i = 0; i < n; ++i) {
    ++cont[a[i]][b[i]];
    ++row[a[i]];
    ++col[b[i]];
  }

  auto choose2 = [](long long x) { return x * (x - 1) / 2.0; };
  double index = 0, row_sum = 0, col_sum = 0;
  for (int i = 0; i < ka; ++i)
    for (int j = 0; j < kb; ++j) index += choose2(cont[i][j]);
  for (int i = 0; i < ka; ++i) row_sum += choose2(row[i]);
  for (int j = 0; j < kb; ++j) col_sum += choose2(col[j]);

  double total = choose2(static_cast<long long>(n));
  double expected = row_sum * col_sum / total;
  double max_index = (row_sum + col_sum) / 2.0;
  if (std::abs(max_index - expected) < 1e-15)
    return 1.0;  // both partitions trivial and identical in structure
  return (index - expected) / (max_index - expected);
}

AriReport ari_report(const std::vector<std::vector<double>>& per_step_values,
                     int bootstrap_resamples, std::uint64_t seed) {
  AriReport rep;
  rep.per_run = per_step_values;
  Rng rng(seed);
  for (const auto& runs : per_step_values) {
    const int r = static_cast<int>(runs.size());
    if (r == 0) {
      rep.mean.push_back(0);
      rep.lo.push_back(0);
      rep.hi.push_back(0);
      continue;
    }
    double mean = 0;
    for (double v : runs) mean += v;
    mean /= r;
    rep.mean.push_back(mean);

    std::vector<double> boots(bootstrap_resamples);
    for (int s = 0; s < bootstrap_resamples; ++s) {
      double acc = 0;
      for (int i = 0; i < r; ++i) acc += runs[rng.uniform_int(r)];
      boots[s] = acc / r;
    }
    std::sort(boots.begin(), boots.end());
    auto pct = [&](double p) {
      double pos = p * (bootstrap_resamples - 1);
      int lo = static_cast<int>(pos);
      int hi = std::min(lo + 1, bootstrap_resamples - 1);
      return boots[lo] + (pos - lo) * (boots[hi] - boots[lo]);
    };
    rep.lo.push_back(pct(0.025));
    rep.hi.push_back(pct(0.975));
  }
  return rep;
}

void AriReport::write_csv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  out << "step,ari,lo,hi\n";
  for (std::size_t t = 0; t < mean.size(); ++t)
    out << (t + 1) << ',' << mean[t] << ',' << lo[t] << ',' << hi[t] << '\n';
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// Acklam's rational approximation polished by one Halley step.
double normal_quantile(double p) {
  if (p <= 0.0 || p >= 1.0)
    throw NumericError("normal_quantile: p must be in (0,1)");
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425;
  double x;
  if (p < plow) {
    double q = std::sqrt(-2 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
  } else if (p <= 1 - plow) {
    double q = p - 0.5, r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) *
        q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1);
  } else {
    double q = std::sqrt(-2 * std::log(1 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
  }
  double e = normal_cdf(x) - p;
  double u = e * std::sqrt(2 * M_PI) * std::exp(x * x / 2);
  return x - u / (1 + x * u / 2);
}

namespace {

// Asymptotic Kolmogorov distribution with the usual finite-n adjustment.
double ks_pvalue(double d, std::size_t n) {
  double sn = std::sqrt(static_cast<double>(n));
  double lambda = (sn + 0.12 + 0.11 / sn) * d;
  double sum = 0;
  for (int j = 1; j <= 100; ++j) {
    double term = 2.0 * std::pow(-1.0, j - 1) *
                  std::exp(-2.0 * j * j * lambda * lambda);
    sum += term;
    if (std::abs(term) < 1e-12) break;
  }
  return std::clamp(sum, 0.0, 1.0);
}

}  // namespace

NormalityReport qq_standardized(const std::vector<double>& values,
                                const std::vector<double>& means,
                                const std::vector<double>& sds) {
  if (values.size() != means.size() || values.size() != sds.size())
    throw DataError("qq_standardized: input lengths differ");
  if (values.empty()) throw DataError("qq_standardized: no values");

  NormalityReport rep;
  rep.standardized.resize(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (sds[i] <= 0)
      throw DataError("qq_standardized: standard deviations must be > 0");
    rep.standardized[i] = (values[i] - means[i]) / sds[i];
  }
  std::sort(rep.standardized.begin(), rep.standardized.end());

  const std::size_t n = rep.standardized.size();
  rep.degenerate =
      std::abs(rep.standardized.back() - rep.standardized.front()) < 1e-12;

  rep.theoretical.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    rep.theoretical[i] = normal_quantile((i + 0.5) / n);

  double d = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double cdf = normal_cdf(rep.standardized[i]);
    d = std::max(d, std::abs(cdf - static_cast<double>(i) / n));
    d = std::max(d, std::abs(static_cast<double>(i + 1) / n - cdf));
  }
  rep.ks_stat = d;
  rep.ks_pvalue = rep.degenerate ? 0.0 : ks_pvalue(d, n);
  return rep;
}

void NormalityReport::write_csv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  out << "sample_q,normal_q\n";
  for (std::size_t i = 0; i < standardized.size(); ++i)
    out << standardized[i] << ',' << theoretical[i] << '\n';
}

DurationHistogram duration_report(const std::vector<DynamicNetwork>& nets) {
  DurationHistogram hist;
  for (const auto& net : nets)
    for (int d : edge_durations(net)) {
      ++hist.counts[d];
      ++hist.total;
    }
  return hist;
}

double DurationHistogram::frequency(int d) const {
  auto it = counts.find(d);
  if (it == counts.end() || total == 0) return 0.0;
  return static_cast<double>(it->second) / static_cast<double>(total);
}

double DurationHistogram::fraction_at_least(int d) const {
  if (total == 0) return 0.0;
  long long acc = 0;
  for (const auto& [dur, cnt] : counts)
    if (dur >= d) acc += cnt;
  return static_cast<double>(acc) / static_cast<double>(total);
}

void DurationHistogram::write_csv(const std::string& path,
                                  bool normalized) const {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  out << (normalized ? "duration,frequency\n" : "duration,count\n");
  for (const auto& [dur, cnt] : counts) {
    if (normalized)
      out << dur << ',' << frequency(dur) << '\n';
    else
      out << dur << ',' << cnt << '\n';
  }
}

}  // namespace sbtm
