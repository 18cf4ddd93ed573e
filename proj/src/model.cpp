#include "sbtm/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace sbtm {

Eigen::VectorXd state_from_transitions(const TransitionMatrices& pi,
                                       const CellLayout& layout) {
  Eigen::VectorXd psi(layout.num_transition_entries());
  const int nb = layout.num_blocks();
  for (int idx = 0; idx < nb; ++idx) {
    auto [a, b] = layout.block_at(idx);
    psi[idx] = logit(pi.pi0(a - 1, b - 1));
    psi[nb + idx] = logit(pi.pi1(a - 1, b - 1));
  }
  return psi;
}

TransitionMatrices transitions_from_state(const Eigen::VectorXd& psi,
                                          const CellLayout& layout) {
  const int k = layout.k();
  const int nb = layout.num_blocks();
  TransitionMatrices pi{Eigen::MatrixXd(k, k), Eigen::MatrixXd(k, k)};
  for (int idx = 0; idx < nb; ++idx) {
    auto [a, b] = layout.block_at(idx);
    pi.pi0(a - 1, b - 1) = logistic(psi[idx]);
    pi.pi1(a - 1, b - 1) = logistic(psi[nb + idx]);
    if (!layout.directed()) {
      pi.pi0(b - 1, a - 1) = pi.pi0(a - 1, b - 1);
      pi.pi1(b - 1, a - 1) = pi.pi1(a - 1, b - 1);
    }
  }
  return pi;
}

Eigen::VectorXd clamp_state(Eigen::VectorXd psi) {
  for (int i = 0; i < psi.size(); ++i)
    psi[i] = std::clamp(psi[i], -kPsiClamp, kPsiClamp);
  return psi;
}

StateDynamics StateDynamics::random_walk(int dim, double gamma_diag,
                                         double gamma_offdiag,
                                         const Eigen::VectorXd& mu1,
                                         double gamma1_diag) {
  StateDynamics d;
  d.F = Eigen::MatrixXd::Identity(dim, dim);
  d.Gamma = Eigen::MatrixXd::Constant(dim, dim, gamma_offdiag);
  d.Gamma.diagonal().setConstant(gamma_diag);
  d.mu1 = mu1;
  d.Gamma1 = Eigen::MatrixXd::Identity(dim, dim) * gamma1_diag;
  return d;
}

BlockMatrix theta_step(const BlockMatrix& theta_prev,
                       const TransitionMatrices& pi) {
  return pi.pi0.cwiseProduct(Eigen::MatrixXd::Ones(theta_prev.rows(),
                                                   theta_prev.cols()) -
                             theta_prev) +
         pi.pi1.cwiseProduct(theta_prev);
}

namespace {

struct Bounds {
  double lo, hi;
};

// alpha / beta of the scaling derivation for previous-class marginal th_p,
// current-step target th_t, and new-edge probability p0.
Bounds xi0_bounds(double th_p, double th_t, double p0) {
  double denom = p0 * std::max(1.0 - th_p, kPiFloor);
  Bounds b;
  b.lo = std::max(0.0, (th_t - th_p) / denom);
  b.hi = std::min(1.0 / p0, th_t / denom);
  return b;
}

}  // namespace

XiPair scaling_pair(int a_prev, int b_prev, int a, int b,
                    const BlockMatrix& theta_prev, const BlockMatrix& theta_cur,
                    const TransitionMatrices& pi) {
  if (a_prev == a && b_prev == b) return {1.0, 1.0};

  const double p0 = std::max(pi.pi0(a - 1, b - 1), kPiFloor);
  const double p1 = pi.pi1(a - 1, b - 1);
  const double th_t = theta_cur(a - 1, b - 1);

  if (a_prev == 0 || b_prev == 0) {
    // node absent at t-1: w^{t-1} = 0 almost surely, so the u=0 branch must
    // carry the whole marginal and the u=1 branch is unused
    return {th_t / p0, 1.0};
  }

  const double th_p = theta_prev(a_prev - 1, b_prev - 1);
  const double th_c = theta_prev(a - 1, b - 1);

  Bounds same = xi0_bounds(th_c, th_t, p0);
  Bounds gen = xi0_bounds(th_p, th_t, p0);
  // inverse of gamma(a',b'); the same-class interval has hi >= 1 >= lo so
  // the ratio lies in [0,1] and collapses to 0 when lo reaches 1
  double width = same.hi - same.lo;
  double inv_gamma = width > kPiFloor ? (1.0 - same.lo) / width : 0.0;

  XiPair xi;
  xi.xi0 = gen.lo + (gen.hi - gen.lo) * inv_gamma;
  if (th_p < kPiFloor || p1 < kPiFloor) {
    // the u=1 cell is almost surely empty
    xi.xi1 = 1.0;
  } else {
    xi.xi1 = (th_t - xi.xi0 * p0 * (1.0 - th_p)) / (p1 * th_p);
    // analytic range is [0, 1/p1]; trim float rounding at the endpoints
    xi.xi1 = std::clamp(xi.xi1, 0.0, 1.0 / p1);
  }
  return xi;
}

ScalingFactors::ScalingFactors(int k)
    : k_(k), xi_((k + 1) * (k + 1) * k * k) {}

ScalingFactors scaling_matrix(const BlockMatrix& theta_prev,
                              const TransitionMatrices& pi) {
  const int k = static_cast<int>(theta_prev.rows());
  BlockMatrix theta_cur = theta_step(theta_prev, pi);
  ScalingFactors xi(k);
  for (int ap = 0; ap <= k; ++ap)
    for (int bp = 0; bp <= k; ++bp)
      for (int a = 1; a <= k; ++a)
        for (int b = 1; b <= k; ++b)
          xi.at(ap, bp, a, b) =
              scaling_pair(ap, bp, a, b, theta_prev, theta_cur, pi);
  return xi;
}

Adjacency sample_transition(const Adjacency& w_prev,
                            const Eigen::VectorXi& classes_prev,
                            const Eigen::VectorXi& classes_cur,
                            const TransitionMatrices& pi,
                            const ScalingFactors& scaling, bool directed,
                            Rng& rng) {
  const int n = static_cast<int>(classes_cur.size());
  Adjacency w = Adjacency::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    if (classes_cur[i] == 0) continue;
    const int j0 = directed ? 0 : i + 1;
    for (int j = j0; j < n; ++j) {
      if (j == i || classes_cur[j] == 0) continue;
      const int a = classes_cur[i], b = classes_cur[j];
      const int u = w_prev(i, j) ? 1 : 0;
      const XiPair& xi = scaling.at(classes_prev[i], classes_prev[j], a, b);
      double base = u ? pi.pi1(a - 1, b - 1) : pi.pi0(a - 1, b - 1);
      double p = (u ? xi.xi1 : xi.xi0) * base;
      if (p < -1e-12 || p > 1.0 + 1e-12)
        throw NumericError("scaled transition probability outside [0,1]");
      if (rng.bernoulli(std::clamp(p, 0.0, 1.0))) {
        w(i, j) = 1;
        if (!directed) w(j, i) = 1;
      }
    }
  }
  return w;
}

SimulationConfig SimulationConfig::benchmark(std::uint64_t seed) {
  SimulationConfig cfg;
  cfg.nodes = 128;
  cfg.k = 4;
  cfg.steps = 10;
  cfg.directed = false;
  cfg.churn_rate = 0.1;
  cfg.seed = seed;
  cfg.theta1 = Eigen::MatrixXd::Constant(4, 4, 0.0834);
  cfg.theta1.diagonal().setConstant(0.2580);

  CellLayout layout(4, false);
  TransitionMatrices pi1;
  pi1.pi0 = Eigen::MatrixXd::Constant(4, 4, 0.05);
  pi1.pi0.diagonal().setConstant(0.10);
  pi1.pi1 = Eigen::MatrixXd::Constant(4, 4, 0.45);
  pi1.pi1.diagonal().setConstant(0.70);
  Eigen::VectorXd mu1 = state_from_transitions(pi1, layout);

  cfg.dynamics = StateDynamics::random_walk(layout.num_transition_entries(),
                                            0.01, 0.0025, mu1, 0.04);
  return cfg;
}

namespace {

// Draw from N(mean, cov) via the (pivoted) Cholesky factor; tolerates
// positive semidefinite covariances.
Eigen::VectorXd sample_gaussian(const Eigen::VectorXd& mean,
                                const Eigen::MatrixXd& cov, Rng& rng) {
  const int d = static_cast<int>(mean.size());
  Eigen::VectorXd z(d);
  for (int i = 0; i < d; ++i) z[i] = rng.normal();
  if (cov.isZero(0.0)) return mean;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(cov);
  Eigen::VectorXd scale = ldlt.vectorD().cwiseMax(0.0).cwiseSqrt();
  Eigen::MatrixXd l = ldlt.matrixL();
  return mean + ldlt.transpositionsP().transpose() *
                    (l * scale.cwiseProduct(z)).eval();
}

}  // namespace

SimulationResult simulate(const SimulationConfig& config) {
  if (config.churn_rate < 0 || config.churn_rate > 1)
    throw ConfigError("churn_rate must be in [0,1]");
  if (config.nodes < config.k)
    throw ConfigError("need at least k nodes");
  if (config.steps < 1) throw ConfigError("steps must be >= 1");

  const int n = config.nodes;
  const int k = config.k;
  const int T = config.steps;
  CellLayout layout(k, config.directed);
  Rng rng(config.seed);

  SimulationResult res;
  res.classes.k = k;
  res.classes.labels.assign(T, Eigen::VectorXi::Zero(n));
  res.states.resize(T);
  res.thetas.resize(T);
  res.pis.resize(T);
  res.scaling_summaries.resize(T);

  // initial classes: contiguous equal splits, remainder to the last class
  for (int i = 0; i < n; ++i)
    res.classes.labels[0][i] = std::min(i / std::max(1, n / k), k - 1) + 1;

  res.states[0] = clamp_state(
      sample_gaussian(config.dynamics.mu1, config.dynamics.Gamma1, rng));
  res.thetas[0] = config.theta1;

  res.net.directed = config.directed;
  res.net.node_ids.resize(n);
  for (int i = 0; i < n; ++i) res.net.node_ids[i] = "n" + std::to_string(i);
  res.net.activity.assign(T, std::vector<std::uint8_t>(n, 1));
  res.net.snapshots.resize(T);
  res.net.snapshots[0] =
      sample_sbm(res.classes.labels[0], config.theta1, config.directed, rng);

  for (int t = 1; t < T; ++t) {
    // class churn: a churn_rate fraction moves to a uniformly random other class
    res.classes.labels[t] = res.classes.labels[t - 1];
    int n_churn = static_cast<int>(std::lround(config.churn_rate * n));
    if (n_churn > 0 && k > 1) {
      std::vector<int> order(n);
      std::iota(order.begin(), order.end(), 0);
      for (int i = n - 1; i > 0; --i)
        std::swap(order[i], order[rng.uniform_int(i + 1)]);
      for (int c = 0; c < n_churn; ++c) {
        int v = order[c];
        int shift = 1 + static_cast<int>(rng.uniform_int(k - 1));
        res.classes.labels[t][v] =
            (res.classes.labels[t][v] - 1 + shift) % k + 1;
      }
    }

    res.states[t] = clamp_state(
        config.dynamics.F * res.states[t - 1] +
        sample_gaussian(Eigen::VectorXd::Zero(res.states[t - 1].size()),
                        config.dynamics.Gamma, rng));
    res.pis[t] = transitions_from_state(res.states[t], layout);
    res.thetas[t] = theta_step(res.thetas[t - 1], res.pis[t]);

    ScalingFactors xi = scaling_matrix(res.thetas[t - 1], res.pis[t]);
    res.net.snapshots[t] = sample_transition(
        res.net.snapshots[t - 1], res.classes.labels[t - 1],
        res.classes.labels[t], res.pis[t], xi, config.directed, rng);

    auto& summary = res.scaling_summaries[t];
    for (int i = 0; i < n; ++i) {
      const int j0 = config.directed ? 0 : i + 1;
      for (int j = j0; j < n; ++j) {
        if (j == i) continue;
        const XiPair& p =
            xi.at(res.classes.labels[t - 1][i], res.classes.labels[t - 1][j],
                  res.classes.labels[t][i], res.classes.labels[t][j]);
        summary.min_xi0 = std::min(summary.min_xi0, p.xi0);
        summary.max_xi0 = std::max(summary.max_xi0, p.xi0);
        summary.min_xi1 = std::min(summary.min_xi1, p.xi1);
        summary.max_xi1 = std::max(summary.max_xi1, p.xi1);
        if (std::abs(p.xi0 - 1.0) > 1e-12 || std::abs(p.xi1 - 1.0) > 1e-12)
          ++summary.off_unity;
      }
    }
  }
  return res;
}

}  // namespace sbtm
