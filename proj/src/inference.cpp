#include "sbtm/inference.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>

#include "json.hpp"

namespace sbtm {

using nlohmann::json;

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::sbtm: return "sbtm";
    case ModelKind::hmsbm: return "hmsbm";
    case ModelKind::ssbm: return "static";
  }
  return "?";
}

ModelKind model_kind_from_string(const std::string& name) {
  if (name == "sbtm") return ModelKind::sbtm;
  if (name == "hmsbm") return ModelKind::hmsbm;
  if (name == "static" || name == "ssbm") return ModelKind::ssbm;
  throw ConfigError("unknown model '" + name + "' (sbtm|hmsbm|static)");
}

namespace {

constexpr double kVarFloor = 1e-10;
constexpr double kScoreTol = 1e-9;

Adjacency submatrix(const Adjacency& w, const std::vector<int>& idx) {
  const int m = static_cast<int>(idx.size());
  Adjacency out(m, m);
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b) out(a, b) = w(idx[a], idx[b]);
  return out;
}

BlockMatrix probs_from_state(const Eigen::VectorXd& psi,
                             const CellLayout& layout) {
  const int k = layout.k();
  BlockMatrix theta(k, k);
  for (int idx = 0; idx < layout.num_blocks(); ++idx) {
    auto [a, b] = layout.block_at(idx);
    theta(a - 1, b - 1) = logistic(psi[idx]);
    if (!layout.directed()) theta(b - 1, a - 1) = theta(a - 1, b - 1);
  }
  return theta;
}

Eigen::VectorXd state_from_probs(const BlockMatrix& theta,
                                 const CellLayout& layout) {
  Eigen::VectorXd psi(layout.num_blocks());
  for (int idx = 0; idx < layout.num_blocks(); ++idx) {
    auto [a, b] = layout.block_at(idx);
    psi[idx] = logit(theta(a - 1, b - 1));
  }
  return psi;
}

// Candidate assignments are scored thousands of times per step, so block
// cells are kept as aggregate counts per (prev classes, current block, u)
// and adjusted incrementally when one node flips class. The aggregation is
// exact: xi depends on the class four-tuple only.
class SbtmEngine {
 public:
  SbtmEngine(const Adjacency& w_prev, const Adjacency& w_t,
             const Eigen::VectorXi& prev, Eigen::VectorXi cur,
             const CellLayout& layout, const ScalingFactors& xi,
             const TransitionMatrices& pi_hat)
      : w_prev_(w_prev),
        w_t_(w_t),
        prev_(prev),
        cur_(std::move(cur)),
        layout_(layout),
        xi_(xi),
        pi_hat_(pi_hat),
        k_(layout.k()),
        nb_(layout.num_blocks()),
        n_((k_ + 1) * (k_ + 1) * nb_ * 2, 0),
        m_(n_.size(), 0) {
    const int n = static_cast<int>(cur_.size());
    for (int i = 0; i < n; ++i) {
      if (cur_[i] == 0) continue;
      const int j0 = layout_.directed() ? 0 : i + 1;
      for (int j = j0; j < n; ++j) {
        if (j == i || cur_[j] == 0) continue;
        add_pair(i, j, +1);
      }
    }
  }

  int label(int v) const { return cur_[v]; }
  const Eigen::VectorXi& labels() const { return cur_; }

  void flip(int v, int y) {
    if (cur_[v] == y) return;
    touch_node(v, -1);
    cur_[v] = y;
    touch_node(v, +1);
  }

  Observation observation() const {
    Observation obs;
    obs.y = Eigen::VectorXd::Zero(2 * nb_);
    obs.noise_var = Eigen::VectorXd::Constant(2 * nb_, 1.0);
    obs.mask.assign(2 * nb_, 1);
    for (int idx = 0; idx < nb_; ++idx) {
      auto [a, b] = layout_.block_at(idx);
      for (int u = 0; u < 2; ++u) {
        long long n_cell = 0;
        double scaled_sum = 0, inv_xi_sum = 0;
        for (int ap = 0; ap <= k_; ++ap)
          for (int bp = 0; bp <= k_; ++bp) {
            long long cnt = n_[key(ap, bp, idx, u)];
            if (cnt == 0) continue;
            const XiPair& xp = xi_.at(ap, bp, a, b);
            double x = u ? xp.xi1 : xp.xi0;
            n_cell += cnt;
            scaled_sum += m_[key(ap, bp, idx, u)] / x;
            inv_xi_sum += cnt / x;
          }
        if (n_cell == 0) continue;
        int e = u * nb_ + idx;
        double p = u ? pi_hat_.pi1(a - 1, b - 1) : pi_hat_.pi0(a - 1, b - 1);
        double nn = static_cast<double>(n_cell);
        obs.y[e] = scaled_sum / nn;
        obs.noise_var[e] =
            std::max(kVarFloor, (p * inv_xi_sum - nn * p * p) / (nn * nn));
        obs.mask[e] = 0;
      }
    }
    return obs;
  }

 private:
  int key(int ap, int bp, int block, int u) const {
    return ((ap * (k_ + 1) + bp) * nb_ + block) * 2 + u;
  }

  // Undirected pairs are oriented so the current classes are canonical
  // (a <= b); the previous classes ride along with the same orientation so
  // stable pairs stay on the xi = 1 diagonal of the scaling table.
  void add_pair(int i, int j, int sign) {
    int a = cur_[i], b = cur_[j];
    int ap = prev_[i], bp = prev_[j];
    if (!layout_.directed() && a > b) {
      std::swap(a, b);
      std::swap(ap, bp);
    }
    const int u = w_prev_(i, j) ? 1 : 0;
    const int kk = key(ap, bp, layout_.block_index(a, b), u);
    n_[kk] += sign;
    m_[kk] += sign * static_cast<long long>(w_t_(i, j));
  }

  void touch_node(int v, int sign) {
    const int n = static_cast<int>(cur_.size());
    for (int j = 0; j < n; ++j) {
      if (j == v || cur_[j] == 0) continue;
      if (layout_.directed()) {
        add_pair(v, j, sign);
        add_pair(j, v, sign);
      } else {
        add_pair(std::min(v, j), std::max(v, j), sign);
      }
    }
  }

  const Adjacency& w_prev_;
  const Adjacency& w_t_;
  const Eigen::VectorXi& prev_;
  Eigen::VectorXi cur_;
  const CellLayout& layout_;
  const ScalingFactors& xi_;
  const TransitionMatrices& pi_hat_;
  int k_, nb_;
  std::vector<long long> n_, m_;
};

// Hidden-Markov counterpart: per-block edge counts, CLT noise.
class HmEngine {
 public:
  HmEngine(const Adjacency& w_t, Eigen::VectorXi cur, const CellLayout& layout,
           const BlockMatrix& theta_hat)
      : w_t_(w_t),
        cur_(std::move(cur)),
        layout_(layout),
        theta_hat_(theta_hat),
        k_(layout.k()),
        nb_(layout.num_blocks()),
        sizes_(k_ + 1, 0),
        m_(nb_, 0) {
    const int n = static_cast<int>(cur_.size());
    for (int i = 0; i < n; ++i) ++sizes_[cur_[i]];
    for (int i = 0; i < n; ++i) {
      if (cur_[i] == 0) continue;
      const int j0 = layout_.directed() ? 0 : i + 1;
      for (int j = j0; j < n; ++j) {
        if (j == i || cur_[j] == 0 || !w_t_(i, j)) continue;
        m_[layout_.block_index(cur_[i], cur_[j])] += 1;
      }
    }
  }

  int label(int v) const { return cur_[v]; }
  const Eigen::VectorXi& labels() const { return cur_; }

  void flip(int v, int y) {
    const int x = cur_[v];
    if (x == y) return;
    const int n = static_cast<int>(cur_.size());
    for (int j = 0; j < n; ++j) {
      if (j == v || cur_[j] == 0) continue;
      if (w_t_(v, j)) {
        m_[layout_.block_index(x, cur_[j])] -= 1;
        m_[layout_.block_index(y, cur_[j])] += 1;
      }
      if (layout_.directed() && w_t_(j, v)) {
        m_[layout_.block_index(cur_[j], x)] -= 1;
        m_[layout_.block_index(cur_[j], y)] += 1;
      }
    }
    --sizes_[x];
    ++sizes_[y];
    cur_[v] = y;
  }

  Observation observation() const {
    Observation obs;
    obs.y = Eigen::VectorXd::Zero(nb_);
    obs.noise_var = Eigen::VectorXd::Constant(nb_, 1.0);
    obs.mask.assign(nb_, 1);
    for (int idx = 0; idx < nb_; ++idx) {
      auto [a, b] = layout_.block_at(idx);
      double n_cell;
      if (layout_.directed())
        n_cell = static_cast<double>(sizes_[a]) * sizes_[b] -
                 (a == b ? sizes_[a] : 0);
      else
        n_cell = a == b ? sizes_[a] * (sizes_[a] - 1.0) / 2.0
                        : static_cast<double>(sizes_[a]) * sizes_[b];
      if (n_cell <= 0) continue;
      double p = theta_hat_(a - 1, b - 1);
      obs.y[idx] = m_[idx] / n_cell;
      obs.noise_var[idx] = std::max(kVarFloor, p * (1.0 - p) / n_cell);
      obs.mask[idx] = 0;
    }
    return obs;
  }

 private:
  const Adjacency& w_t_;
  Eigen::VectorXi cur_;
  const CellLayout& layout_;
  const BlockMatrix& theta_hat_;
  int k_, nb_;
  std::vector<int> sizes_;
  std::vector<long long> m_;
};

// First-improvement hill climb over single-node relabelings; the engine
// carries counts incrementally, scores come from the innovation density.
template <class Engine>
std::vector<double> hill_climb(Engine& engine, const GaussianBelief& predicted,
                               const std::vector<int>& active_nodes, int k,
                               int max_sweeps, Rng& rng) {
  std::vector<double> trace;
  double cur = innovation_loglik(predicted, engine.observation());
  trace.push_back(cur);

  std::vector<int> order = active_nodes;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    for (int i = static_cast<int>(order.size()) - 1; i > 0; --i)
      std::swap(order[i], order[rng.uniform_int(i + 1)]);
    bool improved = false;
    for (int v : order) {
      const int x = engine.label(v);
      for (int y = 1; y <= k; ++y) {
        if (y == x) continue;
        engine.flip(v, y);
        double s = innovation_loglik(predicted, engine.observation());
        if (s > cur + kScoreTol) {
          cur = s;
          trace.push_back(s);
          improved = true;
          break;
        }
        engine.flip(v, x);
      }
    }
    if (!improved) break;
  }
  return trace;
}

// Seed nodes entering at t with the class maximizing their individual edge
// likelihood under the predicted marginals; labels == 0 marks still-unseeded
// nodes, which are skipped until assigned.
void seed_new_nodes(Eigen::VectorXi& cand, const std::vector<int>& fresh,
                    const Adjacency& w_t, const BlockMatrix& theta,
                    bool directed, int k) {
  for (int v : fresh) {
    const int n = static_cast<int>(cand.size());
    double best = -std::numeric_limits<double>::infinity();
    int best_class = 1;
    for (int a = 1; a <= k; ++a) {
      double ll = 0;
      for (int j = 0; j < n; ++j) {
        if (j == v || cand[j] == 0) continue;
        double p = std::clamp(theta(a - 1, cand[j] - 1), 1e-12, 1.0 - 1e-12);
        ll += w_t(v, j) ? std::log(p) : std::log1p(-p);
        if (directed) {
          double q = std::clamp(theta(cand[j] - 1, a - 1), 1e-12, 1.0 - 1e-12);
          ll += w_t(j, v) ? std::log(q) : std::log1p(-q);
        }
      }
      if (ll > best) {
        best = ll;
        best_class = a;
      }
    }
    cand[v] = best_class;
  }
}

void warn_empty_classes(FitResult& res, const Eigen::VectorXi& labels, int k,
                        int t) {
  std::vector<int> sizes(k + 1, 0);
  for (int i = 0; i < labels.size(); ++i) ++sizes[labels[i]];
  for (int a = 1; a <= k; ++a)
    if (sizes[a] == 0)
      res.warnings.push_back("class " + std::to_string(a) +
                             " is empty at step " + std::to_string(t + 1) +
                             "; its cells are masked");
}

Eigen::MatrixXd build_gamma(const FitOptions& opts, int dim) {
  Eigen::MatrixXd gamma =
      Eigen::MatrixXd::Constant(dim, dim, opts.gamma_offdiag);
  if (opts.gamma_diag_vec.size() > 0) {
    if (opts.gamma_diag_vec.size() != dim)
      throw ConfigError("gamma_diag_vec dimension mismatch");
    gamma.diagonal() = opts.gamma_diag_vec;
  } else {
    gamma.diagonal().setConstant(opts.gamma_diag);
  }
  return gamma;
}

FitResult fit_dynamic(const DynamicNetwork& net, const FitOptions& opts,
                      ModelKind kind) {
  const auto t_start = std::chrono::steady_clock::now();
  const int T = net.num_steps();
  const int n = net.num_nodes();
  const int k = opts.k;
  if (T < 2) throw DataError("dynamic fit needs at least 2 steps");
  if (k < 1) throw ConfigError("k must be >= 1");

  const bool directed = net.directed;
  CellLayout layout(k, directed);
  const int nb = layout.num_blocks();
  const int dim = kind == ModelKind::sbtm ? 2 * nb : nb;

  Rng rng(opts.seed);
  FitResult res;
  res.model = kind;
  res.k = k;
  res.directed = directed;
  res.seed = opts.seed;
  res.node_ids = net.node_ids;
  res.options = opts;
  res.classes.k = k;
  res.classes.labels.assign(T, Eigen::VectorXi::Zero(n));
  res.beliefs.resize(T);
  res.pi.resize(T);
  res.theta.resize(T);
  res.score_trace.resize(T);

  const Eigen::MatrixXd F = Eigen::MatrixXd::Identity(dim, dim);
  const Eigen::MatrixXd Gamma = build_gamma(opts, dim);

  // t = 1: ML fit by spectral initialization + local search
  auto active0 = net.active_nodes(0);
  if (static_cast<int>(active0.size()) < k)
    throw DataError("fewer active nodes than classes at step 1");
  Adjacency w0 = submatrix(net.snapshots[0], active0);
  Eigen::VectorXi init0 = spectral_init(w0, k, rng);
  LocalSearchResult ml = static_local_search(w0, init0, k, directed, rng);
  for (std::size_t i = 0; i < active0.size(); ++i)
    res.classes.labels[0][active0[i]] = ml.labels[static_cast<int>(i)];
  res.theta[0] = ml.theta;
  res.score_trace[0] = ml.scores;
  warn_empty_classes(res, res.classes.labels[0], k, 0);

  GaussianBelief belief;
  if (kind == ModelKind::sbtm) {
    TransitionMatrices seed_pi{ml.theta, ml.theta};
    belief.mean = clamp_state(state_from_transitions(seed_pi, layout));
  } else {
    belief.mean = clamp_state(state_from_probs(ml.theta, layout));
  }
  belief.cov = Eigen::MatrixXd::Identity(dim, dim) * opts.init_cov;
  res.beliefs[0] = belief;

  for (int t = 1; t < T; ++t) {
    GaussianBelief predicted = ekf_predict(belief, F, Gamma);

    // carry the previous assignment; nodes entering at t get seeded below
    Eigen::VectorXi cand = Eigen::VectorXi::Zero(n);
    std::vector<int> fresh;
    std::vector<int> active;
    for (int i = 0; i < n; ++i) {
      if (!net.is_active(t, i)) continue;
      active.push_back(i);
      int prev_label = res.classes.labels[t - 1][i];
      if (prev_label > 0)
        cand[i] = prev_label;
      else
        fresh.push_back(i);
    }

    TransitionMatrices pi_hat;
    ScalingFactors xi(0);
    BlockMatrix theta_hat;
    if (kind == ModelKind::sbtm) {
      pi_hat = transitions_from_state(predicted.mean, layout);
      xi = scaling_matrix(res.theta[t - 1], pi_hat);
      theta_hat = theta_step(res.theta[t - 1], pi_hat);
    } else {
      theta_hat = probs_from_state(predicted.mean, layout);
    }
    seed_new_nodes(cand, fresh, net.snapshots[t], theta_hat, directed, k);

    Observation committed;
    if (kind == ModelKind::sbtm) {
      SbtmEngine engine(net.snapshots[t - 1], net.snapshots[t],
                        res.classes.labels[t - 1], cand, layout, xi, pi_hat);
      res.score_trace[t] = hill_climb(engine, predicted, active, k,
                                      opts.max_sweeps, rng);
      cand = engine.labels();
      committed = engine.observation();
    } else {
      HmEngine engine(net.snapshots[t], cand, layout, theta_hat);
      res.score_trace[t] = hill_climb(engine, predicted, active, k,
                                      opts.max_sweeps, rng);
      cand = engine.labels();
      committed = engine.observation();
    }

    UpdateResult upd = ekf_update(predicted, committed);
    belief = upd.belief;
    belief.mean = clamp_state(belief.mean);

    res.classes.labels[t] = cand;
    res.beliefs[t] = belief;
    if (kind == ModelKind::sbtm) {
      res.pi[t] = transitions_from_state(belief.mean, layout);
      res.theta[t] = theta_step(res.theta[t - 1], res.pi[t]);
    } else {
      res.theta[t] = probs_from_state(belief.mean, layout);
    }
    warn_empty_classes(res, cand, k, t);
  }

  res.wall_time_sec =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
          .count();
  return res;
}

}  // namespace

Observation observation_vector(const Adjacency& w_t, const BlockCells& cells,
                               const ScalingFactors& scaling,
                               const TransitionMatrices& pi_hat) {
  const CellLayout& layout = cells.layout;
  const int nb = layout.num_blocks();
  Observation obs;
  obs.y = Eigen::VectorXd::Zero(2 * nb);
  obs.noise_var = Eigen::VectorXd::Constant(2 * nb, 1.0);
  obs.mask.assign(2 * nb, 1);
  for (int idx = 0; idx < nb; ++idx) {
    auto [a, b] = layout.block_at(idx);
    for (int u = 0; u < 2; ++u) {
      const auto& cell = cells.cell(a, b, u);
      if (cell.empty()) continue;
      double scaled_sum = 0, inv_xi_sum = 0;
      for (const PairEntry& pe : cell) {
        const XiPair& xp = scaling.at(pe.prev_a, pe.prev_b, a, b);
        double x = u ? xp.xi1 : xp.xi0;
        scaled_sum += w_t(pe.i, pe.j) / x;
        inv_xi_sum += 1.0 / x;
      }
      const double nn = static_cast<double>(cell.size());
      const double p = u ? pi_hat.pi1(a - 1, b - 1) : pi_hat.pi0(a - 1, b - 1);
      int e = u * nb + idx;
      obs.y[e] = scaled_sum / nn;
      obs.noise_var[e] =
          std::max(kVarFloor, (p * inv_xi_sum - nn * p * p) / (nn * nn));
      obs.mask[e] = 0;
    }
  }
  return obs;
}

Observation observation_vector_hm(const Adjacency& w_t,
                                  const Eigen::VectorXi& labels_t,
                                  const BlockMatrix& theta_hat,
                                  const CellLayout& layout) {
  HmEngine engine(w_t, labels_t, layout, theta_hat);
  return engine.observation();
}

double score_assignment(const Eigen::VectorXi& candidate, const Adjacency& w_t,
                        const Adjacency& w_prev,
                        const Eigen::VectorXi& classes_prev,
                        const BlockMatrix& theta_prev,
                        const GaussianBelief& predicted, ModelKind model,
                        bool directed) {
  const int k = static_cast<int>(theta_prev.rows());
  CellLayout layout(k, directed);
  if (model == ModelKind::sbtm) {
    TransitionMatrices pi_hat = transitions_from_state(predicted.mean, layout);
    ScalingFactors xi = scaling_matrix(theta_prev, pi_hat);
    BlockCells cells = block_cells_from(w_prev, classes_prev, candidate, layout);
    Observation obs = observation_vector(w_t, cells, xi, pi_hat);
    return innovation_loglik(predicted, obs);
  }
  if (model == ModelKind::hmsbm) {
    BlockMatrix theta_hat = probs_from_state(predicted.mean, layout);
    Observation obs = observation_vector_hm(w_t, candidate, theta_hat, layout);
    return innovation_loglik(predicted, obs);
  }
  throw ConfigError("score_assignment applies to dynamic models only");
}

FitResult fit_sbtm(const DynamicNetwork& net, const FitOptions& options) {
  return fit_dynamic(net, options, ModelKind::sbtm);
}

FitResult fit_hmsbm(const DynamicNetwork& net, const FitOptions& options) {
  return fit_dynamic(net, options, ModelKind::hmsbm);
}

FitResult fit_static(const DynamicNetwork& net, const FitOptions& options) {
  const auto t_start = std::chrono::steady_clock::now();
  const int T = net.num_steps();
  const int n = net.num_nodes();
  const int k = options.k;
  if (T < 1) throw DataError("empty network");

  Rng rng(options.seed);
  FitResult res;
  res.model = ModelKind::ssbm;
  res.k = k;
  res.directed = net.directed;
  res.seed = options.seed;
  res.node_ids = net.node_ids;
  res.options = options;
  res.classes.k = k;
  res.classes.labels.assign(T, Eigen::VectorXi::Zero(n));
  res.theta.resize(T);
  res.score_trace.resize(T);

  for (int t = 0; t < T; ++t) {
    auto active = net.active_nodes(t);
    if (static_cast<int>(active.size()) < k)
      throw DataError("fewer active nodes than classes at step " +
                      std::to_string(t + 1));
    Adjacency w = submatrix(net.snapshots[t], active);
    Eigen::VectorXi init = spectral_init(w, k, rng);
    LocalSearchResult ml = static_local_search(w, init, k, net.directed, rng);
    for (std::size_t i = 0; i < active.size(); ++i)
      res.classes.labels[t][active[i]] = ml.labels[static_cast<int>(i)];
    res.theta[t] = ml.theta;
    res.score_trace[t] = ml.scores;
    warn_empty_classes(res, res.classes.labels[t], k, t);
  }
  res.wall_time_sec =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
          .count();
  return res;
}

FitResult fit(const DynamicNetwork& net, const FitOptions& options,
              ModelKind kind) {
  switch (kind) {
    case ModelKind::sbtm: return fit_sbtm(net, options);
    case ModelKind::hmsbm: return fit_hmsbm(net, options);
    case ModelKind::ssbm: return fit_static(net, options);
  }
  throw ConfigError("unknown model kind");
}

HyperEstimate estimate_hyperparameters(const DynamicNetwork& net,
                                       const FitOptions& init, ModelKind kind,
                                       int max_iters, double tol) {
  if (net.num_steps() < 3)
    throw DataError("hyperparameter estimation needs T >= 3");
  if (kind == ModelKind::ssbm)
    throw ConfigError("static model has no process noise to estimate");

  CellLayout layout(init.k, net.directed);
  const int dim = kind == ModelKind::sbtm ? 2 * layout.num_blocks()
                                          : layout.num_blocks();
  Eigen::VectorXd gamma = init.gamma_diag_vec.size() > 0
                              ? init.gamma_diag_vec
                              : Eigen::VectorXd::Constant(dim, init.gamma_diag);

  HyperEstimate est;
  for (int iter = 0; iter < max_iters; ++iter) {
    FitOptions opts = init;
    opts.gamma_diag_vec = gamma;
    FitResult fitted = fit_dynamic(net, opts, kind);

    // increments of filtered means; the first one is skipped because the
    // t=1 belief is the smoothed ML initialization, not a filtered state
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(dim);
    int count = 0;
    for (int t = 2; t < fitted.classes.num_steps(); ++t) {
      Eigen::VectorXd d = fitted.beliefs[t].mean - fitted.beliefs[t - 1].mean;
      acc += d.cwiseProduct(d);
      ++count;
    }
    if (count == 0) throw DataError("not enough increments (need T >= 3)");
    Eigen::VectorXd next = (acc / count).cwiseMax(1e-8);

    est.iterations = iter + 1;
    double rel = 0;
    for (int i = 0; i < dim; ++i)
      rel = std::max(rel, std::abs(next[i] - gamma[i]) /
                              std::max(gamma[i], 1e-12));
    gamma = next;
    if (rel < tol) {
      est.converged = true;
      break;
    }
  }
  est.gamma_diag = gamma;
  est.pooled = gamma.mean();
  return est;
}

DynamicNetwork resimulate(const FitResult& fit, std::uint64_t seed) {
  const int T = fit.classes.num_steps();
  const int n = static_cast<int>(fit.node_ids.size());
  if (T < 1) throw DataError("fit result has no steps");

  Rng rng(seed);
  DynamicNetwork out;
  out.directed = fit.directed;
  out.node_ids = fit.node_ids;
  out.snapshots.resize(T);
  out.activity.assign(T, std::vector<std::uint8_t>(n, 0));
  for (int t = 0; t < T; ++t)
    for (int i = 0; i < n; ++i)
      out.activity[t][i] = fit.classes.labels[t][i] > 0;

  out.snapshots[0] =
      sample_sbm(fit.classes.labels[0], fit.theta[0], fit.directed, rng);
  for (int t = 1; t < T; ++t) {
    if (fit.model == ModelKind::sbtm) {
      ScalingFactors xi = scaling_matrix(fit.theta[t - 1], fit.pi[t]);
      out.snapshots[t] = sample_transition(
          out.snapshots[t - 1], fit.classes.labels[t - 1],
          fit.classes.labels[t], fit.pi[t], xi, fit.directed, rng);
    } else {
      out.snapshots[t] =
          sample_sbm(fit.classes.labels[t], fit.theta[t], fit.directed, rng);
    }
  }
  return out;
}

namespace {

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (int r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (int c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(row);
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const json& rows) {
  const int r = static_cast<int>(rows.size());
  const int c = r > 0 ? static_cast<int>(rows[0].size()) : 0;
  Eigen::MatrixXd m(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) m(i, j) = rows[i][j].get<double>();
  return m;
}

json vector_to_json(const Eigen::VectorXd& v) {
  json arr = json::array();
  for (int i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

Eigen::VectorXd vector_from_json(const json& arr) {
  Eigen::VectorXd v(arr.size());
  for (std::size_t i = 0; i < arr.size(); ++i) v[i] = arr[i].get<double>();
  return v;
}

}  // namespace

void FitResult::save_json(const std::string& path) const {
  json doc;
  doc["format"] = "sbtm-fit/1";
  doc["model"] = to_string(model);
  doc["k"] = k;
  doc["directed"] = directed;
  doc["seed"] = seed;
  doc["wall_time_sec"] = wall_time_sec;
  doc["node_ids"] = node_ids;
  doc["warnings"] = warnings;
  doc["options"] = {{"gamma_diag", options.gamma_diag},
                    {"gamma_offdiag", options.gamma_offdiag},
                    {"init_cov", options.init_cov},
                    {"smoothing", options.smoothing},
                    {"max_sweeps", options.max_sweeps}};

  json steps = json::array();
  const int T = classes.num_steps();
  for (int t = 0; t < T; ++t) {
    json step;
    step["t"] = t + 1;
    json labels = json::array();
    for (int i = 0; i < classes.labels[t].size(); ++i)
      labels.push_back(classes.labels[t][i]);
    step["labels"] = labels;
    step["theta"] = matrix_to_json(theta[t]);
    step["score_trace"] = score_trace[t];
    if (model == ModelKind::sbtm && t >= 1) {
      step["pi0"] = matrix_to_json(pi[t].pi0);
      step["pi1"] = matrix_to_json(pi[t].pi1);
    }
    if (t < static_cast<int>(beliefs.size()) && beliefs[t].mean.size() > 0) {
      step["state_mean"] = vector_to_json(beliefs[t].mean);
      step["state_var"] = vector_to_json(beliefs[t].cov.diagonal());
    }
    steps.push_back(step);
  }
  doc["steps"] = steps;

  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  out << doc.dump(2) << '\n';
}

FitResult FitResult::load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw DataError("malformed fit document " + path + ": " + e.what());
  }
  if (doc.value("format", "") != "sbtm-fit/1")
    throw DataError("unrecognized fit document format in " + path);

  FitResult res;
  res.model = model_kind_from_string(doc.at("model").get<std::string>());
  res.k = doc.at("k").get<int>();
  res.directed = doc.at("directed").get<bool>();
  res.seed = doc.at("seed").get<std::uint64_t>();
  res.wall_time_sec = doc.value("wall_time_sec", 0.0);
  res.node_ids = doc.at("node_ids").get<std::vector<std::string>>();
  if (doc.contains("warnings"))
    res.warnings = doc["warnings"].get<std::vector<std::string>>();
  if (doc.contains("options")) {
    const auto& o = doc["options"];
    res.options.gamma_diag = o.value("gamma_diag", 0.01);
    res.options.gamma_offdiag = o.value("gamma_offdiag", 0.0);
    res.options.init_cov = o.value("init_cov", 0.25);
    res.options.smoothing = o.value("smoothing", 0.5);
    res.options.max_sweeps = o.value("max_sweeps", 50);
  }
  res.options.k = res.k;
  res.options.seed = res.seed;

  const auto& steps = doc.at("steps");
  const int T = static_cast<int>(steps.size());
  const int n = static_cast<int>(res.node_ids.size());
  res.classes.k = res.k;
  res.classes.labels.assign(T, Eigen::VectorXi::Zero(n));
  res.theta.resize(T);
  res.pi.resize(T);
  res.score_trace.resize(T);
  res.beliefs.resize(T);
  for (int t = 0; t < T; ++t) {
    const auto& step = steps[t];
    const auto& labels = step.at("labels");
    if (static_cast<int>(labels.size()) != n)
      throw DataError("label vector size mismatch in " + path);
    for (int i = 0; i < n; ++i)
      res.classes.labels[t][i] = labels[i].get<int>();
    res.theta[t] = matrix_from_json(step.at("theta"));
    if (step.contains("score_trace"))
      res.score_trace[t] = step["score_trace"].get<std::vector<double>>();
    if (step.contains("pi0")) {
      res.pi[t].pi0 = matrix_from_json(step["pi0"]);
      res.pi[t].pi1 = matrix_from_json(step["pi1"]);
    }
    if (step.contains("state_mean")) {
      res.beliefs[t].mean = vector_from_json(step["state_mean"]);
      res.beliefs[t].cov =
          vector_from_json(step["state_var"]).asDiagonal();
    }
  }
  return res;
}

}  // namespace sbtm
