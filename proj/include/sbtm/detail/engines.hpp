#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <vector>

#include "sbtm/dynamic_network.hpp"
#include "sbtm/kalman.hpp"
#include "sbtm/model.hpp"

// Candidate-scoring machinery for the per-step local search. Assignments are
// scored thousands of times per step, so cells are kept as aggregate counts
// per (previous classes, current block, u) and adjusted incrementally when a
// node flips class; the aggregation is exact because xi depends only on the
// class four-tuple.
namespace sbtm::detail {

constexpr double kObsVarFloor = 1e-10;

inline BlockMatrix probs_from_state(const Eigen::VectorXd& psi,
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

inline Eigen::VectorXd state_from_probs(const BlockMatrix& theta,
                                        const CellLayout& layout) {
  Eigen::VectorXd psi(layout.num_blocks());
  for (int idx = 0; idx < layout.num_blocks(); ++idx) {
    auto [a, b] = layout.block_at(idx);
    psi[idx] = logit(theta(a - 1, b - 1));
  }
  return psi;
}

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
            std::max(kObsVarFloor, (p * inv_xi_sum - nn * p * p) / (nn * nn));
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
      obs.noise_var[idx] = std::max(kObsVarFloor, p * (1.0 - p) / n_cell);
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

}  // namespace sbtm::detail
