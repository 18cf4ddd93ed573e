#include "sbtm/sbm.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <numeric>

namespace sbtm {

namespace {

constexpr double kImproveTol = 1e-12;

// m*log(p) + (n-m)*log(1-p) at the ML ratio p = m/n, with 0*log(0) = 0.
double block_term(double m, double n) {
  if (n <= 0) return 0.0;
  double p = m / n;
  double t = 0.0;
  if (m > 0) t += m * std::log(p);
  if (n - m > 0) t += (n - m) * std::log(1.0 - p);
  return t;
}

}  // namespace

Adjacency sample_sbm(const Eigen::VectorXi& labels, const BlockMatrix& theta,
                     bool directed, Rng& rng) {
  const int n = static_cast<int>(labels.size());
  Adjacency w = Adjacency::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    if (labels[i] == 0) continue;
    const int j0 = directed ? 0 : i + 1;
    for (int j = j0; j < n; ++j) {
      if (j == i || labels[j] == 0) continue;
      double p = theta(labels[i] - 1, labels[j] - 1);
      if (rng.bernoulli(p)) {
        w(i, j) = 1;
        if (!directed) w(j, i) = 1;
      }
    }
  }
  return w;
}

BlockCounts block_counts(const Adjacency& w, const Eigen::VectorXi& labels,
                         int k, bool directed) {
  const int n = static_cast<int>(labels.size());
  BlockCounts out;
  out.edges = Eigen::MatrixXd::Zero(k, k);
  out.pairs = Eigen::MatrixXd::Zero(k, k);

  Eigen::VectorXd sizes = Eigen::VectorXd::Zero(k);
  for (int i = 0; i < n; ++i)
    if (labels[i] > 0) sizes[labels[i] - 1] += 1;

  for (int a = 0; a < k; ++a)
    for (int b = 0; b < k; ++b) {
      if (directed)
        out.pairs(a, b) = sizes[a] * sizes[b] - (a == b ? sizes[a] : 0);
      else
        out.pairs(a, b) = a == b ? sizes[a] * (sizes[a] - 1) / 2
                                 : sizes[a] * sizes[b];
    }

  for (int i = 0; i < n; ++i) {
    if (labels[i] == 0) continue;
    const int j0 = directed ? 0 : i + 1;
    for (int j = j0; j < n; ++j) {
      if (j == i || labels[j] == 0) continue;
      if (!w(i, j)) continue;
      int a = labels[i] - 1, b = labels[j] - 1;
      if (!directed && a > b) std::swap(a, b);
      out.edges(a, b) += 1;
      if (!directed && a != b) out.edges(b, a) += 1;
    }
  }
  if (!directed)
    for (int a = 0; a < k; ++a)
      for (int b = 0; b < a; ++b) out.pairs(a, b) = out.pairs(b, a);
  return out;
}

BlockMatrix estimate_theta_ml(const Adjacency& w, const Eigen::VectorXi& labels,
                              int k, bool directed, double smoothing,
                              bool allow_empty) {
  Eigen::VectorXi sizes = Eigen::VectorXi::Zero(k);
  for (int i = 0; i < labels.size(); ++i)
    if (labels[i] > 0) sizes[labels[i] - 1] += 1;
  if (!allow_empty)
    for (int a = 0; a < k; ++a)
      if (sizes[a] == 0)
        throw DataError("undefined block: class " + std::to_string(a + 1) +
                        " has no members");

  BlockCounts counts = block_counts(w, labels, k, directed);
  BlockMatrix theta(k, k);
  for (int a = 0; a < k; ++a)
    for (int b = 0; b < k; ++b) {
      double m = counts.edges(a, b), n = counts.pairs(a, b);
      theta(a, b) =
          n + 2 * smoothing > 0 ? (m + smoothing) / (n + 2 * smoothing) : 0.5;
    }
  return theta;
}

double block_loglik(const Adjacency& w, const Eigen::VectorXi& labels,
                    const BlockMatrix& theta, bool directed) {
  const int k = static_cast<int>(theta.rows());
  BlockCounts counts = block_counts(w, labels, k, directed);
  double ll = 0.0;
  for (int a = 0; a < k; ++a)
    for (int b = (directed ? 0 : a); b < k; ++b) {
      double m = counts.edges(a, b), n = counts.pairs(a, b);
      if (n == 0) continue;
      double p = theta(a, b);
      if (m > 0) {
        if (p <= 0) return -std::numeric_limits<double>::infinity();
        ll += m * std::log(p);
      }
      if (n - m > 0) {
        if (p >= 1) return -std::numeric_limits<double>::infinity();
        ll += (n - m) * std::log(1.0 - p);
      }
    }
  return ll;
}

double profile_loglik(const Adjacency& w, const Eigen::VectorXi& labels, int k,
                      bool directed) {
  BlockCounts counts = block_counts(w, labels, k, directed);
  double ll = 0.0;
  for (int a = 0; a < k; ++a)
    for (int b = (directed ? 0 : a); b < k; ++b)
      ll += block_term(counts.edges(a, b), counts.pairs(a, b));
  return ll;
}

namespace {

Eigen::VectorXi kmeans(const Eigen::MatrixXd& points, int k, Rng& rng,
                       int restarts, int max_iters) {
  const int n = static_cast<int>(points.rows());
  const int d = static_cast<int>(points.cols());
  Eigen::VectorXi best_assign = Eigen::VectorXi::Zero(n);
  double best_inertia = std::numeric_limits<double>::infinity();

  for (int r = 0; r < restarts; ++r) {
    // k-means++ seeding
    Eigen::MatrixXd centers(k, d);
    centers.row(0) = points.row(static_cast<int>(rng.uniform_int(n)));
    Eigen::VectorXd dist2 =
        (points.rowwise() - centers.row(0)).rowwise().squaredNorm();
    for (int c = 1; c < k; ++c) {
      double total = dist2.sum();
      int pick = 0;
      if (total > 0) {
        double target = rng.uniform() * total, acc = 0;
        for (int i = 0; i < n; ++i) {
          acc += dist2[i];
          if (acc >= target) {
            pick = i;
            break;
          }
        }
      } else {
        pick = static_cast<int>(rng.uniform_int(n));
      }
      centers.row(c) = points.row(pick);
      dist2 = dist2.cwiseMin(
          (points.rowwise() - centers.row(c)).rowwise().squaredNorm());
    }

    Eigen::VectorXi assign = Eigen::VectorXi::Constant(n, -1);
    for (int iter = 0; iter < max_iters; ++iter) {
      bool moved = false;
      for (int i = 0; i < n; ++i) {
        int arg = 0;
        double best = (points.row(i) - centers.row(0)).squaredNorm();
        for (int c = 1; c < k; ++c) {
          double dd = (points.row(i) - centers.row(c)).squaredNorm();
          if (dd < best) {
            best = dd;
            arg = c;
          }
        }
        if (assign[i] != arg) {
          assign[i] = arg;
          moved = true;
        }
      }
      // recompute centers; repair empty clusters with the farthest point
      Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, d);
      Eigen::VectorXi cnt = Eigen::VectorXi::Zero(k);
      for (int i = 0; i < n; ++i) {
        sums.row(assign[i]) += points.row(i);
        cnt[assign[i]] += 1;
      }
      for (int c = 0; c < k; ++c) {
        if (cnt[c] > 0) {
          centers.row(c) = sums.row(c) / cnt[c];
        } else {
          int far = 0;
          double far_d = -1;
          for (int i = 0; i < n; ++i) {
            if (cnt[assign[i]] <= 1) continue;
            double dd = (points.row(i) - centers.row(assign[i])).squaredNorm();
            if (dd > far_d) {
              far_d = dd;
              far = i;
            }
          }
          cnt[assign[far]] -= 1;
          assign[far] = c;
          cnt[c] = 1;
          centers.row(c) = points.row(far);
          moved = true;
        }
      }
      if (!moved) break;
    }

    double inertia = 0;
    for (int i = 0; i < n; ++i)
      inertia += (points.row(i) - centers.row(assign[i])).squaredNorm();
    if (inertia < best_inertia) {
      best_inertia = inertia;
      best_assign = assign;
    }
  }
  return best_assign;
}

}  // namespace

Eigen::VectorXi spectral_init(const Adjacency& w, int k, Rng& rng) {
  const int n = static_cast<int>(w.rows());
  if (k < 1) throw ConfigError("spectral_init: k must be >= 1");
  if (k > n) throw ConfigError("spectral_init: k exceeds node count");
  if (k == 1) return Eigen::VectorXi::Ones(n);

  // Regularized degree-normalized embedding: tau-smoothed adjacency scaled
  // by D_tau^{-1/2} on both sides. Plain adjacency SVD under-recovers at
  // the benchmark densities; the regularized form is the standard remedy
  // for sparse block models.
  Eigen::MatrixXd a = w.cast<double>();
  Eigen::VectorXd out_deg = a.rowwise().sum();
  Eigen::VectorXd in_deg = a.colwise().sum();
  double tau = std::max(1e-9, out_deg.mean());
  Eigen::MatrixXd m = a + Eigen::MatrixXd::Constant(n, n, tau / n);
  Eigen::VectorXd lscale = (out_deg.array() + tau).sqrt().inverse();
  Eigen::VectorXd rscale = (in_deg.array() + tau).sqrt().inverse();
  m = lscale.asDiagonal() * m * rscale.asDiagonal();

  Eigen::MatrixXd embed;
  if (w == w.transpose().eval()) {
    // symmetric case: top-k algebraic eigenvectors (singular values fold
    // signs and can pull in bulk directions)
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m);
    if (eig.eigenvalues()[n - k] <= 1e-12)
      std::cerr << "spectral_init: rank below k, embedding is degenerate\n";
    embed.resize(n, k);
    for (int c = 0; c < k; ++c) embed.col(c) = eig.eigenvectors().col(n - 1 - c);
  } else {
    Eigen::BDCSVD<Eigen::MatrixXd> svd(m,
                                       Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& s = svd.singularValues();
    if (s[k - 1] <= 1e-12 * std::max(1.0, s[0]))
      std::cerr << "spectral_init: rank below k, embedding is degenerate\n";
    embed.resize(n, 2 * k);
    for (int c = 0; c < k; ++c) {
      double scale = std::sqrt(std::max(0.0, s[c]));
      embed.col(c) = svd.matrixU().col(c) * scale;
      embed.col(k + c) = svd.matrixV().col(c) * scale;
    }
  }
  for (int i = 0; i < n; ++i) {
    double norm = embed.row(i).norm();
    if (norm > 1e-12) embed.row(i) /= norm;
  }
  Eigen::VectorXi assign = kmeans(embed, k, rng, 20, 100);
  return assign.array() + 1;
}

Eigen::VectorXd singular_values(const Adjacency& w, int count) {
  Eigen::MatrixXd a = w.cast<double>();
  Eigen::BDCSVD<Eigen::MatrixXd> svd(a);
  int m = std::min<int>(count, static_cast<int>(svd.singularValues().size()));
  return svd.singularValues().head(m);
}

namespace {

// Incremental profile-likelihood bookkeeping for single-node relabel moves.
class BlockTally {
 public:
  BlockTally(const Adjacency& w, const Eigen::VectorXi& labels, int k,
             bool directed)
      : w_(w), labels_(labels), k_(k), directed_(directed) {
    const int n = static_cast<int>(labels.size());
    sizes_ = Eigen::VectorXd::Zero(k);
    for (int i = 0; i < n; ++i) sizes_[labels_[i] - 1] += 1;
    BlockCounts counts = block_counts(w, labels, k, directed);
    edges_ = counts.edges;
    total_ = 0;
    for (int a = 0; a < k; ++a)
      for (int b = (directed ? 0 : a); b < k; ++b)
        total_ += block_term(edges_(a, b), pair_count(a, b));
  }

  double total() const { return total_; }
  const Eigen::VectorXi& labels() const { return labels_; }

  // Log-likelihood change if node v moved to class y (1-based).
  double delta(int v, int y) const {
    const int x = labels_[v];
    if (x == y) return 0.0;
    gather_neighbor_counts(v);
    double before = 0, after = 0;
    for_affected_blocks(x - 1, y - 1, [&](int a, int b) {
      before += block_term(edges_(a, b), pair_count(a, b));
      after += block_term(edges_moved(a, b, v, x - 1, y - 1),
                          pair_count_moved(a, b, x - 1, y - 1));
    });
    return after - before;
  }

  void apply(int v, int y) {
    const int x = labels_[v];
    if (x == y) return;
    gather_neighbor_counts(v);
    for_affected_blocks(x - 1, y - 1, [&](int a, int b) {
      total_ -= block_term(edges_(a, b), pair_count(a, b));
    });
    for (int a = 0; a < k_; ++a)
      for (int b = (directed_ ? 0 : a); b < k_; ++b)
        edges_(a, b) = edges_moved(a, b, v, x - 1, y - 1);
    if (!directed_)
      for (int a = 0; a < k_; ++a)
        for (int b = 0; b < a; ++b) edges_(a, b) = edges_(b, a);
    sizes_[x - 1] -= 1;
    sizes_[y - 1] += 1;
    labels_[v] = y;
    for_affected_blocks(x - 1, y - 1, [&](int a, int b) {
      total_ += block_term(edges_(a, b), pair_count(a, b));
    });
  }

 private:
  double pair_count(int a, int b) const {
    if (directed_)
      return sizes_[a] * sizes_[b] - (a == b ? sizes_[a] : 0);
    return a == b ? sizes_[a] * (sizes_[a] - 1) / 2 : sizes_[a] * sizes_[b];
  }

  // pair count after moving one node from class x to class y (0-based)
  double pair_count_moved(int a, int b, int x, int y) const {
    auto sz = [&](int c) {
      return sizes_[c] - (c == x ? 1 : 0) + (c == y ? 1 : 0);
    };
    if (directed_) return sz(a) * sz(b) - (a == b ? sz(a) : 0);
    return a == b ? sz(a) * (sz(a) - 1) / 2 : sz(a) * sz(b);
  }

  // edge count of block (a,b) after the move, using v's per-class neighbor
  // tallies; neighbors keep their labels so only v's contributions shift
  double edges_moved(int a, int b, int /*v*/, int x, int y) const {
    double m = edges_(a, b);
    if (directed_) {
      if (a == x) m -= out_cnt_[b];
      if (b == x) m -= in_cnt_[a];
      if (a == y) m += out_cnt_[b];
      if (b == y) m += in_cnt_[a];
    } else {
      if (a == x) m -= out_cnt_[b];
      if (b == x && a != b) m -= out_cnt_[a];
      if (a == y) m += out_cnt_[b];
      if (b == y && a != b) m += out_cnt_[a];
    }
    return m;
  }

  template <class F>
  void for_affected_blocks(int x, int y, F&& f) const {
    for (int a = 0; a < k_; ++a)
      for (int b = (directed_ ? 0 : a); b < k_; ++b)
        if (a == x || a == y || b == x || b == y) f(a, b);
  }

  void gather_neighbor_counts(int v) const {
    out_cnt_.assign(k_, 0.0);
    in_cnt_.assign(k_, 0.0);
    const int n = static_cast<int>(labels_.size());
    for (int j = 0; j < n; ++j) {
      if (j == v) continue;
      if (w_(v, j)) out_cnt_[labels_[j] - 1] += 1;
      if (directed_ && w_(j, v)) in_cnt_[labels_[j] - 1] += 1;
    }
  }

  const Adjacency& w_;
  Eigen::VectorXi labels_;
  int k_;
  bool directed_;
  Eigen::VectorXd sizes_;
  Eigen::MatrixXd edges_;
  double total_;
  mutable std::vector<double> out_cnt_, in_cnt_;
};

}  // namespace

LocalSearchResult static_local_search(const Adjacency& w,
                                      const Eigen::VectorXi& init, int k,
                                      bool directed, Rng& rng, int max_sweeps) {
  const int n = static_cast<int>(init.size());
  for (int i = 0; i < n; ++i)
    if (init[i] < 1 || init[i] > k)
      throw DataError("static_local_search: init labels must be in 1..k");

  BlockTally tally(w, init, k, directed);
  LocalSearchResult res;
  res.scores.push_back(tally.total());

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);

  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    ++res.sweeps;
    // Fisher-Yates with the shared stream, reshuffled each sweep
    for (int i = n - 1; i > 0; --i)
      std::swap(order[i], order[rng.uniform_int(i + 1)]);
    bool improved = false;
    for (int v : order) {
      const int x = tally.labels()[v];
      for (int y = 1; y <= k; ++y) {
        if (y == x) continue;
        double d = tally.delta(v, y);
        if (d > kImproveTol) {
          tally.apply(v, y);
          res.scores.push_back(tally.total());
          improved = true;
          break;  // first improvement
        }
      }
    }
    if (!improved) break;
  }

  res.labels = tally.labels();
  res.theta = estimate_theta_ml(w, res.labels, k, directed, 0.5,
                                /*allow_empty=*/true);
  return res;
}

}  // namespace sbtm
