#pragma once

#include <Eigen/Dense>
#include <vector>

#include "sbtm/dynamic_network.hpp"
#include "sbtm/rng.hpp"

namespace sbtm {

// Block probability matrix: entry (a-1,b-1) is the edge probability between
// classes a and b. Symmetric for undirected networks.
using BlockMatrix = Eigen::MatrixXd;

// Draw w_ij ~ Bernoulli(theta_{c_i c_j}) independently, zero diagonal.
// labels use 0 for inactive nodes (their rows stay empty). Undirected mode
// draws each unordered pair once and mirrors it.
Adjacency sample_sbm(const Eigen::VectorXi& labels, const BlockMatrix& theta,
                     bool directed, Rng& rng);

// Block edge / pair counts for one snapshot under a given assignment.
struct BlockCounts {
  Eigen::MatrixXd edges;  // k x k, edges within block (a,b)
  Eigen::MatrixXd pairs;  // k x k, pairs within block (a,b)
};
BlockCounts block_counts(const Adjacency& w, const Eigen::VectorXi& labels,
                         int k, bool directed);

// theta_hat_ab = (m + smoothing) / (n + 2 * smoothing). The default
// smoothing 0.5 keeps logits finite; smoothing 0 gives the pure ML ratio.
// Throws when a class has no members unless allow_empty is set, in which
// case empty blocks fall back to the smoothed prior.
BlockMatrix estimate_theta_ml(const Adjacency& w, const Eigen::VectorXi& labels,
                              int k, bool directed, double smoothing = 0.5,
                              bool allow_empty = false);

// Bernoulli block log-likelihood of w under (labels, theta).
double block_loglik(const Adjacency& w, const Eigen::VectorXi& labels,
                    const BlockMatrix& theta, bool directed);

// Profile log-likelihood: block_loglik evaluated at the ML ratios m/n,
// with 0*log(0) = 0.
double profile_loglik(const Adjacency& w, const Eigen::VectorXi& labels, int k,
                      bool directed);

// Spectral initialization: regularized degree-normalized adjacency
// embedding (rank-k eigenvectors for symmetric input, concatenated scaled
// left/right singular vectors otherwise) with row normalization and seeded
// k-means. Pass the active submatrix; deterministic given the rng state.
Eigen::VectorXi spectral_init(const Adjacency& w, int k, Rng& rng);

// Singular values of w (descending), for scree inspection.
Eigen::VectorXd singular_values(const Adjacency& w, int count);

struct LocalSearchResult {
  Eigen::VectorXi labels;
  BlockMatrix theta;           // smoothed ML estimate at the final labels
  std::vector<double> scores;  // profile log-likelihood after each accepted move
  int sweeps = 0;
};

// Hill climbing over single-node relabelings maximizing the profile block
// log-likelihood. First-improvement acceptance, sweep order reshuffled each
// iteration, stops when a full sweep yields no improving move.
LocalSearchResult static_local_search(const Adjacency& w,
                                      const Eigen::VectorXi& init, int k,
                                      bool directed, Rng& rng,
                                      int max_sweeps = 100);

}  // namespace sbtm
