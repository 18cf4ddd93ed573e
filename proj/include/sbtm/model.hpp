#pragma once

#include <Eigen/Dense>
#include <vector>

#include "sbtm/dynamic_network.hpp"
#include "sbtm/layout.hpp"
#include "sbtm/rng.hpp"
#include "sbtm/sbm.hpp"

namespace sbtm {

// Logit magnitude cap; keeps probabilities within ~6e-6 of (0,1) so every
// scaling-factor division stays finite.
constexpr double kPsiClamp = 12.0;
// Floor applied to pi^{t|0} before scaling-ratio divisions.
constexpr double kPiFloor = 1e-12;

inline double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }
inline double logit(double p) { return std::log(p / (1.0 - p)); }

// Block transition probabilities: pi0 for forming new edges, pi1 for
// existing edges re-occurring.
struct TransitionMatrices {
  Eigen::MatrixXd pi0, pi1;
};

// Logit-space state vector stacking the new-edge block before the re-edge
// block, following the cell layout.
Eigen::VectorXd state_from_transitions(const TransitionMatrices& pi,
                                       const CellLayout& layout);
TransitionMatrices transitions_from_state(const Eigen::VectorXd& psi,
                                          const CellLayout& layout);

// Clamp every entry of psi to [-kPsiClamp, kPsiClamp].
Eigen::VectorXd clamp_state(Eigen::VectorXd psi);

// Linear dynamic system psi^t = F psi^{t-1} + v^t, v^t ~ N(0, Gamma),
// psi^1 ~ N(mu1, Gamma1).
struct StateDynamics {
  Eigen::MatrixXd F;
  Eigen::MatrixXd Gamma;
  Eigen::VectorXd mu1;
  Eigen::MatrixXd Gamma1;

  static StateDynamics random_walk(int dim, double gamma_diag,
                                   double gamma_offdiag,
                                   const Eigen::VectorXd& mu1,
                                   double gamma1_diag);
};

// Marginal block-probability recursion:
// theta^t = pi0 .* (1 - theta^{t-1}) + pi1 .* theta^{t-1}.
BlockMatrix theta_step(const BlockMatrix& theta_prev,
                       const TransitionMatrices& pi);

struct XiPair {
  double xi0 = 1.0, xi1 = 1.0;
};

// Scaling factors for one pair with previous classes (a_prev, b_prev) and
// current classes (a, b); class 0 marks a node absent at t-1. theta_cur must
// equal theta_step(theta_prev, pi). Classes are 1-based.
XiPair scaling_pair(int a_prev, int b_prev, int a, int b,
                    const BlockMatrix& theta_prev, const BlockMatrix& theta_cur,
                    const TransitionMatrices& pi);

// Scaling factors for every (previous, current) class combination; pairs map
// through their cell keys since xi depends only on the class four-tuple.
class ScalingFactors {
 public:
  ScalingFactors(int k);
  XiPair& at(int a_prev, int b_prev, int a, int b) {
    return xi_[index(a_prev, b_prev, a, b)];
  }
  const XiPair& at(int a_prev, int b_prev, int a, int b) const {
    return xi_[index(a_prev, b_prev, a, b)];
  }
  int k() const { return k_; }

 private:
  int index(int a_prev, int b_prev, int a, int b) const {
    return ((a_prev * (k_ + 1) + b_prev) * k_ + (a - 1)) * k_ + (b - 1);
  }
  int k_;
  std::vector<XiPair> xi_;
};

// Fill the full (k+1)^2 x k^2 scaling table from theta_prev and pi;
// theta_cur is computed internally via theta_step.
ScalingFactors scaling_matrix(const BlockMatrix& theta_prev,
                              const TransitionMatrices& pi);

// One SBTM transition draw: each active pair flips a Bernoulli coin with
// probability xi * pi_{ab}^{t|u}, u read from w_prev. Rows of w_prev must be
// zeroed for nodes absent at t-1; pairs with an inactive endpoint stay 0.
Adjacency sample_transition(const Adjacency& w_prev,
                            const Eigen::VectorXi& classes_prev,
                            const Eigen::VectorXi& classes_cur,
                            const TransitionMatrices& pi,
                            const ScalingFactors& scaling, bool directed,
                            Rng& rng);

struct SimulationConfig {
  int nodes = 128;
  int k = 4;
  int steps = 10;
  bool directed = false;
  double churn_rate = 0.1;    // fraction of nodes reassigned each step
  BlockMatrix theta1;         // initial marginal block probabilities
  StateDynamics dynamics;     // mu1/Gamma1/F/Gamma in the cell layout
  std::uint64_t seed = 1;

  // The simulated-networks benchmark configuration: 128 nodes in 4 classes
  // of 32, theta1 = 0.2580/0.0834, pi^{1|0} = 0.10/0.05, pi^{1|1} =
  // 0.70/0.45, Gamma1 = 0.04 I, random walk with gamma_ii = 0.01 and
  // gamma_ij = 0.0025, 10 steps, 10% churn, undirected.
  static SimulationConfig benchmark(std::uint64_t seed);
};

struct SimulationResult {
  DynamicNetwork net;
  ClassSequence classes;
  std::vector<Eigen::VectorXd> states;   // psi^1..psi^T
  std::vector<BlockMatrix> thetas;       // Theta^1..Theta^T
  std::vector<TransitionMatrices> pis;   // Pi^t for t >= 2 (entry 0 unused)
  // Per-step scaling diagnostics over realized class transitions.
  struct ScalingSummary {
    double min_xi0 = 1, max_xi0 = 1, min_xi1 = 1, max_xi1 = 1;
    long long off_unity = 0;  // pairs whose xi differs from 1
  };
  std::vector<ScalingSummary> scaling_summaries;  // t >= 2 (entry 0 unused)
};

// Full generative run: psi random walk, class churn, transition sampling.
// Bit-reproducible for a fixed seed.
SimulationResult simulate(const SimulationConfig& config);

}  // namespace sbtm
