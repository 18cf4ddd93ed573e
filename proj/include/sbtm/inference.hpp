#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sbtm/dynamic_network.hpp"
#include "sbtm/kalman.hpp"
#include "sbtm/model.hpp"
#include "sbtm/sbm.hpp"

namespace sbtm {

enum class ModelKind { sbtm, hmsbm, ssbm };

std::string to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& name);

struct FitOptions {
  int k = 2;
  double gamma_diag = 0.01;      // process-noise diagonal
  double gamma_offdiag = 0.0;    // process-noise off-diagonal
  double init_cov = 0.25;        // belief covariance at t=1
  double smoothing = 0.5;        // ML smoothing for Theta-hat
  int max_sweeps = 50;           // local-search sweep cap per step
  std::uint64_t seed = 1;
  // Per-coordinate process-noise diagonal; overrides gamma_diag when set
  // (filled in by estimate_hyperparameters).
  Eigen::VectorXd gamma_diag_vec;
};

// Inference output: estimated classes, filtered state beliefs, transition
// and marginal probability estimates, and the per-step score traces.
struct FitResult {
  ModelKind model = ModelKind::sbtm;
  int k = 0;
  bool directed = false;
  std::uint64_t seed = 0;
  std::vector<std::string> node_ids;
  ClassSequence classes;
  std::vector<GaussianBelief> beliefs;   // per step; [0] is the t=1 init
  std::vector<TransitionMatrices> pi;    // sbtm only, valid for t >= 2
  std::vector<BlockMatrix> theta;        // marginal trajectory, t = 1..T
  std::vector<std::vector<double>> score_trace;  // accepted-move scores
  std::vector<std::string> warnings;
  FitOptions options;
  double wall_time_sec = 0.0;

  void save_json(const std::string& path) const;
  static FitResult load_json(const std::string& path);
};

// Scaled sample means per cell with plug-in noise variances from the
// predicted transition probabilities (cell-layout ordering, empty cells
// masked).
Observation observation_vector(const Adjacency& w_t, const BlockCells& cells,
                               const ScalingFactors& scaling,
                               const TransitionMatrices& pi_hat);

// Raw block densities with CLT variances (the hidden-Markov observation).
Observation observation_vector_hm(const Adjacency& w_t,
                                  const Eigen::VectorXi& labels_t,
                                  const BlockMatrix& theta_hat,
                                  const CellLayout& layout);

// Innovation log-likelihood of one candidate assignment at step t: builds
// cells, plug-in scaling, the observation, and the EKF innovation density.
double score_assignment(const Eigen::VectorXi& candidate, const Adjacency& w_t,
                        const Adjacency& w_prev,
                        const Eigen::VectorXi& classes_prev,
                        const BlockMatrix& theta_prev,
                        const GaussianBelief& predicted, ModelKind model,
                        bool directed);

// Algorithm: spectral + local-search ML at t=1, then per step an EKF
// predict, a hill climb over single-node relabelings scored by the
// innovation log-likelihood, and an EKF update at the winning assignment.
FitResult fit_sbtm(const DynamicNetwork& net, const FitOptions& options);

// Hidden-Markov baseline: same driver with a k x k logit-density state and
// unscaled block-density observations.
FitResult fit_hmsbm(const DynamicNetwork& net, const FitOptions& options);

// Static baseline: independent spectral + local search per snapshot.
FitResult fit_static(const DynamicNetwork& net, const FitOptions& options);

FitResult fit(const DynamicNetwork& net, const FitOptions& options,
              ModelKind kind);

struct HyperEstimate {
  Eigen::VectorXd gamma_diag;  // per-coordinate process-noise diagonal
  double pooled = 0.0;         // pooled mean of the diagonal
  int iterations = 0;
  bool converged = false;
};

// Coordinate ascent between fitting and re-estimating the process-noise
// diagonal from filtered state increments (F stays the identity). Needs
// T >= 3; returns the best iterate with converged=false on hitting the
// iteration cap.
HyperEstimate estimate_hyperparameters(const DynamicNetwork& net,
                                       const FitOptions& init, ModelKind kind,
                                       int max_iters = 8, double tol = 0.1);

// Draw a synthetic network from fitted parameters: SBTM fits resimulate the
// transition process along the estimated classes; HM-SBM and static fits
// draw each snapshot independently at the estimated block probabilities.
DynamicNetwork resimulate(const FitResult& fit, std::uint64_t seed);

}  // namespace sbtm
