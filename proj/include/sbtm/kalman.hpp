#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "sbtm/error.hpp"

namespace sbtm {

// Mean/covariance pair carried through the filter. Covariance is kept
// symmetric by re-symmetrizing after every predict/update.
struct GaussianBelief {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

// Scaled block sample means stacked in cell-layout order (u=0 cells then
// u=1 cells), with per-entry observation noise variances. mask[e] is set
// for empty cells, which the update skips entirely.
struct Observation {
  Eigen::VectorXd y;
  Eigen::VectorXd noise_var;
  std::vector<std::uint8_t> mask;

  int dim() const { return static_cast<int>(y.size()); }
  int unmasked_count() const;
};

// mean <- F mean, cov <- F cov F^T + Gamma.
GaussianBelief ekf_predict(const GaussianBelief& belief,
                           const Eigen::MatrixXd& F,
                           const Eigen::MatrixXd& Gamma);

struct UpdateResult {
  GaussianBelief belief;
  double loglik = 0.0;  // Gaussian log-density of the innovation
};

// Extended Kalman update for the entrywise-logistic observation map
// y = h(psi) + z. Linearizes at the predicted mean, uses the Joseph-form
// covariance update, and returns the innovation log-likelihood restricted
// to unmasked entries. Throws NumericError if the innovation covariance
// stays singular after a jitter retry.
UpdateResult ekf_update(const GaussianBelief& belief, const Observation& obs);

// Innovation log-likelihood only (the local-search score); identical math
// to ekf_update without forming the posterior.
double innovation_loglik(const GaussianBelief& belief, const Observation& obs);

}  // namespace sbtm
