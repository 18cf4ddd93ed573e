#include "sbtm/kalman.hpp"

#include <cmath>

#include "sbtm/model.hpp"

namespace sbtm {

namespace {

constexpr double kLog2Pi = 1.8378770664093453;

struct InnovationSystem {
  std::vector<int> idx;     // unmasked observation/state positions
  Eigen::VectorXd nu;       // innovation y - h(mean)
  Eigen::VectorXd hgrad;    // h'(mean) at the unmasked positions
  Eigen::MatrixXd s;        // H P H^T + Sigma on the unmasked subset
  Eigen::LLT<Eigen::MatrixXd> llt;
};

// Builds the innovation covariance and its Cholesky factor, retrying once
// with diagonal jitter before giving up.
InnovationSystem build_innovation(const GaussianBelief& belief,
                                  const Observation& obs) {
  if (obs.dim() != belief.mean.size())
    throw NumericError("observation dimension does not match state");

  InnovationSystem sys;
  for (int e = 0; e < obs.dim(); ++e)
    if (!obs.mask[e]) sys.idx.push_back(e);
  const int m = static_cast<int>(sys.idx.size());
  sys.nu.resize(m);
  sys.hgrad.resize(m);
  for (int r = 0; r < m; ++r) {
    double p = logistic(belief.mean[sys.idx[r]]);
    sys.nu[r] = obs.y[sys.idx[r]] - p;
    sys.hgrad[r] = p * (1.0 - p);
  }
  sys.s.resize(m, m);
  for (int r = 0; r < m; ++r)
    for (int c = 0; c < m; ++c)
      sys.s(r, c) =
          sys.hgrad[r] * belief.cov(sys.idx[r], sys.idx[c]) * sys.hgrad[c];
  for (int r = 0; r < m; ++r) sys.s(r, r) += obs.noise_var[sys.idx[r]];

  sys.llt.compute(sys.s);
  if (sys.llt.info() != Eigen::Success) {
    sys.s.diagonal().array() += 1e-9;
    sys.llt.compute(sys.s);
    if (sys.llt.info() != Eigen::Success)
      throw NumericError("innovation covariance is not positive definite");
  }
  return sys;
}

double loglik_from(const InnovationSystem& sys) {
  const int m = static_cast<int>(sys.idx.size());
  if (m == 0) return 0.0;
  Eigen::VectorXd alpha = sys.llt.solve(sys.nu);
  double logdet = 0.0;
  for (int r = 0; r < m; ++r)
    logdet += 2.0 * std::log(sys.llt.matrixLLT()(r, r));
  return -0.5 * (sys.nu.dot(alpha) + logdet + m * kLog2Pi);
}

}  // namespace

int Observation::unmasked_count() const {
  int n = 0;
  for (auto m : mask) n += m == 0;
  return n;
}

GaussianBelief ekf_predict(const GaussianBelief& belief,
                           const Eigen::MatrixXd& F,
                           const Eigen::MatrixXd& Gamma) {
  GaussianBelief out;
  out.mean = F * belief.mean;
  out.cov = F * belief.cov * F.transpose() + Gamma;
  out.cov = ((out.cov + out.cov.transpose()) / 2.0).eval();
  return out;
}

UpdateResult ekf_update(const GaussianBelief& belief, const Observation& obs) {
  InnovationSystem sys = build_innovation(belief, obs);
  const int m = static_cast<int>(sys.idx.size());
  const int d = static_cast<int>(belief.mean.size());

  UpdateResult out;
  out.loglik = loglik_from(sys);
  if (m == 0) {
    out.belief = belief;
    return out;
  }

  // K = P H^T S^{-1}, with H the unmasked rows of diag(h'(mean))
  Eigen::MatrixXd pht(d, m);
  for (int c = 0; c < m; ++c)
    pht.col(c) = belief.cov.col(sys.idx[c]) * sys.hgrad[c];
  Eigen::MatrixXd gain = sys.llt.solve(pht.transpose()).transpose();

  out.belief.mean = belief.mean + gain * sys.nu;

  // Joseph form: (I - K H) P (I - K H)^T + K Sigma K^T
  Eigen::MatrixXd ikh = Eigen::MatrixXd::Identity(d, d);
  for (int c = 0; c < m; ++c)
    ikh.col(sys.idx[c]) -= gain.col(c) * sys.hgrad[c];
  Eigen::VectorXd sigma(m);
  for (int c = 0; c < m; ++c) sigma[c] = obs.noise_var[sys.idx[c]];
  out.belief.cov = ikh * belief.cov * ikh.transpose() +
                   gain * sigma.asDiagonal() * gain.transpose();
  out.belief.cov =
      ((out.belief.cov + out.belief.cov.transpose()) / 2.0).eval();
  return out;
}

double innovation_loglik(const GaussianBelief& belief, const Observation& obs) {
  return loglik_from(build_innovation(belief, obs));
}

}  // namespace sbtm
