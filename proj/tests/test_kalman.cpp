#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "sbtm/kalman.hpp"
#include "sbtm/model.hpp"
#include "sbtm/rng.hpp"

using namespace sbtm;

namespace {

Observation make_obs(const Eigen::VectorXd& y, const Eigen::VectorXd& var) {
  Observation obs;
  obs.y = y;
  obs.noise_var = var;
  obs.mask.assign(y.size(), 0);
  return obs;
}

GaussianBelief random_belief(int d, Rng& rng) {
  GaussianBelief b;
  b.mean = Eigen::VectorXd::NullaryExpr(d, [&](int) { return rng.normal(); });
  Eigen::MatrixXd a =
      Eigen::MatrixXd::NullaryExpr(d, d, [&](int, int) { return rng.normal(); });
  b.cov = a * a.transpose() + 0.1 * Eigen::MatrixXd::Identity(d, d);
  return b;
}

}  // namespace

TEST_CASE("predict") {
  SUBCASE("identity dynamics with no noise is a no-op") {
    Rng rng(1);
    auto b = random_belief(4, rng);
    auto out = ekf_predict(b, Eigen::MatrixXd::Identity(4, 4),
                           Eigen::MatrixXd::Zero(4, 4));
    CHECK((out.mean - b.mean).cwiseAbs().maxCoeff() == 0.0);
    CHECK((out.cov - b.cov).cwiseAbs().maxCoeff() < 1e-14);
  }

  SUBCASE("isotropic noise adds exactly sigma^2 I") {
    Rng rng(2);
    auto b = random_belief(3, rng);
    double s2 = 0.37;
    auto out = ekf_predict(b, Eigen::MatrixXd::Identity(3, 3),
                           s2 * Eigen::MatrixXd::Identity(3, 3));
    CHECK((out.cov - b.cov - s2 * Eigen::MatrixXd::Identity(3, 3))
              .cwiseAbs()
              .maxCoeff() < 1e-14);
  }

  SUBCASE("random dynamics match a dense-matrix oracle") {
    Rng rng(3);
    for (int trial = 0; trial < 20; ++trial) {
      const int d = 5;
      auto b = random_belief(d, rng);
      Eigen::MatrixXd f = Eigen::MatrixXd::NullaryExpr(
          d, d, [&](int, int) { return rng.normal(); });
      Eigen::MatrixXd g0 = Eigen::MatrixXd::NullaryExpr(
          d, d, [&](int, int) { return rng.normal(); });
      Eigen::MatrixXd gamma = g0 * g0.transpose();
      auto out = ekf_predict(b, f, gamma);
      Eigen::VectorXd mean_expect = f * b.mean;
      Eigen::MatrixXd cov_expect = f * b.cov * f.transpose() + gamma;
      CHECK((out.mean - mean_expect).cwiseAbs().maxCoeff() < 1e-12);
      CHECK((out.cov - cov_expect).cwiseAbs().maxCoeff() < 1e-10);
    }
  }
}

TEST_CASE("update") {
  SUBCASE("scalar update matches hand arithmetic") {
    GaussianBelief b;
    b.mean = Eigen::VectorXd::Constant(1, 0.4);
    b.cov = Eigen::MatrixXd::Constant(1, 1, 0.09);
    double y = 0.71, r = 0.02;
    auto out = ekf_update(b, make_obs(Eigen::VectorXd::Constant(1, y),
                                      Eigen::VectorXd::Constant(1, r)));

    double p = 1.0 / (1.0 + std::exp(-0.4));
    double h = p * (1.0 - p);
    double s = h * 0.09 * h + r;
    double gain = 0.09 * h / s;
    double mean_expect = 0.4 + gain * (y - p);
    double cov_expect = (1 - gain * h) * 0.09 * (1 - gain * h) + gain * gain * r;
    double ll_expect =
        -0.5 * ((y - p) * (y - p) / s + std::log(s) + std::log(2 * M_PI));

    CHECK(out.belief.mean[0] == doctest::Approx(mean_expect).epsilon(1e-12));
    CHECK(out.belief.cov(0, 0) == doctest::Approx(cov_expect).epsilon(1e-12));
    CHECK(out.loglik == doctest::Approx(ll_expect).epsilon(1e-12));
  }

  SUBCASE("huge observation noise keeps the posterior at the prior") {
    Rng rng(5);
    auto b = random_belief(4, rng);
    Eigen::VectorXd y = Eigen::VectorXd::Constant(4, 0.5);
    auto out = ekf_update(b, make_obs(y, Eigen::VectorXd::Constant(4, 1e12)));
    CHECK((out.belief.mean - b.mean).cwiseAbs().maxCoeff() < 1e-6);
    CHECK((out.belief.cov - b.cov).cwiseAbs().maxCoeff() < 1e-6);
  }

  SUBCASE("zero innovation leaves the mean and shrinks the covariance") {
    Rng rng(6);
    auto b = random_belief(3, rng);
    Eigen::VectorXd y(3);
    for (int i = 0; i < 3; ++i) y[i] = logistic(b.mean[i]);
    auto out = ekf_update(b, make_obs(y, Eigen::VectorXd::Constant(3, 0.01)));
    CHECK((out.belief.mean - b.mean).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(out.belief.cov.trace() < b.cov.trace());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(b.cov -
                                                       out.belief.cov);
    CHECK(eig.eigenvalues().minCoeff() > -1e-10);  // shrinks in the PSD order
  }

  SUBCASE("masked entries with a diagonal prior stay at their prediction") {
    GaussianBelief b;
    b.mean = Eigen::VectorXd::Constant(4, 0.2);
    b.cov = 0.25 * Eigen::MatrixXd::Identity(4, 4);
    Observation obs = make_obs(Eigen::VectorXd::Constant(4, 0.9),
                               Eigen::VectorXd::Constant(4, 0.001));
    obs.mask[1] = 1;
    obs.mask[3] = 1;
    auto out = ekf_update(b, obs);
    CHECK(out.belief.mean[1] == doctest::Approx(0.2).epsilon(1e-14));
    CHECK(out.belief.mean[3] == doctest::Approx(0.2).epsilon(1e-14));
    CHECK(out.belief.mean[0] > 0.2);
    CHECK(out.belief.cov(1, 1) == doctest::Approx(0.25).epsilon(1e-14));
  }

  SUBCASE("fully masked observation returns the prior with zero loglik") {
    Rng rng(7);
    auto b = random_belief(2, rng);
    Observation obs = make_obs(Eigen::VectorXd::Zero(2),
                               Eigen::VectorXd::Constant(2, 0.1));
    obs.mask.assign(2, 1);
    auto out = ekf_update(b, obs);
    CHECK(out.loglik == 0.0);
    CHECK((out.belief.mean - b.mean).cwiseAbs().maxCoeff() == 0.0);
  }

  SUBCASE("two-state update matches an explicit matrix oracle") {
    GaussianBelief b;
    b.mean = Eigen::VectorXd(2);
    b.mean << -0.3, 1.1;
    b.cov = Eigen::MatrixXd(2, 2);
    b.cov << 0.20, 0.05, 0.05, 0.30;
    Eigen::VectorXd y(2), r(2);
    y << 0.52, 0.61;
    r << 0.01, 0.02;
    auto out = ekf_update(b, make_obs(y, r));

    Eigen::VectorXd p(2), hd(2);
    for (int i = 0; i < 2; ++i) {
      p[i] = 1.0 / (1.0 + std::exp(-b.mean[i]));
      hd[i] = p[i] * (1 - p[i]);
    }
    Eigen::MatrixXd h = hd.asDiagonal();
    Eigen::MatrixXd s = h * b.cov * h.transpose();
    s += r.asDiagonal();
    Eigen::MatrixXd gain = b.cov * h.transpose() * s.inverse();
    Eigen::VectorXd mean_expect = b.mean + gain * (y - p);
    Eigen::MatrixXd ikh = Eigen::MatrixXd::Identity(2, 2) - gain * h;
    Eigen::MatrixXd cov_expect =
        ikh * b.cov * ikh.transpose() +
        gain * Eigen::MatrixXd(r.asDiagonal()) * gain.transpose();
    Eigen::VectorXd nu = y - p;
    double ll_expect = -0.5 * (nu.dot(s.inverse() * nu) +
                               std::log(s.determinant()) + 2 * std::log(2 * M_PI));

    CHECK((out.belief.mean - mean_expect).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((out.belief.cov - cov_expect).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(out.loglik == doctest::Approx(ll_expect).epsilon(1e-12));
  }
}

TEST_CASE("covariance stays numerically PSD across random cycles") {
  Rng rng(8);
  const int d = 6;
  GaussianBelief b;
  b.mean = Eigen::VectorXd::Zero(d);
  b.cov = Eigen::MatrixXd::Identity(d, d);
  Eigen::MatrixXd f = Eigen::MatrixXd::Identity(d, d);
  Eigen::MatrixXd gamma = 0.01 * Eigen::MatrixXd::Identity(d, d);
  for (int cycle = 0; cycle < 500; ++cycle) {
    b = ekf_predict(b, f, gamma);
    Eigen::VectorXd y(d), r(d);
    for (int i = 0; i < d; ++i) {
      y[i] = rng.uniform();
      r[i] = 1e-6 + 0.01 * rng.uniform();
    }
    b = ekf_update(b, make_obs(y, r)).belief;
    CHECK((b.cov - b.cov.transpose()).cwiseAbs().maxCoeff() == 0.0);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(b.cov);
    CHECK(eig.eigenvalues().minCoeff() >= -1e-9);
  }
}

TEST_CASE("innovation_loglik equals the update loglik") {
  Rng rng(9);
  auto b = random_belief(5, rng);
  Eigen::VectorXd y(5), r(5);
  for (int i = 0; i < 5; ++i) {
    y[i] = rng.uniform();
    r[i] = 0.001 + 0.01 * rng.uniform();
  }
  auto obs = make_obs(y, r);
  obs.mask[2] = 1;
  CHECK(innovation_loglik(b, obs) ==
        doctest::Approx(ekf_update(b, obs).loglik).epsilon(1e-15));
}
