#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "sbtm/metrics.hpp"
#include "sbtm/sbm.hpp"
#include "test_util.hpp"

using namespace sbtm;
using testutil::labels_of;

namespace {

std::vector<int> to_vec(const Eigen::VectorXi& v) {
  return {v.data(), v.data() + v.size()};
}

Eigen::VectorXi planted_labels(int per_class, int k) {
  Eigen::VectorXi labels(per_class * k);
  for (int i = 0; i < labels.size(); ++i) labels[i] = i / per_class + 1;
  return labels;
}

BlockMatrix two_level(int k, double diag, double off) {
  BlockMatrix theta = Eigen::MatrixXd::Constant(k, k, off);
  theta.diagonal().setConstant(diag);
  return theta;
}

}  // namespace

TEST_CASE("degenerate probabilities give complete / empty graphs") {
  Rng rng(1);
  auto labels = planted_labels(4, 2);
  auto full = sample_sbm(labels, two_level(2, 1.0, 1.0), true, rng);
  auto empty = sample_sbm(labels, two_level(2, 0.0, 0.0), true, rng);
  const int n = 8;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      CHECK(full(i, j) == (i == j ? 0 : 1));
      CHECK(empty(i, j) == 0);
    }
}

TEST_CASE("block densities concentrate at theta over repeated draws") {
  // benchmark densities: theta_aa = 0.2580, theta_ab = 0.0834
  const int k = 4, per_class = 32, draws = 100;
  auto labels = planted_labels(per_class, k);
  BlockMatrix theta = two_level(k, 0.2580, 0.0834);
  Rng rng(17);

  Eigen::MatrixXd edge_sum = Eigen::MatrixXd::Zero(k, k);
  for (int d = 0; d < draws; ++d) {
    auto w = sample_sbm(labels, theta, true, rng);
    auto counts = block_counts(w, labels, k, true);
    edge_sum += counts.edges;
  }
  auto one = sample_sbm(labels, theta, true, rng);
  auto pairs = block_counts(one, labels, k, true).pairs;
  for (int a = 0; a < k; ++a)
    for (int b = 0; b < k; ++b) {
      double n_eff = pairs(a, b) * draws;
      double density = edge_sum(a, b) / n_eff;
      double se = std::sqrt(theta(a, b) * (1 - theta(a, b)) / n_eff);
      CHECK(std::abs(density - theta(a, b)) < 3 * se);
    }
}

TEST_CASE("estimate_theta_ml") {
  SUBCASE("complete and empty blocks follow the smoothing rule") {
    auto labels = planted_labels(3, 2);
    Adjacency w = Adjacency::Zero(6, 6);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        if (i != j) w(i, j) = 1;
    auto theta = estimate_theta_ml(w, labels, 2, true);
    CHECK(theta(0, 0) == doctest::Approx(6.5 / 7.0).epsilon(1e-12));
    CHECK(theta(1, 1) == doctest::Approx(0.5 / 7.0).epsilon(1e-12));
    CHECK(theta(0, 1) == doctest::Approx(0.5 / 10.0).epsilon(1e-12));
  }

  SUBCASE("random adjacency matches a direct counting oracle") {
    Rng rng(5);
    const int n = 24, k = 3;
    Eigen::VectorXi labels(n);
    for (int i = 0; i < n; ++i)
      labels[i] = 1 + static_cast<int>(rng.uniform_int(k));
    Adjacency w = Adjacency::Zero(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (i != j && rng.bernoulli(0.3)) w(i, j) = 1;

    auto theta = estimate_theta_ml(w, labels, k, true, 0.0);
    for (int a = 1; a <= k; ++a)
      for (int b = 1; b <= k; ++b) {
        long long m = 0, cnt = 0;
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j) {
            if (i == j || labels[i] != a || labels[j] != b) continue;
            ++cnt;
            m += w(i, j);
          }
        double expect = cnt ? static_cast<double>(m) / cnt : 0.5;
        CHECK(theta(a - 1, b - 1) == doctest::Approx(expect).epsilon(1e-12));
      }
  }

  SUBCASE("class with zero members is an error") {
    auto labels = labels_of({1, 1, 1});
    Adjacency w = Adjacency::Zero(3, 3);
    CHECK_THROWS_AS(estimate_theta_ml(w, labels, 2, true), DataError);
  }
}

TEST_CASE("ML ratios maximize the block likelihood over a grid") {
  Rng rng(23);
  const int n = 18, k = 2;
  Eigen::VectorXi labels = planted_labels(9, 2);
  Adjacency w = Adjacency::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j && rng.bernoulli(0.25)) w(i, j) = 1;

  auto ml = estimate_theta_ml(w, labels, k, true, 0.0);
  double best = block_loglik(w, labels, ml, true);
  CHECK(best == doctest::Approx(profile_loglik(w, labels, k, true)));
  for (int trial = 0; trial < 200; ++trial) {
    BlockMatrix other = ml;
    for (int a = 0; a < k; ++a)
      for (int b = 0; b < k; ++b)
        other(a, b) = std::clamp(
            other(a, b) + (rng.uniform() - 0.5) * 0.2, 1e-6, 1.0 - 1e-6);
    CHECK(block_loglik(w, labels, other, true) <= best + 1e-9);
  }
}

TEST_CASE("spectral_init") {
  SUBCASE("k=1 puts every node in one class") {
    Rng rng(1);
    Adjacency w = Adjacency::Zero(5, 5);
    auto labels = spectral_init(w, 1, rng);
    for (int i = 0; i < 5; ++i) CHECK(labels[i] == 1);
  }

  SUBCASE("two disconnected cliques split along components") {
    const int half = 10, n = 2 * half;
    Adjacency w = Adjacency::Zero(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (i != j && (i < half) == (j < half)) w(i, j) = 1;
    Rng rng(3);
    auto labels = spectral_init(w, 2, rng);
    std::vector<int> components(n);
    for (int i = 0; i < n; ++i) components[i] = i < half ? 1 : 2;
    CHECK(adjusted_rand_index(to_vec(labels), components) ==
          doctest::Approx(1.0));
  }

  SUBCASE("planted 4-block graph at benchmark densities recovers structure") {
    const int k = 4, per_class = 32;
    auto truth = planted_labels(per_class, k);
    BlockMatrix theta = two_level(k, 0.2580, 0.0834);
    Rng rng(11);
    double total_ari = 0;
    const int draws = 20;
    for (int d = 0; d < draws; ++d) {
      auto w = sample_sbm(truth, theta, false, rng);
      auto labels = spectral_init(w, k, rng);
      total_ari += adjusted_rand_index(to_vec(labels), to_vec(truth));
    }
    CHECK(total_ari / draws > 0.5);
  }

  SUBCASE("node permutation permutes the output consistently") {
    const int k = 3, per_class = 12, n = k * per_class;
    auto truth = planted_labels(per_class, k);
    Rng rng(29);
    auto w = sample_sbm(truth, two_level(k, 0.6, 0.05), false, rng);

    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    for (int i = n - 1; i > 0; --i)
      std::swap(perm[i], perm[rng.uniform_int(i + 1)]);
    Adjacency wp(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) wp(perm[i], perm[j]) = w(i, j);

    Rng rng_a(41), rng_b(41);
    auto la = spectral_init(w, k, rng_a);
    auto lp = spectral_init(wp, k, rng_b);
    std::vector<int> la_on_permuted(n);
    for (int i = 0; i < n; ++i) la_on_permuted[perm[i]] = la[i];
    CHECK(adjusted_rand_index(la_on_permuted, to_vec(lp)) ==
          doctest::Approx(1.0));
  }
}

TEST_CASE("static_local_search") {
  SUBCASE("a local maximum is returned unchanged") {
    const int half = 5, n = 2 * half;
    Adjacency w = Adjacency::Zero(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (i != j && (i < half) == (j < half)) w(i, j) = 1;
    Eigen::VectorXi init(n);
    for (int i = 0; i < n; ++i) init[i] = i < half ? 1 : 2;
    Rng rng(2);
    auto res = static_local_search(w, init, 2, true, rng);
    CHECK(res.labels == init);
    CHECK(res.sweeps == 1);
  }

  SUBCASE("reaches the global maximum found by exhaustive enumeration") {
    // 6-node planted 2-block graph; oracle enumerates all 2^6 labelings
    const int n = 6;
    Adjacency w = Adjacency::Zero(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (i != j && (i < 3) == (j < 3)) w(i, j) = 1;

    double global_best = -std::numeric_limits<double>::infinity();
    for (int mask = 0; mask < (1 << n); ++mask) {
      Eigen::VectorXi labels(n);
      for (int i = 0; i < n; ++i) labels[i] = ((mask >> i) & 1) + 1;
      global_best = std::max(global_best, profile_loglik(w, labels, 2, true));
    }

    Rng rng(7);
    auto init = spectral_init(w, 2, rng);
    auto res = static_local_search(w, init, 2, true, rng);
    CHECK(profile_loglik(w, res.labels, 2, true) ==
          doctest::Approx(global_best).epsilon(1e-9));
  }

  SUBCASE("score trajectory is monotone nondecreasing") {
    Rng rng(13);
    const int n = 40;
    Eigen::VectorXi truth = planted_labels(20, 2);
    auto w = sample_sbm(truth, two_level(2, 0.5, 0.1), true, rng);
    Eigen::VectorXi init(n);
    for (int i = 0; i < n; ++i)
      init[i] = 1 + static_cast<int>(rng.uniform_int(2));
    auto res = static_local_search(w, init, 2, true, rng);
    for (std::size_t s = 1; s < res.scores.size(); ++s)
      CHECK(res.scores[s] >= res.scores[s - 1]);
  }
}

TEST_CASE("estimator consistency improves with block size") {
  BlockMatrix theta = two_level(2, 0.35, 0.1);
  auto run = [&](int per_class, std::uint64_t seed) {
    Rng rng(seed);
    auto labels = planted_labels(per_class, 2);
    double err = 0;
    const int reps = 5;
    for (int r = 0; r < reps; ++r) {
      auto w = sample_sbm(labels, theta, true, rng);
      auto est = estimate_theta_ml(w, labels, 2, true, 0.0);
      err += (est - theta).cwiseAbs().maxCoeff();
    }
    return err / reps;
  };
  CHECK(run(100, 31) < run(12, 31));
}
