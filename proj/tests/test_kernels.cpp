#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "fpidual/grids.hpp"
#include "fpidual/kernels.hpp"
#include "fpidual/rng.hpp"

using namespace fpidual;

namespace {
Mat random_features(Rng& rng, int n, int m) {
  Mat phi(n, m);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) phi(i, j) = rng.gaussian();
  return phi;
}
}  // namespace

TEST_CASE("primal kernel closed forms", "[kernels]") {
  SECTION("identity features give scaled identity") {
    int M = 7;
    auto pi = DiscreteMeasure::uniform(Mat::Zero(M, 1));
    auto K = primal_kernel(Mat::Identity(M, M), pi);
    REQUIRE((K.entries - Mat::Identity(M, M) / double(M)).cwiseAbs().maxCoeff() < 1e-15);
  }
  SECTION("all-ones column is rank one") {
    auto pi = DiscreteMeasure::uniform(Mat::Zero(1, 1));
    auto K = primal_kernel(Mat::Ones(5, 1), pi);
    REQUIRE((K.entries - Mat::Ones(5, 5)).cwiseAbs().maxCoeff() < 1e-15);
  }
  SECTION("relu diagonal on the sphere approaches 1/(2d)") {
    for (int d : {3, 5}) {
      auto V = fibonacci_sphere_grid(d, 4000, 7);
      auto X = fibonacci_sphere_grid(d, 40, 3);
      Mat phi = eval_feature_matrix(FeatureMap::activation(Activation::ReluAlpha), X, V);
      auto K = primal_kernel(phi, V);
      double tol = d == 3 ? 2e-2 : 3.5e-2;  // repelled-random grids are rougher
      for (int i = 0; i < X.size(); ++i)
        REQUIRE(K.entries(i, i) == Catch::Approx(1.0 / (2.0 * d)).epsilon(tol));
    }
  }
}

TEST_CASE("dual kernel is the transposed primal", "[kernels]") {
  Rng rng(4);
  Mat phi = random_features(rng, 6, 9);
  auto gamma = DiscreteMeasure::uniform(Mat::Zero(6, 1));
  auto Kd = dual_kernel(phi, gamma);
  auto Kp = primal_kernel(phi.transpose(), gamma);
  REQUIRE((Kd.entries - Kp.entries).cwiseAbs().maxCoeff() == 0.0);
  REQUIRE(Kd.size() == 9);

  // rank of the Gram equals the feature rank
  Eigen::BDCSVD<Mat> s1(phi), s2(Kd.entries);
  s1.setThreshold(1e-10);
  s2.setThreshold(1e-10);
  REQUIRE(s1.rank() == s2.rank());
}

TEST_CASE("mercer decomposition basics", "[kernels]") {
  SECTION("identity kernel, uniform weights") {
    int n = 6;
    auto g = DiscreteMeasure::uniform(Mat::Zero(n, 1));
    auto dec = mercer(KernelMatrix(Mat::Identity(n, n)), g);
    for (int i = 0; i < n; ++i)
      REQUIRE(dec.eigenvalues(i) == Catch::Approx(1.0 / n).margin(1e-12));
  }
  SECTION("all-ones kernel has the constant eigenfunction only") {
    int n = 5;
    auto g = DiscreteMeasure::uniform(Mat::Zero(n, 1));
    auto dec = mercer(KernelMatrix(Mat::Ones(n, n)), g);
    REQUIRE(dec.eigenvalues(0) == Catch::Approx(1.0).margin(1e-12));
    REQUIRE(dec.eigenvalues.tail(n - 1).cwiseAbs().maxCoeff() < 1e-12);
  }
  SECTION("trace identity and weighted orthonormality on random PSD kernels") {
    Rng rng(8);
    for (int rep = 0; rep < 5; ++rep) {
      int n = 10;
      Mat phi = random_features(rng, n, 14);
      Vec w(n);
      for (int i = 0; i < n; ++i) w(i) = rng.uniform() + 0.01;
      auto g = DiscreteMeasure::with_weights(Mat::Zero(n, 1), w);
      auto K = primal_kernel(phi, DiscreteMeasure::uniform(Mat::Zero(14, 1)));
      auto dec = mercer(K, g);
      double tr = g.weights.dot(K.entries.diagonal());
      REQUIRE(dec.eigenvalues.sum() == Catch::Approx(tr).epsilon(1e-10));
      Mat G = dec.eigenfunctions.transpose() * g.weights.asDiagonal() * dec.eigenfunctions;
      REQUIRE((G - Mat::Identity(n, n)).cwiseAbs().maxCoeff() < 1e-8);
      for (int i = 0; i + 1 < n; ++i)
        REQUIRE(dec.eigenvalues(i) >= dec.eigenvalues(i + 1) - 1e-14);
    }
  }
  SECTION("diagonal case reproduces sorted weights") {
    Vec w(4);
    w << 0.4, 0.1, 0.3, 0.2;
    auto g = DiscreteMeasure(Mat::Zero(4, 1), w);
    auto dec = mercer(
        primal_kernel(Mat::Identity(4, 4), DiscreteMeasure::uniform(Mat::Zero(4, 1))), g);
    Vec expect(4);
    expect << 0.1, 0.075, 0.05, 0.025;  // w_i / 4, sorted descending
    REQUIRE((dec.eigenvalues - expect).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("spectral tails", "[kernels]") {
  Rng rng(12);
  Mat phi = random_features(rng, 8, 8);
  auto g = DiscreteMeasure::uniform(Mat::Zero(8, 1));
  auto dec = mercer(primal_kernel(phi, g), g);
  double trace = dec.eigenvalues.sum();
  REQUIRE(spectral_tail(dec, 0) == Catch::Approx(std::sqrt(trace)).epsilon(1e-12));
  REQUIRE(spectral_tail(dec, 8) == 0.0);
  for (int m = 0; m < 8; ++m) {
    REQUIRE(spectral_tail(dec, m) >= spectral_tail(dec, m + 1));
    double lhs = spectral_tail(dec, m) * spectral_tail(dec, m) +
                 dec.eigenvalues.head(m).sum();
    REQUIRE(lhs == Catch::Approx(trace).epsilon(1e-10));
  }
}

TEST_CASE("gram duality of primal and dual spectra", "[kernels]") {
  Rng rng(21);
  Mat phi = random_features(rng, 7, 11);
  Vec wr(7), wp(11);
  for (int i = 0; i < 7; ++i) wr(i) = rng.uniform() + 0.05;
  for (int j = 0; j < 11; ++j) wp(j) = rng.uniform() + 0.05;
  auto rho = DiscreteMeasure::with_weights(Mat::Zero(7, 1), wr);
  auto pi = DiscreteMeasure::with_weights(Mat::Zero(11, 1), wp);
  auto dp = mercer(primal_kernel(phi, pi), rho);
  auto dd = mercer(dual_kernel(phi, rho), pi);
  for (int i = 0; i < 7; ++i)
    REQUIRE(dp.eigenvalues(i) == Catch::Approx(dd.eigenvalues(i)).margin(1e-9));
  REQUIRE(dd.eigenvalues.tail(4).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("minimax lower bound evaluators", "[kernels]") {
  Rng rng(33);
  Mat phi = random_features(rng, 9, 6);
  auto pi = DiscreteMeasure::uniform(Mat::Zero(6, 1));
  auto g1 = DiscreteMeasure::uniform(Mat::Zero(9, 1));
  Vec w2(9);
  for (int i = 0; i < 9; ++i) w2(i) = rng.uniform() + 0.01;
  auto g2 = DiscreteMeasure::with_weights(Mat::Zero(9, 1), w2);

  double single = minimax_lower_noiseless(phi, pi, {g1}, 2);
  REQUIRE(single == Catch::Approx(spectral_tail(mercer(dual_kernel(phi, g1), pi), 2)));
  REQUIRE(minimax_lower_noiseless(phi, pi, {g1, g1}, 2) == Catch::Approx(single));
  double both = minimax_lower_noiseless(phi, pi, {g1, g2}, 2);
  REQUIRE(both >= single - 1e-15);
  REQUIRE_THROWS_AS(minimax_lower_noiseless(phi, pi, {}, 2), std::invalid_argument);

  double lam = minimax_lower_noiseless(phi, pi, {g1}, 3);
  REQUIRE(minimax_lower_noisy(phi, pi, {g1}, 3, 0.0) == 0.0);
  REQUIRE(minimax_lower_noisy(phi, pi, {g1}, 3, 1e9) == Catch::Approx(lam));
  Mat Kd = dual_kernel(phi, g1).entries;
  double strace = std::sqrt(pi.weights.dot(Kd.diagonal()));
  REQUIRE(minimax_lower_noisy(phi, pi, {g1}, 3, strace) == Catch::Approx(lam).epsilon(1e-12));
}

TEST_CASE("relu dual-kernel tail decay on the sphere", "[kernels][slow]") {
  // computed spectra: the squared tail at m=n decays with the tail-sum
  // exponent (2a+1)/(d-1) = 3/2 for relu, d=3; the sqrt tail at half the rate
  int d = 3;
  auto X = fibonacci_sphere_grid(d, 1400, 0);
  auto V = fibonacci_sphere_grid(d, 1000, 5);
  Mat phi = eval_feature_matrix(FeatureMap::activation(Activation::ReluAlpha), X, V);
  auto dec = mercer(dual_kernel(phi, X), V);
  std::vector<double> lm, lv;
  for (int n = 16; n <= 256; n *= 2) {
    double t = spectral_tail(dec, n);
    lm.push_back(std::log(double(n)));
    lv.push_back(std::log(t * t));
  }
  double n_ = double(lm.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (size_t i = 0; i < lm.size(); ++i) {
    sx += lm[i];
    sy += lv[i];
    sxx += lm[i] * lm[i];
    sxy += lm[i] * lv[i];
  }
  double slope = (n_ * sxy - sx * sy) / (n_ * sxx - sx * sx);
  REQUIRE(slope == Catch::Approx(-1.5).epsilon(0.25));
}
