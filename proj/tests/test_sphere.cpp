#include <catch2/catch_amalgamated.hpp>
#include <array>
#include <cmath>
#include <map>

#include "fpidual/grids.hpp"
#include "fpidual/kernels.hpp"
#include "fpidual/rng.hpp"
#include "fpidual/sphere.hpp"

using namespace fpidual;

namespace {

// dimension of harmonic homogeneous polynomials of degree k in 3 variables,
// by brute-force rank of the Laplacian on the monomial basis
int harmonic_dimension_oracle_d3(int k) {
  std::vector<std::array<int, 3>> mono, mono2;
  for (int a = 0; a <= k; ++a)
    for (int b = 0; a + b <= k; ++b) mono.push_back({a, b, k - a - b});
  if (k < 2) return int(mono.size());
  for (int a = 0; a <= k - 2; ++a)
    for (int b = 0; a + b <= k - 2; ++b) mono2.push_back({a, b, k - 2 - a - b});
  std::map<std::array<int, 3>, int> idx;
  for (size_t i = 0; i < mono2.size(); ++i) idx[mono2[i]] = int(i);
  Mat D = Mat::Zero(Eigen::Index(mono2.size()), Eigen::Index(mono.size()));
  for (size_t j = 0; j < mono.size(); ++j) {
    auto [a, b, c] = mono[j];
    if (a >= 2) D(idx.at({a - 2, b, c}), Eigen::Index(j)) += double(a * (a - 1));
    if (b >= 2) D(idx.at({a, b - 2, c}), Eigen::Index(j)) += double(b * (b - 1));
    if (c >= 2) D(idx.at({a, b, c - 2}), Eigen::Index(j)) += double(c * (c - 1));
  }
  Eigen::FullPivLU<Mat> lu(D);
  lu.setThreshold(1e-9);
  return int(mono.size()) - int(lu.rank());
}

}  // namespace

TEST_CASE("spherical harmonic multiplicities", "[sphere]") {
  for (int d : {2, 3, 4, 7, 10}) {
    REQUIRE(multiplicity(d, 0) == 1);
    REQUIRE(multiplicity(d, 1) == std::uint64_t(d));
  }
  for (int k = 0; k <= 8; ++k)
    REQUIRE(multiplicity(3, k) == std::uint64_t(harmonic_dimension_oracle_d3(k)));
  for (int k = 1; k <= 6; ++k) REQUIRE(multiplicity(2, k) == 2);
  REQUIRE(multiplicity(4, 5) == 36);  // (k+1)^2 for d=4
}

TEST_CASE("legendre recurrence and orthogonality", "[sphere]") {
  SECTION("seeds and normalization at 1") {
    for (int d = 3; d <= 10; ++d) {
      LegendreBasis basis(d, 40);
      REQUIRE(basis.eval(0, 0.37) == 1.0);
      REQUIRE(basis.eval(1, 0.37) == Catch::Approx(0.37));
      for (int k = 0; k <= 40; ++k)
        REQUIRE(basis.eval(k, 1.0) == Catch::Approx(1.0).margin(1e-11));
    }
  }
  SECTION("quadrature orthogonality int P_j P_k w_d = delta_jk / N(d,k)") {
    for (int d : {3, 4, 5}) {
      LegendreBasis basis(d, 20);
      GaussJacobi g(64, 0.5 * (d - 3), 0.5 * (d - 3));
      for (int j = 0; j <= 20; ++j)
        for (int k = j; k <= 20; ++k) {
          double v = g.integrate_normalized(
              [&](double t) { return basis.eval(j, t) * basis.eval(k, t); });
          double expect = (j == k) ? 1.0 / double(multiplicity(d, k)) : 0.0;
          REQUIRE(v == Catch::Approx(expect).margin(1e-10));
        }
    }
  }
}

TEST_CASE("relu kappa closed form", "[sphere]") {
  for (int d : {3, 4, 6}) {
    auto prof = kappa_profile(ActivationMap{Activation::ReluAlpha, 1}, d);
    REQUIRE(prof.eval(-1.0) == Catch::Approx(0.0).margin(1e-14));
    REQUIRE(prof.eval(1.0) == Catch::Approx(1.0 / (2.0 * d)).margin(1e-13));
    REQUIRE(prof.kappa_one == Catch::Approx(1.0 / (2.0 * d)).margin(1e-12));
  }
  SECTION("kappa(0) = 1/(2 pi d) at d=3, cross-checked by Monte Carlo") {
    REQUIRE(relu_kappa_closed_form(3, 0.0) == Catch::Approx(1.0 / (6.0 * M_PI)).margin(1e-15));
    Rng rng(99);
    const int n = 10000000;
    double acc = 0.0, acc2 = 0.0;
    for (int i = 0; i < n; ++i) {
      double x = rng.gaussian(), y = rng.gaussian(), z = rng.gaussian();
      double nrm = std::sqrt(x * x + y * y + z * z);
      double v = std::max(x / nrm, 0.0) * std::max(y / nrm, 0.0);
      acc += v;
      acc2 += v * v;
    }
    double mean = acc / n;
    double se = std::sqrt((acc2 / n - mean * mean) / n);
    REQUIRE(std::abs(mean - 1.0 / (6.0 * M_PI)) <= 3.0 * se);
  }
  SECTION("2d quadrature matches the closed form for relu") {
    auto sigma = [](double t) { return std::max(t, 0.0); };
    for (double t : {-0.7, -0.2, 0.0, 0.4, 0.9}) {
      double q = detail::kappa_2d_once(3, t, 512, sigma);
      REQUIRE(q == Catch::Approx(relu_kappa_closed_form(3, t)).margin(2e-7));
    }
  }
}

TEST_CASE("eigenvalue computation", "[sphere]") {
  SECTION("constant kappa is pure degree zero") {
    GaussJacobi g(48, 0.0, 0.0);
    std::vector<double> ones(g.nodes().size(), 1.0);
    auto prof = tabulated_profile(3, {g.nodes().begin(), g.nodes().end()}, ones, 1.0);
    auto spec = eigenvalues_tk(prof, 12);
    REQUIRE(spec.t_k[0] == Catch::Approx(1.0).margin(1e-12));
    for (int k = 1; k <= 12; ++k) REQUIRE(std::abs(spec.t_k[std::size_t(k)]) < 1e-12);
  }
  SECTION("relu odd coefficients vanish beyond degree 1") {
    auto prof = kappa_profile(ActivationMap{Activation::ReluAlpha, 1}, 3);
    auto spec = eigenvalues_tk(prof, 16);
    for (int k : {3, 5, 7}) REQUIRE(std::abs(spec.t_k[std::size_t(k)]) < 1e-10);
    REQUIRE(spec.t_k[0] > 0.0);
    REQUIRE(spec.t_k[1] > 0.0);
    REQUIRE(spec.t_k[2] > 0.0);
  }
  SECTION("trace identity for tanh at d=4, K=30") {
    auto prof = kappa_profile(ActivationMap{Activation::Tanh, 1}, 4);
    auto spec = eigenvalues_tk(prof, 30);
    REQUIRE(spec.trace_partial() == Catch::Approx(prof.kappa_one).margin(1e-6));
  }
  SECTION("tabulated-kappa route agrees with the harmonic route for tanh") {
    int K = 14;
    auto prof = kappa_profile(ActivationMap{Activation::Tanh, 1}, 3, 4 * (K + 1));
    auto spec_h = eigenvalues_tk(prof, K);
    auto prof_tab = tabulated_profile(3, prof.nodes, prof.values, prof.kappa_one);
    auto spec_t = eigenvalues_tk(prof_tab, K);
    for (int k = 0; k <= K; ++k)
      REQUIRE(spec_t.t_k[std::size_t(k)] ==
              Catch::Approx(spec_h.t_k[std::size_t(k)]).margin(1e-9));
  }
}

TEST_CASE("addition theorem reconstructs kappa", "[sphere]") {
  auto prof = kappa_profile(ActivationMap{Activation::Tanh, 1}, 3);
  int K = 40;  // trace deficit well under 1e-6 for tanh
  auto spec = eigenvalues_tk(prof, K);
  double deficit = prof.kappa_one - spec.trace_partial();
  REQUIRE(deficit < 1e-6);
  LegendreBasis basis(3, K);
  Rng rng(7);
  for (int rep = 0; rep < 10; ++rep) {
    double t = 2.0 * rng.uniform() - 1.0;
    double rec = 0.0;
    for (int k = 0; k <= K; ++k)
      rec += double(spec.mult[std::size_t(k)]) * spec.t_k[std::size_t(k)] * basis.eval(k, t);
    REQUIRE(rec == Catch::Approx(prof.eval(t)).margin(deficit + 1e-7));
  }
}

TEST_CASE("sphere tails match a dense mercer decomposition", "[sphere][slow]") {
  auto prof = kappa_profile(ActivationMap{Activation::ReluAlpha, 1}, 3);
  auto spec = eigenvalues_tk(prof, 128);
  auto grid = fibonacci_sphere_grid(3, 2000, 1);
  Mat K(grid.size(), grid.size());
  for (Eigen::Index i = 0; i < grid.size(); ++i)
    for (Eigen::Index j = i; j < grid.size(); ++j) {
      double t = grid.points.row(i).dot(grid.points.row(j));
      K(i, j) = K(j, i) = relu_kappa_closed_form(3, t);
    }
  auto dec = mercer(KernelMatrix(std::move(K)), grid);
  for (std::size_t m = 1; m <= 64; m *= 2)
    REQUIRE(spec.lambda_tail(m) ==
            Catch::Approx(spectral_tail(dec, Eigen::Index(m))).epsilon(0.02));
}

TEST_CASE("decay exponent fitting", "[sphere]") {
  SECTION("synthetic power law lambda_j = j^-3 gives slope -1") {
    SphericalSpectrum spec;
    spec.d = 3;
    spec.kappa_one = 2.0;
    for (int j = 1; j <= 200000; ++j) {
      spec.t_k.push_back(std::pow(double(j), -3.0));
      spec.mult.push_back(1);
    }
    spec.finalize();
    std::vector<std::size_t> ms;
    for (std::size_t m = 16; m <= 4096; m *= 2) ms.push_back(m);
    auto fit = fit_decay_exponent(spec, ms);
    REQUIRE(fit.slope == Catch::Approx(-1.0).margin(0.02));
    REQUIRE(fit.r2 > 0.999);
  }
  SECTION("underflowed tails are excluded; too few points is an error") {
    SphericalSpectrum spec;
    spec.d = 3;
    spec.kappa_one = 1.0;
    spec.t_k = {1e-3, 1e-20, 1e-25, 1e-30};
    spec.mult = {1, 1, 1, 1};
    spec.finalize();
    REQUIRE_THROWS_AS(fit_decay_exponent(spec, {1, 2, 3, 4}), std::runtime_error);
  }
  SECTION("relu d=3: sqrt-tail slope is half the tail-sum exponent 3/2") {
    auto prof = kappa_profile(ActivationMap{Activation::ReluAlpha, 1}, 3);
    auto spec = eigenvalues_tk(prof, 128);
    std::vector<std::size_t> ms;
    for (std::size_t m = 16; m <= 1024; m *= 2) ms.push_back(m);
    auto fit = fit_decay_exponent(spec, ms);
    REQUIRE(2.0 * fit.slope == Catch::Approx(-1.5).epsilon(0.15));
  }
}

TEST_CASE("theorem-style upper bound curve", "[sphere]") {
  SECTION("q_L is exactly d+1 for the C/m rule") {
    auto rule = TailRule::c_over_m(2.5);
    auto curve = upper_bound_curve(rule, 3, 0.17, 1e6, 1.0, 0.05);
    REQUIRE(curve.q_L == Catch::Approx(4.0).margin(1e-12));
  }
  SECTION("noiseless bound strictly decreases along n = 1e3, 1e6, 1e9") {
    auto rule = TailRule::c_over_m(1.0);
    double prev = std::numeric_limits<double>::infinity();
    for (double n : {1e3, 1e6, 1e9}) {
      auto c = upper_bound_curve(rule, 3, 0.2, n, 0.0, 0.05);
      REQUIRE(c.value < prev);
      prev = c.value;
    }
  }
  SECTION("smooth-case slope -1/8 over n in [1e3, 1e9]") {
    auto rule = TailRule::c_over_m(1.0);
    std::vector<double> ln, lv;
    for (double n = 1e3; n <= 1.0000001e9; n *= 10.0) {
      auto c = upper_bound_curve(rule, 3, 0.23, n, 5.0, 0.05);
      ln.push_back(std::log(n));
      lv.push_back(std::log(c.value));
    }
    double nn = double(ln.size()), sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (size_t i = 0; i < ln.size(); ++i) {
      sx += ln[i]; sy += lv[i]; sxx += ln[i] * ln[i]; sxy += ln[i] * lv[i];
    }
    double slope = (nn * sxy - sx * sy) / (nn * sxx - sx * sx);
    REQUIRE(slope == Catch::Approx(-0.125).epsilon(0.10));
  }
}
