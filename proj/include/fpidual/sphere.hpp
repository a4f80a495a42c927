#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <optional>
#include <vector>

#include "fpidual/gauss_jacobi.hpp"
#include "fpidual/types.hpp"

namespace fpidual {

// dimension of degree-k spherical harmonics on S^{d-1}:
// N(d,0)=1, N(d,k) = ((2k+d-2)/k) * binom(k+d-3, k-1), exact integer arithmetic
inline std::uint64_t multiplicity(int d, int k) {
  require(d >= 2 && k >= 0, "multiplicity: d >= 2, k >= 0");
  if (k == 0) return 1;
  using U = unsigned __int128;
  const U cap = ~U(0) / 4;
  U binom = 1;
  // binom(k+d-3, k-1) with stepwise-exact division
  int n = k + d - 3, r = std::min(k - 1, n - (k - 1));
  for (int i = 1; i <= r; ++i) {
    if (binom > cap) throw std::overflow_error("multiplicity: overflow");
    binom = binom * U(n - r + i) / U(i);
  }
  U num = binom * U(2 * k + d - 2);
  if (num % U(k) != 0) throw std::runtime_error("multiplicity: non-integer intermediate");
  num /= U(k);
  if (num > U(~std::uint64_t(0))) throw std::overflow_error("multiplicity: overflow");
  return std::uint64_t(num);
}

// Legendre polynomials in d dimensions, normalized P_k(1) = 1:
// P_{k+1}(t) = ((2k+d-2) t P_k(t) - k P_{k-1}(t)) / (k+d-2)
struct LegendreBasis {
  int d;
  int max_degree;
  std::vector<double> c_t, c_prev;  // recurrence coefficients per degree

  LegendreBasis(int d_, int max_degree_) : d(d_), max_degree(max_degree_) {
    require(d >= 2, "LegendreBasis: d >= 2");
    require(max_degree >= 0, "LegendreBasis: degree >= 0");
    c_t.resize(max_degree + 1);
    c_prev.resize(max_degree + 1);
    for (int k = 1; k <= max_degree; ++k) {
      c_t[k] = double(2 * k + d - 4) / double(k + d - 3);   // multiplies t*P_{k-1}
      c_prev[k] = double(k - 1) / double(k + d - 3);        // multiplies P_{k-2}
    }
  }

  double eval(int k, double t) const {
    require(k <= max_degree, "legendre_eval: degree above basis maximum");
    double p0 = 1.0;
    if (k == 0) return p0;
    double p1 = t;
    for (int j = 2; j <= k; ++j) {
      double p2 = c_t[j] * t * p1 - c_prev[j] * p0;
      p0 = p1;
      p1 = p2;
    }
    return p1;
  }

  // values of P_0..P_K at t
  void eval_all(double t, std::vector<double>& out) const {
    out.assign(max_degree + 1, 1.0);
    if (max_degree >= 1) out[1] = t;
    for (int j = 2; j <= max_degree; ++j)
      out[j] = c_t[j] * t * out[j - 1] - c_prev[j] * out[j - 2];
  }
};

inline double legendre_eval(const LegendreBasis& basis, int k, double t) {
  return basis.eval(k, t);
}

// normalizing constant of (1-t^2)^{(d-3)/2} on [-1,1]
inline double sphere_weight_mass(int d) {
  return std::exp(0.5 * std::log(M_PI) + std::lgamma(0.5 * (d - 1)) - std::lgamma(0.5 * d));
}

// closed form for relu (alpha=1) on S^{d-1}: kappa(cos th) = (sin th + (pi-th) cos th)/(2 pi d)
inline double relu_kappa_closed_form(int d, double t) {
  double tc = std::clamp(t, -1.0, 1.0);
  double th = std::acos(tc);
  return (std::sin(th) + (M_PI - th) * tc) / (2.0 * M_PI * double(d));
}

// kappa(t) = E[sigma(u1) sigma(t u1 + sqrt(1-t^2) u2)] over the disk marginal
// of the uniform sphere; evaluated by tensorized Gauss-Jacobi with doubling.
struct DotProductProfile {
  int d = 3;
  std::optional<ActivationMap> activation;  // present unless tabulated
  std::vector<double> nodes;                // symmetric Gauss-Jacobi nodes
  std::vector<double> values;               // kappa at the nodes
  double kappa_one = 0.0;
  bool quadrature_warning = false;

  bool has_closed_form() const {
    return activation && activation->kind == Activation::ReluAlpha && activation->alpha == 1;
  }

  double eval(double t) const;  // closed form, pointwise quadrature, or interpolation

  double interpolate(double t) const {
    // barycentric interpolation on the stored nodes (kappa is analytic in theta,
    // and the nodes cluster like Chebyshev points, so this is well conditioned)
    double num = 0.0, den = 0.0;
    double sign = 1.0;
    size_t n = nodes.size();
    for (size_t i = 0; i < n; ++i) {
      double diff = t - nodes[i];
      if (std::abs(diff) < 1e-14) return values[i];
      // weights for near-Chebyshev nodes: (-1)^i sin-like factors; plain
      // (-1)^i sqrt(1-x^2)-free form is adequate at these orders
      double w = sign * std::sqrt(1.0 - nodes[i] * nodes[i] + 1e-300);
      if (i == 0 || i + 1 == n) w *= 0.5;
      num += w / diff * values[i];
      den += w / diff;
      sign = -sign;
    }
    return num / den;
  }
};

namespace detail {

template <typename F>
double kappa_2d_once(int d, double t, int order, F&& sigma) {
  if (d == 2) {
    // circle integral: (1/2pi) int sigma(cos psi) sigma(cos(psi - th)) dpsi
    double th = std::acos(std::clamp(t, -1.0, 1.0));
    int n = 4 * order;
    double s = 0.0;
    for (int i = 0; i < n; ++i) {
      double psi = 2.0 * M_PI * (i + 0.5) / n;
      s += sigma(std::cos(psi)) * sigma(std::cos(psi - th));
    }
    return s / n;
  }
  GaussJacobi gu(order, 0.5 * (d - 3), 0.5 * (d - 3));
  GaussJacobi gs(order, 0.5 * (d - 4), 0.5 * (d - 4));
  double st = std::sqrt(std::max(1.0 - t * t, 0.0));
  double acc = 0.0;
  for (size_t i = 0; i < gu.nodes().size(); ++i) {
    double u = gu.nodes()[i];
    double su = std::sqrt(std::max(1.0 - u * u, 0.0));
    double inner = 0.0;
    for (size_t j = 0; j < gs.nodes().size(); ++j)
      inner += gs.weights()[j] * sigma(t * u + st * su * gs.nodes()[j]);
    acc += gu.weights()[i] * sigma(u) * inner / gs.total_mass();
  }
  return acc / gu.total_mass();
}

}  // namespace detail

inline double DotProductProfile::eval(double t) const {
  if (has_closed_form()) return relu_kappa_closed_form(d, t);
  if (activation) {
    auto sigma = [&](double u) { return activation_eval(activation->kind, activation->alpha, u); };
    double prev = detail::kappa_2d_once(d, t, 128, sigma);
    double cur = detail::kappa_2d_once(d, t, 256, sigma);
    if (std::abs(cur - prev) > 1e-8 * std::max(std::abs(cur), 1e-12))
      cur = detail::kappa_2d_once(d, t, 512, sigma);
    return cur;
  }
  return interpolate(t);
}

inline DotProductProfile kappa_profile(const ActivationMap& act, int d, int order = 96) {
  require(d >= 2, "kappa_profile: d >= 2");
  DotProductProfile p;
  p.d = d;
  p.activation = act;
  auto sigma = [&](double t) { return activation_eval(act.kind, act.alpha, t); };
  // kappa(1) = E[sigma(u)^2] via the 1D marginal
  {
    GaussJacobi g(256, 0.5 * (d - 3), 0.5 * (d - 3));
    p.kappa_one = g.integrate_normalized([&](double u) { return sigma(u) * sigma(u); });
  }
  GaussJacobi tg(order, 0.5 * (d - 3), 0.5 * (d - 3));
  p.nodes.assign(tg.nodes().begin(), tg.nodes().end());
  p.values.resize(p.nodes.size());
  for (size_t i = 0; i < p.nodes.size(); ++i) {
    double t = p.nodes[i];
    if (p.has_closed_form()) {
      p.values[i] = relu_kappa_closed_form(d, t);
      continue;
    }
    double prev = detail::kappa_2d_once(d, t, 64, sigma);
    bool converged = false;
    for (int ord = 128; ord <= 512; ord *= 2) {
      double cur = detail::kappa_2d_once(d, t, ord, sigma);
      if (std::abs(cur - prev) <= 1e-8 * std::max(std::abs(cur), 1e-12)) {
        prev = cur;
        converged = true;
        break;
      }
      prev = cur;
    }
    if (!converged) p.quadrature_warning = true;
    p.values[i] = prev;
  }
  return p;
}

inline DotProductProfile tabulated_profile(int d, std::vector<double> nodes,
                                           std::vector<double> values, double kappa_one) {
  require(nodes.size() == values.size(), "tabulated_profile: node/value mismatch");
  DotProductProfile p;
  p.d = d;
  p.nodes = std::move(nodes);
  p.values = std::move(values);
  p.kappa_one = kappa_one;
  return p;
}

// Spectrum of a dot-product kernel: eigenvalues t_k of multiplicity N(d,k),
// the multiplicity-expanded non-increasing list, and tail sums.
struct SphericalSpectrum {
  int d = 3;
  double kappa_one = 0.0;
  std::vector<double> t_k;
  std::vector<std::uint64_t> mult;
  std::vector<double> lambda;    // expanded, non-increasing
  std::vector<double> tail_sq;   // tail_sq[m] = sum_{j > m} lambda_j (count indexing)

  double trace_partial() const {
    double s = 0.0;
    for (size_t k = 0; k < t_k.size(); ++k) s += double(mult[k]) * t_k[k];
    return s;
  }
  // Lambda(m) = sqrt(sum of eigenvalues past the m-th), per the tail definition
  double lambda_tail(std::size_t m) const {
    if (m >= tail_sq.size()) return 0.0;
    return std::sqrt(std::max(tail_sq[m], 0.0));
  }
  std::size_t count() const { return lambda.size(); }

  void finalize() {
    lambda.clear();
    for (size_t k = 0; k < t_k.size(); ++k)
      lambda.insert(lambda.end(), std::size_t(mult[k]), t_k[k]);
    std::sort(lambda.begin(), lambda.end(), std::greater<double>());
    tail_sq.assign(lambda.size() + 1, 0.0);
    for (std::size_t j = lambda.size(); j-- > 0;)
      tail_sq[j] = tail_sq[j + 1] + lambda[j];  // ascending accumulation
  }
};

namespace detail {

// harmonic coefficients s_k of sigma against the normalized sphere marginal;
// t_k = s_k^2 by Funk-Hecke and the addition theorem
inline std::vector<double> sigma_coefficients(const ActivationMap& act, int d, int K,
                                              int order) {
  const double a = 0.5 * (d - 3);
  const double Z = sphere_weight_mass(d);
  LegendreBasis basis(d, K);
  std::vector<double> s(K + 1, 0.0), P;
  if (act.kind == Activation::ReluAlpha) {
    // split at the kink: integral over [0,1] with t = (1+u)/2, weight (1-u)^a
    GaussJacobi g(order, a, 0.0);
    const double scale = std::pow(2.0, -a) * 0.5 / Z;
    for (size_t i = 0; i < g.nodes().size(); ++i) {
      double u = g.nodes()[i];
      double t = 0.5 * (1.0 + u);
      double smooth = std::pow(0.5 * (3.0 + u), a) * std::pow(t, double(act.alpha));
      basis.eval_all(t, P);
      double w = g.weights()[i] * scale * smooth;
      for (int k = 0; k <= K; ++k) s[std::size_t(k)] += w * P[std::size_t(k)];
    }
    return s;
  }
  GaussJacobi g(order, a, a);
  for (size_t i = 0; i < g.nodes().size(); ++i) {
    double t = g.nodes()[i];
    double w = g.weights()[i] / Z * activation_eval(act.kind, act.alpha, t);
    basis.eval_all(t, P);
    for (int k = 0; k <= K; ++k) s[std::size_t(k)] += w * P[std::size_t(k)];
  }
  return s;
}

}  // namespace detail

// t_k = int kappa(t) P_k(t) w_d(t) dt. Activation-backed profiles go through
// the harmonic coefficients of sigma (t_k = s_k^2), which keeps tiny
// eigenvalues at full relative accuracy; tabulated profiles integrate kappa
// against P_k directly on the stored nodes.
inline SphericalSpectrum eigenvalues_tk(const DotProductProfile& profile, int K) {
  require(K >= 0, "eigenvalues_tk: K >= 0");
  SphericalSpectrum spec;
  spec.d = profile.d;
  spec.kappa_one = profile.kappa_one;
  spec.mult.resize(std::size_t(K) + 1);
  for (int k = 0; k <= K; ++k) spec.mult[std::size_t(k)] = multiplicity(profile.d, k);
  spec.t_k.assign(std::size_t(K) + 1, 0.0);

  if (profile.activation) {
    int order = 4 * (K + 1);
    auto s_prev = detail::sigma_coefficients(*profile.activation, profile.d, K, order);
    for (int round = 0; round < 4; ++round) {
      order *= 2;
      auto s_cur = detail::sigma_coefficients(*profile.activation, profile.d, K, order);
      double change = 0.0;
      for (int k = 0; k <= K; ++k) {
        double dk = std::abs(s_cur[std::size_t(k)] - s_prev[std::size_t(k)]);
        change = std::max(change, dk / std::max(std::abs(s_cur[std::size_t(k)]), 1e-13));
      }
      s_prev = std::move(s_cur);
      if (change < 1e-10) break;
    }
    for (int k = 0; k <= K; ++k)
      spec.t_k[std::size_t(k)] = s_prev[std::size_t(k)] * s_prev[std::size_t(k)];
  } else {
    require(int(profile.nodes.size()) >= K + 1,
            "eigenvalues_tk: tabulated profile needs quadrature order >= K+1");
    const double Z = sphere_weight_mass(profile.d);
    GaussJacobi g(int(profile.nodes.size()), 0.5 * (profile.d - 3), 0.5 * (profile.d - 3));
    for (size_t i = 0; i < profile.nodes.size(); ++i)
      require(std::abs(profile.nodes[i] - g.nodes()[i]) <= 1e-10,
              "eigenvalues_tk: tabulated nodes must be the symmetric Gauss-Jacobi nodes");
    LegendreBasis basis(profile.d, K);
    std::vector<double> P;
    for (size_t i = 0; i < profile.nodes.size(); ++i) {
      basis.eval_all(profile.nodes[i], P);
      double w = g.weights()[i] / Z * profile.values[i];
      for (int k = 0; k <= K; ++k) spec.t_k[std::size_t(k)] += w * P[std::size_t(k)];
    }
    double tmax = 0.0;
    for (double t : spec.t_k) tmax = std::max(tmax, t);
    for (double& t : spec.t_k) {
      if (t < -1e-10 * std::max(tmax, 1e-300))
        throw std::runtime_error("eigenvalues_tk: PSD violation, quadrature failure");
      t = std::max(t, 0.0);
    }
  }
  spec.finalize();
  double excess = spec.trace_partial() - profile.kappa_one;
  if (excess > 1e-6 * std::max(profile.kappa_one, 1e-300))
    throw std::runtime_error("eigenvalues_tk: partial trace exceeds kappa(1)");
  return spec;
}

struct DecayFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  int points_used = 0;
};

// least squares of log Lambda(m) against log m; underflowed tails excluded
inline DecayFit fit_decay_exponent(const SphericalSpectrum& spec,
                                   const std::vector<std::size_t>& m_values,
                                   double floor = 1e-13) {
  std::vector<double> lx, ly;
  for (std::size_t m : m_values) {
    double lam = spec.lambda_tail(m);
    if (lam > floor && m > 0) {
      lx.push_back(std::log(double(m)));
      ly.push_back(std::log(lam));
    }
  }
  if (lx.size() < 4)
    throw std::runtime_error("fit_decay_exponent: fewer than 4 usable points");
  double n = double(lx.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  for (size_t i = 0; i < lx.size(); ++i) {
    sx += lx[i];
    sy += ly[i];
    sxx += lx[i] * lx[i];
    sxy += lx[i] * ly[i];
    syy += ly[i] * ly[i];
  }
  DecayFit fit;
  fit.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  fit.intercept = (sy - fit.slope * sx) / n;
  double sse = 0.0, sst = 0.0, ym = sy / n;
  for (size_t i = 0; i < lx.size(); ++i) {
    double pred = fit.slope * lx[i] + fit.intercept;
    sse += (ly[i] - pred) * (ly[i] - pred);
    sst += (ly[i] - ym) * (ly[i] - ym);
  }
  fit.r2 = sst > 0 ? 1.0 - sse / sst : 1.0;
  fit.points_used = int(lx.size());
  return fit;
}

// non-increasing tail rule L(m): either the spectrum's own tail or C/m
struct TailRule {
  enum class Kind { FromSpectrum, COverM } kind = Kind::FromSpectrum;
  const SphericalSpectrum* spectrum = nullptr;
  double c = 1.0;

  static TailRule from_spectrum(const SphericalSpectrum& s) {
    return TailRule{Kind::FromSpectrum, &s, 0.0};
  }
  static TailRule c_over_m(double c) { return TailRule{Kind::COverM, nullptr, c}; }

  double operator()(std::size_t m) const {
    if (kind == Kind::COverM) return c / double(m);
    return spectrum->lambda_tail(m);
  }
  std::size_t max_m() const {
    return kind == Kind::COverM ? std::size_t(1) << 40 : spectrum->count();
  }
};

struct UpperBoundCurve {
  double value = 0.0;
  std::size_t minimizing_m = 1;
  double q_L = 0.0;
  double epsilon_term = 0.0;
  double e_term = 0.0;
};

// inf_m [ sqrt(q_L(d) L(m)) + sqrt(m) (eps(n,sigma,delta) + e(n,delta)) ] with
// eps = (sigma^2 kappa(1)(1+log(1/delta))/n)^{1/4} and
// e = sqrt((kappa(1)^2 log^3 n + kappa(1) log(1/delta)) / n)
inline UpperBoundCurve upper_bound_curve(const TailRule& L, int d, double kappa_one,
                                         double n, double sigma, double delta) {
  require(n >= 1.0, "upper_bound_curve: n >= 1");
  require(delta > 0.0 && delta < 1.0, "upper_bound_curve: delta in (0,1)");
  require(sigma >= 0.0, "upper_bound_curve: sigma >= 0");

  // tabulated m grid: dyadic within the rule's range
  std::vector<std::size_t> ms;
  for (std::size_t m = 1; m <= L.max_m(); m *= 2) ms.push_back(m);

  // monotonicity check of the rule on the tabulated grid
  for (size_t i = 0; i + 1 < ms.size(); ++i)
    if (L(ms[i]) < L(ms[i + 1]) - 1e-12 * std::max(L(ms[i]), 1e-300))
      throw std::invalid_argument("upper_bound_curve: non-monotone tail rule");

  UpperBoundCurve out;
  double qL = 0.0;
  for (std::size_t k = 1; k * std::size_t(d + 1) <= L.max_m(); k *= 2) {
    double denom = L(k * std::size_t(d + 1));
    if (denom <= 0.0) break;
    qL = std::max(qL, L(k) / denom);
  }
  out.q_L = qL;

  double logn = std::log(n);
  out.epsilon_term =
      std::pow(sigma * sigma * kappa_one * (1.0 + std::log(1.0 / delta)) / n, 0.25);
  out.e_term = std::sqrt(
      (kappa_one * kappa_one * logn * logn * logn + kappa_one * std::log(1.0 / delta)) / n);

  double best = std::numeric_limits<double>::infinity();
  std::size_t best_m = 1;
  for (std::size_t m : ms) {
    double lm = L(m);
    if (lm < 0.0) break;
    double v = std::sqrt(qL * lm) + std::sqrt(double(m)) * (out.epsilon_term + out.e_term);
    if (v < best) {
      best = v;
      best_m = m;
    }
  }
  out.value = best;
  out.minimizing_m = best_m;
  return out;
}

// CSV exports: `k,N(d,k),t_k` and `m,lambda_tail`
inline void write_sphere_spectrum_csv(const std::string& path, const SphericalSpectrum& s) {
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("cannot write csv: " + path);
  out << "k,N(d,k),t_k\n" << std::setprecision(17);
  for (size_t k = 0; k < s.t_k.size(); ++k)
    out << k << ',' << s.mult[k] << ',' << s.t_k[k] << '\n';
}

inline void write_sphere_tail_csv(const std::string& path, const SphericalSpectrum& s,
                                  const std::vector<std::size_t>& ms) {
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("cannot write csv: " + path);
  out << "m,lambda_tail\n" << std::setprecision(17);
  for (std::size_t m : ms) out << m << ',' << s.lambda_tail(m) << '\n';
}

}  // namespace fpidual
