#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "fpidual/types.hpp"

namespace fpidual {

inline double holder_conjugate(double p) {
  if (std::isinf(p)) return 1.0;
  if (p == 1.0) return std::numeric_limits<double>::infinity();
  return p / (p - 1.0);
}

// (sum_j w_j |c_j|^p)^{1/p}; p=inf -> max over atoms with w_j > 0.
// Plain lp norm = weights all ones.
inline double lp_norm_weighted(const Vec& c, const Vec& w, double p) {
  require(c.size() == w.size(), "lp_norm_weighted: size mismatch");
  if (std::isinf(p)) {
    double m = 0.0;
    for (Eigen::Index j = 0; j < c.size(); ++j)
      if (w(j) > 0.0) m = std::max(m, std::abs(c(j)));
    return m;
  }
  require(p >= 1.0, "lp norm requires p >= 1");
  double s = 0.0;
  for (Eigen::Index j = 0; j < c.size(); ++j)
    s += w(j) * std::pow(std::abs(c(j)), p);
  return std::pow(s, 1.0 / p);
}

// Constraint set {c : ||c||_{p,weights} <= radius}; unweighted when weights empty.
struct LpBall {
  double p = 2.0;
  double radius = 1.0;
  Vec weights;  // optional; empty = unweighted

  LpBall(double p_, double radius_, Vec w = Vec()) : p(p_), radius(radius_), weights(std::move(w)) {
    require(p >= 1.0, "LpBall: p >= 1 required");
    require(radius > 0.0, "LpBall: radius must be positive");
  }

  Vec weights_or_ones(Eigen::Index n) const {
    if (weights.size() == 0) return Vec::Ones(n);
    require(weights.size() == n, "LpBall: weight length mismatch");
    return weights;
  }

  double norm(const Vec& c) const { return lp_norm_weighted(c, weights_or_ones(c.size()), p); }
  bool contains(const Vec& c, double tol = 1e-9) const { return norm(c) <= radius * (1.0 + tol); }
};

// argmin_{c in ball} <g, c>. Hölder duality gives the closed form; ties at p=1
// break to the lowest index. g = 0 returns the zero vector.
inline Vec lmo_lp(const Vec& g, const LpBall& ball) {
  const Eigen::Index n = g.size();
  require(g.allFinite(), "lmo_lp: gradient must be finite");
  Vec w = ball.weights_or_ones(n);
  if (g.isZero(0.0)) return Vec::Zero(n);

  // substitute u_j = w_j^{1/p} c_j to reduce to the unweighted ball; w_j = 0
  // coordinates stay at 0 to keep the minimum finite.
  if (std::isinf(ball.p)) {
    Vec c(n);
    for (Eigen::Index j = 0; j < n; ++j)
      c(j) = (w(j) > 0.0 && g(j) != 0.0) ? -ball.radius * (g(j) > 0 ? 1.0 : -1.0) : 0.0;
    return c;
  }
  if (ball.p == 1.0) {
    Eigen::Index best = -1;
    double best_score = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (w(j) <= 0.0) continue;
      double score = std::abs(g(j)) / w(j);  // objective gain per unit of weighted-l1 budget
      if (score > best_score) {
        best_score = score;
        best = j;
      }
    }
    if (best < 0) return Vec::Zero(n);
    Vec c = Vec::Zero(n);
    c(best) = -ball.radius / w(best) * (g(best) > 0 ? 1.0 : -1.0);
    return c;
  }
  const double pp = holder_conjugate(ball.p);
  // unweighted in u-coords: u = -r sign(h) |h|^{pp-1} / ||h||_{pp}^{pp-1}, h_j = g_j w_j^{-1/p}
  Vec h(n);
  for (Eigen::Index j = 0; j < n; ++j)
    h(j) = (w(j) > 0.0) ? g(j) * std::pow(w(j), -1.0 / ball.p) : 0.0;
  double hn = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) hn += std::pow(std::abs(h(j)), pp);
  hn = std::pow(hn, 1.0 / pp);
  if (hn == 0.0) return Vec::Zero(n);
  Vec c(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    if (w(j) <= 0.0 || h(j) == 0.0) {
      c(j) = 0.0;
      continue;
    }
    double u = -ball.radius * (h(j) > 0 ? 1.0 : -1.0) *
               std::pow(std::abs(h(j)) / hn, pp - 1.0);
    c(j) = u * std::pow(w(j), -1.0 / ball.p);
  }
  return c;
}

namespace detail {

// solve z + lam*p*w*z^{p-1} = a componentwise for z >= 0. The left side is
// strictly increasing in z: closed forms for p = 1.5 and p = 3, otherwise
// bisection on [0, a] with a Newton polish.
inline Vec shrink_lp(const Vec& a, const Vec& w, double p, double lam) {
  Vec z = a;
  for (Eigen::Index j = 0; j < a.size(); ++j) {
    const double aj = a(j);
    if (aj <= 0.0) {
      z(j) = 0.0;
      continue;
    }
    const double c = lam * p * w(j);
    if (p == 1.5) {  // quadratic in sqrt(z)
      double s = 0.5 * (-c + std::sqrt(c * c + 4.0 * aj));
      z(j) = s * s;
      continue;
    }
    if (p == 3.0) {  // quadratic in z
      z(j) = c > 0 ? (-1.0 + std::sqrt(1.0 + 4.0 * c * aj)) / (2.0 * c) : aj;
      continue;
    }
    auto f = [&](double t) { return t + c * std::pow(t, p - 1.0) - aj; };
    double lo = 0.0, hi = aj;
    for (int it = 0; it < 52; ++it) {
      double mid = 0.5 * (lo + hi);
      (f(mid) < 0.0 ? lo : hi) = mid;
    }
    double zj = 0.5 * (lo + hi);
    for (int it = 0; it < 3 && zj > 0.0; ++it) {
      double fp = 1.0 + c * (p - 1.0) * std::pow(zj, p - 2.0);
      double cand = zj - f(zj) / fp;
      if (cand > lo && cand < hi) zj = cand;
    }
    z(j) = zj;
  }
  return z;
}

}  // namespace detail

// Euclidean projection onto the ball. p=1 by sort-and-threshold, p=2 radial,
// p in (1,2) and (2,inf) by Newton/bisection on the dual multiplier, p=inf clip.
inline Vec project_lp(const Vec& c, const LpBall& ball) {
  const Eigen::Index n = c.size();
  Vec w = ball.weights_or_ones(n);
  if (ball.contains(c, 0.0)) return c;

  if (std::isinf(ball.p)) {
    Vec z = c;
    for (Eigen::Index j = 0; j < n; ++j)
      if (w(j) > 0.0) z(j) = std::clamp(c(j), -ball.radius, ball.radius);
    return z;
  }
  if (ball.p == 2.0) {
    // minimize ||z-c||^2 st sum w z^2 <= r^2: z_j = c_j / (1 + lam w_j)
    double lo = 0.0, hi = 1.0;
    auto norm_at = [&](double lam) {
      double s = 0.0;
      for (Eigen::Index j = 0; j < n; ++j) {
        double z = c(j) / (1.0 + lam * w(j));
        s += w(j) * z * z;
      }
      return std::sqrt(s);
    };
    while (norm_at(hi) > ball.radius) hi *= 2.0;
    for (int it = 0; it < 200 && (hi - lo) > 1e-16 * hi; ++it) {
      double mid = 0.5 * (lo + hi);
      (norm_at(mid) > ball.radius ? lo : hi) = mid;
    }
    double lam = 0.5 * (lo + hi);
    Vec z(n);
    for (Eigen::Index j = 0; j < n; ++j) z(j) = c(j) / (1.0 + lam * w(j));
    return z;
  }
  if (ball.p == 1.0) {
    // weighted soft-threshold: z_j = sign(c_j) max(|c_j| - lam w_j, 0),
    // lam chosen so sum w_j |z_j| = r (KKT of the weighted-l1 projection)
    Vec a = c.cwiseAbs();
    double lo = 0.0, hi = 0.0;
    for (Eigen::Index j = 0; j < n; ++j)
      if (w(j) > 0) hi = std::max(hi, a(j) / w(j));
    auto norm_at = [&](double lam) {
      double s = 0.0;
      for (Eigen::Index j = 0; j < n; ++j)
        s += w(j) * std::max(a(j) - lam * w(j), 0.0);
      return s;
    };
    for (int it = 0; it < 200 && (hi - lo) > 1e-16 * (hi + 1.0); ++it) {
      double mid = 0.5 * (lo + hi);
      (norm_at(mid) > ball.radius ? lo : hi) = mid;
    }
    double lam = 0.5 * (lo + hi);
    Vec z(n);
    for (Eigen::Index j = 0; j < n; ++j)
      z(j) = (c(j) > 0 ? 1.0 : -1.0) * std::max(a(j) - lam * w(j), 0.0);
    return z;
  }

  // general p in (1,2) u (2,inf): dual Newton/bisection on lam with the
  // componentwise shrink subproblem solved by inner Newton
  Vec a = c.cwiseAbs();
  double lo = 0.0, hi = 1.0;
  auto norm_at = [&](double lam) {
    return lp_norm_weighted(detail::shrink_lp(a, w, ball.p, lam), w, ball.p);
  };
  int grow = 0;
  while (norm_at(hi) > ball.radius) {
    hi *= 4.0;
    if (++grow > 200) throw std::runtime_error("project_lp: multiplier bracket failure");
  }
  double residual = std::numeric_limits<double>::infinity();
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (lo + hi);
    double nm = norm_at(mid);
    residual = std::abs(nm - ball.radius);
    (nm > ball.radius ? lo : hi) = mid;
    if ((hi - lo) <= 1e-16 * hi && residual <= 1e-9 * ball.radius) break;
  }
  if (!(residual <= 1e-6 * ball.radius))
    throw std::runtime_error("project_lp: Newton did not converge, residual " +
                             std::to_string(residual));
  Vec z = detail::shrink_lp(a, w, ball.p, 0.5 * (lo + hi));
  for (Eigen::Index j = 0; j < n; ++j) z(j) *= (c(j) > 0 ? 1.0 : -1.0);
  return z;
}

}  // namespace fpidual
