#pragma once

#include <Eigen/Dense>
#include <cmath>

#include "fpidual/kernels.hpp"
#include "fpidual/lp_geometry.hpp"
#include "fpidual/types.hpp"

namespace fpidual {

struct FitResult {
  Vec coefficients;
  double objective = 0.0;
  int iterations = 0;
  double certificate = 0.0;  // Frank-Wolfe gap or KKT residual
  bool constraint_active = false;
  bool certified = true;
};

namespace detail {

// exact solution of min ||y - G u||^2 s.t. ||u|| <= R by bisection on the
// ridge multiplier (the ridge-path norm is monotone in mu)
inline Vec l2_ball_least_squares(const Mat& G, const Vec& y, double R) {
  Mat GtG = G.transpose() * G;
  Vec Gty = G.transpose() * y;
  Eigen::SelfAdjointEigenSolver<Mat> es(GtG);
  const Vec& lam = es.eigenvalues();
  Vec b = es.eigenvectors().transpose() * Gty;
  double lmax = std::max(lam.maxCoeff(), 0.0);
  Vec u0 = Vec::Zero(b.size());
  for (Eigen::Index i = 0; i < b.size(); ++i)
    if (lam(i) > 1e-12 * std::max(lmax, 1e-300)) u0(i) = b(i) / lam(i);
  if (u0.norm() <= R) return es.eigenvectors() * u0;
  auto norm_at = [&](double mu) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < b.size(); ++i) {
      double z = b(i) / (std::max(lam(i), 0.0) + mu);
      s += z * z;
    }
    return std::sqrt(s);
  };
  double lo = 0.0, hi = std::max(Gty.norm() / R, 1e-12);
  while (norm_at(hi) > R) hi *= 4.0;
  for (int it = 0; it < 300 && (hi - lo) > 1e-16 * hi; ++it) {
    double mid = 0.5 * (lo + hi);
    (norm_at(mid) > R ? lo : hi) = mid;
  }
  double mu = 0.5 * (lo + hi);
  Vec u(b.size());
  for (Eigen::Index i = 0; i < b.size(); ++i) u(i) = b(i) / (std::max(lam(i), 0.0) + mu);
  return es.eigenvectors() * u;
}

}  // namespace detail

// Constrained ERM of Eq.-style form: minimize (1/n) || y - (1/m) A c ||^2 over
// an lp ball. Frank-Wolfe with exact line search supplies the optimality
// certificate; projected-gradient polish steps (and the exact ridge route for
// p = 2) accelerate convergence without affecting the certificate's validity.
inline FitResult constrained_ls_fw(const Mat& A, const Vec& y, const LpBall& ball,
                                   int max_iter = 20000, double tol = 1e-6) {
  require(A.rows() == y.size(), "constrained_ls_fw: row mismatch");
  require(tol > 0.0, "constrained_ls_fw: tol must be positive");
  require(A.allFinite() && y.allFinite(), "constrained_ls_fw: inputs must be finite");
  const double n = double(A.rows());
  const double m = double(A.cols());
  Mat B = A / m;

  Vec c = Vec::Zero(A.cols());
  Vec w = ball.weights_or_ones(A.cols());
  if (ball.p == 2.0 && w.minCoeff() > 0) {
    // exact seed: u = W^{1/2} c
    Mat G = B * w.cwiseSqrt().cwiseInverse().asDiagonal();
    Vec u = detail::l2_ball_least_squares(G, y, ball.radius);
    c = u.cwiseQuotient(w.cwiseSqrt());
  }

  Vec r = y - B * c;
  double obj = r.squaredNorm() / n;
  double gap = std::numeric_limits<double>::infinity();
  double step_pg = 0.0;
  {
    // crude spectral-norm upper bound for the initial PG step size
    double fro = B.norm();
    step_pg = n / (2.0 * fro * fro + 1e-300);
  }
  int it = 0;
  for (; it < max_iter; ++it) {
    Vec grad = (-2.0 / n) * (B.transpose() * r);
    Vec s = lmo_lp(grad, ball);
    gap = grad.dot(c - s);
    if (gap <= tol) break;

    // Frank-Wolfe step with exact line search on the quadratic
    Vec d = s - c;
    Vec Bd = B * d;
    double denom = Bd.squaredNorm();
    double gamma = denom > 0 ? std::clamp(r.dot(Bd) / denom, 0.0, 1.0) : 0.0;
    Vec c_fw = c + gamma * d;
    Vec r_fw = y - B * c_fw;
    double obj_fw = r_fw.squaredNorm() / n;

    // projected-gradient trial with adaptive step
    Vec c_pg = project_lp(c - step_pg * grad, ball);
    Vec r_pg = y - B * c_pg;
    double obj_pg = r_pg.squaredNorm() / n;
    if (obj_pg < obj) step_pg *= 1.3;
    else step_pg *= 0.5;

    if (obj_pg < obj_fw) {
      c = c_pg; r = r_pg;
      if (obj_pg > obj - 1e-18 * obj && obj_fw > obj - 1e-18 * obj) {
        obj = std::min(obj_pg, obj_fw);
        continue;  // keep iterating; the gap check decides termination
      }
      obj = obj_pg;
    } else {
      c = c_fw; r = r_fw;
      obj = obj_fw;
    }
  }
  FitResult out;
  out.coefficients = c;
  out.objective = obj;
  out.iterations = it;
  out.certificate = gap;
  out.certified = gap <= tol;
  out.constraint_active = ball.norm(c) >= ball.radius * (1.0 - 1e-7);
  return out;
}

// minimum-norm interpolation: beta = K^+ y with relative eigenvalue cutoff 1e-10
inline Vec min_norm_interpolant(const KernelMatrix& K, const Vec& y) {
  require(K.size() == y.size(), "min_norm_interpolant: size mismatch");
  Eigen::SelfAdjointEigenSolver<Mat> es(K.entries);
  const Vec& lam = es.eigenvalues();
  double lmax = std::max(lam.maxCoeff(), 0.0);
  Vec b = es.eigenvectors().transpose() * y;
  Vec u = Vec::Zero(b.size());
  for (Eigen::Index i = 0; i < b.size(); ++i)
    if (lam(i) > 1e-10 * std::max(lmax, 1e-300)) u(i) = b(i) / lam(i);
  Vec beta = es.eigenvectors() * u;
  double yn = y.norm();
  if ((K.entries * beta - y).norm() > 1e-9 * (yn > 0 ? yn : 1.0))
    throw std::runtime_error("min_norm_interpolant: y is not in the range of K");
  return beta;
}

// f_hat = argmin_{||f||_H <= radius} (1/n) sum (f(x_i) - y_i)^2. Returns the
// min-norm least-squares solution when it is feasible, otherwise bisects the
// ridge parameter until the boundary is met to 1e-8 relative.
inline FitResult norm_constrained_krr(const KernelMatrix& K, const Vec& y, double radius) {
  require(radius > 0.0, "norm_constrained_krr: radius must be positive");
  require(K.size() == y.size(), "norm_constrained_krr: size mismatch");
  const double n = double(K.size());
  Eigen::SelfAdjointEigenSolver<Mat> es(K.entries);
  Vec lam = es.eigenvalues().cwiseMax(0.0);
  double lmax = lam.maxCoeff();
  Vec b = es.eigenvectors().transpose() * y;

  auto beta_of = [&](double mu) {
    Vec u(b.size());
    for (Eigen::Index i = 0; i < b.size(); ++i) {
      double den = lam(i) + n * mu;
      u(i) = (mu == 0.0 && lam(i) <= 1e-10 * std::max(lmax, 1e-300)) ? 0.0 : b(i) / den;
    }
    return (es.eigenvectors() * u).eval();
  };
  auto hnorm = [&](const Vec& beta) {
    double q = beta.dot(K.entries * beta);
    return std::sqrt(std::max(q, 0.0));
  };

  FitResult out;
  Vec beta0 = beta_of(0.0);
  if (hnorm(beta0) <= radius) {
    out.coefficients = beta0;
    out.constraint_active = false;
    Vec r = y - K.entries * beta0;
    out.objective = r.squaredNorm() / n;
    out.certificate = (K.entries * r).norm() / std::max(y.norm(), 1e-300);  // interior KKT
    out.certified = out.certificate <= 1e-7;
    return out;
  }
  double lo = 0.0, hi = 1.0;
  int grow = 0;
  while (hnorm(beta_of(hi)) > radius) {
    hi *= 4.0;
    if (++grow > 300)
      throw std::runtime_error("norm_constrained_krr: bisection bracket failure (norm " +
                               std::to_string(hnorm(beta_of(hi))) + " at mu " +
                               std::to_string(hi) + ")");
  }
  for (int it = 0; it < 400; ++it) {
    double mid = 0.5 * (lo + hi);
    if (hnorm(beta_of(mid)) > radius) lo = mid;
    else hi = mid;
    if (hi - lo <= 1e-15 * hi) break;
  }
  double mu = 0.5 * (lo + hi);
  Vec beta = beta_of(mu);
  double nrm = hnorm(beta);
  if (std::abs(nrm - radius) > 1e-8 * radius) {
    // re-tighten with a few secant steps on the monotone norm profile
    for (int it = 0; it < 60 && std::abs(nrm - radius) > 1e-8 * radius; ++it) {
      mu *= std::pow(nrm / radius, 1.5);
      beta = beta_of(mu);
      nrm = hnorm(beta);
    }
  }
  out.coefficients = beta;
  out.constraint_active = true;
  Vec r = y - K.entries * beta;
  out.objective = r.squaredNorm() / n;
  // boundary KKT: loss gradient K(K beta - y) anti-parallel to norm gradient K beta
  Vec gl = K.entries * (K.entries * beta - y);
  Vec gn = K.entries * beta;
  double denom = gl.norm() * gn.norm();
  out.certificate = denom > 0 ? 1.0 + gl.dot(gn) / denom : 0.0;  // 1 - cos(angle to -gn)
  out.certified = out.certificate <= 1e-5 && std::abs(nrm - radius) <= 1e-8 * radius;
  return out;
}

// f_hat values from a kernel-coefficient pair: rows (n_eval x n_train) times beta
inline GridFunction predict_kernel(const Mat& kernel_rows, const Vec& beta) {
  require(kernel_rows.cols() == beta.size(), "predict_kernel: shape mismatch");
  return GridFunction(kernel_rows * beta);
}

// f_hat values of the (1/m)-scaled random feature model
inline GridFunction predict_features(const Mat& feature_rows, const Vec& c) {
  require(feature_rows.cols() == c.size(), "predict_features: shape mismatch");
  return GridFunction(feature_rows * c / double(feature_rows.cols()));
}

}  // namespace fpidual
