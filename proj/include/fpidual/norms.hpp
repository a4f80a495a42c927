#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <optional>

#include "fpidual/linprog.hpp"
#include "fpidual/lp_geometry.hpp"
#include "fpidual/types.hpp"

namespace fpidual {

// L^p(pi) norm of a coefficient function on weight atoms
inline double coeff_norm(const CoefficientVector& a, const DiscreteMeasure& pi, double p) {
  require(a.size() == pi.size(), "coeff_norm: length mismatch");
  return lp_norm_weighted(a.entries, pi.weights, p);
}

// L^q(rho) norm of grid values; q=inf is the grid proxy for the C0 norm
inline double function_norm(const GridFunction& f, const DiscreteMeasure& rho, double q) {
  require(f.size() == rho.size(), "function_norm: length mismatch");
  return lp_norm_weighted(f.values, rho.weights, q);
}

struct FpNormResult {
  double norm = 0.0;
  CoefficientVector attaining;
  double kkt_residual = 0.0;  // optimality residual of the convex route; 0 for closed forms
};

namespace detail {

// particular solution of Phi D_pi a = f with minimal ||a||_{2,pi}
inline Vec min_l2_representation(const GridFunction& f, const Mat& phi, const Vec& pi,
                                 double* rel_residual) {
  Mat B = phi;  // columns scaled by sqrt(pi): b = D_pi^{1/2} a
  Vec sq = pi.cwiseSqrt();
  for (Eigen::Index j = 0; j < B.cols(); ++j) B.col(j) *= sq(j);
  Eigen::BDCSVD<Mat> svd(B, Eigen::ComputeThinU | Eigen::ComputeThinV);
  svd.setThreshold(1e-12);
  Vec b = svd.solve(f.values);
  double fn = f.values.norm();
  *rel_residual = (B * b - f.values).norm() / (fn > 0 ? fn : 1.0);
  Vec a(b.size());
  for (Eigen::Index j = 0; j < b.size(); ++j) a(j) = sq(j) > 0 ? b(j) / sq(j) : 0.0;
  return a;
}

// minimize sum_j pi_j |a0 + Z t|^p over t, damped Newton with backtracking;
// returns KKT residual ||Z' grad|| / max(||grad||, eps)
inline double minimize_lp_on_affine(Vec& a, const Mat& Z, const Vec& pi, double p,
                                    double tol, int max_iter = 400) {
  auto value = [&](const Vec& v) {
    double s = 0.0;
    for (Eigen::Index j = 0; j < v.size(); ++j) s += pi(j) * std::pow(std::abs(v(j)), p);
    return s;
  };
  double scale = a.cwiseAbs().maxCoeff() + 1e-30;
  double res = 0.0;
  for (int it = 0; it < max_iter; ++it) {
    Vec g(a.size()), h(a.size());
    for (Eigen::Index j = 0; j < a.size(); ++j) {
      double aj = a(j), abs_a = std::abs(aj);
      g(j) = pi(j) * p * std::pow(abs_a, p - 1.0) * (aj >= 0 ? 1.0 : -1.0);
      h(j) = pi(j) * p * (p - 1.0) * std::pow(std::max(abs_a, 1e-8 * scale), p - 2.0);
    }
    Vec gz = Z.transpose() * g;
    res = gz.norm() / std::max(g.norm(), 1e-300);
    if (res <= tol) break;
    Mat H = Z.transpose() * h.asDiagonal() * Z;
    H.diagonal().array() += 1e-14 * H.diagonal().maxCoeff();
    Vec dt = H.ldlt().solve(-gz);
    double f0 = value(a), step = 1.0;
    Vec dir = Z * dt;
    for (int ls = 0; ls < 60; ++ls) {
      Vec cand = a + step * dir;
      if (value(cand) < f0 - 1e-12 * std::abs(f0) * step) {
        a = cand;
        break;
      }
      step *= 0.5;
      if (ls == 59) {  // Newton stalled; fall back to a small gradient step
        a -= (Z * gz) * (1e-3 * scale / std::max(gz.norm(), 1e-300));
      }
    }
  }
  return res;
}

}  // namespace detail

// ||f||_{F_{p,pi}} on the grid: inf ||a||_{p,pi} s.t. f = synthesize(a).
// p=2 closed form via the weighted pseudo-inverse; p=inf as a linear program;
// other p by damped Newton on the affine feasible set.
inline FpNormResult fp_norm(const GridFunction& f, const Mat& phi, const DiscreteMeasure& pi,
                            double p, double tol = 1e-8) {
  require(p > 1.0, "fp_norm: p in (1, inf] required");
  require(f.size() == phi.rows() && pi.size() == phi.cols(), "fp_norm: shape mismatch");
  double rel;
  Vec a2 = detail::min_l2_representation(f, phi, pi.weights, &rel);
  if (rel > 1e-9)
    throw std::runtime_error("fp_norm: f outside the representable span (residual " +
                             std::to_string(rel) + ")");
  FpNormResult out;
  if (p == 2.0) {
    out.attaining = CoefficientVector(a2);
    out.norm = coeff_norm(out.attaining, pi, 2.0);
    return out;
  }
  const Eigen::Index M = phi.cols();
  if (std::isinf(p)) {
    // min tau st |a_j| <= tau on pi_j>0, Phi D_pi a = f.
    // variables [a+, a-, s, tau]
    std::vector<Eigen::Index> sup;
    for (Eigen::Index j = 0; j < M; ++j)
      if (pi.weights(j) > 0) sup.push_back(j);
    Eigen::Index S = Eigen::Index(sup.size());
    Mat A = Mat::Zero(f.size() + S, 2 * M + S + 1);
    Vec b(f.size() + S), c = Vec::Zero(2 * M + S + 1);
    Mat MD = phi * pi.weights.asDiagonal();
    A.block(0, 0, f.size(), M) = MD;
    A.block(0, M, f.size(), M) = -MD;
    b.head(f.size()) = f.values;
    for (Eigen::Index k = 0; k < S; ++k) {
      A(f.size() + k, sup[size_t(k)]) = 1.0;
      A(f.size() + k, M + sup[size_t(k)]) = 1.0;
      A(f.size() + k, 2 * M + k) = 1.0;
      A(f.size() + k, 2 * M + S) = -1.0;
      b(f.size() + k) = 0.0;
    }
    c(2 * M + S) = 1.0;
    LpSolution sol = solve_lp(A, b, c);
    if (!sol.feasible) throw std::runtime_error("fp_norm: infeasible LP (span check passed?)");
    Vec a = sol.x.head(M) - sol.x.segment(M, M);
    out.attaining = CoefficientVector(a);
    out.norm = sol.x(2 * M + S);
    out.kkt_residual = sol.certificate;
    return out;
  }
  // null-space basis of Phi D_pi
  Mat MD = phi * pi.weights.asDiagonal();
  Eigen::BDCSVD<Mat> svd(MD, Eigen::ComputeFullV);
  svd.setThreshold(1e-12);
  Eigen::Index r = svd.rank();
  Vec a = a2;
  if (r < M) {
    Mat Z = svd.matrixV().rightCols(M - r);
    out.kkt_residual = detail::minimize_lp_on_affine(a, Z, pi.weights, p, tol);
    if (out.kkt_residual > tol)
      throw std::runtime_error("fp_norm: optimality residual " +
                               std::to_string(out.kkt_residual) + " above tolerance");
  }
  out.attaining = CoefficientVector(a);
  out.norm = coeff_norm(out.attaining, pi, p);
  return out;
}

struct BarronNormResult {
  double norm = 0.0;
  Vec weights;              // signed combination with f = Phi w
  double lp_certificate = 0.0;
};

// Barron norm on finite atoms: min ||w||_1 s.t. Phi w = f (basis pursuit as an LP)
inline BarronNormResult barron_norm(const GridFunction& f, const Mat& phi) {
  require(f.size() == phi.rows(), "barron_norm: shape mismatch");
  Eigen::BDCSVD<Mat> svd(phi, Eigen::ComputeThinU | Eigen::ComputeThinV);
  svd.setThreshold(1e-12);
  Vec w0 = svd.solve(f.values);
  double fn = f.values.norm();
  if ((phi * w0 - f.values).norm() > 1e-9 * (fn > 0 ? fn : 1.0))
    throw std::runtime_error("barron_norm: f outside the span of the feature columns");
  const Eigen::Index M = phi.cols();
  Mat A(f.size(), 2 * M);
  A.leftCols(M) = phi;
  A.rightCols(M) = -phi;
  Vec c = Vec::Ones(2 * M);
  LpSolution sol = solve_lp(A, f.values, c);
  if (!sol.feasible) throw std::runtime_error("barron_norm: LP infeasible");
  BarronNormResult out;
  out.weights = sol.x.head(M) - sol.x.tail(M);
  out.norm = sol.objective;
  out.lp_certificate = sol.certificate;
  if (out.lp_certificate > 1e-8 * std::max(1.0, out.norm))
    throw std::runtime_error("barron_norm: LP duality residual above tolerance");
  return out;
}

struct BarronAttainingResult {
  bool degenerate = false;   // w == 0
  DiscreteMeasure measure;   // pi* proportional to |w| on the support
  CoefficientVector coeffs;  // a* = sign(w) * ||w||_1 on the support
};

// Jordan-decomposition construction: the F_{p,pi*} norm of the represented
// function equals ||w||_1 for every p in [1,inf].
inline BarronAttainingResult barron_attaining_measure(const Vec& w, const DiscreteMeasure& V) {
  require(w.size() == V.size(), "barron_attaining_measure: length mismatch");
  BarronAttainingResult out;
  double tv = w.cwiseAbs().sum();
  if (tv == 0.0) {
    out.degenerate = true;
    return out;
  }
  std::vector<Eigen::Index> sup;
  for (Eigen::Index j = 0; j < w.size(); ++j)
    if (w(j) != 0.0) sup.push_back(j);
  Mat pts(Eigen::Index(sup.size()), V.dim());
  Vec pw(Eigen::Index(sup.size())), a(Eigen::Index(sup.size()));
  for (size_t k = 0; k < sup.size(); ++k) {
    pts.row(Eigen::Index(k)) = V.points.row(sup[k]);
    pw(Eigen::Index(k)) = std::abs(w(sup[k])) / tv;
    a(Eigen::Index(k)) = (w(sup[k]) > 0 ? 1.0 : -1.0) * tv;
  }
  out.measure = DiscreteMeasure(std::move(pts), std::move(pw));
  out.coeffs = CoefficientVector(std::move(a));
  return out;
}

}  // namespace fpidual
