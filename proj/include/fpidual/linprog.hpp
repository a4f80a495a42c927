#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "fpidual/types.hpp"

namespace fpidual {

// Dense two-phase primal simplex for  min c'x  s.t.  Ax = b, x >= 0.
// Bland's rule, so it terminates on degenerate problems. Desk scale only.
struct LpSolution {
  Vec x;
  Vec y;              // duals for the equality constraints
  double objective = 0.0;
  bool feasible = false;
  // max of primal residual, dual infeasibility and complementarity gap
  double certificate = std::numeric_limits<double>::infinity();
};

inline LpSolution solve_lp(const Mat& A_in, const Vec& b_in, const Vec& c_in,
                           int max_iter = 50000) {
  const Eigen::Index m = A_in.rows();
  const Eigen::Index n0 = A_in.cols();
  require(b_in.size() == m && c_in.size() == n0, "solve_lp: shape mismatch");

  Mat A = A_in;
  Vec b = b_in;
  Vec flip = Vec::Ones(m);
  for (Eigen::Index i = 0; i < m; ++i)
    if (b(i) < 0) {
      b(i) = -b(i);
      A.row(i) = -A.row(i);
      flip(i) = -1.0;
    }

  // columns 0..n0-1 structural, n0..n0+m-1 artificial
  Mat T(m, n0 + m);
  T.leftCols(n0) = A;
  T.rightCols(m) = Mat::Identity(m, m);

  std::vector<Eigen::Index> basis(m);
  for (Eigen::Index i = 0; i < m; ++i) basis[i] = n0 + i;

  auto run_phase = [&](const Vec& cost, Eigen::Index ncols) -> bool {
    for (int iter = 0; iter < max_iter; ++iter) {
      Mat B(m, m);
      for (Eigen::Index i = 0; i < m; ++i) B.col(i) = T.col(basis[i]);
      Eigen::PartialPivLU<Mat> lu(B);
      Vec xb = lu.solve(b);
      Vec cb(m);
      for (Eigen::Index i = 0; i < m; ++i) cb(i) = cost(basis[i]);
      Vec y = lu.adjoint().solve(cb);
      // Bland: entering = lowest index with negative reduced cost
      Eigen::Index enter = -1;
      for (Eigen::Index j = 0; j < ncols; ++j) {
        bool in_basis = false;
        for (Eigen::Index i = 0; i < m; ++i)
          if (basis[i] == j) { in_basis = true; break; }
        if (in_basis) continue;
        double red = cost(j) - y.dot(T.col(j));
        if (red < -1e-10) { enter = j; break; }
      }
      if (enter < 0) return true;  // optimal
      Vec d = lu.solve(T.col(enter));
      // ratio test, Bland ties to lowest basis variable index
      Eigen::Index leave = -1;
      double best_ratio = std::numeric_limits<double>::infinity();
      for (Eigen::Index i = 0; i < m; ++i) {
        if (d(i) > 1e-12) {
          double ratio = xb(i) / d(i);
          if (ratio < best_ratio - 1e-14 ||
              (ratio < best_ratio + 1e-14 &&
               (leave < 0 || basis[i] < basis[leave]))) {
            best_ratio = ratio;
            leave = i;
          }
        }
      }
      if (leave < 0) return false;  // unbounded
      basis[leave] = enter;
    }
    throw std::runtime_error("solve_lp: iteration limit reached");
  };

  // phase 1
  Vec cost1 = Vec::Zero(n0 + m);
  cost1.tail(m).setOnes();
  if (!run_phase(cost1, n0 + m)) throw std::runtime_error("solve_lp: phase-1 unbounded");
  {
    Mat B(m, m);
    for (Eigen::Index i = 0; i < m; ++i) B.col(i) = T.col(basis[i]);
    Vec xb = Eigen::PartialPivLU<Mat>(B).solve(b);
    double art = 0.0;
    for (Eigen::Index i = 0; i < m; ++i)
      if (basis[i] >= n0) art += std::abs(xb(i));
    if (art > 1e-9) {
      LpSolution s;
      s.feasible = false;
      return s;
    }
  }

  // phase 2; entering candidates are structural columns only, so artificials
  // can never re-enter, and a degenerate-basic artificial carries zero cost
  Vec cost2 = Vec::Zero(n0 + m);
  cost2.head(n0) = c_in;
  if (!run_phase(cost2, n0)) throw std::runtime_error("solve_lp: unbounded objective");

  LpSolution s;
  s.feasible = true;
  Mat B(m, m);
  for (Eigen::Index i = 0; i < m; ++i) B.col(i) = T.col(basis[i]);
  Eigen::PartialPivLU<Mat> lu(B);
  Vec xb = lu.solve(b);
  s.x = Vec::Zero(n0);
  for (Eigen::Index i = 0; i < m; ++i)
    if (basis[i] < n0) s.x(basis[i]) = xb(i);
  Vec cb(m);
  for (Eigen::Index i = 0; i < m; ++i) cb(i) = cost2(basis[i]);
  Vec y = lu.adjoint().solve(cb);
  s.y = y.cwiseProduct(flip);  // duals for the original (unflipped) rows
  s.objective = c_in.dot(s.x);

  double primal_res = (A_in * s.x - b_in).cwiseAbs().maxCoeff();
  double dual_res = 0.0;
  for (Eigen::Index j = 0; j < n0; ++j)
    dual_res = std::max(dual_res, s.y.dot(A_in.col(j)) - c_in(j));
  double gap = std::abs(s.objective - b_in.dot(s.y));
  s.certificate = std::max({primal_res, dual_res, gap});
  return s;
}

}  // namespace fpidual
