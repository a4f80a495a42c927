#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "fpidual/types.hpp"

namespace fpidual {

// Gauss-Jacobi quadrature for the weight (1-x)^alpha (1+x)^beta on [-1,1].
// Nodes by safeguarded Newton on the orthonormal three-term recurrence,
// weights by the Christoffel-function identity w_i = 1 / sum_k p_k(x_i)^2.
class GaussJacobi {
 public:
  GaussJacobi(int n, double alpha, double beta) : n_(n), alpha_(alpha), beta_(beta) {
    require(n >= 1, "GaussJacobi: order >= 1");
    require(alpha > -1.0 && beta > -1.0, "GaussJacobi: parameters must exceed -1");
    build_recurrence();
    compute_nodes();
    compute_weights();
    double ws = 0.0;
    for (double w : w_) ws += w;
    if (std::abs(ws - mu0_) > 1e-10 * mu0_)
      throw std::runtime_error("GaussJacobi: weight-sum check failed");
  }

  const std::vector<double>& nodes() const { return x_; }
  const std::vector<double>& weights() const { return w_; }
  double total_mass() const { return mu0_; }  // integral of the bare weight

  // integral of f against the weight, normalized to a probability density
  template <typename F>
  double integrate_normalized(F&& f) const {
    double s = 0.0;
    for (int i = 0; i < n_; ++i) s += w_[i] * f(x_[i]);
    return s / mu0_;
  }

 private:
  void build_recurrence() {
    const double a = alpha_, b = beta_;
    mu0_ = std::exp((a + b + 1.0) * std::log(2.0) + std::lgamma(a + 1.0) +
                    std::lgamma(b + 1.0) - std::lgamma(a + b + 2.0));
    ak_.resize(n_);
    bk_.resize(n_ + 1);
    bk_[0] = mu0_;
    ak_[0] = (b - a) / (a + b + 2.0);
    for (int k = 1; k < n_; ++k) {
      double s = 2.0 * k + a + b;
      ak_[k] = (b * b - a * a) / (s * (s + 2.0));
    }
    if (n_ >= 1)
      bk_[1] = 4.0 * (a + 1.0) * (b + 1.0) / ((a + b + 2.0) * (a + b + 2.0) * (a + b + 3.0));
    for (int k = 2; k <= n_; ++k) {
      double s = 2.0 * k + a + b;
      bk_[k] = 4.0 * k * (k + a) * (k + b) * (k + a + b) / (s * s * (s * s - 1.0));
    }
  }

  // orthonormal value and derivative of degree n_ at x
  void eval_pn(double x, double* p, double* dp) const {
    double pm1 = 0.0, dpm1 = 0.0;
    double p0 = 1.0 / std::sqrt(bk_[0]), dp0 = 0.0;
    for (int k = 0; k < n_; ++k) {
      double sb = std::sqrt(bk_[k]);
      double sb1 = std::sqrt(bk_[k + 1]);
      double pn = ((x - ak_[k]) * p0 - sb * pm1) / sb1;
      double dpn = (p0 + (x - ak_[k]) * dp0 - sb * dpm1) / sb1;
      pm1 = p0; dpm1 = dp0;
      p0 = pn; dp0 = dpn;
    }
    *p = p0;
    *dp = dp0;
  }

  void compute_nodes() {
    x_.resize(n_);
    // Tricomi-style asymptotic angles, descending in x
    std::vector<double> guess(n_);
    for (int i = 0; i < n_; ++i) {
      double theta = M_PI * (i + 0.75 + 0.5 * alpha_) / (n_ + 0.5 * (alpha_ + beta_ + 1.0));
      guess[i] = std::cos(theta);
    }
    for (int i = 0; i < n_; ++i) {
      double lo = (i + 1 < n_) ? 0.5 * (guess[i] + guess[i + 1]) : -1.0;
      double hi = (i > 0) ? 0.5 * (guess[i] + guess[i - 1]) : 1.0;
      double x = guess[i];
      double p, dp;
      bool done = false;
      for (int it = 0; it < 200; ++it) {
        eval_pn(x, &p, &dp);
        double step = p / dp;
        double xn = x - step;
        if (!(xn > lo && xn < hi)) xn = 0.5 * (lo + hi);  // safeguard bisection
        eval_pn(xn, &p, &dp);
        // maintain the bracket using the sign of p relative to the endpoints
        if (std::abs(xn - x) <= 1e-15 * (1.0 + std::abs(xn))) {
          x = xn;
          done = true;
          break;
        }
        x = xn;
      }
      (void)done;
      x_[i] = x;
    }
    for (int i = 0; i + 1 < n_; ++i)
      if (!(x_[i] > x_[i + 1]))
        throw std::runtime_error("GaussJacobi: node ordering failure, refine guesses");
  }

  void compute_weights() {
    w_.resize(n_);
    for (int i = 0; i < n_; ++i) {
      double x = x_[i];
      double pm1 = 0.0;
      double p0 = 1.0 / std::sqrt(bk_[0]);
      double s = p0 * p0;
      for (int k = 0; k < n_ - 1; ++k) {
        double pn = ((x - ak_[k]) * p0 - std::sqrt(bk_[k]) * pm1) / std::sqrt(bk_[k + 1]);
        pm1 = p0;
        p0 = pn;
        s += pn * pn;
      }
      w_[i] = 1.0 / s;
    }
  }

  int n_;
  double alpha_, beta_;
  double mu0_ = 0.0;
  std::vector<double> ak_, bk_;
  std::vector<double> x_, w_;
};

}  // namespace fpidual
