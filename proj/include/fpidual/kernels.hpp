#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <vector>

#include "fpidual/types.hpp"

namespace fpidual {

struct KernelMatrix {
  Mat entries;
  double psd_tolerance = 1e-10;  // relative

  KernelMatrix() = default;
  explicit KernelMatrix(Mat k, double tol = 1e-10) : entries(std::move(k)), psd_tolerance(tol) {
    require(entries.rows() == entries.cols(), "KernelMatrix: must be square");
    require((entries - entries.transpose()).cwiseAbs().maxCoeff() <= 1e-12 *
                std::max(1.0, entries.cwiseAbs().maxCoeff()),
            "KernelMatrix: not symmetric");
  }
  Eigen::Index size() const { return entries.rows(); }
};

// k_pi(x_i, x_l) = sum_j pi_j phi_ij phi_lj
inline KernelMatrix primal_kernel(const Mat& phi, const DiscreteMeasure& pi) {
  require(phi.cols() == pi.size(), "primal_kernel: column count must match pi");
  Mat K = phi * pi.weights.asDiagonal() * phi.transpose();
  K = 0.5 * (K + K.transpose());
  return KernelMatrix(std::move(K));
}

// dual kernel over weight atoms: k~_gamma(v_j, v_k) = sum_i gamma_i phi_ij phi_ik
inline KernelMatrix dual_kernel(const Mat& phi, const DiscreteMeasure& gamma) {
  require(phi.rows() == gamma.size(), "dual_kernel: row count must match gamma");
  return primal_kernel(phi.transpose(), gamma);
}

// Eigen decomposition of the kernel integral operator on L^2(gamma).
// Eigenfunctions are orthonormal in the gamma-weighted inner product; values on
// zero-weight atoms are set to 0 (the decomposition lives on the support).
struct SpectralDecomposition {
  Vec eigenvalues;    // non-increasing, clamped at 0
  Mat eigenfunctions; // columns; gamma-orthonormal
  DiscreteMeasure measure;
};

inline SpectralDecomposition mercer(const KernelMatrix& K, const DiscreteMeasure& gamma) {
  require(K.size() == gamma.size(), "mercer: kernel and measure sizes differ");
  const Eigen::Index n = K.size();
  Vec sq = gamma.weights.cwiseSqrt();
  Mat S = sq.asDiagonal() * K.entries * sq.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Mat> es(S);
  if (es.info() != Eigen::Success) throw std::runtime_error("mercer: eigensolver failed");
  Vec lam = es.eigenvalues().reverse();
  Mat U = es.eigenvectors().rowwise().reverse();
  double lmax = std::max(lam.maxCoeff(), 0.0);
  if (lam.minCoeff() < -K.psd_tolerance * std::max(lmax, 1e-300))
    throw std::runtime_error("mercer: kernel violates the PSD tolerance");
  for (Eigen::Index i = 0; i < n; ++i) lam(i) = std::max(lam(i), 0.0);
  Mat E(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index k = 0; k < n; ++k)
      E(i, k) = sq(i) > 0 ? U(i, k) / sq(i) : 0.0;
  return SpectralDecomposition{std::move(lam), std::move(E), gamma};
}

// Lambda(m) = sqrt(sum_{i>m} mu_i); negative round-off clamped
inline double spectral_tail(const SpectralDecomposition& dec, Eigen::Index m) {
  require(m >= 0, "spectral_tail: m >= 0");
  double s = 0.0;
  for (Eigen::Index i = dec.eigenvalues.size() - 1; i >= m; --i)
    s += dec.eigenvalues(i);  // ascending accumulation of the tail
  return std::sqrt(std::max(s, 0.0));
}

// Lower estimate of sup_gamma Lambda_{k~_gamma, pi}(m) over a candidate family.
inline double minimax_lower_noiseless(const Mat& phi, const DiscreteMeasure& pi,
                                      const std::vector<DiscreteMeasure>& gamma_candidates,
                                      Eigen::Index m) {
  require(!gamma_candidates.empty(), "minimax_lower_noiseless: empty candidate list");
  double best = 0.0;
  for (const auto& g : gamma_candidates)
    best = std::max(best, spectral_tail(mercer(dual_kernel(phi, g), pi), m));
  return best;
}

// min(1, sigma / sqrt(s~_rho)) * Lambda~_pi(n); rho = designated data
// distribution = first candidate by convention
inline double minimax_lower_noisy(const Mat& phi, const DiscreteMeasure& pi,
                                  const std::vector<DiscreteMeasure>& gamma_candidates,
                                  Eigen::Index n, double sigma) {
  require(n >= 1, "minimax_lower_noisy: n >= 1");
  require(sigma >= 0.0, "minimax_lower_noisy: sigma >= 0");
  const DiscreteMeasure& rho = gamma_candidates.front();
  Mat Kd = dual_kernel(phi, rho).entries;
  double trace = pi.weights.dot(Kd.diagonal());
  double factor = trace > 0 ? std::min(1.0, sigma / std::sqrt(trace)) : (sigma > 0 ? 1.0 : 0.0);
  return factor * minimax_lower_noiseless(phi, pi, gamma_candidates, n);
}

// CSV export `index,eigenvalue,tail_lambda`
inline void write_spectrum_csv(const std::string& path, const SpectralDecomposition& dec) {
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("cannot write csv: " + path);
  out << "index,eigenvalue,tail_lambda\n" << std::setprecision(17);
  for (Eigen::Index i = 0; i < dec.eigenvalues.size(); ++i)
    out << i << ',' << dec.eigenvalues(i) << ',' << spectral_tail(dec, i) << '\n';
}

}  // namespace fpidual
