#pragma once

#include <cmath>
#include <vector>

#include "fpidual/rng.hpp"
#include "fpidual/types.hpp"

namespace fpidual {

// Quasi-uniform points on S^{d-1} with uniform weights. d=3 uses the Fibonacci
// lattice (rotated by `twist` so independent grids can be decoupled); d=2 is
// the regular circle; d>3 falls back to seeded repelled-random points.
inline DiscreteMeasure fibonacci_sphere_grid(int d, Eigen::Index n, std::uint64_t twist = 0) {
  require(d >= 2, "sphere grid: d >= 2");
  require(n >= 1, "sphere grid: n >= 1");
  Mat pts(n, d);
  if (d == 2) {
    double off = 0.61803398874989484 * double(twist);
    for (Eigen::Index i = 0; i < n; ++i) {
      double th = 2.0 * M_PI * ((double(i) + 0.5) / double(n) + off);
      pts(i, 0) = std::cos(th);
      pts(i, 1) = std::sin(th);
    }
    return DiscreteMeasure::uniform(std::move(pts));
  }
  if (d == 3) {
    const double golden = M_PI * (1.0 + std::sqrt(5.0));
    double off = 2.0 * M_PI * 0.61803398874989484 * double(twist);
    for (Eigen::Index i = 0; i < n; ++i) {
      double z = 1.0 - (2.0 * double(i) + 1.0) / double(n);
      double r = std::sqrt(std::max(1.0 - z * z, 0.0));
      double ph = golden * double(i) + off;
      pts(i, 0) = r * std::cos(ph);
      pts(i, 1) = r * std::sin(ph);
      pts(i, 2) = z;
    }
    return DiscreteMeasure::uniform(std::move(pts));
  }
  // repelled random: gaussian directions plus a few inverse-square repulsion sweeps
  Rng rng = Rng::derive(0x5EEDBA11, std::uint64_t(d), std::uint64_t(n), twist);
  for (Eigen::Index i = 0; i < n; ++i) {
    double nrm = 0.0;
    for (int j = 0; j < d; ++j) {
      pts(i, j) = rng.gaussian();
      nrm += pts(i, j) * pts(i, j);
    }
    pts.row(i) /= std::sqrt(nrm);
  }
  int sweeps = n <= 4500 ? 6 : 2;
  for (int s = 0; s < sweeps; ++s) {
    Mat force = Mat::Zero(n, d);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = i + 1; j < n; ++j) {
        Eigen::RowVectorXd diff = pts.row(i) - pts.row(j);
        double dist2 = diff.squaredNorm() + 1e-12;
        Eigen::RowVectorXd f = diff / (dist2 * std::sqrt(dist2));
        force.row(i) += f;
        force.row(j) -= f;
      }
    double step = 0.5 / double(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      pts.row(i) += step * force.row(i);
      pts.row(i) /= pts.row(i).norm();
    }
  }
  return DiscreteMeasure::uniform(std::move(pts));
}

// covering-radius estimate by random probes (the declared mesh norm of a grid)
inline double mesh_norm_estimate(const DiscreteMeasure& grid, int probes = 2000,
                                 std::uint64_t seed = 1) {
  Rng rng = Rng::derive(seed, 0xBEEF);
  int d = int(grid.dim());
  double worst = 0.0;
  for (int t = 0; t < probes; ++t) {
    Vec x(d);
    double nrm = 0.0;
    for (int j = 0; j < d; ++j) {
      x(j) = rng.gaussian();
      nrm += x(j) * x(j);
    }
    x /= std::sqrt(nrm);
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < grid.size(); ++i) {
      double dist = (grid.points.row(i).transpose() - x).norm();
      best = std::min(best, dist);
    }
    worst = std::max(worst, best);
  }
  return worst;
}

}  // namespace fpidual
