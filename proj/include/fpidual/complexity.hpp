#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "fpidual/kernels.hpp"
#include "fpidual/lp_geometry.hpp"
#include "fpidual/norms.hpp"
#include "fpidual/rng.hpp"
#include "fpidual/types.hpp"

namespace fpidual {

inline double golden_section_min(const std::function<double(double)>& h, double lo,
                                 double hi, double tol = 1e-14, int scan = 2000) {
  // coarse scan pins the basin; golden section refines (h is quasiconvex here)
  double best = lo, bestv = h(lo);
  for (int i = 1; i <= scan; ++i) {
    double u = lo + (hi - lo) * double(i) / double(scan);
    double v = h(u);
    if (v < bestv) {
      bestv = v;
      best = u;
    }
  }
  double a = std::max(lo, best - (hi - lo) / double(scan));
  double b = std::min(hi, best + (hi - lo) / double(scan));
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
  double f1 = h(x1), f2 = h(x2);
  while (b - a > tol) {
    if (f1 < f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - gr * (b - a);
      f1 = h(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + gr * (b - a);
      f2 = h(x2);
    }
  }
  return 0.5 * (a + b);
}

// sup { |f(x)| : ||f||_H <= 1, f(x_i) = 0 for i in S } for the grid RKHS of K:
// sqrt(k(x,x) - k_x(S)' K_SS^+ k_x(S)), pseudo-inverse cutoff 1e-10
inline double power_function(const KernelMatrix& K, const std::vector<Eigen::Index>& S,
                             Eigen::Index x) {
  require(x >= 0 && x < K.size(), "power_function: x out of range");
  double kxx = K.entries(x, x);
  if (S.empty()) return std::sqrt(std::max(kxx, 0.0));
  Mat KSS(S.size(), S.size());
  Vec kx(S.size());
  for (size_t i = 0; i < S.size(); ++i) {
    require(S[i] >= 0 && S[i] < K.size(), "power_function: sample index out of range");
    kx(Eigen::Index(i)) = K.entries(S[i], x);
    for (size_t j = 0; j < S.size(); ++j) KSS(Eigen::Index(i), Eigen::Index(j)) = K.entries(S[i], S[j]);
  }
  Eigen::SelfAdjointEigenSolver<Mat> es(KSS);
  const Vec& lam = es.eigenvalues();
  double lmax = std::max(lam.maxCoeff(), 0.0);
  Vec b = es.eigenvectors().transpose() * kx;
  double quad = 0.0;
  for (Eigen::Index i = 0; i < b.size(); ++i)
    if (lam(i) > 1e-10 * std::max(lmax, 1e-300)) quad += b(i) * b(i) / lam(i);
  double val = kxx - quad;
  if (val < 1e-13 * std::abs(kxx)) val = 0.0;  // interpolation kills the value
  return std::sqrt(std::max(val, 0.0));
}

struct ComplexityQuery {
  enum class Space { Rkhs, Fp };
  Space space = Space::Rkhs;

  // Rkhs: kernel over the dense evaluation grid
  KernelMatrix K;
  // Fp: feature matrix over (grid atoms x weight atoms) with weight measure and p
  Mat phi;
  DiscreteMeasure pi;
  double p = 2.0;

  // fit constraint ||f||_{r,nu} <= eps; nu lives on a subset of grid atoms
  std::vector<Eigen::Index> nu_atoms;
  Vec nu_weights;  // same length as nu_atoms; empty = uniform
  double r = 2.0;
  double eps = 0.0;

  // prediction norm (q, rho); q = inf uses the grid max over rho's support
  double q = std::numeric_limits<double>::infinity();
  DiscreteMeasure rho;

  Vec nu_weights_or_uniform() const {
    if (nu_atoms.empty()) return Vec();
    if (nu_weights.size() == 0)
      return Vec::Constant(Eigen::Index(nu_atoms.size()), 1.0 / double(nu_atoms.size()));
    require(nu_weights.size() == Eigen::Index(nu_atoms.size()),
            "ComplexityQuery: nu weight length mismatch");
    return nu_weights;
  }

  void validate() const {
    require(eps >= 0.0, "ComplexityQuery: eps >= 0");
    require(r > 1.0, "ComplexityQuery: r in (1, inf] required");
    require(q >= 1.0, "ComplexityQuery: q >= 1");
  }
};

struct ComplexityResult {
  double value = 0.0;
  GridFunction witness;  // on the evaluation grid
  bool certified = false;
  std::string method;
};

namespace detail {

// min_{u in [0,1]} (u + (1-u) eps^2) * c' (u I + (1-u) B)^{-1} c  and the
// attaining z for sup{ c'z : ||z|| <= 1, z'Bz <= eps^2 } (strong duality)
struct TwoEllipsoid {
  Vec dvals;  // eigenvalues of B
  Mat Q;      // eigenvectors

  explicit TwoEllipsoid(const Mat& B) {
    Eigen::SelfAdjointEigenSolver<Mat> es(B);
    dvals = es.eigenvalues().cwiseMax(0.0);
    Q = es.eigenvectors();
  }

  // feasibility-rescaled primal objective of a candidate direction
  double primal_of(const Vec& z, const Vec& c, double eps) const {
    double n1 = z.norm();
    if (n1 == 0.0) return 0.0;
    double n2 = std::sqrt(std::max(z.dot(Q * dvals.asDiagonal() * (Q.transpose() * z)), 0.0));
    double scale = 1.0 / std::max(n1, eps > 0 ? n2 / eps : (n2 > 0 ? 1e300 : 0.0));
    return std::abs(c.dot(z)) * scale;
  }

  double value(const Vec& c, double eps, Vec* z_out = nullptr) const {
    Vec ct = Q.transpose() * c;
    if (ct.norm() == 0.0) {
      if (z_out) *z_out = Vec::Zero(c.size());
      return 0.0;
    }
    auto h = [&](double u) {
      double s = 0.0;
      for (Eigen::Index i = 0; i < ct.size(); ++i) {
        double den = u + (1.0 - u) * dvals(i);
        s += ct(i) * ct(i) / std::max(den, 1e-300);
      }
      return (u + (1.0 - u) * eps * eps) * s;
    };
    double u = golden_section_min(h, 1e-12, 1.0);
    double val = std::sqrt(std::max(h(u), 0.0));
    if (z_out) {
      // interior KKT candidate plus the two endpoint candidates; the dual
      // parametrization degenerates at the endpoints, so pick the best
      // feasibility-rescaled primal
      double quad = 0.0;
      for (Eigen::Index i = 0; i < ct.size(); ++i) {
        double den = u + (1.0 - u) * dvals(i);
        quad += ct(i) * ct(i) / std::max(den, 1e-300);
      }
      double s = std::sqrt(quad / std::max(u + (1.0 - u) * eps * eps, 1e-300));
      double lam1 = s * u, lam2 = s * (1.0 - u);
      // golden section localizes u only to the value-noise plateau; polish the
      // multipliers by Newton on the active-constraint equations
      if (lam1 > 1e-10 * s && lam2 > 1e-10 * s && eps > 0.0) {
        for (int it = 0; it < 40; ++it) {
          double g1 = -1.0, g2 = -eps * eps;
          double j11 = 0, j12 = 0, j22 = 0;
          for (Eigen::Index i = 0; i < ct.size(); ++i) {
            double den = lam1 + lam2 * dvals(i);
            double zi = ct(i) / std::max(den, 1e-300);
            double zi2 = zi * zi;
            g1 += zi2;
            g2 += dvals(i) * zi2;
            j11 += -2.0 * zi2 / den;
            j12 += -2.0 * zi2 * dvals(i) / den;
            j22 += -2.0 * zi2 * dvals(i) * dvals(i) / den;
          }
          double det = j11 * j22 - j12 * j12;
          if (std::abs(det) < 1e-300) break;
          double dl1 = (j22 * g1 - j12 * g2) / det;
          double dl2 = (-j12 * g1 + j11 * g2) / det;
          double nl1 = lam1 - dl1, nl2 = lam2 - dl2;
          if (!(nl1 > 0.0) || !(nl2 > 0.0)) break;
          lam1 = nl1;
          lam2 = nl2;
          if (std::abs(g1) < 1e-14 && std::abs(g2) < 1e-14 * eps * eps) break;
        }
      }
      Vec zt(ct.size());
      for (Eigen::Index i = 0; i < ct.size(); ++i)
        zt(i) = ct(i) / std::max(lam1 + lam2 * dvals(i), 1e-300);
      Vec z_int = Q * zt;
      Vec z_ball = c / c.norm();  // norm constraint only
      Vec bt(ct.size());          // fit constraint only, on the range of B
      for (Eigen::Index i = 0; i < ct.size(); ++i)
        bt(i) = dvals(i) > 1e-14 * dvals.maxCoeff() ? ct(i) / dvals(i) : 0.0;
      Vec z_fit = Q * bt;
      Vec best = z_int;
      double bestp = primal_of(z_int, c, eps);
      for (const Vec& cand : {z_ball, z_fit}) {
        double p = primal_of(cand, c, eps);
        if (p > bestp) {
          bestp = p;
          best = cand;
        }
      }
      double n1 = best.norm();
      double n2 = std::sqrt(std::max(best.dot(Q * dvals.asDiagonal() * (Q.transpose() * best)), 0.0));
      double scale = 1.0 / std::max(n1, eps > 0 ? n2 / eps : (n2 > 0 ? 1e300 : 0.0));
      *z_out = best * scale;
      if (c.dot(*z_out) < 0) *z_out = -*z_out;
    }
    return val;
  }
};

// whitened RKHS coordinates: f = G z with ||f||_H = ||z||, G = U diag(sqrt(lam))
inline Mat rkhs_whitened_map(const KernelMatrix& K) {
  Eigen::SelfAdjointEigenSolver<Mat> es(K.entries);
  Vec lam = es.eigenvalues().cwiseMax(0.0);
  double lmax = lam.maxCoeff();
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < lam.size(); ++i)
    if (lam(i) > 1e-12 * std::max(lmax, 1e-300)) keep.push_back(i);
  Mat G(K.size(), Eigen::Index(keep.size()));
  for (size_t k = 0; k < keep.size(); ++k)
    G.col(Eigen::Index(k)) = es.eigenvectors().col(keep[k]) * std::sqrt(lam(keep[k]));
  return G;
}

// orthonormal basis of the null space of the given rows (empty rows = identity)
inline Mat nullspace_of_rows(const Mat& rows, Eigen::Index dim) {
  if (rows.rows() == 0) return Mat::Identity(dim, dim);
  Eigen::BDCSVD<Mat> svd(rows, Eigen::ComputeFullV);
  svd.setThreshold(1e-12);
  Eigen::Index r = svd.rank();
  return svd.matrixV().rightCols(dim - r);
}

}  // namespace detail

// I-complexity over the RKHS ball (q in {2, inf}, r = 2): exact routes via the
// two-ellipsoid dual (eps > 0) or null-space restriction (eps = 0)
inline ComplexityResult i_complexity_rkhs(const ComplexityQuery& query) {
  query.validate();
  require(query.space == ComplexityQuery::Space::Rkhs, "i_complexity_rkhs: wrong space");
  require(query.q == 2.0 || std::isinf(query.q),
          "i_complexity_rkhs: q in {2, inf} on the exact path");
  require(query.r == 2.0, "i_complexity_rkhs: exact path requires r = 2");
  const Eigen::Index N = query.K.size();
  ComplexityResult out;
  if (query.K.entries.cwiseAbs().maxCoeff() == 0.0) {
    out.value = 0.0;
    out.witness = GridFunction(Vec::Zero(N));
    out.certified = true;
    out.method = "degenerate-zero-kernel";
    return out;
  }
  Mat G = detail::rkhs_whitened_map(query.K);
  const Eigen::Index rank = G.cols();

  Vec nw = query.nu_weights_or_uniform();
  Mat Gnu(Eigen::Index(query.nu_atoms.size()), rank);
  for (size_t i = 0; i < query.nu_atoms.size(); ++i)
    Gnu.row(Eigen::Index(i)) = G.row(query.nu_atoms[i]);

  if (query.eps == 0.0 && !query.nu_atoms.empty()) {
    // exact interpolation constraints: restrict to the null space of the rows
    Mat Z = detail::nullspace_of_rows(Gnu, rank);
    Mat GZ = G * Z;
    Vec z;
    if (std::isinf(query.q)) {
      Eigen::Index best = 0;
      double bestv = -1.0;
      for (Eigen::Index i = 0; i < N; ++i) {
        double v = GZ.row(i).norm();
        if (v > bestv) {
          bestv = v;
          best = i;
        }
      }
      out.value = bestv;
      Vec t = GZ.row(best).transpose();
      z = Z * (t / std::max(t.norm(), 1e-300));
      out.method = "nullspace-max-row";
    } else {
      Mat W = query.rho.weights.cwiseSqrt().asDiagonal() * GZ;
      Eigen::BDCSVD<Mat> svd(W, Eigen::ComputeThinV);
      out.value = svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
      z = Z * svd.matrixV().col(0);
      out.method = "nullspace-top-singular";
    }
    out.witness = GridFunction(G * z);
    out.certified = true;
    return out;
  }

  // eps > 0 (or no fit constraint at all): two-ellipsoid machinery
  Mat B = Mat::Zero(rank, rank);
  if (!query.nu_atoms.empty())
    B = Gnu.transpose() * nw.asDiagonal() * Gnu;
  detail::TwoEllipsoid te(B);
  double eps = query.nu_atoms.empty() ? 1e300 : query.eps;

  if (std::isinf(query.q)) {
    double bestv = -1.0;
    Vec bestz;
    for (Eigen::Index i = 0; i < N; ++i) {
      if (query.rho.size() == N && query.rho.weights(i) <= 0.0) continue;
      Vec z;
      double v = te.value(G.row(i).transpose(), eps, &z);
      if (v > bestv) {
        bestv = v;
        bestz = z;
      }
    }
    out.witness = GridFunction(G * bestz);
    out.method = "two-ellipsoid-support";
    // certify the dual bound by primal attainment of the recovered witness
    double primal = 0.0;
    for (Eigen::Index i = 0; i < N; ++i)
      primal = std::max(primal, std::abs(out.witness.values(i)));
    out.certified = std::abs(primal - bestv) <= 1e-8 * std::max(bestv, 1e-12);
    out.value = out.certified ? bestv : primal;
    return out;
  }

  // q = 2: dual over the pencil, witness from the leading generalized eigenvector
  Mat M = G.transpose() * query.rho.weights.asDiagonal() * G;
  Eigen::SelfAdjointEigenSolver<Mat> esB(B);
  Vec dvals = esB.eigenvalues().cwiseMax(0.0);
  Mat Q = esB.eigenvectors();
  Mat Mt = Q.transpose() * M * Q;
  auto lam_max = [&](double u, Vec* vec) {
    Vec den(dvals.size());
    for (Eigen::Index i = 0; i < dvals.size(); ++i)
      den(i) = 1.0 / std::sqrt(std::max(u + (1.0 - u) * dvals(i), 1e-300));
    Mat S = den.asDiagonal() * Mt * den.asDiagonal();
    Eigen::SelfAdjointEigenSolver<Mat> es(S);
    if (vec) {
      Vec v = es.eigenvectors().col(dvals.size() - 1);
      *vec = Q * den.cwiseProduct(v);
    }
    return es.eigenvalues()(dvals.size() - 1);
  };
  auto h = [&](double u) { return (u + (1.0 - u) * eps * eps) * lam_max(u, nullptr); };
  double u = golden_section_min(h, 1e-12, 1.0, 1e-14, 400);
  double dual = std::sqrt(std::max(h(u), 0.0));
  // candidate directions: interior KKT point and the two endpoint solutions
  Vec z_int;
  lam_max(u, &z_int);
  Vec z_ball;
  lam_max(1.0 - 1e-15, &z_ball);
  auto rescale = [&](const Vec& z) {
    double n1 = z.norm();
    double n2 = std::sqrt(std::max(z.dot(B * z), 0.0));
    double scale = 1.0 / std::max(n1, (eps > 0 ? n2 / eps : (n2 > 1e-14 ? 1e300 : 0.0)));
    return Vec(z * scale);
  };
  auto primal_of = [&](const Vec& z) {
    Vec f = G * z;
    return std::sqrt(f.cwiseAbs2().dot(query.rho.weights));
  };
  Vec zbest = rescale(z_int);
  double primal = primal_of(zbest);
  Vec zb = rescale(z_ball);
  if (primal_of(zb) > primal) {
    zbest = zb;
    primal = primal_of(zb);
  }
  out.witness = GridFunction(G * zbest);
  out.certified = std::abs(primal - dual) <= 1e-8 * std::max(dual, 1e-12);
  out.value = out.certified ? dual : primal;
  out.method = "two-ellipsoid-pencil";
  return out;
}

namespace detail {

// feasibility machinery for the Fp ball intersected with the r=2 fit ellipsoid
struct FpFeasibleSet {
  const Mat* T;  // Phi D_pi (grid x weights)
  LpBall ball;
  Mat TS;        // rows at nu atoms, weighted
  Vec nw;
  double eps;
  double r;
  bool has_fit;
  Eigen::SelfAdjointEigenSolver<Mat> esQ;  // of TS' D_nw TS (r=2)

  FpFeasibleSet(const Mat& T_, LpBall ball_, const std::vector<Eigen::Index>& nu_atoms,
                const Vec& nu_w, double eps_, double r_)
      : T(&T_), ball(std::move(ball_)), nw(nu_w), eps(eps_), r(r_),
        has_fit(!nu_atoms.empty() && eps_ < 1e299) {
    if (!nu_atoms.empty()) {
      TS.resize(Eigen::Index(nu_atoms.size()), T_.cols());
      for (size_t i = 0; i < nu_atoms.size(); ++i) TS.row(Eigen::Index(i)) = T_.row(nu_atoms[i]);
      if (has_fit && r == 2.0) {
        Mat Qm = TS.transpose() * nw.asDiagonal() * TS;
        esQ.compute(Qm);
      }
    }
  }

  double fit_norm(const Vec& a) const {
    if (TS.rows() == 0) return 0.0;
    Vec f = TS * a;
    return lp_norm_weighted(f, nw, r);
  }

  Vec project_fit(const Vec& x) const {
    // min ||a - x||^2 s.t. a' Q a <= eps^2 with Q = TS' D TS (r = 2 only)
    if (!has_fit || TS.rows() == 0) return x;
    if (std::isinf(r)) {
      // intersection of slabs |(TS a)_i| <= eps: one Dykstra-style sweep pass
      Vec a = x;
      for (Eigen::Index i = 0; i < TS.rows(); ++i) {
        double v = TS.row(i).dot(a);
        double lim = eps;
        if (v > lim) a -= TS.row(i).transpose() * ((v - lim) / TS.row(i).squaredNorm());
        else if (v < -lim) a -= TS.row(i).transpose() * ((v + lim) / TS.row(i).squaredNorm());
      }
      return a;
    }
    const Vec& dv = esQ.eigenvalues();
    Vec xt = esQ.eigenvectors().transpose() * x;
    auto fit_at = [&](double mu) {
      double s = 0.0;
      for (Eigen::Index i = 0; i < dv.size(); ++i) {
        double d = std::max(dv(i), 0.0);
        double z = xt(i) / (1.0 + mu * d);
        s += d * z * z;
      }
      return std::sqrt(std::max(s, 0.0));
    };
    if (fit_at(0.0) <= eps) return x;
    if (eps == 0.0) {
      Vec zt = xt;
      for (Eigen::Index i = 0; i < dv.size(); ++i)
        if (dv(i) > 1e-12 * std::max(dv.maxCoeff(), 1e-300)) zt(i) = 0.0;
      return esQ.eigenvectors() * zt;
    }
    double lo = 0.0, hi = 1.0;
    while (fit_at(hi) > eps) hi *= 4.0;
    for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
      double mid = 0.5 * (lo + hi);
      (fit_at(mid) > eps ? lo : hi) = mid;
    }
    double mu = 0.5 * (lo + hi);
    Vec zt(xt.size());
    for (Eigen::Index i = 0; i < xt.size(); ++i)
      zt(i) = xt(i) / (1.0 + mu * std::max(dv(i), 0.0));
    return esQ.eigenvectors() * zt;
  }

  // Dykstra alternation followed by an exact feasibility clean-up
  Vec project(const Vec& x, int sweeps = 40) const {
    Vec a = x;
    if (!has_fit || TS.rows() == 0) return project_lp(a, ball);
    Vec pinc = Vec::Zero(x.size()), qinc = Vec::Zero(x.size());
    for (int it = 0; it < sweeps; ++it) {
      Vec y = project_fit(a + pinc);
      pinc = a + pinc - y;
      Vec z = project_lp(y + qinc, ball);
      qinc = y + qinc - z;
      if ((a - z).norm() <= 1e-12 * (1.0 + z.norm())) {
        a = z;
        break;
      }
      a = z;
    }
    // guarantee membership: exact fit projection, then scale into the lp ball
    a = project_fit(a);
    double nrm = ball.norm(a);
    if (nrm > ball.radius) a *= ball.radius / nrm * (1.0 - 1e-12);
    return a;
  }
};

// multi-start projected supergradient ascent for sup ||T a||_{q,rho_w} over a
// feasible set; the maximand is convex, so every accepted step improves it
inline std::pair<double, Vec> maximize_norm_over_set(const Mat& T, const FpFeasibleSet& C,
                                                     double q, const Vec& rho_w,
                                                     int restarts, std::uint64_t seed,
                                                     int iters = 300) {
  const Eigen::Index N = T.rows(), M = T.cols();
  auto objective = [&](const Vec& a) { return lp_norm_weighted(T * a, rho_w, q); };
  auto gradient = [&](const Vec& a) {
    Vec f = T * a;
    Vec u(N);
    if (std::isinf(q)) {
      Eigen::Index best = 0;
      double bv = -1.0;
      for (Eigen::Index i = 0; i < N; ++i) {
        double v = std::abs(f(i));
        if (rho_w(i) > 0 && v > bv) {
          bv = v;
          best = i;
        }
      }
      u = Vec::Zero(N);
      u(best) = f(best) >= 0 ? 1.0 : -1.0;
    } else if (q == 1.0) {
      for (Eigen::Index i = 0; i < N; ++i)
        u(i) = rho_w(i) * (f(i) >= 0 ? 1.0 : -1.0);
    } else {
      double nrm = lp_norm_weighted(f, rho_w, q);
      if (nrm <= 0) return Vec(Vec::Zero(M));
      for (Eigen::Index i = 0; i < N; ++i)
        u(i) = rho_w(i) * std::pow(std::abs(f(i)), q - 1.0) * (f(i) >= 0 ? 1.0 : -1.0) /
               std::pow(nrm, q - 1.0);
    }
    return Vec(T.transpose() * u);
  };

  double bestv = 0.0;
  Vec besta = Vec::Zero(M);
  for (int rs = 0; rs < restarts; ++rs) {
    Rng rng = Rng::derive(seed, std::uint64_t(rs));
    Vec a(M);
    for (Eigen::Index j = 0; j < M; ++j) a(j) = rng.gaussian();
    a = C.project(a);
    double cur = objective(a);
    double step = 1.0;
    for (int it = 0; it < iters; ++it) {
      Vec g = gradient(a);
      double gn = g.norm();
      if (gn <= 1e-14) break;
      bool improved = false;
      for (int ls = 0; ls < 25; ++ls) {
        Vec cand = C.project(a + step * g / gn);
        double cv = objective(cand);
        if (cv > cur * (1.0 + 1e-12) || (cur == 0.0 && cv > 0.0)) {
          a = cand;
          cur = cv;
          improved = true;
          step *= 1.6;
          break;
        }
        step *= 0.5;
      }
      if (!improved) break;
    }
    if (cur > bestv) {
      bestv = cur;
      besta = a;
    }
  }
  return {bestv, besta};
}

}  // namespace detail

// I-complexity of the F_{p,pi} unit ball: sup ||f_a||_{q,rho} subject to
// ||a||_{p,pi} <= 1 and ||f_a||_{r,nu} <= eps. Exact SVD route for p=q=2 with
// eps=0; elsewhere multi-start projected gradient ascent (flagged heuristic).
inline ComplexityResult i_complexity_fppi(const ComplexityQuery& query, int restarts = 32,
                                          std::uint64_t seed = 1234) {
  query.validate();
  require(query.space == ComplexityQuery::Space::Fp, "i_complexity_fppi: wrong space");
  require(query.p > 1.0, "i_complexity_fppi: p in (1, inf]");
  const Eigen::Index N = query.phi.rows(), M = query.phi.cols();
  Mat T = query.phi * query.pi.weights.asDiagonal();
  ComplexityResult out;

  const bool exact_route = (query.p == 2.0 && query.q == 2.0 && query.eps == 0.0);
  if (exact_route) {
    // b = D_pi^{1/2} a; value = top singular value of D_rho^{1/2} Phi D_pi^{1/2}
    // restricted to the null space of the sample rows
    Mat A = query.rho.weights.cwiseSqrt().asDiagonal() * query.phi *
            query.pi.weights.cwiseSqrt().asDiagonal();
    Mat rows(Eigen::Index(query.nu_atoms.size()), M);
    Mat G = query.phi * query.pi.weights.cwiseSqrt().asDiagonal();
    for (size_t i = 0; i < query.nu_atoms.size(); ++i)
      rows.row(Eigen::Index(i)) = G.row(query.nu_atoms[i]);
    Mat Z = detail::nullspace_of_rows(rows, M);
    if (Z.cols() == 0) {
      out.value = 0.0;
      out.witness = GridFunction(Vec::Zero(N));
      out.certified = true;
      out.method = "fp-svd-closed-form";
      return out;
    }
    Eigen::BDCSVD<Mat> svd(A * Z, Eigen::ComputeThinV);
    out.value = svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
    Vec b = Z * svd.matrixV().col(0);
    Vec a = b.cwiseQuotient(query.pi.weights.cwiseSqrt().cwiseMax(1e-300));
    out.witness = GridFunction(T * a);
    out.certified = true;
    out.method = "fp-svd-closed-form";
    return out;
  }

  require(query.r == 2.0 || std::isinf(query.r) || query.eps == 0.0 || query.nu_atoms.empty(),
          "i_complexity_fppi: heuristic path supports r in {2, inf}");
  detail::FpFeasibleSet C(T, LpBall(query.p, 1.0, query.pi.weights), query.nu_atoms,
                          query.nu_weights_or_uniform(), query.eps, query.r);
  auto [bestv, besta] =
      detail::maximize_norm_over_set(T, C, query.q, query.rho.weights, restarts, seed);
  out.value = bestv;
  out.witness = GridFunction(T * besta);
  out.certified = false;
  out.method = "fp-multistart-ascent";
  return out;
}

// Proposition-style noisy minimax lower bound: I_rho(F(1), M, sigma/sqrt(n))
inline ComplexityResult minimax_lower_noisy_generic(ComplexityQuery query, Eigen::Index n,
                                                    double sigma, int restarts = 32,
                                                    std::uint64_t seed = 1234) {
  require(n >= 1, "minimax_lower_noisy_generic: n >= 1");
  require(sigma >= 0.0, "minimax_lower_noisy_generic: sigma >= 0");
  query.eps = sigma / std::sqrt(double(n));
  if (query.space == ComplexityQuery::Space::Rkhs) return i_complexity_rkhs(query);
  return i_complexity_fppi(query, restarts, seed);
}

struct RademacherEstimate {
  double mean = 0.0;
  double stderr_ = 0.0;
  int draws = 0;
};

// Monte-Carlo Rademacher complexity of the conjugate-ball class: per draw the
// supremum is exactly (1/n) || sum_i xi_i phi(., v_i) ||_{q,rho}
inline RademacherEstimate rademacher_mc(const Mat& features_on_grid, double q,
                                        const DiscreteMeasure& rho, int draws,
                                        std::uint64_t seed = 7) {
  require(draws >= 100, "rademacher_mc: needs at least 100 draws");
  require(features_on_grid.rows() == rho.size(), "rademacher_mc: grid mismatch");
  const Eigen::Index n = features_on_grid.cols();
  Rng rng = Rng::derive(seed, 0xAD);
  double acc = 0.0, acc2 = 0.0;
  for (int t = 0; t < draws; ++t) {
    Vec xi(n);
    for (Eigen::Index i = 0; i < n; ++i) xi(i) = rng.rademacher();
    double v = lp_norm_weighted(features_on_grid * xi, rho.weights, q) / double(n);
    acc += v;
    acc2 += v * v;
  }
  RademacherEstimate out;
  out.mean = acc / draws;
  out.stderr_ = std::sqrt(std::max(acc2 / draws - out.mean * out.mean, 0.0) / draws);
  out.draws = draws;
  return out;
}

}  // namespace fpidual
