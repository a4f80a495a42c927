#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace fpidual {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

// Finite atomic probability measure. Stands in for every distribution in the
// lab (inputs, weights, fit measures, empirical samples).
struct DiscreteMeasure {
  Mat points;   // one atom per row
  Vec weights;  // nonnegative, sums to 1

  DiscreteMeasure() = default;
  DiscreteMeasure(Mat pts, Vec w) : points(std::move(pts)), weights(std::move(w)) {
    validate();
  }

  Eigen::Index size() const { return points.rows(); }
  Eigen::Index dim() const { return points.cols(); }

  void validate() const {
    require(points.rows() > 0, "DiscreteMeasure: needs at least one atom");
    require(points.rows() == weights.size(),
            "DiscreteMeasure: point/weight count mismatch");
    require(weights.minCoeff() >= 0.0, "DiscreteMeasure: negative weight");
    require(std::abs(weights.sum() - 1.0) <= 1e-12,
            "DiscreteMeasure: weights must sum to 1 within 1e-12");
  }

  static DiscreteMeasure uniform(Mat pts) {
    Eigen::Index n = pts.rows();
    return DiscreteMeasure(std::move(pts), Vec::Constant(n, 1.0 / double(n)));
  }

  // normalizes the given nonnegative weights
  static DiscreteMeasure with_weights(Mat pts, Vec w) {
    double s = w.sum();
    require(s > 0, "DiscreteMeasure: zero total mass");
    return DiscreteMeasure(std::move(pts), w / s);
  }
};

enum class Activation { ReluAlpha, Tanh, Softplus, Arctan, Gelu };

inline double activation_eval(Activation kind, int alpha, double t) {
  switch (kind) {
    case Activation::ReluAlpha: {
      if (t <= 0.0) return 0.0;
      double r = t;
      for (int i = 1; i < alpha; ++i) r *= t;
      return r;
    }
    case Activation::Tanh:
      return std::tanh(t);
    case Activation::Softplus:
      return t > 30.0 ? t : std::log1p(std::exp(t));
    case Activation::Arctan:
      return std::atan(t);
    case Activation::Gelu:
      return t * 0.5 * std::erfc(-t * M_SQRT1_2);
  }
  return 0.0;
}

inline Activation activation_from_string(const std::string& s) {
  if (s == "relu") return Activation::ReluAlpha;
  if (s == "tanh") return Activation::Tanh;
  if (s == "softplus") return Activation::Softplus;
  if (s == "arctan") return Activation::Arctan;
  if (s == "gelu") return Activation::Gelu;
  throw std::invalid_argument("unknown activation: " + s);
}

inline std::string activation_name(Activation a, int alpha = 1) {
  switch (a) {
    case Activation::ReluAlpha: return alpha == 1 ? "relu" : ("relu" + std::to_string(alpha));
    case Activation::Tanh: return "tanh";
    case Activation::Softplus: return "softplus";
    case Activation::Arctan: return "arctan";
    case Activation::Gelu: return "gelu";
  }
  return "?";
}

// phi(x,v) = sigma(x.v), or a tabulated matrix indexed by (input atom, weight atom)
struct ActivationMap {
  Activation kind = Activation::ReluAlpha;
  int alpha = 1;  // relu exponent; ignored otherwise
};

struct TabulatedMap {
  Mat phi;
};

struct FeatureMap {
  std::variant<ActivationMap, TabulatedMap> variant;

  static FeatureMap activation(Activation kind, int alpha = 1) {
    require(alpha >= 1, "FeatureMap: relu exponent must be a positive integer");
    return FeatureMap{ActivationMap{kind, alpha}};
  }
  static FeatureMap tabulated(Mat phi) { return FeatureMap{TabulatedMap{std::move(phi)}}; }
};

// entry (i,j) = phi(x_i, v_j)
inline Mat eval_feature_matrix(const FeatureMap& map, const DiscreteMeasure& X,
                               const DiscreteMeasure& V) {
  if (const auto* t = std::get_if<TabulatedMap>(&map.variant)) {
    require(t->phi.rows() == X.size() && t->phi.cols() == V.size(),
            "eval_feature_matrix: tabulated matrix does not match the measures");
    return t->phi;
  }
  const auto& a = std::get<ActivationMap>(map.variant);
  require(X.dim() == V.dim(), "eval_feature_matrix: input/weight dimension mismatch");
  Mat inner = X.points * V.points.transpose();
  for (Eigen::Index i = 0; i < inner.rows(); ++i)
    for (Eigen::Index j = 0; j < inner.cols(); ++j)
      inner(i, j) = activation_eval(a.kind, a.alpha, inner(i, j));
  return inner;
}

// Function values on the atoms of an input measure.
struct GridFunction {
  Vec values;

  GridFunction() = default;
  explicit GridFunction(Vec v) : values(std::move(v)) {}
  Eigen::Index size() const { return values.size(); }
};

// Coefficients over weight atoms; always paired with the weight measure at use sites.
struct CoefficientVector {
  Vec entries;

  CoefficientVector() = default;
  explicit CoefficientVector(Vec v) : entries(std::move(v)) {}
  Eigen::Index size() const { return entries.size(); }
};

// f_a(x_i) = sum_j pi_j a_j phi(x_i, v_j)
inline GridFunction synthesize(const CoefficientVector& a, const Mat& phi,
                               const DiscreteMeasure& pi) {
  require(a.size() == phi.cols(), "synthesize: coefficient length mismatch");
  require(pi.size() == phi.cols(), "synthesize: weight measure mismatch");
  return GridFunction(phi * pi.weights.cwiseProduct(a.entries));
}

}  // namespace fpidual
