#pragma once

// Frame-level scoring and class-imbalance loss kernels with analytic
// gradients. Nothing here trains anything; the gradients exist so the
// kernels can be checked against finite differences.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "gievents/label_space.hpp"

namespace gievents {

inline constexpr double kDefaultProbEpsilon = 1e-7;
inline constexpr double kDefaultWeightMin = 1.0;
inline constexpr double kDefaultWeightMax = 50.0;

/// Logistic sigmoid, evaluated on the branch that cannot overflow.
inline double sigmoid(double z) {
  if (!std::isfinite(z)) throw Error("sigmoid: non-finite input");
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

struct ClassCounts {
  std::vector<std::uint64_t> pos;
  std::vector<std::uint64_t> neg;

  /// Counts positives/negatives per column of a label matrix.
  static ClassCounts from_labels(const Matrix<std::uint8_t>& labels) {
    ClassCounts counts{std::vector<std::uint64_t>(labels.cols(), 0),
                       std::vector<std::uint64_t>(labels.cols(), 0)};
    for (std::size_t i = 0; i < labels.rows(); ++i) {
      for (std::size_t c = 0; c < labels.cols(); ++c) {
        (labels(i, c) ? counts.pos[c] : counts.neg[c]) += 1;
      }
    }
    return counts;
  }
};

struct ClassWeights {
  std::vector<double> weights;
  double w_min = kDefaultWeightMin;
  double w_max = kDefaultWeightMax;

  static ClassWeights uniform(std::size_t n, double w = 1.0) {
    return {std::vector<double>(n, w), std::min(w, kDefaultWeightMin),
            std::max(w, kDefaultWeightMax)};
  }
};

struct FocalConfig {
  double gamma = 2.0;
};

/// Positive weight neg/pos per class, clipped into [w_min, w_max]. A class
/// without positives has an infinite raw ratio and lands on w_max.
inline ClassWeights class_weights(const ClassCounts& counts, double w_min = kDefaultWeightMin,
                                  double w_max = kDefaultWeightMax) {
  if (!(w_min >= 0.0) || !(w_max >= w_min)) {
    throw Error("class_weights: need 0 <= w_min <= w_max");
  }
  if (counts.pos.size() != counts.neg.size()) {
    throw Error("class_weights: pos/neg count vectors differ in length");
  }
  ClassWeights out{std::vector<double>(counts.pos.size()), w_min, w_max};
  for (std::size_t c = 0; c < counts.pos.size(); ++c) {
    const double raw = counts.pos[c] == 0
                           ? std::numeric_limits<double>::infinity()
                           : static_cast<double>(counts.neg[c]) / static_cast<double>(counts.pos[c]);
    out.weights[c] = std::clamp(raw, w_min, w_max);
  }
  return out;
}

struct LossBreakdown {
  std::vector<double> per_class;
  double total = 0.0;
};

namespace detail {

inline void check_loss_shapes(std::size_t prob_rows, std::size_t prob_cols,
                              const Matrix<std::uint8_t>& labels, const ClassWeights& w) {
  if (prob_rows != labels.rows() || prob_cols != labels.cols()) {
    throw Error("loss: prediction/label dimension mismatch (" + std::to_string(prob_rows) + "x" +
                std::to_string(prob_cols) + " vs " + std::to_string(labels.rows()) + "x" +
                std::to_string(labels.cols()) + ")");
  }
  if (w.weights.size() != prob_cols) {
    throw Error("loss: expected " + std::to_string(prob_cols) + " class weights, got " +
                std::to_string(w.weights.size()));
  }
  if (prob_rows == 0) throw Error("loss: no frames");
}

inline double clamp_prob(double p, double eps) { return std::clamp(p, eps, 1.0 - eps); }

}  // namespace detail

/// Mean weighted binary cross-entropy per class; total is the class sum.
inline LossBreakdown weighted_bce(const Matrix<double>& probs, const Matrix<std::uint8_t>& labels,
                                  const ClassWeights& weights,
                                  double eps = kDefaultProbEpsilon) {
  detail::check_loss_shapes(probs.rows(), probs.cols(), labels, weights);
  const std::size_t n = probs.rows();
  LossBreakdown out{std::vector<double>(probs.cols(), 0.0), 0.0};
  for (std::size_t c = 0; c < probs.cols(); ++c) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double p = detail::clamp_prob(probs(i, c), eps);
      acc += labels(i, c) ? weights.weights[c] * std::log(p) : std::log1p(-p);
    }
    out.per_class[c] = -acc / static_cast<double>(n);
    out.total += out.per_class[c];
  }
  return out;
}

inline LossBreakdown weighted_bce(const ProbabilityStream& probs, const LabelMatrix& labels,
                                  const ClassWeights& weights,
                                  double eps = kDefaultProbEpsilon) {
  return weighted_bce(probs.probs, labels.labels, weights, eps);
}

/// Gradient of the total weighted BCE with respect to the logits,
///   dL/dz_ic = -(1/N) * [w_c*y*(1-p) - (1-y)*p].
/// Entries whose probability sits in the epsilon clamp have zero gradient.
inline Matrix<double> weighted_bce_grad(const Matrix<double>& scores,
                                        const Matrix<std::uint8_t>& labels,
                                        const ClassWeights& weights,
                                        double eps = kDefaultProbEpsilon) {
  detail::check_loss_shapes(scores.rows(), scores.cols(), labels, weights);
  const double inv_n = 1.0 / static_cast<double>(scores.rows());
  Matrix<double> grad(scores.rows(), scores.cols(), 0.0);
  for (std::size_t i = 0; i < scores.rows(); ++i) {
    for (std::size_t c = 0; c < scores.cols(); ++c) {
      const double p = sigmoid(scores(i, c));
      if (p < eps || p > 1.0 - eps) continue;
      grad(i, c) = labels(i, c) ? -inv_n * weights.weights[c] * (1.0 - p) : inv_n * p;
    }
  }
  return grad;
}

inline Matrix<double> weighted_bce_grad(const ScoreStream& scores, const LabelMatrix& labels,
                                        const ClassWeights& weights,
                                        double eps = kDefaultProbEpsilon) {
  return weighted_bce_grad(scores.scores, labels.labels, weights, eps);
}

/// Focal-style variant where (1-p)^gamma scales both the positive and the
/// negative term. With gamma = 0 it reduces to weighted_bce.
inline LossBreakdown focal_loss(const Matrix<double>& probs, const Matrix<std::uint8_t>& labels,
                                const ClassWeights& weights, const FocalConfig& cfg = {},
                                double eps = kDefaultProbEpsilon) {
  if (!(cfg.gamma >= 0.0)) throw Error("focal_loss: gamma must be >= 0");
  detail::check_loss_shapes(probs.rows(), probs.cols(), labels, weights);
  const std::size_t n = probs.rows();
  LossBreakdown out{std::vector<double>(probs.cols(), 0.0), 0.0};
  for (std::size_t c = 0; c < probs.cols(); ++c) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double p = detail::clamp_prob(probs(i, c), eps);
      const double term = labels(i, c) ? weights.weights[c] * std::log(p) : std::log1p(-p);
      acc += std::pow(1.0 - p, cfg.gamma) * term;
    }
    out.per_class[c] = -acc / static_cast<double>(n);
    out.total += out.per_class[c];
  }
  return out;
}

inline LossBreakdown focal_loss(const ProbabilityStream& probs, const LabelMatrix& labels,
                                const ClassWeights& weights, const FocalConfig& cfg = {},
                                double eps = kDefaultProbEpsilon) {
  return focal_loss(probs.probs, labels.labels, weights, cfg, eps);
}

}  // namespace gievents
