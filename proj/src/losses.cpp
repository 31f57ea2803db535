#include "zsd/losses.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "zsd/error.hpp"

namespace zsd {

LossBreakdown combine_losses(double regression, double seen_classification,
                             double unseen_alignment, double region_contrastive,
                             double lambda, double beta) {
  LossBreakdown out;
  out.regression = regression;
  out.seen_classification = seen_classification;
  out.unseen_alignment = unseen_alignment;
  out.region_contrastive = region_contrastive;
  out.total = regression + seen_classification + lambda * unseen_alignment +
              beta * region_contrastive;
  return out;
}

LossGrad seen_classification_loss(const Matrix& seen_logits,
                                  std::span<const int> labels) {
  const std::size_t n_r = seen_logits.rows();
  const std::size_t n_cls = seen_logits.cols();
  require(labels.size() == n_r, ErrorCode::shape_mismatch,
          "seen_classification_loss: one label per region required");
  require(n_r > 0, ErrorCode::invalid_argument,
          "seen_classification_loss: empty batch");

  LossGrad out;
  out.grad = Matrix(n_r, n_cls);
  const double inv_n = 1.0 / static_cast<double>(n_r);

  for (std::size_t i = 0; i < n_r; ++i) {
    const int label = labels[i];
    require(label >= 0 && static_cast<std::size_t>(label) < n_cls,
            ErrorCode::label_out_of_range,
            "seen_classification_loss: label outside [0, n_s]");
    auto logits = seen_logits.row(i);
    const double max_logit = *std::max_element(logits.begin(), logits.end());
    double denom = 0.0;
    for (double l : logits) denom += std::exp(l - max_logit);
    const double log_denom = std::log(denom) + max_logit;
    out.value += (log_denom - logits[label]) * inv_n;
    for (std::size_t j = 0; j < n_cls; ++j) {
      const double softmax = std::exp(logits[j] - log_denom);
      out.grad(i, j) = (softmax - (static_cast<std::size_t>(label) == j ? 1.0 : 0.0)) * inv_n;
    }
  }
  return out;
}

LossGrad unseen_alignment_loss(const Matrix& unseen_probs, std::span<const int> labels,
                               const SimilarityMatrix& sim) {
  const std::size_t n_r = unseen_probs.rows();
  const std::size_t n_u = unseen_probs.cols();
  require(labels.size() == n_r, ErrorCode::shape_mismatch,
          "unseen_alignment_loss: one label per region required");
  require(sim.values.cols() == n_u, ErrorCode::shape_mismatch,
          "unseen_alignment_loss: similarity matrix width mismatch");
  require(n_r > 0 && n_u > 0, ErrorCode::invalid_argument,
          "unseen_alignment_loss: empty batch");

  constexpr double kClamp = 1e-7;
  LossGrad out;
  out.grad = Matrix(n_r, n_u);
  const double inv = 1.0 / static_cast<double>(n_r * n_u);

  for (std::size_t i = 0; i < n_r; ++i) {
    const int label = labels[i];
    require(label >= 0 && static_cast<std::size_t>(label) < sim.values.rows(),
            ErrorCode::label_out_of_range, "unseen_alignment_loss: bad label");
    for (std::size_t j = 0; j < n_u; ++j) {
      const double o = unseen_probs(i, j);
      const double s = sim.values(static_cast<std::size_t>(label), j);
      const double oc = std::clamp(o, kClamp, 1.0 - kClamp);
      out.value -= (s * std::log(oc) + (1.0 - s) * std::log(1.0 - oc)) * inv;
      // clamped coordinates sit on a log cutoff and carry no gradient
      if (o > kClamp && o < 1.0 - kClamp)
        out.grad(i, j) = (-s / oc + (1.0 - s) / (1.0 - oc)) * inv;
    }
  }
  return out;
}

LossGrad region_contrastive_loss(const Matrix& embeddings, std::span<const int> labels,
                                 double temperature, bool include_background) {
  const std::size_t n_r = embeddings.rows();
  require(labels.size() == n_r, ErrorCode::shape_mismatch,
          "region_contrastive_loss: one label per region required");
  require(temperature > 0.0, ErrorCode::invalid_argument,
          "region_contrastive_loss: temperature must be positive");
  for (std::size_t i = 0; i < n_r; ++i)
    require(std::abs(l2_norm(embeddings.row(i)) - 1.0) < 1e-6,
            ErrorCode::invalid_argument,
            "region_contrastive_loss: embeddings must be unit norm");

  LossGrad out;
  out.grad = Matrix(n_r, embeddings.cols());

  std::vector<std::size_t> members;
  for (std::size_t i = 0; i < n_r; ++i)
    if (include_background || labels[i] > 0) members.push_back(i);
  if (members.size() < 2) return out;

  std::size_t contributing = 0;
  for (std::size_t i : members) {
    std::size_t positives = 0;
    for (std::size_t j : members)
      if (j != i && labels[j] == labels[i]) ++positives;
    if (positives > 0) ++contributing;
  }
  if (contributing == 0) return out;
  const double inv_anchors = 1.0 / static_cast<double>(contributing);

  const double inv_tau = 1.0 / temperature;
  for (std::size_t i : members) {
    std::vector<std::size_t> others;
    std::vector<std::size_t> positives;
    for (std::size_t j : members) {
      if (j == i) continue;
      others.push_back(j);
      if (labels[j] == labels[i]) positives.push_back(j);
    }
    if (positives.empty()) continue;

    std::vector<double> scaled(others.size());
    for (std::size_t k = 0; k < others.size(); ++k)
      scaled[k] = dot(embeddings.row(i), embeddings.row(others[k])) * inv_tau;
    const double max_scaled = *std::max_element(scaled.begin(), scaled.end());
    double denom = 0.0;
    for (double s : scaled) denom += std::exp(s - max_scaled);
    const double log_denom = std::log(denom) + max_scaled;

    const double n_pos = static_cast<double>(positives.size());
    const double weight = inv_anchors / n_pos;

    for (std::size_t p : positives) {
      const double pair_logit = dot(embeddings.row(i), embeddings.row(p)) * inv_tau;
      out.value += weight * (log_denom - pair_logit);
      // numerator term of the pair loss
      for (std::size_t d = 0; d < embeddings.cols(); ++d) {
        out.grad(i, d) -= weight * inv_tau * embeddings(p, d);
        out.grad(p, d) -= weight * inv_tau * embeddings(i, d);
      }
    }
    // shared log-sum-exp term, once per pair
    for (std::size_t k = 0; k < others.size(); ++k) {
      const double softmax = std::exp(scaled[k] - log_denom);
      const double coeff = weight * n_pos * inv_tau * softmax;
      const std::size_t j = others[k];
      for (std::size_t d = 0; d < embeddings.cols(); ++d) {
        out.grad(i, d) += coeff * embeddings(j, d);
        out.grad(j, d) += coeff * embeddings(i, d);
      }
    }
  }
  return out;
}

double smooth_l1(double x) {
  const double a = std::abs(x);
  return a < 1.0 ? 0.5 * x * x : a - 0.5;
}

double smooth_l1_derivative(double x) {
  if (x >= 1.0) return 1.0;
  if (x <= -1.0) return -1.0;
  return x;
}

LossGrad box_regression_loss(const Matrix& predicted, const Matrix& targets,
                             std::span<const int> labels) {
  require(predicted.same_shape(targets), ErrorCode::shape_mismatch,
          "box_regression_loss: prediction/target shape mismatch");
  require(predicted.cols() == 4, ErrorCode::shape_mismatch,
          "box_regression_loss: four offsets per region expected");
  require(labels.size() == predicted.rows(), ErrorCode::shape_mismatch,
          "box_regression_loss: one label per region required");

  LossGrad out;
  out.grad = Matrix(predicted.rows(), predicted.cols());

  std::size_t foreground = 0;
  for (int label : labels)
    if (label > 0) ++foreground;
  if (foreground == 0) return out;
  const double inv_fg = 1.0 / static_cast<double>(foreground);

  for (std::size_t i = 0; i < predicted.rows(); ++i) {
    if (labels[i] <= 0) continue;
    for (std::size_t c = 0; c < 4; ++c) {
      const double diff = predicted(i, c) - targets(i, c);
      out.value += smooth_l1(diff) * inv_fg;
      out.grad(i, c) = smooth_l1_derivative(diff) * inv_fg;
    }
  }
  return out;
}

}  // namespace zsd
