#pragma once

#include <span>

#include "zsd/matrix.hpp"
#include "zsd/semantics.hpp"

namespace zsd {

struct LossBreakdown {
  double regression = 0.0;
  double seen_classification = 0.0;
  double unseen_alignment = 0.0;
  double region_contrastive = 0.0;
  double total = 0.0;
};

/// total = reg + cls_s + lambda * cls_u + beta * con_r
LossBreakdown combine_losses(double regression, double seen_classification,
                             double unseen_alignment, double region_contrastive,
                             double lambda, double beta);

struct LossGrad {
  double value = 0.0;
  Matrix grad;  // with respect to the first matrix argument
};

/// Mean cross-entropy over regions; logits cover background + seen classes
/// and labels are vocabulary indices in [0, n_s].
LossGrad seen_classification_loss(const Matrix& seen_logits, std::span<const int> labels);

/// Mean binary cross-entropy over regions and unseen classes against the
/// similarity row of each region's label. Background regions use row 0 of the
/// similarity matrix (all-zero targets). Probabilities are clamped to
/// [1e-7, 1 - 1e-7] inside the logs.
LossGrad unseen_alignment_loss(const Matrix& unseen_probs, std::span<const int> labels,
                               const SimilarityMatrix& sim);

/// Supervised contrastive loss over unit-norm region embeddings. Proposals
/// sharing a label are positives; the denominator of each pair term spans all
/// other participating regions. Anchors without positives contribute nothing;
/// the sum is averaged over contributing anchors. When include_background is
/// false, background regions neither anchor nor appear as positives/negatives.
LossGrad region_contrastive_loss(const Matrix& embeddings, std::span<const int> labels,
                                 double temperature, bool include_background);

/// Smooth-L1 over the four offsets of foreground regions (label > 0),
/// averaged over the foreground count. Background rows get zero gradient.
LossGrad box_regression_loss(const Matrix& predicted, const Matrix& targets,
                             std::span<const int> labels);

double smooth_l1(double x);
double smooth_l1_derivative(double x);

}  // namespace zsd
