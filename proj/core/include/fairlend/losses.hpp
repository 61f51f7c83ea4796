#pragma once

#include <cstdint>
#include <vector>

#include "fairlend/tensor.hpp"

namespace fairlend {

struct LossWeights {
  double w_label = 1.0;
  double w_contrastive = 0.1;
  double w_domain_max = 0.1;  // ceiling of the adversarial ramp
  double gamma = 0.001;       // ramp rate per optimizer step
  double tau = 0.1;           // contrastive temperature
};

// Adversarial weight schedule w_d(p) = w_max * (2 / (1 + exp(-gamma p)) - 1):
// 0 at step 0, saturating at w_max.
double wd_schedule(double w_max, double gamma, int64_t step);

// Supervised cross-entropy over the packed rows whose label may be used.
// usable[r] gates row r (reveal semantics); rows with y == -1 never count.
// Returns the weighted mean; a batch with no usable labels yields a constant
// zero that contributes no gradient.
Tensor label_loss(const Tensor& logits, const std::vector<int>& y,
                  const std::vector<int>& usable);

// Domain-classifier cross-entropy over every packed row (tags in {0,1}).
// The gradient reversal sits inside the model, so minimizing this trains the
// classifier while un-training the features.
Tensor domain_loss(const Tensor& domain_logits, const std::vector<int>& domain_tags);

// NT-Xent over M positive pairs: rows i of the two views are the same item
// under different dropout. Both inputs must be row-wise unit norm. The
// denominator is assembled by masking the diagonal out of the similarity
// matrix before the row sum, so a single pair (M = 1) gives exactly zero.
Tensor contrastive_loss(const Tensor& view_a, const Tensor& view_b, double tau);

struct LossBreakdown {
  Tensor total;
  Tensor label;
  Tensor domain;
  Tensor contrastive;
  double domain_weight = 0;  // schedule value actually applied
};

// total = w_label * L_y + w_d(step) * L_d + w_contrastive * L_CL, with the
// adversarial and contrastive terms dropped entirely when ablated.
LossBreakdown combine_losses(const Tensor& label_l, const Tensor& domain_l,
                             const Tensor& contrastive_l, const LossWeights& w, int64_t step,
                             bool use_domain, bool use_contrastive);

}  // namespace fairlend
