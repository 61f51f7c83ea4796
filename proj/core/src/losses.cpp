#include "fairlend/losses.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace fairlend {

double wd_schedule(double w_max, double gamma, int64_t step) {
  if (w_max < 0) throw std::invalid_argument("wd_schedule: w_max must be >= 0");
  if (gamma < 0) throw std::invalid_argument("wd_schedule: gamma must be >= 0");
  if (step < 0) throw std::invalid_argument("wd_schedule: step must be >= 0");
  return w_max * (2.0 / (1.0 + std::exp(-gamma * static_cast<double>(step))) - 1.0);
}

Tensor label_loss(const Tensor& logits, const std::vector<int>& y,
                  const std::vector<int>& usable) {
  const size_t n = static_cast<size_t>(logits.dim(0));
  if (y.size() != n || usable.size() != n) {
    throw std::invalid_argument("label_loss: y/usable must have one entry per logit row");
  }
  std::vector<int> cls(n, 0);
  std::vector<double> w(n, 0.0);
  for (size_t i = 0; i < n; ++i) {
    if (y[i] != -1 && y[i] != 0 && y[i] != 1) {
      throw std::invalid_argument("label_loss: labels must be -1, 0 or 1, got " +
                                  std::to_string(y[i]));
    }
    if (usable[i] && y[i] != -1) {
      cls[i] = y[i];
      w[i] = 1.0;
    }
  }
  return masked_softmax_cross_entropy(logits, cls, w);
}

Tensor domain_loss(const Tensor& domain_logits, const std::vector<int>& domain_tags) {
  const size_t n = static_cast<size_t>(domain_logits.dim(0));
  if (domain_tags.size() != n) {
    throw std::invalid_argument("domain_loss: one tag per logit row required");
  }
  for (int t : domain_tags) {
    if (t != 0 && t != 1) {
      throw std::invalid_argument("domain_loss: tags must be 0 or 1, got " + std::to_string(t));
    }
  }
  return masked_softmax_cross_entropy(domain_logits, domain_tags,
                                      std::vector<double>(n, 1.0));
}

Tensor contrastive_loss(const Tensor& view_a, const Tensor& view_b, double tau) {
  if (!(tau > 0)) throw std::invalid_argument("contrastive_loss: tau must be > 0");
  if (view_a.ndim() != 2 || view_b.ndim() != 2 || view_a.shape != view_b.shape) {
    throw std::invalid_argument("contrastive_loss: views must share shape [M,d], got " +
                                shape_str(view_a.shape) + " vs " + shape_str(view_b.shape));
  }
  const int m = view_a.dim(0);
  const int d = view_a.dim(1);
  if (m < 1) throw std::invalid_argument("contrastive_loss: need at least one pair");
  for (const Tensor* v : {&view_a, &view_b}) {
    for (int i = 0; i < m; ++i) {
      double n2 = 0;
      for (int j = 0; j < d; ++j) {
        const double e = (*v->data)[static_cast<size_t>(i) * d + j];
        n2 += e * e;
      }
      if (std::abs(n2 - 1.0) > 1e-6) {
        throw std::invalid_argument("contrastive_loss: row " + std::to_string(i) +
                                    " is not unit norm (||.||^2 = " + std::to_string(n2) + ")");
      }
    }
  }

  const int n = 2 * m;
  Tensor stacked = concat_rows({view_a, view_b});
  // Cosine similarities lie in [-1,1], so exp(s/tau) cannot overflow for any
  // sane temperature and no log-sum-exp shift is needed.
  Tensor sims = exp_op(scale(matmul_nt(stacked, stacked), 1.0 / tau));

  Tensor off_diag = Tensor::full({n, n}, 1.0);
  for (int i = 0; i < n; ++i) (*off_diag.data)[static_cast<size_t>(i) * n + i] = 0.0;
  Tensor denom = row_sum(mul(sims, off_diag));

  std::vector<int> rows(static_cast<size_t>(n)), partner(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    rows[static_cast<size_t>(i)] = i;
    partner[static_cast<size_t>(i)] = (i + m) % n;
  }
  Tensor numer = gather_elems(sims, rows, partner);
  return scale(sum(sub(log_op(numer), log_op(denom))), -1.0 / n);
}

LossBreakdown combine_losses(const Tensor& label_l, const Tensor& domain_l,
                             const Tensor& contrastive_l, const LossWeights& w, int64_t step,
                             bool use_domain, bool use_contrastive) {
  LossBreakdown out;
  out.label = label_l;
  out.domain = domain_l;
  out.contrastive = contrastive_l;
  out.total = scale(label_l, w.w_label);
  if (use_domain) {
    out.domain_weight = wd_schedule(w.w_domain_max, w.gamma, step);
    out.total = add(out.total, scale(domain_l, out.domain_weight));
  }
  if (use_contrastive) {
    out.total = add(out.total, scale(contrastive_l, w.w_contrastive));
  }
  return out;
}

}  // namespace fairlend
