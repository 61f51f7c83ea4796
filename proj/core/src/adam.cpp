#include "fairlend/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace fairlend {

void adam_step(std::vector<double>& param, const std::vector<double>& grad,
               std::vector<double>& m, std::vector<double>& v, int64_t t, double lr,
               double beta1, double beta2, double eps) {
  if (param.size() != grad.size() || param.size() != m.size() || param.size() != v.size()) {
    throw std::invalid_argument("adam_step: buffer size mismatch");
  }
  if (t < 1) throw std::invalid_argument("adam_step: step count must be >= 1");
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t));
  for (size_t i = 0; i < param.size(); ++i) {
    m[i] = beta1 * m[i] + (1.0 - beta1) * grad[i];
    v[i] = beta2 * v[i] + (1.0 - beta2) * grad[i] * grad[i];
    const double mhat = m[i] / bc1;
    const double vhat = v[i] / bc2;
    param[i] -= lr * mhat / (std::sqrt(vhat) + eps);
  }
}

Adam::Adam(double lr_in, double beta1, double beta2, double eps)
    : lr(lr_in), beta1_(beta1), beta2_(beta2), eps_(eps) {}

void Adam::add_param(const Tensor& p) {
  if (!p.requires_grad || !p.grad) {
    throw std::invalid_argument("Adam: parameter must have requires_grad");
  }
  Slot s;
  s.param = p;
  s.m.assign(p.numel(), 0.0);
  s.v.assign(p.numel(), 0.0);
  slots_.push_back(std::move(s));
}

void Adam::add_params(const std::vector<Tensor>& ps) {
  for (const Tensor& p : ps) add_param(p);
}

void Adam::step() {
  ++t_;
  for (Slot& s : slots_) {
    adam_step(*s.param.data, *s.param.grad, s.m, s.v, t_, lr, beta1_, beta2_, eps_);
  }
}

void Adam::zero_grad() {
  for (Slot& s : slots_) s.param.zero_grad();
}

size_t Adam::param_count() const {
  size_t n = 0;
  for (const Slot& s : slots_) n += s.param.numel();
  return n;
}

}  // namespace fairlend
