#pragma once

#include <cstdint>
#include <vector>

#include "fairlend/tensor.hpp"

namespace fairlend {

// One bias-corrected Adam update on a flat parameter vector. `t` is the
// 1-based step count that the bias correction uses.
void adam_step(std::vector<double>& param, const std::vector<double>& grad,
               std::vector<double>& m, std::vector<double>& v, int64_t t, double lr,
               double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

// Holds first/second moment buffers for a set of registered parameters and
// applies adam_step to all of them in one call. Parameters are referenced via
// their shared data/grad buffers, so registering a Tensor copy is enough.
class Adam {
 public:
  explicit Adam(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

  void add_param(const Tensor& p);
  void add_params(const std::vector<Tensor>& ps);

  // Updates every registered parameter in place from its accumulated gradient.
  void step();

  // Clears the gradient buffers of every registered parameter.
  void zero_grad();

  int64_t step_count() const { return t_; }
  size_t param_count() const;  // total scalar parameters registered

  double lr;

 private:
  struct Slot {
    Tensor param;
    std::vector<double> m;
    std::vector<double> v;
  };
  std::vector<Slot> slots_;
  double beta1_, beta2_, eps_;
  int64_t t_ = 0;
};

}  // namespace fairlend
