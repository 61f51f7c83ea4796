#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "fairlend/rng.hpp"

namespace fairlend {

struct Node;

// Dense row-major tensor of 64-bit floats participating in a reverse-mode
// differentiation graph. Copying a Tensor shares its buffers; ops allocate
// fresh outputs, so shared buffers are never mutated after creation (the
// optimizer updates leaves between graph builds).
struct Tensor {
  std::vector<int> shape;
  std::shared_ptr<std::vector<double>> data;
  std::shared_ptr<std::vector<double>> grad;  // allocated iff requires_grad
  bool requires_grad = false;
  std::shared_ptr<Node> node;  // creator op; null for leaves

  Tensor() = default;

  static Tensor zeros(std::vector<int> shape, bool requires_grad = false);
  static Tensor full(std::vector<int> shape, double value, bool requires_grad = false);
  static Tensor from_data(std::vector<int> shape, std::vector<double> values,
                          bool requires_grad = false);

  size_t numel() const;
  int dim(int axis) const { return shape[static_cast<size_t>(axis)]; }
  int ndim() const { return static_cast<int>(shape.size()); }

  double value() const;                 // scalar tensors only
  double at(int i) const;               // 1-D
  double at(int i, int j) const;        // 2-D
  double at(int i, int j, int k) const; // 3-D

  void zero_grad();
  void fill_(double v);
};

// One recorded op on the tape. Nodes are created in topological order
// (inputs always precede their consumers); backward() replays them in
// reverse creation order exactly once.
struct Node {
  const char* op = "";
  uint64_t seq = 0;
  std::vector<Tensor> parents;
  std::function<void()> backward;
};

// RAII guard that disables graph recording (evaluation passes).
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool saved_;
};

bool grad_enabled();

std::string shape_str(const std::vector<int>& shape);
bool all_finite(const Tensor& t);

// ---- elementwise and scalar ----
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);
Tensor add_scalar(const Tensor& a, double s);
Tensor relu(const Tensor& x);
Tensor tanh_op(const Tensor& x);
Tensor sigmoid(const Tensor& x);
Tensor exp_op(const Tensor& x);
Tensor log_op(const Tensor& x);  // requires strictly positive input

// ---- linear algebra ----
Tensor matmul(const Tensor& a, const Tensor& b);     // [m,k] x [k,n]
Tensor matmul_nt(const Tensor& a, const Tensor& b);  // a * b^T: [m,k] x [n,k] -> [m,n]
Tensor add_row_bias(const Tensor& x, const Tensor& bias);    // [m,n] + [n]
Tensor scale_rows(const Tensor& x, const std::vector<double>& w);  // row i scaled by w[i]

// ---- shape plumbing ----
Tensor reshape(const Tensor& x, std::vector<int> new_shape);
Tensor slice_rows(const Tensor& x, int begin, int len);
Tensor concat_rows(const std::vector<Tensor>& parts);
Tensor gather_rows(const Tensor& x, const std::vector<int>& idx);
Tensor gather_elems(const Tensor& x, const std::vector<int>& rows,
                    const std::vector<int>& cols);
Tensor embedding_lookup(const Tensor& table, int index);

// ---- reductions and normalizations ----
Tensor sum(const Tensor& x);      // -> [1]
Tensor mean(const Tensor& x);     // -> [1]
Tensor row_sum(const Tensor& x);  // [m,n] -> [m]
Tensor softmax(const Tensor& x, int axis);
Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps);
Tensor normalize_rows(const Tensor& x);  // row-wise x / ||x||, errors on zero rows

// ---- model-specific primitives ----
Tensor dropout(const Tensor& x, const DropoutMask& mask, bool training);

// Gradient reversal pseudo-function: identity forward, -lambda * upstream
// gradient backward.
Tensor grad_reverse(const Tensor& x, double lambda);

// Weighted mean cross-entropy over rows of logits [n,c]. Rows with zero
// weight contribute nothing; an all-zero weight vector yields a constant 0
// with no gradient.
Tensor masked_softmax_cross_entropy(const Tensor& logits, const std::vector<int>& labels,
                                    const std::vector<double>& weights);

// Plain (non-recorded) cosine similarity; errors on zero-norm input.
double cosine_similarity(const Tensor& u, const Tensor& v);

// Reverse topological sweep from a scalar loss. Gradients accumulate
// additively across fan-out into every requires_grad tensor in the graph.
void backward(Tensor& loss);

}  // namespace fairlend
