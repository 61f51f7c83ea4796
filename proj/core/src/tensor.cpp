#include "fairlend/tensor.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <unordered_set>

namespace fairlend {

namespace {

std::atomic<uint64_t> g_seq{1};
thread_local bool g_grad_enabled = true;

uint64_t next_seq() { return g_seq.fetch_add(1, std::memory_order_relaxed); }

size_t shape_numel(const std::vector<int>& shape) {
  size_t n = 1;
  for (int d : shape) {
    if (d <= 0) throw std::invalid_argument("tensor shape has non-positive dim " + shape_str(shape));
    n *= static_cast<size_t>(d);
  }
  return n;
}

void check_2d(const Tensor& t, const char* op) {
  if (t.ndim() != 2) throw std::invalid_argument(std::string(op) + ": expected 2-D tensor, got " + shape_str(t.shape));
}

std::shared_ptr<Node> make_node(const char* op, std::vector<Tensor> parents) {
  auto n = std::make_shared<Node>();
  n->op = op;
  n->seq = next_seq();
  n->parents = std::move(parents);
  return n;
}

bool any_requires_grad(const Tensor& a, const Tensor& b) { return a.requires_grad || b.requires_grad; }

}  // namespace

std::string shape_str(const std::vector<int>& shape) {
  std::string s = "[";
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

Tensor Tensor::zeros(std::vector<int> shape, bool requires_grad) {
  Tensor t;
  size_t n = shape_numel(shape);
  t.shape = std::move(shape);
  t.data = std::make_shared<std::vector<double>>(n, 0.0);
  t.requires_grad = requires_grad;
  if (requires_grad) t.grad = std::make_shared<std::vector<double>>(n, 0.0);
  return t;
}

Tensor Tensor::full(std::vector<int> shape, double value, bool requires_grad) {
  Tensor t = zeros(std::move(shape), requires_grad);
  std::fill(t.data->begin(), t.data->end(), value);
  return t;
}

Tensor Tensor::from_data(std::vector<int> shape, std::vector<double> values, bool requires_grad) {
  size_t n = shape_numel(shape);
  if (n != values.size()) {
    throw std::invalid_argument("from_data: shape " + shape_str(shape) + " wants " +
                                std::to_string(n) + " values, got " + std::to_string(values.size()));
  }
  Tensor t;
  t.shape = std::move(shape);
  t.data = std::make_shared<std::vector<double>>(std::move(values));
  t.requires_grad = requires_grad;
  if (requires_grad) t.grad = std::make_shared<std::vector<double>>(n, 0.0);
  return t;
}

size_t Tensor::numel() const { return data ? data->size() : 0; }

double Tensor::value() const {
  if (numel() != 1) throw std::invalid_argument("value(): tensor " + shape_str(shape) + " is not scalar");
  return (*data)[0];
}

double Tensor::at(int i) const { return (*data)[static_cast<size_t>(i)]; }

double Tensor::at(int i, int j) const {
  return (*data)[static_cast<size_t>(i) * static_cast<size_t>(shape[1]) + static_cast<size_t>(j)];
}

double Tensor::at(int i, int j, int k) const {
  size_t s1 = static_cast<size_t>(shape[1]), s2 = static_cast<size_t>(shape[2]);
  return (*data)[(static_cast<size_t>(i) * s1 + static_cast<size_t>(j)) * s2 + static_cast<size_t>(k)];
}

void Tensor::zero_grad() {
  if (grad) std::fill(grad->begin(), grad->end(), 0.0);
}

void Tensor::fill_(double v) { std::fill(data->begin(), data->end(), v); }

NoGradGuard::NoGradGuard() : saved_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = saved_; }

bool grad_enabled() { return g_grad_enabled; }

bool all_finite(const Tensor& t) {
  for (double v : *t.data) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// elementwise
// ---------------------------------------------------------------------------

namespace {

void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape != b.shape) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch " + shape_str(a.shape) +
                                " vs " + shape_str(b.shape));
  }
}

// Shared scaffolding for y = f(x) ops whose backward is dx += g * dfdx(x, y).
Tensor unary_elementwise(const char* op, const Tensor& x, double (*f)(double),
                         double (*dfdx)(double x, double y)) {
  Tensor out = Tensor::zeros(x.shape, grad_enabled() && x.requires_grad);
  const size_t n = x.numel();
  const auto& xd = *x.data;
  auto& od = *out.data;
  for (size_t i = 0; i < n; ++i) od[i] = f(xd[i]);
  if (out.requires_grad) {
    out.node = make_node(op, {x});
    auto xg = x.grad, og = out.grad, xdp = x.data, odp = out.data;
    out.node->backward = [xg, og, xdp, odp, n, dfdx]() {
      if (!xg) return;
      for (size_t i = 0; i < n; ++i) (*xg)[i] += (*og)[i] * dfdx((*xdp)[i], (*odp)[i]);
    };
  }
  return out;
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "add");
  Tensor out = Tensor::zeros(a.shape, grad_enabled() && any_requires_grad(a, b));
  const size_t n = a.numel();
  for (size_t i = 0; i < n; ++i) (*out.data)[i] = (*a.data)[i] + (*b.data)[i];
  if (out.requires_grad) {
    out.node = make_node("add", {a, b});
    auto ag = a.grad, bg = b.grad, og = out.grad;
    out.node->backward = [ag, bg, og, n]() {
      if (ag) for (size_t i = 0; i < n; ++i) (*ag)[i] += (*og)[i];
      if (bg) for (size_t i = 0; i < n; ++i) (*bg)[i] += (*og)[i];
    };
  }
  return out;
}

Tensor sub(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "sub");
  Tensor out = Tensor::zeros(a.shape, grad_enabled() && any_requires_grad(a, b));
  const size_t n = a.numel();
  for (size_t i = 0; i < n; ++i) (*out.data)[i] = (*a.data)[i] - (*b.data)[i];
  if (out.requires_grad) {
    out.node = make_node("sub", {a, b});
    auto ag = a.grad, bg = b.grad, og = out.grad;
    out.node->backward = [ag, bg, og, n]() {
      if (ag) for (size_t i = 0; i < n; ++i) (*ag)[i] += (*og)[i];
      if (bg) for (size_t i = 0; i < n; ++i) (*bg)[i] -= (*og)[i];
    };
  }
  return out;
}

Tensor mul(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "mul");
  Tensor out = Tensor::zeros(a.shape, grad_enabled() && any_requires_grad(a, b));
  const size_t n = a.numel();
  for (size_t i = 0; i < n; ++i) (*out.data)[i] = (*a.data)[i] * (*b.data)[i];
  if (out.requires_grad) {
    out.node = make_node("mul", {a, b});
    auto ag = a.grad, bg = b.grad, og = out.grad, ad = a.data, bd = b.data;
    out.node->backward = [ag, bg, og, ad, bd, n]() {
      if (ag) for (size_t i = 0; i < n; ++i) (*ag)[i] += (*og)[i] * (*bd)[i];
      if (bg) for (size_t i = 0; i < n; ++i) (*bg)[i] += (*og)[i] * (*ad)[i];
    };
  }
  return out;
}

Tensor scale(const Tensor& a, double s) {
  Tensor out = Tensor::zeros(a.shape, grad_enabled() && a.requires_grad);
  const size_t n = a.numel();
  for (size_t i = 0; i < n; ++i) (*out.data)[i] = (*a.data)[i] * s;
  if (out.requires_grad) {
    out.node = make_node("scale", {a});
    auto ag = a.grad, og = out.grad;
    out.node->backward = [ag, og, s, n]() {
      if (ag) for (size_t i = 0; i < n; ++i) (*ag)[i] += (*og)[i] * s;
    };
  }
  return out;
}

Tensor add_scalar(const Tensor& a, double s) {
  Tensor out = Tensor::zeros(a.shape, grad_enabled() && a.requires_grad);
  const size_t n = a.numel();
  for (size_t i = 0; i < n; ++i) (*out.data)[i] = (*a.data)[i] + s;
  if (out.requires_grad) {
    out.node = make_node("add_scalar", {a});
    auto ag = a.grad, og = out.grad;
    out.node->backward = [ag, og, n]() {
      if (ag) for (size_t i = 0; i < n; ++i) (*ag)[i] += (*og)[i];
    };
  }
  return out;
}

Tensor relu(const Tensor& x) {
  return unary_elementwise("relu", x,
                           [](double v) { return v > 0.0 ? v : 0.0; },
                           [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

Tensor tanh_op(const Tensor& x) {
  return unary_elementwise("tanh", x,
                           [](double v) { return std::tanh(v); },
                           [](double, double y) { return 1.0 - y * y; });
}

Tensor sigmoid(const Tensor& x) {
  return unary_elementwise("sigmoid", x,
                           [](double v) { return 1.0 / (1.0 + std::exp(-v)); },
                           [](double, double y) { return y * (1.0 - y); });
}

Tensor exp_op(const Tensor& x) {
  return unary_elementwise("exp", x,
                           [](double v) { return std::exp(v); },
                           [](double, double y) { return y; });
}

Tensor log_op(const Tensor& x) {
  for (double v : *x.data) {
    if (!(v > 0.0)) throw std::domain_error("log: input must be strictly positive");
  }
  return unary_elementwise("log", x,
                           [](double v) { return std::log(v); },
                           [](double v, double) { return 1.0 / v; });
}

// ---------------------------------------------------------------------------
// linear algebra
// ---------------------------------------------------------------------------

namespace {

// out[m,n] += a[m,k] * b[k,n], plain ikj loop
void mm_acc(const double* a, const double* b, double* out, int m, int k, int n) {
  for (int i = 0; i < m; ++i) {
    const double* arow = a + static_cast<size_t>(i) * k;
    double* orow = out + static_cast<size_t>(i) * n;
    for (int kk = 0; kk < k; ++kk) {
      const double av = arow[kk];
      if (av == 0.0) continue;
      const double* brow = b + static_cast<size_t>(kk) * n;
      for (int j = 0; j < n; ++j) orow[j] += av * brow[j];
    }
  }
}

// out[m,n] += a[m,k] * b[n,k]^T (row-by-row dot products)
void mm_nt_acc(const double* a, const double* b, double* out, int m, int k, int n) {
  for (int i = 0; i < m; ++i) {
    const double* arow = a + static_cast<size_t>(i) * k;
    double* orow = out + static_cast<size_t>(i) * n;
    for (int j = 0; j < n; ++j) {
      const double* brow = b + static_cast<size_t>(j) * k;
      double acc = 0.0;
      for (int kk = 0; kk < k; ++kk) acc += arow[kk] * brow[kk];
      orow[j] += acc;
    }
  }
}

// out[k,n] += a[m,k]^T * b[m,n]
void mm_tn_acc(const double* a, const double* b, double* out, int m, int k, int n) {
  for (int i = 0; i < m; ++i) {
    const double* arow = a + static_cast<size_t>(i) * k;
    const double* brow = b + static_cast<size_t>(i) * n;
    for (int kk = 0; kk < k; ++kk) {
      const double av = arow[kk];
      if (av == 0.0) continue;
      double* orow = out + static_cast<size_t>(kk) * n;
      for (int j = 0; j < n; ++j) orow[j] += av * brow[j];
    }
  }
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  check_2d(a, "matmul");
  check_2d(b, "matmul");
  if (a.shape[1] != b.shape[0]) {
    throw std::invalid_argument("matmul: inner dimensions disagree, " + shape_str(a.shape) +
                                " x " + shape_str(b.shape));
  }
  const int m = a.shape[0], k = a.shape[1], n = b.shape[1];
  Tensor out = Tensor::zeros({m, n}, grad_enabled() && any_requires_grad(a, b));
  mm_acc(a.data->data(), b.data->data(), out.data->data(), m, k, n);
  if (out.requires_grad) {
    out.node = make_node("matmul", {a, b});
    auto ag = a.grad, bg = b.grad, og = out.grad, ad = a.data, bd = b.data;
    out.node->backward = [ag, bg, og, ad, bd, m, k, n]() {
      // dA = G * B^T, dB = A^T * G
      if (ag) mm_nt_acc(og->data(), bd->data(), ag->data(), m, n, k);
      if (bg) mm_tn_acc(ad->data(), og->data(), bg->data(), m, k, n);
    };
  }
  return out;
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  check_2d(a, "matmul_nt");
  check_2d(b, "matmul_nt");
  if (a.shape[1] != b.shape[1]) {
    throw std::invalid_argument("matmul_nt: inner dimensions disagree, " + shape_str(a.shape) +
                                " x " + shape_str(b.shape) + "^T");
  }
  const int m = a.shape[0], k = a.shape[1], n = b.shape[0];
  Tensor out = Tensor::zeros({m, n}, grad_enabled() && any_requires_grad(a, b));
  mm_nt_acc(a.data->data(), b.data->data(), out.data->data(), m, k, n);
  if (out.requires_grad) {
    out.node = make_node("matmul_nt", {a, b});
    auto ag = a.grad, bg = b.grad, og = out.grad, ad = a.data, bd = b.data;
    out.node->backward = [ag, bg, og, ad, bd, m, k, n]() {
      // out = A B^T: dA = G * B, dB = G^T * A
      if (ag) mm_acc(og->data(), bd->data(), ag->data(), m, n, k);
      if (bg) mm_tn_acc(og->data(), ad->data(), bg->data(), m, n, k);
    };
  }
  return out;
}

Tensor add_row_bias(const Tensor& x, const Tensor& bias) {
  check_2d(x, "add_row_bias");
  if (bias.ndim() != 1 || bias.shape[0] != x.shape[1]) {
    throw std::invalid_argument("add_row_bias: bias " + shape_str(bias.shape) +
                                " does not match columns of " + shape_str(x.shape));
  }
  const int m = x.shape[0], n = x.shape[1];
  Tensor out = Tensor::zeros({m, n}, grad_enabled() && any_requires_grad(x, bias));
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j)
      (*out.data)[static_cast<size_t>(i) * n + j] = x.at(i, j) + (*bias.data)[static_cast<size_t>(j)];
  if (out.requires_grad) {
    out.node = make_node("add_row_bias", {x, bias});
    auto xg = x.grad, bgr = bias.grad, og = out.grad;
    out.node->backward = [xg, bgr, og, m, n]() {
      if (xg) for (size_t i = 0; i < static_cast<size_t>(m) * n; ++i) (*xg)[i] += (*og)[i];
      if (bgr) {
        for (int i = 0; i < m; ++i)
          for (int j = 0; j < n; ++j) (*bgr)[static_cast<size_t>(j)] += (*og)[static_cast<size_t>(i) * n + j];
      }
    };
  }
  return out;
}

Tensor scale_rows(const Tensor& x, const std::vector<double>& w) {
  check_2d(x, "scale_rows");
  if (static_cast<int>(w.size()) != x.shape[0]) {
    throw std::invalid_argument("scale_rows: weight count " + std::to_string(w.size()) +
                                " does not match rows of " + shape_str(x.shape));
  }
  const int m = x.shape[0], n = x.shape[1];
  Tensor out = Tensor::zeros({m, n}, grad_enabled() && x.requires_grad);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j)
      (*out.data)[static_cast<size_t>(i) * n + j] = x.at(i, j) * w[static_cast<size_t>(i)];
  if (out.requires_grad) {
    out.node = make_node("scale_rows", {x});
    auto xg = x.grad, og = out.grad;
    auto wcopy = w;
    out.node->backward = [xg, og, wcopy, m, n]() {
      if (!xg) return;
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j)
          (*xg)[static_cast<size_t>(i) * n + j] += (*og)[static_cast<size_t>(i) * n + j] * wcopy[static_cast<size_t>(i)];
    };
  }
  return out;
}

// ---------------------------------------------------------------------------
// shape plumbing
// ---------------------------------------------------------------------------

Tensor reshape(const Tensor& x, std::vector<int> new_shape) {
  if (shape_numel(new_shape) != x.numel()) {
    throw std::invalid_argument("reshape: " + shape_str(x.shape) + " -> " + shape_str(new_shape) +
                                " changes element count");
  }
  Tensor out = Tensor::zeros(new_shape, grad_enabled() && x.requires_grad);
  *out.data = *x.data;
  if (out.requires_grad) {
    out.node = make_node("reshape", {x});
    auto xg = x.grad, og = out.grad;
    const size_t n = x.numel();
    out.node->backward = [xg, og, n]() {
      if (xg) for (size_t i = 0; i < n; ++i) (*xg)[i] += (*og)[i];
    };
  }
  return out;
}

Tensor slice_rows(const Tensor& x, int begin, int len) {
  check_2d(x, "slice_rows");
  if (begin < 0 || len <= 0 || begin + len > x.shape[0]) {
    throw std::out_of_range("slice_rows: range [" + std::to_string(begin) + "," +
                            std::to_string(begin + len) + ") outside " + shape_str(x.shape));
  }
  const int n = x.shape[1];
  Tensor out = Tensor::zeros({len, n}, grad_enabled() && x.requires_grad);
  std::copy(x.data->begin() + static_cast<size_t>(begin) * n,
            x.data->begin() + static_cast<size_t>(begin + len) * n, out.data->begin());
  if (out.requires_grad) {
    out.node = make_node("slice_rows", {x});
    auto xg = x.grad, og = out.grad;
    out.node->backward = [xg, og, begin, len, n]() {
      if (!xg) return;
      for (size_t i = 0; i < static_cast<size_t>(len) * n; ++i)
        (*xg)[static_cast<size_t>(begin) * n + i] += (*og)[i];
    };
  }
  return out;
}

Tensor concat_rows(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_rows: empty part list");
  const int n = parts[0].shape.size() == 2 ? parts[0].shape[1] : -1;
  int rows = 0;
  bool needs_grad = false;
  for (const Tensor& p : parts) {
    check_2d(p, "concat_rows");
    if (p.shape[1] != n) {
      throw std::invalid_argument("concat_rows: column mismatch " + shape_str(parts[0].shape) +
                                  " vs " + shape_str(p.shape));
    }
    rows += p.shape[0];
    needs_grad = needs_grad || p.requires_grad;
  }
  Tensor out = Tensor::zeros({rows, n}, grad_enabled() && needs_grad);
  size_t off = 0;
  for (const Tensor& p : parts) {
    std::copy(p.data->begin(), p.data->end(), out.data->begin() + off);
    off += p.numel();
  }
  if (out.requires_grad) {
    out.node = make_node("concat_rows", {parts});
    std::vector<std::shared_ptr<std::vector<double>>> pg;
    std::vector<size_t> sizes;
    for (const Tensor& p : parts) {
      pg.push_back(p.grad);
      sizes.push_back(p.numel());
    }
    auto og = out.grad;
    out.node->backward = [pg, sizes, og]() {
      size_t off2 = 0;
      for (size_t pi = 0; pi < pg.size(); ++pi) {
        if (pg[pi]) {
          for (size_t i = 0; i < sizes[pi]; ++i) (*pg[pi])[i] += (*og)[off2 + i];
        }
        off2 += sizes[pi];
      }
    };
  }
  return out;
}

Tensor gather_rows(const Tensor& x, const std::vector<int>& idx) {
  check_2d(x, "gather_rows");
  const int m = x.shape[0], n = x.shape[1];
  for (int i : idx) {
    if (i < 0 || i >= m) {
      throw std::out_of_range("gather_rows: index " + std::to_string(i) + " outside " +
                              shape_str(x.shape));
    }
  }
  Tensor out = Tensor::zeros({static_cast<int>(idx.size()), n}, grad_enabled() && x.requires_grad);
  for (size_t r = 0; r < idx.size(); ++r) {
    std::copy(x.data->begin() + static_cast<size_t>(idx[r]) * n,
              x.data->begin() + static_cast<size_t>(idx[r] + 1) * n,
              out.data->begin() + r * n);
  }
  if (out.requires_grad) {
    out.node = make_node("gather_rows", {x});
    auto xg = x.grad, og = out.grad;
    auto idx_copy = idx;
    out.node->backward = [xg, og, idx_copy, n]() {
      if (!xg) return;
      for (size_t r = 0; r < idx_copy.size(); ++r)
        for (int j = 0; j < n; ++j)
          (*xg)[static_cast<size_t>(idx_copy[r]) * n + j] += (*og)[r * n + j];
    };
  }
  return out;
}

Tensor gather_elems(const Tensor& x, const std::vector<int>& rows, const std::vector<int>& cols) {
  check_2d(x, "gather_elems");
  if (rows.size() != cols.size()) throw std::invalid_argument("gather_elems: rows/cols length mismatch");
  const int m = x.shape[0], n = x.shape[1];
  for (size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] < 0 || rows[i] >= m || cols[i] < 0 || cols[i] >= n) {
      throw std::out_of_range("gather_elems: (" + std::to_string(rows[i]) + "," +
                              std::to_string(cols[i]) + ") outside " + shape_str(x.shape));
    }
  }
  Tensor out = Tensor::zeros({static_cast<int>(rows.size())}, grad_enabled() && x.requires_grad);
  for (size_t i = 0; i < rows.size(); ++i)
    (*out.data)[i] = x.at(rows[i], cols[i]);
  if (out.requires_grad) {
    out.node = make_node("gather_elems", {x});
    auto xg = x.grad, og = out.grad;
    auto r = rows, c = cols;
    out.node->backward = [xg, og, r, c, n]() {
      if (!xg) return;
      for (size_t i = 0; i < r.size(); ++i)
        (*xg)[static_cast<size_t>(r[i]) * n + c[i]] += (*og)[i];
    };
  }
  return out;
}

Tensor embedding_lookup(const Tensor& table, int index) {
  check_2d(table, "embedding_lookup");
  if (index < 0 || index >= table.shape[0]) {
    throw std::out_of_range("embedding_lookup: index " + std::to_string(index) +
                            " outside table " + shape_str(table.shape));
  }
  const int d = table.shape[1];
  Tensor out = Tensor::zeros({d}, grad_enabled() && table.requires_grad);
  std::copy(table.data->begin() + static_cast<size_t>(index) * d,
            table.data->begin() + static_cast<size_t>(index + 1) * d, out.data->begin());
  if (out.requires_grad) {
    out.node = make_node("embedding_lookup", {table});
    auto tg = table.grad, og = out.grad;
    out.node->backward = [tg, og, index, d]() {
      if (!tg) return;
      for (int j = 0; j < d; ++j) (*tg)[static_cast<size_t>(index) * d + j] += (*og)[static_cast<size_t>(j)];
    };
  }
  return out;
}

// ---------------------------------------------------------------------------
// reductions and normalizations
// ---------------------------------------------------------------------------

Tensor sum(const Tensor& x) {
  Tensor out = Tensor::zeros({1}, grad_enabled() && x.requires_grad);
  double acc = 0.0;
  for (double v : *x.data) acc += v;
  (*out.data)[0] = acc;
  if (out.requires_grad) {
    out.node = make_node("sum", {x});
    auto xg = x.grad, og = out.grad;
    const size_t n = x.numel();
    out.node->backward = [xg, og, n]() {
      if (xg) for (size_t i = 0; i < n; ++i) (*xg)[i] += (*og)[0];
    };
  }
  return out;
}

Tensor mean(const Tensor& x) { return scale(sum(x), 1.0 / static_cast<double>(x.numel())); }

Tensor row_sum(const Tensor& x) {
  check_2d(x, "row_sum");
  const int m = x.shape[0], n = x.shape[1];
  Tensor out = Tensor::zeros({m}, grad_enabled() && x.requires_grad);
  for (int i = 0; i < m; ++i) {
    double acc = 0.0;
    for (int j = 0; j < n; ++j) acc += x.at(i, j);
    (*out.data)[static_cast<size_t>(i)] = acc;
  }
  if (out.requires_grad) {
    out.node = make_node("row_sum", {x});
    auto xg = x.grad, og = out.grad;
    out.node->backward = [xg, og, m, n]() {
      if (!xg) return;
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) (*xg)[static_cast<size_t>(i) * n + j] += (*og)[static_cast<size_t>(i)];
    };
  }
  return out;
}

Tensor softmax(const Tensor& x, int axis) {
  if (axis < 0 || axis >= x.ndim()) {
    throw std::invalid_argument("softmax: axis " + std::to_string(axis) + " invalid for " +
                                shape_str(x.shape));
  }
  const int d = x.shape[static_cast<size_t>(axis)];
  size_t inner = 1, outer = 1;
  for (int a = axis + 1; a < x.ndim(); ++a) inner *= static_cast<size_t>(x.shape[static_cast<size_t>(a)]);
  for (int a = 0; a < axis; ++a) outer *= static_cast<size_t>(x.shape[static_cast<size_t>(a)]);

  Tensor out = Tensor::zeros(x.shape, grad_enabled() && x.requires_grad);
  const auto& xd = *x.data;
  auto& od = *out.data;
  for (size_t o = 0; o < outer; ++o) {
    for (size_t in = 0; in < inner; ++in) {
      const size_t base = o * static_cast<size_t>(d) * inner + in;
      double mx = -std::numeric_limits<double>::infinity();
      for (int i = 0; i < d; ++i) mx = std::max(mx, xd[base + static_cast<size_t>(i) * inner]);
      double denom = 0.0;
      for (int i = 0; i < d; ++i) {
        const double e = std::exp(xd[base + static_cast<size_t>(i) * inner] - mx);
        od[base + static_cast<size_t>(i) * inner] = e;
        denom += e;
      }
      for (int i = 0; i < d; ++i) od[base + static_cast<size_t>(i) * inner] /= denom;
    }
  }
  if (out.requires_grad) {
    out.node = make_node("softmax", {x});
    auto xg = x.grad, og = out.grad, odp = out.data;
    out.node->backward = [xg, og, odp, d, inner, outer]() {
      if (!xg) return;
      // dx_i = y_i * (g_i - sum_j g_j y_j)
      for (size_t o = 0; o < outer; ++o) {
        for (size_t in = 0; in < inner; ++in) {
          const size_t base = o * static_cast<size_t>(d) * inner + in;
          double dot = 0.0;
          for (int i = 0; i < d; ++i) {
            const size_t k = base + static_cast<size_t>(i) * inner;
            dot += (*og)[k] * (*odp)[k];
          }
          for (int i = 0; i < d; ++i) {
            const size_t k = base + static_cast<size_t>(i) * inner;
            (*xg)[k] += (*odp)[k] * ((*og)[k] - dot);
          }
        }
      }
    };
  }
  return out;
}

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps) {
  if (x.ndim() < 1) throw std::invalid_argument("layer_norm: scalar input");
  const int d = x.shape.back();
  if (gain.ndim() != 1 || gain.shape[0] != d || bias.ndim() != 1 || bias.shape[0] != d) {
    throw std::invalid_argument("layer_norm: gain/bias must be [" + std::to_string(d) + "], got " +
                                shape_str(gain.shape) + " and " + shape_str(bias.shape));
  }
  const size_t rows = x.numel() / static_cast<size_t>(d);
  Tensor out = Tensor::zeros(x.shape, grad_enabled() && (x.requires_grad || gain.requires_grad ||
                                                         bias.requires_grad));
  // xhat is saved for the backward rule
  auto xhat = std::make_shared<std::vector<double>>(x.numel());
  auto inv_std = std::make_shared<std::vector<double>>(rows);
  const auto& xd = *x.data;
  auto& od = *out.data;
  for (size_t r = 0; r < rows; ++r) {
    const size_t base = r * static_cast<size_t>(d);
    double mu = 0.0;
    for (int j = 0; j < d; ++j) mu += xd[base + static_cast<size_t>(j)];
    mu /= d;
    double var = 0.0;
    for (int j = 0; j < d; ++j) {
      const double c = xd[base + static_cast<size_t>(j)] - mu;
      var += c * c;
    }
    var /= d;
    const double is = 1.0 / std::sqrt(var + eps);
    (*inv_std)[r] = is;
    for (int j = 0; j < d; ++j) {
      const double xh = (xd[base + static_cast<size_t>(j)] - mu) * is;
      (*xhat)[base + static_cast<size_t>(j)] = xh;
      od[base + static_cast<size_t>(j)] = xh * (*gain.data)[static_cast<size_t>(j)] + (*bias.data)[static_cast<size_t>(j)];
    }
  }
  if (out.requires_grad) {
    out.node = make_node("layer_norm", {x, gain, bias});
    auto xg = x.grad, gg = gain.grad, bgr = bias.grad, og = out.grad, gd = gain.data;
    out.node->backward = [xg, gg, bgr, og, gd, xhat, inv_std, rows, d]() {
      for (size_t r = 0; r < rows; ++r) {
        const size_t base = r * static_cast<size_t>(d);
        if (gg || bgr) {
          for (int j = 0; j < d; ++j) {
            const size_t k = base + static_cast<size_t>(j);
            if (gg) (*gg)[static_cast<size_t>(j)] += (*og)[k] * (*xhat)[k];
            if (bgr) (*bgr)[static_cast<size_t>(j)] += (*og)[k];
          }
        }
        if (xg) {
          // dxhat = g .* gain; dx = inv_std * (dxhat - mean(dxhat) - xhat * mean(dxhat .* xhat))
          double m1 = 0.0, m2 = 0.0;
          for (int j = 0; j < d; ++j) {
            const size_t k = base + static_cast<size_t>(j);
            const double dxh = (*og)[k] * (*gd)[static_cast<size_t>(j)];
            m1 += dxh;
            m2 += dxh * (*xhat)[k];
          }
          m1 /= d;
          m2 /= d;
          for (int j = 0; j < d; ++j) {
            const size_t k = base + static_cast<size_t>(j);
            const double dxh = (*og)[k] * (*gd)[static_cast<size_t>(j)];
            (*xg)[k] += (*inv_std)[r] * (dxh - m1 - (*xhat)[k] * m2);
          }
        }
      }
    };
  }
  return out;
}

Tensor normalize_rows(const Tensor& x) {
  check_2d(x, "normalize_rows");
  const int m = x.shape[0], n = x.shape[1];
  Tensor out = Tensor::zeros({m, n}, grad_enabled() && x.requires_grad);
  auto norms = std::make_shared<std::vector<double>>(static_cast<size_t>(m));
  for (int i = 0; i < m; ++i) {
    double acc = 0.0;
    for (int j = 0; j < n; ++j) acc += x.at(i, j) * x.at(i, j);
    const double r = std::sqrt(acc);
    if (r == 0.0) throw std::domain_error("normalize_rows: zero-norm row " + std::to_string(i));
    (*norms)[static_cast<size_t>(i)] = r;
    for (int j = 0; j < n; ++j) (*out.data)[static_cast<size_t>(i) * n + j] = x.at(i, j) / r;
  }
  if (out.requires_grad) {
    out.node = make_node("normalize_rows", {x});
    auto xg = x.grad, og = out.grad, odp = out.data;
    out.node->backward = [xg, og, odp, norms, m, n]() {
      if (!xg) return;
      // du = (g - u (g . u)) / ||x||
      for (int i = 0; i < m; ++i) {
        const size_t base = static_cast<size_t>(i) * n;
        double dot = 0.0;
        for (int j = 0; j < n; ++j) dot += (*og)[base + j] * (*odp)[base + j];
        for (int j = 0; j < n; ++j)
          (*xg)[base + j] += ((*og)[base + j] - (*odp)[base + j] * dot) / (*norms)[static_cast<size_t>(i)];
      }
    };
  }
  return out;
}

// ---------------------------------------------------------------------------
// model-specific primitives
// ---------------------------------------------------------------------------

DropoutMask DropoutMask::build(uint64_t seed, const std::vector<int>& shape, double keep_prob) {
  if (!(keep_prob > 0.0 && keep_prob <= 1.0)) {
    throw std::invalid_argument("DropoutMask: keep_prob must be in (0,1], got " +
                                std::to_string(keep_prob));
  }
  DropoutMask mask;
  mask.keep_prob = keep_prob;
  mask.seed = seed;
  mask.shape = shape;
  const size_t n = shape_numel(shape);
  mask.values.resize(n);
  const double inv = 1.0 / keep_prob;
  for (size_t i = 0; i < n; ++i) {
    // entry i depends only on (seed, i)
    const uint64_t h = mix64(seed + 0x9e3779b97f4a7c15ULL * (i + 1));
    const double u = static_cast<double>(h >> 11) * 0x1.0p-53;
    mask.values[i] = u < keep_prob ? inv : 0.0;
  }
  return mask;
}

Tensor dropout(const Tensor& x, const DropoutMask& mask, bool training) {
  if (!training) return x;
  if (mask.shape != x.shape) {
    throw std::invalid_argument("dropout: mask shape " + shape_str(mask.shape) +
                                " does not match input " + shape_str(x.shape));
  }
  Tensor out = Tensor::zeros(x.shape, grad_enabled() && x.requires_grad);
  const size_t n = x.numel();
  for (size_t i = 0; i < n; ++i) (*out.data)[i] = (*x.data)[i] * mask.values[i];
  if (out.requires_grad) {
    out.node = make_node("dropout", {x});
    auto xg = x.grad, og = out.grad;
    auto mv = std::make_shared<std::vector<double>>(mask.values);
    out.node->backward = [xg, og, mv, n]() {
      if (xg) for (size_t i = 0; i < n; ++i) (*xg)[i] += (*og)[i] * (*mv)[i];
    };
  }
  return out;
}

Tensor grad_reverse(const Tensor& x, double lambda) {
  Tensor out = Tensor::zeros(x.shape, grad_enabled() && x.requires_grad);
  *out.data = *x.data;
  if (out.requires_grad) {
    out.node = make_node("grad_reverse", {x});
    auto xg = x.grad, og = out.grad;
    const size_t n = x.numel();
    out.node->backward = [xg, og, lambda, n]() {
      if (xg) for (size_t i = 0; i < n; ++i) (*xg)[i] += -lambda * (*og)[i];
    };
  }
  return out;
}

Tensor masked_softmax_cross_entropy(const Tensor& logits, const std::vector<int>& labels,
                                    const std::vector<double>& weights) {
  check_2d(logits, "masked_softmax_cross_entropy");
  const int n = logits.shape[0], c = logits.shape[1];
  if (static_cast<int>(labels.size()) != n || static_cast<int>(weights.size()) != n) {
    throw std::invalid_argument("masked_softmax_cross_entropy: labels/weights must have " +
                                std::to_string(n) + " entries");
  }
  double wsum = 0.0;
  for (int i = 0; i < n; ++i) {
    if (weights[static_cast<size_t>(i)] < 0.0)
      throw std::invalid_argument("masked_softmax_cross_entropy: negative weight");
    if (weights[static_cast<size_t>(i)] > 0.0 &&
        (labels[static_cast<size_t>(i)] < 0 || labels[static_cast<size_t>(i)] >= c)) {
      throw std::out_of_range("masked_softmax_cross_entropy: label " +
                              std::to_string(labels[static_cast<size_t>(i)]) + " outside [0," +
                              std::to_string(c) + ")");
    }
    wsum += weights[static_cast<size_t>(i)];
  }
  if (wsum == 0.0) return Tensor::zeros({1});  // constant, no gradient by contract

  Tensor out = Tensor::zeros({1}, grad_enabled() && logits.requires_grad);
  double loss = 0.0;
  for (int i = 0; i < n; ++i) {
    const double w = weights[static_cast<size_t>(i)];
    if (w == 0.0) continue;
    const size_t base = static_cast<size_t>(i) * c;
    double mx = (*logits.data)[base];
    for (int j = 1; j < c; ++j) mx = std::max(mx, (*logits.data)[base + static_cast<size_t>(j)]);
    double denom = 0.0;
    for (int j = 0; j < c; ++j) denom += std::exp((*logits.data)[base + static_cast<size_t>(j)] - mx);
    const double lse = mx + std::log(denom);
    loss += w * (lse - (*logits.data)[base + static_cast<size_t>(labels[static_cast<size_t>(i)])]);
  }
  (*out.data)[0] = loss / wsum;

  if (out.requires_grad) {
    out.node = make_node("masked_ce", {logits});
    auto lg = logits.grad, og = out.grad, ld = logits.data;
    auto lab = labels;
    auto wts = weights;
    out.node->backward = [lg, og, ld, lab, wts, wsum, n, c]() {
      if (!lg) return;
      const double g = (*og)[0] / wsum;
      for (int i = 0; i < n; ++i) {
        const double w = wts[static_cast<size_t>(i)];
        if (w == 0.0) continue;
        const size_t base = static_cast<size_t>(i) * c;
        double mx = (*ld)[base];
        for (int j = 1; j < c; ++j) mx = std::max(mx, (*ld)[base + static_cast<size_t>(j)]);
        double denom = 0.0;
        for (int j = 0; j < c; ++j) denom += std::exp((*ld)[base + static_cast<size_t>(j)] - mx);
        for (int j = 0; j < c; ++j) {
          const double p = std::exp((*ld)[base + static_cast<size_t>(j)] - mx) / denom;
          const double onehot = (j == lab[static_cast<size_t>(i)]) ? 1.0 : 0.0;
          (*lg)[base + static_cast<size_t>(j)] += g * w * (p - onehot);
        }
      }
    };
  }
  return out;
}

double cosine_similarity(const Tensor& u, const Tensor& v) {
  if (u.numel() != v.numel()) {
    throw std::invalid_argument("cosine_similarity: size mismatch " + shape_str(u.shape) + " vs " +
                                shape_str(v.shape));
  }
  double dot = 0.0, nu = 0.0, nv = 0.0;
  for (size_t i = 0; i < u.numel(); ++i) {
    dot += (*u.data)[i] * (*v.data)[i];
    nu += (*u.data)[i] * (*u.data)[i];
    nv += (*v.data)[i] * (*v.data)[i];
  }
  if (nu == 0.0 || nv == 0.0) throw std::domain_error("cosine_similarity: zero-norm input");
  return dot / (std::sqrt(nu) * std::sqrt(nv));
}

// ---------------------------------------------------------------------------
// backward
// ---------------------------------------------------------------------------

void backward(Tensor& loss) {
  if (loss.numel() != 1) {
    throw std::invalid_argument("backward: loss must be scalar, got " + shape_str(loss.shape));
  }
  if (!loss.requires_grad || !loss.node) {
    throw std::invalid_argument("backward: loss does not depend on any requires_grad tensor");
  }
  (*loss.grad)[0] += 1.0;

  // Collect the reachable subgraph, then replay strictly in reverse creation
  // order. Creation order is topological by construction.
  std::vector<Node*> nodes;
  std::unordered_set<Node*> seen;
  std::vector<Node*> stack{loss.node.get()};
  seen.insert(loss.node.get());
  while (!stack.empty()) {
    Node* n = stack.back();
    stack.pop_back();
    nodes.push_back(n);
    for (const Tensor& p : n->parents) {
      if (p.node && seen.insert(p.node.get()).second) stack.push_back(p.node.get());
    }
  }
  std::sort(nodes.begin(), nodes.end(), [](const Node* a, const Node* b) { return a->seq > b->seq; });
  for (Node* n : nodes) n->backward();
}

}  // namespace fairlend
