#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "fairlend/losses.hpp"
#include "fairlend/rng.hpp"
#include "fairlend/tensor.hpp"

using namespace fairlend;

namespace {

// Random row-wise unit-norm matrix [m, d].
Tensor unit_rows(int m, int d, uint64_t seed, bool requires_grad = false) {
  CounterRng rng(seed);
  std::vector<double> v(static_cast<size_t>(m) * d);
  for (double& x : v) x = rng.normal();
  for (int i = 0; i < m; ++i) {
    double n2 = 0;
    for (int j = 0; j < d; ++j) n2 += v[i * d + j] * v[i * d + j];
    const double inv = 1.0 / std::sqrt(n2);
    for (int j = 0; j < d; ++j) v[i * d + j] *= inv;
  }
  return Tensor::from_data({m, d}, v, requires_grad);
}

// Direct summation of the symmetric NT-Xent equation: both views are anchors,
// the positive is the same item's other view, negatives are every other row of
// the stacked 2M x d matrix.
double ntxent_reference(const Tensor& a, const Tensor& b, double tau) {
  const int m = a.dim(0), d = a.dim(1), n = 2 * m;
  auto z = [&](int i, int j) { return i < m ? a.at(i, j) : b.at(i - m, j); };
  auto sim = [&](int i, int k) {
    double s = 0;
    for (int j = 0; j < d; ++j) s += z(i, j) * z(k, j);
    return s;
  };
  double total = 0;
  for (int i = 0; i < n; ++i) {
    const int pos = (i + m) % n;
    double denom = 0;
    for (int k = 0; k < n; ++k)
      if (k != i) denom += std::exp(sim(i, k) / tau);
    total += -std::log(std::exp(sim(i, pos) / tau) / denom);
  }
  return total / n;
}

double ce_row(const Tensor& logits, int row, int cls) {
  const double a = logits.at(row, 0), b = logits.at(row, 1);
  const double mx = std::max(a, b);
  const double lse = mx + std::log(std::exp(a - mx) + std::exp(b - mx));
  return lse - (cls == 1 ? b : a);
}

}  // namespace

TEST_SUITE("losses") {

TEST_CASE("contrastive loss equals the direct-summation reference") {
  for (int m : {1, 2, 4}) {
    for (double tau : {0.1, 0.5}) {
      CAPTURE(m);
      CAPTURE(tau);
      Tensor a = unit_rows(m, 8, 100 + static_cast<uint64_t>(m));
      Tensor b = unit_rows(m, 8, 200 + static_cast<uint64_t>(m));
      const double got = contrastive_loss(a, b, tau).value();
      const double want = ntxent_reference(a, b, tau);
      CHECK(std::abs(got - want) <= 1e-10);
    }
  }
}

TEST_CASE("a single pair has no negatives and zero loss") {
  Tensor a = unit_rows(1, 8, 7);
  Tensor b = unit_rows(1, 8, 8);
  CHECK(contrastive_loss(a, b, 0.1).value() == 0.0);
}

TEST_CASE("contrastive loss input validation") {
  Tensor a = unit_rows(3, 8, 1);
  Tensor b = unit_rows(3, 8, 2);
  CHECK_THROWS_AS(contrastive_loss(a, b, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(contrastive_loss(a, unit_rows(4, 8, 2), 0.1), std::invalid_argument);
  Tensor bad = Tensor::full({3, 8}, 0.5);
  CHECK_THROWS_WITH_AS(contrastive_loss(a, bad, 0.1), doctest::Contains("unit norm"),
                       std::invalid_argument);
}

TEST_CASE("matching views cost less than mismatched views") {
  Tensor a = unit_rows(6, 8, 42);
  // Mismatched: pair each row with a rotated row order of the same view.
  std::vector<double> rot(a.data->begin(), a.data->end());
  std::rotate(rot.begin(), rot.begin() + 8, rot.end());
  Tensor shifted = Tensor::from_data({6, 8}, rot);
  CHECK(contrastive_loss(a, a, 0.1).value() < contrastive_loss(a, shifted, 0.1).value());
}

TEST_CASE("label loss averages usable labeled rows only") {
  Tensor logits = Tensor::from_data({4, 2}, {2, 0, 0, 3, 1, 1, 5, -5}, true);
  std::vector<int> y = {1, 0, -1, 1};
  std::vector<int> usable = {1, 1, 1, 0};
  Tensor l = label_loss(logits, y, usable);
  const double want = (ce_row(logits, 0, 1) + ce_row(logits, 1, 0)) / 2.0;
  CHECK(l.value() == doctest::Approx(want).epsilon(1e-12));

  // Excluded rows contribute no gradient at all.
  backward(l);
  for (int k = 0; k < 2; ++k) {
    CHECK((*logits.grad)[2 * 2 + k] == 0.0);
    CHECK((*logits.grad)[3 * 2 + k] == 0.0);
  }

  CHECK(label_loss(logits, {-1, -1, -1, 1}, {1, 1, 1, 0}).value() == 0.0);
  CHECK_THROWS_AS(label_loss(logits, {2, 0, 0, 0}, usable), std::invalid_argument);
  CHECK_THROWS_AS(label_loss(logits, {1, 0}, usable), std::invalid_argument);
}

TEST_CASE("domain loss is plain cross-entropy over all rows") {
  Tensor logits = Tensor::from_data({3, 2}, {0.5, -0.5, 2, 2, -3, 1});
  std::vector<int> tags = {1, 0, 1};
  double want = 0;
  for (int i = 0; i < 3; ++i) want += ce_row(logits, i, tags[i]);
  want /= 3.0;
  CHECK(domain_loss(logits, tags).value() == doctest::Approx(want).epsilon(1e-12));
  CHECK_THROWS_AS(domain_loss(logits, {1, 0}), std::invalid_argument);
  CHECK_THROWS_AS(domain_loss(logits, {1, 2, 0}), std::invalid_argument);
}

TEST_CASE("adversarial weight schedule ramps from zero to its ceiling") {
  CHECK(wd_schedule(0.1, 0.001, 0) == 0.0);
  CHECK(std::abs(wd_schedule(0.1, 0.001, 1000) - 0.1 * std::tanh(0.5)) <= 1e-9);
  double prev = -1;
  for (int64_t s = 0; s <= 100000; s += 1) {
    const double w = wd_schedule(0.1, 0.001, s);
    REQUIRE(w >= prev);
    REQUIRE(w <= 0.1);
    prev = w;
  }
  CHECK(wd_schedule(0.1, 0.001, 1000000000) == doctest::Approx(0.1).epsilon(1e-9));
  CHECK_THROWS_AS(wd_schedule(-0.1, 0.001, 0), std::invalid_argument);
  CHECK_THROWS_AS(wd_schedule(0.1, -0.001, 0), std::invalid_argument);
  CHECK_THROWS_AS(wd_schedule(0.1, 0.001, -1), std::invalid_argument);
}

TEST_CASE("gradient reversal: identity forward, exact -lambda backward") {
  for (double lambda : {0.0, 0.5, 1.0}) {
    CAPTURE(lambda);
    Tensor x = unit_rows(3, 4, 55, true);
    Tensor w = unit_rows(4, 2, 56);

    Tensor rev = grad_reverse(x, lambda);
    CHECK(*rev.data == *x.data);  // forward pass is the identity, bit for bit

    Tensor loss = sum(matmul(rev, w));
    backward(loss);
    std::vector<double> got = *x.grad;

    // Reference network without the reversal layer.
    Tensor xr = Tensor::from_data({3, 4}, *x.data, true);
    Tensor loss_ref = sum(matmul(xr, w));
    backward(loss_ref);

    for (size_t i = 0; i < got.size(); ++i) CHECK(got[i] == -lambda * (*xr.grad)[i]);
  }
}

TEST_CASE("combined objective drops ablated terms entirely") {
  const Tensor l = Tensor::full({1}, 0.7);
  const Tensor d = Tensor::full({1}, 1.3);
  const Tensor c = Tensor::full({1}, 2.1);
  LossWeights w;  // w_label 1, w_cl 0.1, w_d_max 0.1, gamma 0.001

  LossBreakdown full = combine_losses(l, d, c, w, 500, true, true);
  const double wd = wd_schedule(0.1, 0.001, 500);
  CHECK(full.domain_weight == doctest::Approx(wd).epsilon(1e-15));
  CHECK(full.total.value() == doctest::Approx(0.7 + wd * 1.3 + 0.1 * 2.1).epsilon(1e-12));

  // Ablated terms must not influence the total, whatever their value.
  const Tensor huge = Tensor::full({1}, 1e9);
  LossBreakdown no_da = combine_losses(l, huge, c, w, 500, false, true);
  CHECK(no_da.domain_weight == 0.0);
  CHECK(no_da.total.value() == doctest::Approx(0.7 + 0.1 * 2.1).epsilon(1e-12));

  LossBreakdown no_cl = combine_losses(l, d, huge, w, 500, true, false);
  CHECK(no_cl.total.value() == doctest::Approx(0.7 + wd * 1.3).epsilon(1e-12));

  LossBreakdown bare = combine_losses(l, huge, huge, w, 500, false, false);
  CHECK(bare.total.value() == 0.7);
}

}  // TEST_SUITE
