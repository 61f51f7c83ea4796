#include <doctest.h>

#include <cmath>
#include <vector>

#include "fairlend/metrics.hpp"
#include "fairlend/rng.hpp"
#include "fairlend/tensor.hpp"

using namespace fairlend;

namespace {

double auc_pairwise(const std::vector<double>& s, const std::vector<int>& y) {
  double num = 0;
  size_t pairs = 0;
  for (size_t i = 0; i < s.size(); ++i) {
    if (y[i] != 1) continue;
    for (size_t j = 0; j < s.size(); ++j) {
      if (y[j] != 0) continue;
      ++pairs;
      if (s[i] > s[j]) num += 1.0;
      else if (s[i] == s[j]) num += 0.5;
    }
  }
  return num / static_cast<double>(pairs);
}

// Reflection through the hyperplane orthogonal to v: H = I - 2 vv^T / (v.v).
Tensor householder_rotate(const Tensor& rows, const std::vector<double>& v) {
  const int n = rows.dim(0), d = rows.dim(1);
  double vv = 0;
  for (double e : v) vv += e * e;
  Tensor out = Tensor::zeros({n, d});
  for (int i = 0; i < n; ++i) {
    double dot = 0;
    for (int j = 0; j < d; ++j) dot += rows.at(i, j) * v[static_cast<size_t>(j)];
    for (int j = 0; j < d; ++j)
      (*out.data)[static_cast<size_t>(i) * d + j] =
          rows.at(i, j) - 2.0 * dot * v[static_cast<size_t>(j)] / vv;
  }
  return out;
}

Tensor random_rows(int n, int d, uint64_t seed) {
  CounterRng rng(seed);
  std::vector<double> v(static_cast<size_t>(n) * d);
  for (double& x : v) x = rng.normal();
  return Tensor::from_data({n, d}, v);
}

LoanRecord loan(double score, int label, double amount, double rate, int term, double dpi,
                double income) {
  LoanRecord r;
  r.score = score;
  r.label = label;
  r.amount = amount;
  r.annual_rate = rate;
  r.term_months = term;
  r.dpi = dpi;
  r.income = income;
  r.education = income;  // arbitrary but deterministic
  r.homeownership = label;
  return r;
}

}  // namespace

TEST_SUITE("metrics") {

TEST_CASE("rank AUC equals brute-force pairwise counting with ties") {
  CounterRng rng(99);
  for (int inst = 0; inst < 100; ++inst) {
    const int n = 2 + static_cast<int>(rng.uniform_int(0, 198));
    std::vector<double> s(static_cast<size_t>(n));
    std::vector<int> y(static_cast<size_t>(n));
    // Coarse score grid forces plenty of exact ties.
    for (int i = 0; i < n; ++i) {
      s[static_cast<size_t>(i)] = 0.1 * static_cast<double>(rng.uniform_int(0, 9));
      y[static_cast<size_t>(i)] = static_cast<int>(rng.uniform_int(0, 1));
    }
    y[0] = 1;
    y[static_cast<size_t>(n - 1)] = 0;  // both classes present
    CAPTURE(inst);
    CHECK(auc_roc(s, y) == auc_pairwise(s, y));  // exact, not approximate
  }
  CHECK(auc_roc({0.9, 0.1}, {1, 0}) == 1.0);
  CHECK(auc_roc({0.1, 0.9}, {1, 0}) == 0.0);
  CHECK(auc_roc({0.5, 0.5}, {1, 0}) == 0.5);
  CHECK_THROWS_AS(auc_roc({0.5, 0.5}, {1, 1}), std::domain_error);
  CHECK_THROWS_AS(auc_roc({0.5}, {1, 0}), std::invalid_argument);
  CHECK_THROWS_AS(auc_roc({0.5, 0.5}, {1, 2}), std::invalid_argument);
}

TEST_CASE("single-loan profit formula") {
  CHECK(loan_profit(1200, 0.30, 6, 1) == doctest::Approx(1200 * 0.30 * 0.5).epsilon(1e-12));
  CHECK(loan_profit(1200, 0.30, 6, 0) == -1200.0);
  CHECK(loan_profit(500, 0.12, 12, 1) == doctest::Approx(60.0).epsilon(1e-12));
  CHECK(loan_profit(0, 0.5, 6, 1) == 0.0);
}

TEST_CASE("threshold policy outcomes") {
  std::vector<LoanRecord> loans = {
      loan(0.9, 1, 1000, 0.24, 6, 50000, 5),
      loan(0.8, 0, 500, 0.12, 12, 30000, 3),
      loan(0.4, 1, 800, 0.30, 4, 20000, 2),
      loan(0.2, 0, 600, 0.18, 8, 25000, 1),
  };

  SUBCASE("approve-all matches population means") {
    PolicyOutcome o = evaluate_policy(loans, 0.0);
    CHECK(o.n_loans == 4);
    CHECK(o.n_approved == 4);
    CHECK(o.approval_rate == 1.0);
    const double want = loan_profit(1000, 0.24, 6, 1) + loan_profit(500, 0.12, 12, 0) +
                        loan_profit(800, 0.30, 4, 1) + loan_profit(600, 0.18, 8, 0);
    CHECK(o.profit == doctest::Approx(want).epsilon(1e-12));
    CHECK(o.profit_per_loan == doctest::Approx(want / 4).epsilon(1e-12));
    CHECK(o.default_rate_approved == 0.5);
    CHECK(o.mean_dpi_approved == doctest::Approx((50000 + 30000 + 20000 + 25000) / 4.0));
    CHECK(o.mean_income_approved == doctest::Approx((5 + 3 + 2 + 1) / 4.0));
  }
  SUBCASE("selective threshold") {
    PolicyOutcome o = evaluate_policy(loans, 0.5);
    CHECK(o.n_approved == 2);
    CHECK(o.approval_rate == 0.5);
    CHECK(o.default_rate_approved == 0.5);
    CHECK(o.mean_dpi_approved == doctest::Approx(40000.0));
  }
  SUBCASE("boundary score is approved") {
    PolicyOutcome o = evaluate_policy(loans, 0.9);
    CHECK(o.n_approved == 1);
    CHECK(o.profit == doctest::Approx(loan_profit(1000, 0.24, 6, 1)));
  }
  SUBCASE("zero approvals is an error") {
    CHECK_THROWS_AS(evaluate_policy(loans, 0.95), std::domain_error);
  }
}

TEST_CASE("alignment metric: closed forms and brute force") {
  Tensor a = random_rows(10, 6, 5);
  CHECK(alignment_metric(a, a) == 0.0);

  // Antipodal unit rows sit at squared distance 4.
  std::vector<double> u = {1, 0, 0, 0, 0, 0};
  Tensor one = Tensor::from_data({1, 6}, u);
  std::vector<double> nu = {-1, 0, 0, 0, 0, 0};
  Tensor neg = Tensor::from_data({1, 6}, nu);
  CHECK(alignment_metric(one, neg) == 4.0);

  Tensor b = random_rows(10, 6, 6);
  double want = 0;
  for (int i = 0; i < 10; ++i) {
    double d2 = 0;
    for (int j = 0; j < 6; ++j) {
      const double d = a.at(i, j) - b.at(i, j);
      d2 += d * d;
    }
    want += d2;
  }
  want /= 10.0;
  CHECK(alignment_metric(a, b) == doctest::Approx(want).epsilon(1e-12));
  CHECK_THROWS_AS(alignment_metric(a, random_rows(9, 6, 7)), std::invalid_argument);
}

TEST_CASE("uniformity metric: closed forms and brute force") {
  // All rows identical: every pair distance 0 -> exp(0) = 1.
  Tensor same = Tensor::full({5, 4}, 0.3);
  CHECK(uniformity_metric(same) == 1.0);

  // Two antipodal unit rows: single pair at distance^2 = 4 -> exp(-8).
  Tensor pair = Tensor::from_data({2, 2}, {1, 0, -1, 0});
  CHECK(uniformity_metric(pair) == doctest::Approx(std::exp(-8.0)).epsilon(1e-14));

  Tensor f = random_rows(20, 5, 8);
  double want = 0;
  int cnt = 0;
  for (int i = 0; i < 20; ++i)
    for (int j = i + 1; j < 20; ++j) {
      double d2 = 0;
      for (int k = 0; k < 5; ++k) {
        const double d = f.at(i, k) - f.at(j, k);
        d2 += d * d;
      }
      want += std::exp(-2.0 * d2);
      ++cnt;
    }
  want /= cnt;
  CHECK(uniformity_metric(f) == doctest::Approx(want).epsilon(1e-12));
  CHECK_THROWS_AS(uniformity_metric(random_rows(1, 5, 9)), std::invalid_argument);
}

TEST_CASE("alignment and uniformity are rotation invariant") {
  Tensor a = random_rows(12, 6, 21);
  Tensor b = random_rows(12, 6, 22);
  const std::vector<double> v = {0.3, -1.2, 0.5, 2.0, -0.7, 0.1};
  Tensor ra = householder_rotate(a, v);
  Tensor rb = householder_rotate(b, v);
  CHECK(alignment_metric(ra, rb) == doctest::Approx(alignment_metric(a, b)).epsilon(1e-10));
  CHECK(uniformity_metric(ra) == doctest::Approx(uniformity_metric(a)).epsilon(1e-10));
}

TEST_CASE("PCA: collinear data explains everything with one component") {
  std::vector<double> v;
  for (int i = 0; i < 50; ++i) {
    const double t = 0.1 * i - 2.5;
    v.push_back(3 * t);
    v.push_back(-4 * t);
  }
  PcaResult r = pca_project(Tensor::from_data({50, 2}, v), 2);
  CHECK(r.explained_variance_ratio[0] == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(r.explained_variance_ratio[1] == doctest::Approx(0.0).scale(1.0).epsilon(1e-9));
  // Sign convention: the largest-|entry| coordinate of each component is +.
  const double c0 = r.components.at(0, 0), c1 = r.components.at(1, 0);
  CHECK(std::max(std::abs(c0), std::abs(c1)) ==
        doctest::Approx(std::abs(c1) > std::abs(c0) ? c1 : c0));
}

TEST_CASE("PCA: isotropic clouds split variance evenly") {
  Tensor x = random_rows(10000, 2, 77);
  PcaResult r = pca_project(x, 2);
  CHECK(r.explained_variance_ratio[0] > 0.45);
  CHECK(r.explained_variance_ratio[0] < 0.55);
  CHECK(r.explained_variance_ratio[0] + r.explained_variance_ratio[1] ==
        doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("PCA: 3x3 eigenvalues match the characteristic-polynomial roots") {
  Tensor x = random_rows(400, 3, 31);
  PcaResult r = pca_project(x, 3);

  // Covariance of the centered data, straight summation.
  std::vector<double> mean(3, 0);
  for (int i = 0; i < 400; ++i)
    for (int j = 0; j < 3; ++j) mean[static_cast<size_t>(j)] += x.at(i, j);
  for (double& m : mean) m /= 400.0;
  double C[3][3] = {};
  for (int i = 0; i < 400; ++i)
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b)
        C[a][b] += (x.at(i, a) - mean[static_cast<size_t>(a)]) *
                   (x.at(i, b) - mean[static_cast<size_t>(b)]) / 399.0;

  // Roots of det(C - lambda I) via the trigonometric closed form for
  // symmetric 3x3 matrices.
  const double q = (C[0][0] + C[1][1] + C[2][2]) / 3.0;
  double p2 = 0;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) p2 += (C[a][b] - (a == b ? q : 0)) * (C[a][b] - (a == b ? q : 0));
  const double p = std::sqrt(p2 / 6.0);
  double B[3][3];
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) B[a][b] = (C[a][b] - (a == b ? q : 0)) / p;
  const double detB = B[0][0] * (B[1][1] * B[2][2] - B[1][2] * B[2][1]) -
                      B[0][1] * (B[1][0] * B[2][2] - B[1][2] * B[2][0]) +
                      B[0][2] * (B[1][0] * B[2][1] - B[1][1] * B[2][0]);
  const double kPi = std::acos(-1.0);
  const double phi = std::acos(std::min(1.0, std::max(-1.0, detB / 2.0))) / 3.0;
  std::vector<double> lam = {q + 2 * p * std::cos(phi),
                             q + 2 * p * std::cos(phi + 4 * kPi / 3.0),
                             q + 2 * p * std::cos(phi + 2 * kPi / 3.0)};  // descending

  const double total = lam[0] + lam[1] + lam[2];
  for (int k = 0; k < 3; ++k) {
    CAPTURE(k);
    CHECK(std::abs(r.explained_variance_ratio[static_cast<size_t>(k)] -
                   lam[static_cast<size_t>(k)] / total) <= 1e-8);
  }
}

TEST_CASE("PCA argument and rank errors") {
  Tensor x = random_rows(5, 4, 3);
  CHECK_THROWS_AS(pca_project(x, 5), std::invalid_argument);  // k > d
  CHECK_THROWS_AS(pca_project(x, 0), std::invalid_argument);
  // 3 points span at most a 2-dimensional affine subspace.
  Tensor tiny = random_rows(3, 4, 4);
  CHECK_THROWS_AS(pca_project(tiny, 3), std::domain_error);
  CHECK_NOTHROW(pca_project(tiny, 2));
}

TEST_CASE("history-length bins") {
  CHECK(length_bin(1) == 0);
  CHECK(length_bin(2) == 1);
  CHECK(length_bin(3) == 1);
  CHECK(length_bin(4) == 2);
  CHECK(length_bin(6) == 2);
  CHECK(length_bin(7) == 3);
  CHECK(length_bin(10) == 3);
  CHECK(length_bin(11) == 4);
  CHECK(length_bin(99) == 4);
  CHECK_THROWS_AS(length_bin(0), std::invalid_argument);
  CHECK(length_bin_labels().size() == 5);
}

TEST_CASE("least-squares slope closed form") {
  CHECK(least_squares_slope({0, 1, 2, 3}, {1, 3, 5, 7}) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(least_squares_slope({0, 1, 2}, {5, 5, 5}) == doctest::Approx(0.0).scale(1.0));
  // Generic case vs the covariance formula.
  std::vector<double> x = {0.5, 1.7, -2.3, 4.1, 0.0};
  std::vector<double> y = {1.2, -0.3, 2.2, 5.0, -1.1};
  double mx = 0, my = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= 5;
  my /= 5;
  double sxy = 0, sxx = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  CHECK(least_squares_slope(x, y) == doctest::Approx(sxy / sxx).epsilon(1e-12));
  CHECK_THROWS_AS(least_squares_slope({1}, {2}), std::invalid_argument);
  CHECK_THROWS_AS(least_squares_slope({2, 2, 2}, {1, 2, 3}), std::invalid_argument);
}

TEST_CASE("metrics report serializes NaN as null") {
  MetricsReport r;
  r.n_loans = 3;
  r.auc = 0.75;
  r.bin_counts = {1, 2, 0, 0, 0};
  r.bin_auc = {0.5, std::numeric_limits<double>::quiet_NaN(), 0, 0, 0};
  const std::string j = r.to_json();
  CHECK(j.find("\"auc\":0.75") != std::string::npos);
  CHECK(j.find("null") != std::string::npos);
}

}  // TEST_SUITE
