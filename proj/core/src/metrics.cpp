#include "fairlend/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

namespace fairlend {

using json = nlohmann::json;

double auc_roc(const std::vector<double>& scores, const std::vector<int>& labels) {
  const size_t n = scores.size();
  if (labels.size() != n) throw std::invalid_argument("auc_roc: scores/labels length mismatch");
  size_t n_pos = 0;
  for (int y : labels) {
    if (y != 0 && y != 1) throw std::invalid_argument("auc_roc: labels must be 0 or 1");
    n_pos += static_cast<size_t>(y);
  }
  const size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) {
    throw std::domain_error("auc_roc: both classes must be present");
  }

  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](size_t a, size_t b) { return scores[a] < scores[b]; });

  // Midranks: every member of a tie group gets the group's average rank.
  double pos_rank_sum = 0;
  size_t i = 0;
  while (i < n) {
    size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const double midrank = 0.5 * static_cast<double>(i + 1 + j);  // ranks are 1-based
    for (size_t k = i; k < j; ++k) {
      if (labels[order[k]] == 1) pos_rank_sum += midrank;
    }
    i = j;
  }
  const double np = static_cast<double>(n_pos), nn = static_cast<double>(n_neg);
  return (pos_rank_sum - np * (np + 1) / 2.0) / (np * nn);
}

double loan_profit(double amount, double annual_rate, int term_months, int y) {
  return y == 1 ? amount * annual_rate * (term_months / 12.0) : -amount;
}

PolicyOutcome evaluate_policy(const std::vector<LoanRecord>& loans, double threshold) {
  PolicyOutcome out;
  out.n_loans = static_cast<int>(loans.size());
  double dpi = 0, income = 0, education = 0, home = 0;
  int defaults = 0;
  for (const LoanRecord& l : loans) {
    if (l.score < threshold) continue;
    ++out.n_approved;
    out.profit += loan_profit(l.amount, l.annual_rate, l.term_months, l.label);
    dpi += l.dpi;
    income += l.income;
    education += l.education;
    home += l.homeownership;
    defaults += l.label == 0 ? 1 : 0;
  }
  if (out.n_approved == 0) {
    throw std::domain_error("evaluate_policy: threshold approves no loans");
  }
  out.approval_rate = static_cast<double>(out.n_approved) / out.n_loans;
  out.profit_per_loan = out.profit / out.n_loans;
  out.default_rate_approved = static_cast<double>(defaults) / out.n_approved;
  out.mean_dpi_approved = dpi / out.n_approved;
  out.mean_income_approved = income / out.n_approved;
  out.mean_education_approved = education / out.n_approved;
  out.mean_homeownership_approved = home / out.n_approved;
  return out;
}

double alignment_metric(const Tensor& view_a, const Tensor& view_b) {
  if (view_a.ndim() != 2 || view_a.shape != view_b.shape) {
    throw std::invalid_argument("alignment_metric: views must share shape [M,d]");
  }
  const int m = view_a.dim(0), d = view_a.dim(1);
  if (m < 1) throw std::invalid_argument("alignment_metric: need at least one pair");
  double total = 0;
  for (int i = 0; i < m; ++i) {
    double dist2 = 0;
    for (int j = 0; j < d; ++j) {
      const double diff = view_a.at(i, j) - view_b.at(i, j);
      dist2 += diff * diff;
    }
    total += dist2;
  }
  return total / m;
}

double uniformity_metric(const Tensor& f) {
  if (f.ndim() != 2) throw std::invalid_argument("uniformity_metric: expected [n,d]");
  const int n = f.dim(0), d = f.dim(1);
  if (n < 2) throw std::invalid_argument("uniformity_metric: need at least two rows");
  double total = 0;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      double dist2 = 0;
      for (int k = 0; k < d; ++k) {
        const double diff = f.at(i, k) - f.at(j, k);
        dist2 += diff * diff;
      }
      total += std::exp(-2.0 * dist2);
    }
  }
  return total / (static_cast<double>(n) * (n - 1) / 2.0);
}

namespace {

// Cyclic Jacobi diagonalization of a symmetric matrix held row-major in a.
// Returns eigenvalues; v accumulates the eigenvector columns.
std::vector<double> jacobi_eigen(std::vector<double>& a, int d, std::vector<double>& v) {
  v.assign(static_cast<size_t>(d) * d, 0.0);
  for (int i = 0; i < d; ++i) v[static_cast<size_t>(i) * d + i] = 1.0;
  auto A = [&](int r, int c) -> double& { return a[static_cast<size_t>(r) * d + c]; };
  auto V = [&](int r, int c) -> double& { return v[static_cast<size_t>(r) * d + c]; };

  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0;
    for (int p = 0; p < d; ++p)
      for (int q = p + 1; q < d; ++q) off += A(p, q) * A(p, q);
    if (off < 1e-24) break;
    for (int p = 0; p < d; ++p) {
      for (int q = p + 1; q < d; ++q) {
        if (A(p, q) == 0.0) continue;
        const double theta = (A(q, q) - A(p, p)) / (2.0 * A(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (int k = 0; k < d; ++k) {
          const double akp = A(k, p), akq = A(k, q);
          A(k, p) = c * akp - s * akq;
          A(k, q) = s * akp + c * akq;
        }
        for (int k = 0; k < d; ++k) {
          const double apk = A(p, k), aqk = A(q, k);
          A(p, k) = c * apk - s * aqk;
          A(q, k) = s * apk + c * aqk;
        }
        for (int k = 0; k < d; ++k) {
          const double vkp = V(k, p), vkq = V(k, q);
          V(k, p) = c * vkp - s * vkq;
          V(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  std::vector<double> eig(static_cast<size_t>(d));
  for (int i = 0; i < d; ++i) eig[static_cast<size_t>(i)] = A(i, i);
  return eig;
}

}  // namespace

PcaResult pca_project(const Tensor& x, int k) {
  if (x.ndim() != 2) throw std::invalid_argument("pca_project: expected [n,d]");
  const int n = x.dim(0), d = x.dim(1);
  if (k < 1 || k > d) throw std::invalid_argument("pca_project: k must be in [1,d]");
  if (n < 2) throw std::invalid_argument("pca_project: need at least two rows");

  std::vector<double> mean(static_cast<size_t>(d), 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) mean[static_cast<size_t>(j)] += x.at(i, j);
  for (double& m : mean) m /= n;

  std::vector<double> cov(static_cast<size_t>(d) * d, 0.0);
  for (int i = 0; i < n; ++i) {
    for (int a = 0; a < d; ++a) {
      const double xa = x.at(i, a) - mean[static_cast<size_t>(a)];
      for (int b = a; b < d; ++b) {
        cov[static_cast<size_t>(a) * d + b] += xa * (x.at(i, b) - mean[static_cast<size_t>(b)]);
      }
    }
  }
  for (int a = 0; a < d; ++a)
    for (int b = a; b < d; ++b) {
      cov[static_cast<size_t>(a) * d + b] /= (n - 1);
      cov[static_cast<size_t>(b) * d + a] = cov[static_cast<size_t>(a) * d + b];
    }

  // The structural rank of an n-point centered cloud is at most n-1; beyond
  // that there is no k-th direction to report. Zero-variance directions within
  // that budget are fine and simply explain 0% of the variance.
  if (k > n - 1) {
    throw std::domain_error("pca_project: " + std::to_string(k) + " components need at least " +
                            std::to_string(k + 1) + " points, got " + std::to_string(n));
  }

  std::vector<double> vecs;
  std::vector<double> eig = jacobi_eigen(cov, d, vecs);

  std::vector<int> order(static_cast<size_t>(d));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) { return eig[static_cast<size_t>(a)] > eig[static_cast<size_t>(b)]; });

  double trace = 0;
  for (double e : eig) trace += std::max(e, 0.0);

  PcaResult out;
  out.components = Tensor::zeros({d, k});
  out.explained_variance_ratio.resize(static_cast<size_t>(k));
  for (int c = 0; c < k; ++c) {
    const int src = order[static_cast<size_t>(c)];
    // Sign convention: the entry with the largest magnitude is positive.
    int arg = 0;
    for (int r = 1; r < d; ++r) {
      if (std::abs(vecs[static_cast<size_t>(r) * d + src]) >
          std::abs(vecs[static_cast<size_t>(arg) * d + src]))
        arg = r;
    }
    const double sign = vecs[static_cast<size_t>(arg) * d + src] >= 0 ? 1.0 : -1.0;
    for (int r = 0; r < d; ++r) {
      (*out.components.data)[static_cast<size_t>(r) * k + c] =
          sign * vecs[static_cast<size_t>(r) * d + src];
    }
    out.explained_variance_ratio[static_cast<size_t>(c)] =
        trace > 0 ? std::max(eig[static_cast<size_t>(src)], 0.0) / trace : 0.0;
  }

  out.projected = Tensor::zeros({n, k});
  for (int i = 0; i < n; ++i) {
    for (int c = 0; c < k; ++c) {
      double dot = 0;
      for (int j = 0; j < d; ++j) {
        dot += (x.at(i, j) - mean[static_cast<size_t>(j)]) *
               (*out.components.data)[static_cast<size_t>(j) * k + c];
      }
      (*out.projected.data)[static_cast<size_t>(i) * k + c] = dot;
    }
  }
  return out;
}

int length_bin(int t_len) {
  if (t_len < 1) throw std::invalid_argument("length_bin: length must be >= 1");
  if (t_len == 1) return 0;
  if (t_len <= 3) return 1;
  if (t_len <= 6) return 2;
  if (t_len <= 10) return 3;
  return 4;
}

const std::vector<std::string>& length_bin_labels() {
  static const std::vector<std::string> labels = {"1", "2-3", "4-6", "7-10", ">10"};
  return labels;
}

double least_squares_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw std::invalid_argument("least_squares_slope: need >= 2 paired points");
  }
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  if (sxx == 0) throw std::invalid_argument("least_squares_slope: x is constant");
  return sxy / sxx;
}

std::string MetricsReport::to_json() const {
  json j;
  j["n_loans"] = n_loans;
  j["auc"] = auc;
  j["approval_rate"] = policy.approval_rate;
  j["n_approved"] = policy.n_approved;
  j["profit"] = policy.profit;
  j["profit_per_loan"] = policy.profit_per_loan;
  j["default_rate_approved"] = policy.default_rate_approved;
  j["mean_dpi_approved"] = policy.mean_dpi_approved;
  j["mean_income_approved"] = policy.mean_income_approved;
  j["mean_education_approved"] = policy.mean_education_approved;
  j["mean_homeownership_approved"] = policy.mean_homeownership_approved;
  j["alignment"] = alignment;
  j["uniformity"] = uniformity;
  j["bin_labels"] = length_bin_labels();
  j["bin_counts"] = bin_counts;
  j["bin_auc"] = bin_auc;
  j["auc_length_slope"] = auc_length_slope;
  return j.dump();
}

}  // namespace fairlend
