#include "fairlend/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>

#include <json.hpp>

#include "fairlend/adam.hpp"

namespace fairlend {

using json = nlohmann::json;

void TrainConfig::validate() const {
  auto fail = [](const std::string& field, const std::string& why) {
    throw std::invalid_argument("TrainConfig." + field + ": " + why);
  };
  if (batch_size < 1) fail("batch_size", "must be >= 1");
  if (use_contrastive && batch_size < 2) {
    fail("batch_size", "must be >= 2 when the contrastive loss is enabled");
  }
  if (epochs < 1) fail("epochs", "must be >= 1");
  if (!(learning_rate > 0)) fail("learning_rate", "must be > 0");
  if (!(beta1 >= 0 && beta1 < 1)) fail("beta1", "must be in [0,1)");
  if (!(beta2 >= 0 && beta2 < 1)) fail("beta2", "must be in [0,1)");
  if (cl_max_pairs < 2) fail("cl_max_pairs", "must be >= 2");
  if (!(approve_threshold >= 0 && approve_threshold <= 1)) {
    fail("approve_threshold", "must be in [0,1]");
  }
  if (!(loss.tau > 0)) fail("loss.tau", "must be > 0");
  if (loss.w_label < 0 || loss.w_contrastive < 0 || loss.w_domain_max < 0 || loss.gamma < 0) {
    fail("loss", "weights and gamma must be >= 0");
  }
}

std::string TrainConfig::canonical_json() const {
  json j;
  j["batch_size"] = batch_size;
  j["epochs"] = epochs;
  j["learning_rate"] = learning_rate;
  j["beta1"] = beta1;
  j["beta2"] = beta2;
  j["use_contrastive"] = use_contrastive;
  j["use_domain"] = use_domain;
  j["transductive"] = transductive;
  j["cl_max_pairs"] = cl_max_pairs;
  j["approve_threshold"] = approve_threshold;
  j["seed"] = seed;
  j["w_label"] = loss.w_label;
  j["w_contrastive"] = loss.w_contrastive;
  j["w_domain_max"] = loss.w_domain_max;
  j["gamma"] = loss.gamma;
  j["tau"] = loss.tau;
  return j.dump();  // keys serialize alphabetically: stable for hashing
}

TrainConfig train_config_from_json(const std::string& text) {
  TrainConfig c;
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("train config: ") + e.what());
  }
  auto get = [&](const char* key, auto& into) {
    if (j.contains(key)) into = j.at(key).get<std::decay_t<decltype(into)>>();
  };
  get("batch_size", c.batch_size);
  get("epochs", c.epochs);
  get("learning_rate", c.learning_rate);
  get("beta1", c.beta1);
  get("beta2", c.beta2);
  get("use_contrastive", c.use_contrastive);
  get("use_domain", c.use_domain);
  get("transductive", c.transductive);
  get("cl_max_pairs", c.cl_max_pairs);
  get("approve_threshold", c.approve_threshold);
  get("seed", c.seed);
  get("w_label", c.loss.w_label);
  get("w_contrastive", c.loss.w_contrastive);
  get("w_domain_max", c.loss.w_domain_max);
  get("gamma", c.loss.gamma);
  get("tau", c.loss.tau);
  c.validate();
  return c;
}

namespace {

// Unlabeled test-borrower copies for the transductive pools: labels stay in
// place but label_in_train is cleared, so these rows are target-domain for
// L_d, eligible for L_CL, and invisible to L_y.
std::vector<BorrowerHistory> unlabeled_test_copies(const std::vector<BorrowerHistory>& test) {
  std::vector<BorrowerHistory> copies = test;
  for (BorrowerHistory& h : copies) {
    std::fill(h.label_in_train.begin(), h.label_in_train.end(), 0);
  }
  return copies;
}

double p_repay(double logit0, double logit1) {
  return 1.0 / (1.0 + std::exp(logit0 - logit1));
}

}  // namespace

TrainResult train(const DatasetSplit& split, const ModelConfig& mcfg, const TrainConfig& tcfg) {
  mcfg.validate();
  tcfg.validate();

  std::vector<BorrowerHistory> extra;
  std::vector<const BorrowerHistory*> pool;
  pool.reserve(split.train.size());
  for (const BorrowerHistory& h : split.train) pool.push_back(&h);
  if (tcfg.transductive) {
    extra = unlabeled_test_copies(split.test);
    for (const BorrowerHistory& h : extra) pool.push_back(&h);
  }

  size_t n_labeled = 0;
  for (const BorrowerHistory* h : pool) {
    for (size_t t = 0; t < h->label_in_train.size(); ++t) {
      if (h->label_in_train[t] && h->labels[t] != -1) ++n_labeled;
    }
  }
  if (n_labeled == 0) {
    throw std::invalid_argument("train: the split contains no usable labels");
  }

  TrainResult out;
  out.scaler = FeatureScaler::fit(split.train);
  out.params = ModelParams::init(mcfg, hash_combine(tcfg.seed, hash_str("init")));
  Adam opt(tcfg.learning_rate, tcfg.beta1, tcfg.beta2);
  opt.add_params(out.params.all());

  CounterRng root(tcfg.seed);
  std::vector<int> order(pool.size());
  std::iota(order.begin(), order.end(), 0);

  int64_t step = 0;
  for (int epoch = 0; epoch < tcfg.epochs; ++epoch) {
    CounterRng shuffle_rng = root.fork(hash_combine(hash_str("shuffle"), epoch));
    shuffle_rng.shuffle(order);

    double epoch_total = 0;
    int epoch_steps = 0;
    for (size_t begin = 0; begin < order.size(); begin += static_cast<size_t>(tcfg.batch_size)) {
      const size_t end = std::min(order.size(), begin + static_cast<size_t>(tcfg.batch_size));
      std::vector<const BorrowerHistory*> chunk;
      chunk.reserve(end - begin);
      for (size_t i = begin; i < end; ++i) chunk.push_back(pool[static_cast<size_t>(order[i])]);
      Batch batch = build_batch(chunk, mcfg.max_seq_len, out.scaler);

      const uint64_t seed_a = hash_combine(tcfg.seed, static_cast<uint64_t>(2 * step + 1));
      const uint64_t seed_b = hash_combine(tcfg.seed, static_cast<uint64_t>(2 * step + 2));
      ForwardResult pass_a = forward(batch, out.params, RunMode::train, seed_a);

      Tensor l_y = label_loss(pass_a.label_logits, pass_a.y, pass_a.domain);
      Tensor l_d = tcfg.use_domain ? domain_loss(pass_a.domain_logits, pass_a.domain)
                                   : Tensor::zeros({1});

      Tensor l_cl = Tensor::zeros({1});
      int n_pairs = 0;
      bool cl_active = false;
      if (tcfg.use_contrastive) {
        std::vector<int> unlabeled;
        for (size_t r = 0; r < pass_a.domain.size(); ++r) {
          if (pass_a.domain[r] == 0) unlabeled.push_back(static_cast<int>(r));
        }
        if (unlabeled.size() > static_cast<size_t>(tcfg.cl_max_pairs)) {
          CounterRng pick = root.fork(hash_combine(hash_str("clpairs"), static_cast<uint64_t>(step)));
          pick.shuffle(unlabeled);
          unlabeled.resize(static_cast<size_t>(tcfg.cl_max_pairs));
          std::sort(unlabeled.begin(), unlabeled.end());
        }
        if (!unlabeled.empty()) {
          ForwardResult pass_b = forward(batch, out.params, RunMode::train, seed_b);
          l_cl = contrastive_loss(gather_rows(pass_a.f, unlabeled),
                                  gather_rows(pass_b.f, unlabeled), tcfg.loss.tau);
          n_pairs = static_cast<int>(unlabeled.size());
          cl_active = true;
        }
      }

      LossBreakdown loss =
          combine_losses(l_y, l_d, l_cl, tcfg.loss, step, tcfg.use_domain, cl_active);
      const double total_v = loss.total.value();
      if (!std::isfinite(total_v)) {
        throw NumericalError(step, "train: non-finite loss at step " + std::to_string(step));
      }

      opt.zero_grad();
      backward(loss.total);
      opt.step();
      ++step;

      StepStats st;
      st.step = step;
      st.epoch = epoch;
      st.total = total_v;
      st.label = loss.label.value();
      st.domain = loss.domain.value();
      st.contrastive = loss.contrastive.value();
      st.domain_weight = loss.domain_weight;
      st.n_contrastive_pairs = n_pairs;
      out.history.push_back(st);
      epoch_total += total_v;
      ++epoch_steps;
    }
    out.epoch_mean_loss.push_back(epoch_steps ? epoch_total / epoch_steps : 0.0);
  }
  out.steps = step;
  return out;
}

MetricsReport evaluate(const DatasetSplit& split, const ModelParams& params,
                       const FeatureScaler& scaler, double approve_threshold,
                       const std::vector<std::pair<int, int>>& skip) {
  if (split.test.empty()) throw std::invalid_argument("evaluate: empty test split");
  NoGradGuard no_grad;

  std::set<std::pair<int, int>> skipped(skip.begin(), skip.end());
  std::vector<LoanRecord> loans;
  std::vector<int> loan_bin;
  std::vector<Tensor> f_chunks, va_chunks, vb_chunks;

  const int chunk_size = 512;
  for (size_t base = 0; base < split.test.size(); base += chunk_size) {
    const size_t hi = std::min(split.test.size(), base + chunk_size);
    std::vector<const BorrowerHistory*> chunk;
    for (size_t i = base; i < hi; ++i) chunk.push_back(&split.test[i]);
    Batch batch = build_batch(chunk, params.config.max_seq_len, scaler);

    ForwardResult r = forward(batch, params, RunMode::eval, 0);
    // Two dropout views of the same loans feed the alignment diagnostic.
    ForwardResult view_a = forward(batch, params, RunMode::train, hash_combine(base, 1));
    ForwardResult view_b = forward(batch, params, RunMode::train, hash_combine(base, 2));

    std::vector<int> kept;
    for (size_t row = 0; row < r.borrower.size(); ++row) {
      const int local_b = r.borrower[row];
      const int global_b = static_cast<int>(base) + local_b;
      const int t = r.position[row];
      if (skipped.count({global_b, t})) continue;
      kept.push_back(static_cast<int>(row));

      const BorrowerHistory& h = split.test[static_cast<size_t>(global_b)];
      // build_batch keeps the most recent max_seq_len loans; map the padded
      // position back to the source index.
      const int first = std::max(0, h.length() - params.config.max_seq_len);
      const int src = first + t;
      if (h.labels[static_cast<size_t>(src)] == -1) {
        throw std::invalid_argument("evaluate: test loan without a realized label");
      }
      LoanRecord rec;
      rec.score = p_repay(r.label_logits.at(static_cast<int>(row), 0),
                          r.label_logits.at(static_cast<int>(row), 1));
      rec.label = h.labels[static_cast<size_t>(src)];
      rec.amount = h.applications[static_cast<size_t>(src)].amount;
      rec.annual_rate = h.applications[static_cast<size_t>(src)].annual_rate;
      rec.term_months = h.applications[static_cast<size_t>(src)].term_months;
      rec.dpi = h.demographics.living_city_dpi;
      rec.income = h.demographics.monthly_income;
      rec.education = h.demographics.education;
      rec.homeownership = h.demographics.homeownership;
      loans.push_back(rec);
      loan_bin.push_back(length_bin(h.length()));
    }
    f_chunks.push_back(gather_rows(r.f, kept));
    va_chunks.push_back(gather_rows(view_a.f, kept));
    vb_chunks.push_back(gather_rows(view_b.f, kept));
  }
  if (loans.empty()) throw std::invalid_argument("evaluate: every test loan was skipped");

  MetricsReport rep;
  rep.n_loans = static_cast<int>(loans.size());

  std::vector<double> scores(loans.size());
  std::vector<int> labels(loans.size());
  for (size_t i = 0; i < loans.size(); ++i) {
    scores[i] = loans[i].score;
    labels[i] = loans[i].label;
  }
  rep.auc = auc_roc(scores, labels);
  rep.policy = evaluate_policy(loans, approve_threshold);

  Tensor f_all = concat_rows(f_chunks);
  rep.alignment = alignment_metric(concat_rows(va_chunks), concat_rows(vb_chunks));
  rep.uniformity = uniformity_metric(f_all);

  const int n_bins = static_cast<int>(length_bin_labels().size());
  rep.bin_counts.assign(static_cast<size_t>(n_bins), 0);
  rep.bin_auc.assign(static_cast<size_t>(n_bins), std::numeric_limits<double>::quiet_NaN());
  for (int b = 0; b < n_bins; ++b) {
    std::vector<double> s;
    std::vector<int> y;
    for (size_t i = 0; i < loans.size(); ++i) {
      if (loan_bin[i] != b) continue;
      s.push_back(scores[i]);
      y.push_back(labels[i]);
    }
    rep.bin_counts[static_cast<size_t>(b)] = static_cast<int>(s.size());
    try {
      rep.bin_auc[static_cast<size_t>(b)] = auc_roc(s, y);
    } catch (const std::exception&) {
      // empty or one-class bin: leave NaN
    }
  }
  std::vector<double> xs, ys;
  for (int b = 0; b < n_bins; ++b) {
    if (std::isfinite(rep.bin_auc[static_cast<size_t>(b)])) {
      xs.push_back(b);
      ys.push_back(rep.bin_auc[static_cast<size_t>(b)]);
    }
  }
  if (xs.size() >= 2) rep.auc_length_slope = least_squares_slope(xs, ys);
  return rep;
}

}  // namespace fairlend
