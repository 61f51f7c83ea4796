#include "fairlend/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <json.hpp>

#include "fairlend/io_util.hpp"

namespace fairlend {

using json = nlohmann::json;

namespace {

constexpr double kMaskedScore = -1e30;  // additive score for disallowed key positions

int gate_count(Backbone b) {
  switch (b) {
    case Backbone::transformer: return 0;
    case Backbone::rnn: return 1;   // h
    case Backbone::gru: return 3;   // r, z, n
    case Backbone::lstm: return 4;  // i, f, g, o
  }
  return 0;
}

Tensor mlp2(const Tensor& x, const Tensor& w1, const Tensor& b1, const Tensor& w2,
            const Tensor& b2) {
  return add_row_bias(matmul(relu(add_row_bias(matmul(x, w1), b1)), w2), b2);
}

// softmax(scale * Q K^T + additive_mask) V for one sequence's projections.
Tensor scaled_dot_attention(const Tensor& q, const Tensor& k, const Tensor& v,
                            const Tensor& additive_mask) {
  const double scale_factor = 1.0 / std::sqrt(static_cast<double>(q.dim(1)));
  Tensor scores = add(scale(matmul_nt(q, k), scale_factor), additive_mask);
  return matmul(softmax(scores, 1), v);
}

Tensor causal_mask(int t) {
  Tensor m = Tensor::zeros({t, t});
  for (int i = 0; i < t; ++i)
    for (int j = i + 1; j < t; ++j) (*m.data)[static_cast<size_t>(i) * t + j] = kMaskedScore;
  return m;
}

}  // namespace

Backbone backbone_from_string(const std::string& s) {
  if (s == "transformer") return Backbone::transformer;
  if (s == "rnn") return Backbone::rnn;
  if (s == "lstm") return Backbone::lstm;
  if (s == "gru") return Backbone::gru;
  throw std::invalid_argument("unknown backbone '" + s +
                              "' (expected transformer, rnn, lstm or gru)");
}

std::string backbone_to_string(Backbone b) {
  switch (b) {
    case Backbone::transformer: return "transformer";
    case Backbone::rnn: return "rnn";
    case Backbone::lstm: return "lstm";
    case Backbone::gru: return "gru";
  }
  return "transformer";
}

void ModelConfig::validate() const {
  auto fail = [](const std::string& field, const std::string& why) {
    throw std::invalid_argument("ModelConfig." + field + ": " + why);
  };
  if (hidden_dim < 1) fail("hidden_dim", "must be >= 1");
  if (n_layers < 0) fail("n_layers", "must be >= 0");
  if (ff_dim < 1) fail("ff_dim", "must be >= 1");
  if (!(dropout_keep > 0 && dropout_keep <= 1)) fail("dropout_keep", "must be in (0,1]");
  if (max_seq_len < 1) fail("max_seq_len", "must be >= 1");
  if (n_demographic_features < 1) fail("n_demographic_features", "must be >= 1");
  if (n_sequence_features < 1) fail("n_sequence_features", "must be >= 1");
  if (!(layer_norm_eps > 0)) fail("layer_norm_eps", "must be > 0");
  if (grl_lambda < 0) fail("grl_lambda", "must be >= 0");
}

std::string ModelConfig::canonical_json() const {
  json j;
  j["hidden_dim"] = hidden_dim;
  j["n_layers"] = n_layers;
  j["ff_dim"] = ff_dim;
  j["dropout_keep"] = dropout_keep;
  j["max_seq_len"] = max_seq_len;
  j["backbone"] = backbone_to_string(backbone);
  j["n_demographic_features"] = n_demographic_features;
  j["n_sequence_features"] = n_sequence_features;
  j["grl_lambda"] = grl_lambda;
  j["layer_norm_eps"] = layer_norm_eps;
  return j.dump();  // keys serialize alphabetically: stable for hashing
}

ModelParams ModelParams::init(const ModelConfig& cfg, uint64_t seed) {
  cfg.validate();
  ModelParams p;
  p.config = cfg;
  CounterRng root(seed);

  // Uniform fan-in init: W_ij ~ U(-sqrt(6/fan_in), +sqrt(6/fan_in)).
  auto linear = [&root](const std::string& name, int in, int out) {
    CounterRng r = root.fork(name);
    Tensor t = Tensor::zeros({in, out}, true);
    const double bound = std::sqrt(6.0 / in);
    for (double& v : *t.data) v = r.uniform(-bound, bound);
    return t;
  };
  auto zeros = [](int n) { return Tensor::zeros({n}, true); };
  auto ones = [](int n) { return Tensor::full({n}, 1.0, true); };

  const int h = cfg.hidden_dim;
  p.W0 = linear("enc.W0", cfg.n_sequence_features, h);
  p.b0 = zeros(h);
  p.W1 = linear("enc.W1", cfg.n_sequence_features, h);
  p.b1 = zeros(h);

  {
    CounterRng r = root.fork("positional");
    p.positional = Tensor::zeros({cfg.max_seq_len, h}, true);
    for (double& v : *p.positional.data) v = r.normal(0.0, 0.02);
  }

  if (cfg.backbone == Backbone::transformer) {
    for (int l = 0; l < cfg.n_layers; ++l) {
      const std::string pre = "layer" + std::to_string(l) + ".";
      TransformerLayerParams lp;
      lp.Wq = linear(pre + "Wq", h, h);
      lp.Wk = linear(pre + "Wk", h, h);
      lp.Wv = linear(pre + "Wv", h, h);
      lp.Wo = linear(pre + "Wo", h, h);
      lp.bo = zeros(h);
      lp.ln1_gain = ones(h);
      lp.ln1_bias = zeros(h);
      lp.Wf1 = linear(pre + "Wf1", h, cfg.ff_dim);
      lp.bf1 = zeros(cfg.ff_dim);
      lp.Wf2 = linear(pre + "Wf2", cfg.ff_dim, h);
      lp.bf2 = zeros(h);
      lp.ln2_gain = ones(h);
      lp.ln2_bias = zeros(h);
      p.layers.push_back(std::move(lp));
    }
  } else {
    const int gates = gate_count(cfg.backbone);
    for (int g = 0; g < gates; ++g) {
      const std::string pre = "rec" + std::to_string(g) + ".";
      p.recurrent.Wx.push_back(linear(pre + "Wx", h, h));
      p.recurrent.Wh.push_back(linear(pre + "Wh", h, h));
      p.recurrent.b.push_back(zeros(h));
    }
  }

  p.Wd1 = linear("demo.W1", cfg.n_demographic_features, h);
  p.bd1 = zeros(h);
  p.Wd2 = linear("demo.W2", h, h);
  p.bd2 = zeros(h);
  p.Wl1 = linear("label.W1", h, h);
  p.bl1 = zeros(h);
  p.Wl2 = linear("label.W2", h, 2);
  p.bl2 = zeros(2);
  p.Wc1 = linear("domain.W1", h, h);
  p.bc1 = zeros(h);
  p.Wc2 = linear("domain.W2", h, 2);
  p.bc2 = zeros(2);
  return p;
}

std::vector<std::pair<std::string, Tensor>> ModelParams::named() const {
  std::vector<std::pair<std::string, Tensor>> out;
  out.emplace_back("enc.W0", W0);
  out.emplace_back("enc.b0", b0);
  out.emplace_back("enc.W1", W1);
  out.emplace_back("enc.b1", b1);
  out.emplace_back("positional", positional);
  for (size_t l = 0; l < layers.size(); ++l) {
    const std::string pre = "layer" + std::to_string(l) + ".";
    const TransformerLayerParams& lp = layers[l];
    out.emplace_back(pre + "Wq", lp.Wq);
    out.emplace_back(pre + "Wk", lp.Wk);
    out.emplace_back(pre + "Wv", lp.Wv);
    out.emplace_back(pre + "Wo", lp.Wo);
    out.emplace_back(pre + "bo", lp.bo);
    out.emplace_back(pre + "ln1_gain", lp.ln1_gain);
    out.emplace_back(pre + "ln1_bias", lp.ln1_bias);
    out.emplace_back(pre + "Wf1", lp.Wf1);
    out.emplace_back(pre + "bf1", lp.bf1);
    out.emplace_back(pre + "Wf2", lp.Wf2);
    out.emplace_back(pre + "bf2", lp.bf2);
    out.emplace_back(pre + "ln2_gain", lp.ln2_gain);
    out.emplace_back(pre + "ln2_bias", lp.ln2_bias);
  }
  for (size_t g = 0; g < recurrent.Wx.size(); ++g) {
    const std::string pre = "rec" + std::to_string(g) + ".";
    out.emplace_back(pre + "Wx", recurrent.Wx[g]);
    out.emplace_back(pre + "Wh", recurrent.Wh[g]);
    out.emplace_back(pre + "b", recurrent.b[g]);
  }
  out.emplace_back("demo.W1", Wd1);
  out.emplace_back("demo.b1", bd1);
  out.emplace_back("demo.W2", Wd2);
  out.emplace_back("demo.b2", bd2);
  out.emplace_back("label.W1", Wl1);
  out.emplace_back("label.b1", bl1);
  out.emplace_back("label.W2", Wl2);
  out.emplace_back("label.b2", bl2);
  out.emplace_back("domain.W1", Wc1);
  out.emplace_back("domain.b1", bc1);
  out.emplace_back("domain.W2", Wc2);
  out.emplace_back("domain.b2", bc2);
  return out;
}

std::vector<Tensor> ModelParams::all() const {
  std::vector<Tensor> out;
  for (auto& [name, t] : named()) out.push_back(t);
  return out;
}

size_t ModelParams::parameter_count() const {
  size_t n = 0;
  for (const Tensor& t : all()) n += t.numel();
  return n;
}

Tensor initial_encode(const Tensor& c_rows, const std::vector<double>& s,
                      const std::vector<int>& positions, const ModelParams& p) {
  if (c_rows.ndim() != 2 || c_rows.dim(1) != p.config.n_sequence_features) {
    throw std::invalid_argument("initial_encode: feature rows must be [n," +
                                std::to_string(p.config.n_sequence_features) + "], got " +
                                shape_str(c_rows.shape));
  }
  const size_t n = static_cast<size_t>(c_rows.dim(0));
  if (s.size() != n || positions.size() != n) {
    throw std::invalid_argument("initial_encode: S/position lists must match the row count");
  }
  std::vector<double> w_fresh(n), w_repeat(n);
  for (size_t i = 0; i < n; ++i) {
    if (s[i] != 0.0 && s[i] != 1.0) {
      throw std::invalid_argument("initial_encode: S must be 0 or 1, got " + std::to_string(s[i]));
    }
    w_repeat[i] = s[i];
    w_fresh[i] = 1.0 - s[i];
  }
  // Hard gate between the two encoder heads: the unselected head receives an
  // exactly-zero gradient through its zero row weight.
  Tensor head0 = scale_rows(add_row_bias(matmul(c_rows, p.W0), p.b0), w_fresh);
  Tensor head1 = scale_rows(add_row_bias(matmul(c_rows, p.W1), p.b1), w_repeat);
  for (int pos : positions) {
    if (pos < 0 || pos >= p.config.max_seq_len) {
      throw std::out_of_range("initial_encode: position " + std::to_string(pos) +
                              " outside the positional table [0," +
                              std::to_string(p.config.max_seq_len) + ")");
    }
  }
  return add(add(head0, head1), gather_rows(p.positional, positions));
}

Tensor attention(const Tensor& h, const TransformerLayerParams& lp, const std::vector<int>& valid,
                 bool causal) {
  if (h.ndim() != 2) {
    throw std::invalid_argument("attention: expected [T,hidden] rows, got " + shape_str(h.shape));
  }
  const int t_len = h.dim(0);
  if (static_cast<int>(valid.size()) != t_len) {
    throw std::invalid_argument("attention: padding mask length " +
                                std::to_string(valid.size()) + " != sequence length " +
                                std::to_string(t_len));
  }
  Tensor m = Tensor::zeros({t_len, t_len});
  for (int i = 0; i < t_len; ++i) {
    bool any = false;
    for (int j = 0; j < t_len; ++j) {
      const bool allowed = valid[static_cast<size_t>(j)] == 1 && (!causal || j <= i);
      if (allowed)
        any = true;
      else
        (*m.data)[static_cast<size_t>(i) * t_len + j] = kMaskedScore;
    }
    if (!any) {
      throw std::domain_error("attention: position " + std::to_string(i) +
                              " has no unmasked key to attend to");
    }
  }
  return scaled_dot_attention(matmul(h, lp.Wq), matmul(h, lp.Wk), matmul(h, lp.Wv), m);
}

Tensor transformer_layer(const Tensor& h, const TransformerLayerParams& lp,
                         const std::vector<int>& offsets, const std::vector<int>& lengths,
                         bool causal, const DropoutMask* mask, double ln_eps) {
  // Projections are batched over all packed rows; attention mixes rows within
  // each borrower's slice only.
  Tensor q = matmul(h, lp.Wq);
  Tensor k = matmul(h, lp.Wk);
  Tensor v = matmul(h, lp.Wv);
  std::vector<Tensor> ctx;
  ctx.reserve(lengths.size());
  for (size_t b = 0; b < lengths.size(); ++b) {
    const int off = offsets[b], len = lengths[b];
    Tensor m = causal ? causal_mask(len) : Tensor::zeros({len, len});
    ctx.push_back(scaled_dot_attention(slice_rows(q, off, len), slice_rows(k, off, len),
                                       slice_rows(v, off, len), m));
  }
  Tensor attn_out = add_row_bias(matmul(concat_rows(ctx), lp.Wo), lp.bo);
  Tensor x1 = layer_norm(add(h, attn_out), lp.ln1_gain, lp.ln1_bias, ln_eps);
  Tensor ff = add_row_bias(matmul(relu(add_row_bias(matmul(x1, lp.Wf1), lp.bf1)), lp.Wf2), lp.bf2);
  Tensor x2 = layer_norm(add(x1, ff), lp.ln2_gain, lp.ln2_bias, ln_eps);
  return mask ? dropout(x2, *mask, true) : x2;
}

namespace {

// One batched step of the configured recurrent cell. c_prev is live for LSTM
// only; the second result is the updated cell state (empty otherwise).
std::pair<Tensor, Tensor> recurrent_cell(const Tensor& x, const Tensor& h_prev,
                                         const Tensor& c_prev, const RecurrentParams& rp,
                                         Backbone backbone) {
  auto gate = [&](size_t g) {
    return add_row_bias(add(matmul(x, rp.Wx[g]), matmul(h_prev, rp.Wh[g])), rp.b[g]);
  };
  switch (backbone) {
    case Backbone::rnn:
      return {tanh_op(gate(0)), Tensor()};
    case Backbone::gru: {
      Tensor r = sigmoid(gate(0));
      Tensor z = sigmoid(gate(1));
      Tensor n = tanh_op(
          add_row_bias(add(matmul(x, rp.Wx[2]), mul(r, matmul(h_prev, rp.Wh[2]))), rp.b[2]));
      Tensor keep_new = add_scalar(scale(z, -1.0), 1.0);  // 1 - z
      return {add(mul(z, h_prev), mul(keep_new, n)), Tensor()};
    }
    case Backbone::lstm: {
      Tensor i = sigmoid(gate(0));
      Tensor f = sigmoid(gate(1));
      Tensor g = tanh_op(gate(2));
      Tensor o = sigmoid(gate(3));
      Tensor c = add(mul(f, c_prev), mul(i, g));
      return {mul(o, tanh_op(c)), c};
    }
    case Backbone::transformer: break;
  }
  throw std::logic_error("recurrent_cell: not a recurrent backbone");
}

}  // namespace

Tensor recurrent_encode(const Tensor& h, const ModelParams& p, const std::vector<int>& offsets,
                        const std::vector<int>& lengths) {
  if (p.config.backbone == Backbone::transformer) {
    throw std::invalid_argument("recurrent_encode: model is configured with a transformer");
  }
  const bool is_lstm = p.config.backbone == Backbone::lstm;
  const int hidden = p.config.hidden_dim;
  const int n_rows = h.dim(0);
  int max_t = 0;
  for (int len : lengths) max_t = std::max(max_t, len);

  // Time-major sweep over whichever borrowers are still active, so each step
  // is one batched cell evaluation instead of per-borrower loops.
  std::vector<int> active(lengths.size());
  for (size_t b = 0; b < lengths.size(); ++b) active[b] = static_cast<int>(b);
  Tensor h_state = Tensor::zeros({static_cast<int>(active.size()), hidden});
  Tensor c_state = is_lstm ? Tensor::zeros({static_cast<int>(active.size()), hidden}) : Tensor();

  std::vector<Tensor> steps;
  std::vector<int> packed_of_cat;  // packed row index of each concatenated output row
  packed_of_cat.reserve(static_cast<size_t>(n_rows));
  for (int t = 0; t < max_t; ++t) {
    std::vector<int> next, keep;
    for (size_t i = 0; i < active.size(); ++i) {
      if (lengths[static_cast<size_t>(active[i])] > t) {
        next.push_back(active[i]);
        keep.push_back(static_cast<int>(i));
      }
    }
    if (next.size() != active.size()) {
      h_state = gather_rows(h_state, keep);
      if (is_lstm) c_state = gather_rows(c_state, keep);
      active = std::move(next);
    }
    std::vector<int> x_idx(active.size());
    for (size_t i = 0; i < active.size(); ++i) {
      x_idx[i] = offsets[static_cast<size_t>(active[i])] + t;
    }
    auto [h_new, c_new] =
        recurrent_cell(gather_rows(h, x_idx), h_state, c_state, p.recurrent, p.config.backbone);
    h_state = h_new;
    c_state = c_new;
    steps.push_back(h_state);
    packed_of_cat.insert(packed_of_cat.end(), x_idx.begin(), x_idx.end());
  }

  // Re-permute the time-major step outputs back to borrower-major packed order.
  std::vector<int> cat_of_packed(static_cast<size_t>(n_rows));
  for (size_t j = 0; j < packed_of_cat.size(); ++j) {
    cat_of_packed[static_cast<size_t>(packed_of_cat[j])] = static_cast<int>(j);
  }
  return gather_rows(concat_rows(steps), cat_of_packed);
}

Tensor encode_sequence(const Tensor& h, const ModelParams& p, const std::vector<int>& offsets,
                       const std::vector<int>& lengths, RunMode mode, uint64_t dropout_seed) {
  const bool training = mode == RunMode::train && p.config.dropout_keep < 1.0;
  if (p.config.backbone == Backbone::transformer) {
    Tensor x = h;
    for (int l = 0; l < p.config.n_layers; ++l) {
      DropoutMask m;
      if (training) {
        m = DropoutMask::build(hash_combine(dropout_seed, static_cast<uint64_t>(l)), x.shape,
                               p.config.dropout_keep);
      }
      x = transformer_layer(x, p.layers[static_cast<size_t>(l)], offsets, lengths,
                            /*causal=*/true, training ? &m : nullptr, p.config.layer_norm_eps);
    }
    return x;
  }
  Tensor out = recurrent_encode(h, p, offsets, lengths);
  if (training) {
    DropoutMask m = DropoutMask::build(hash_combine(dropout_seed, 0), out.shape,
                                       p.config.dropout_keep);
    out = dropout(out, m, true);
  }
  return out;
}

Tensor encode_demographics(const Tensor& d, const ModelParams& p) {
  if (d.ndim() != 2 || d.dim(1) != p.config.n_demographic_features) {
    throw std::invalid_argument("encode_demographics: expected [n," +
                                std::to_string(p.config.n_demographic_features) + "], got " +
                                shape_str(d.shape));
  }
  return mlp2(d, p.Wd1, p.bd1, p.Wd2, p.bd2);
}

Tensor fuse(const Tensor& f_a, const Tensor& f_d) { return normalize_rows(add(f_a, f_d)); }

ForwardResult forward(const Batch& batch, const ModelParams& p, RunMode mode,
                      uint64_t dropout_seed) {
  const ModelConfig& cfg = p.config;
  const int n_b = batch.n_borrowers;
  const int max_len = batch.max_len;
  if (n_b < 1) throw std::invalid_argument("forward: empty batch");
  if (batch.C.ndim() != 3 || batch.C.dim(2) != cfg.n_sequence_features) {
    throw std::invalid_argument("forward: batch.C must be [B,L," +
                                std::to_string(cfg.n_sequence_features) + "], got " +
                                shape_str(batch.C.shape));
  }
  if (static_cast<int>(batch.lengths.size()) != n_b) {
    throw std::invalid_argument("forward: batch.lengths does not match n_borrowers");
  }

  // Pack the valid (borrower, position) cells in borrower-major order so every
  // later stage works on dense rows and padding cells never touch the graph.
  std::vector<int> flat_idx, borrower, position, offsets(static_cast<size_t>(n_b));
  for (int b = 0; b < n_b; ++b) {
    offsets[static_cast<size_t>(b)] = static_cast<int>(flat_idx.size());
    for (int t = 0; t < batch.lengths[static_cast<size_t>(b)]; ++t) {
      flat_idx.push_back(b * max_len + t);
      borrower.push_back(b);
      position.push_back(t);
    }
  }
  const size_t n_rows = flat_idx.size();
  if (n_rows == 0) throw std::invalid_argument("forward: batch has no valid positions");

  std::vector<double> s_flag(n_rows);
  std::vector<int> pos_ids(n_rows), y(n_rows), domain(n_rows);
  for (size_t r = 0; r < n_rows; ++r) {
    const int b = borrower[r], t = position[r];
    s_flag[r] = batch.S.at(b, t);
    pos_ids[r] = static_cast<int>(batch.position_ids.at(b, t));
    y[r] = static_cast<int>(batch.Y.at(b, t));
    domain[r] = static_cast<int>(batch.domain_tags.at(b, t));
  }

  Tensor c_rows =
      gather_rows(reshape(batch.C, {n_b * max_len, cfg.n_sequence_features}), flat_idx);
  Tensor h0 = initial_encode(c_rows, s_flag, pos_ids, p);
  Tensor f_a = encode_sequence(h0, p, offsets, batch.lengths, mode, dropout_seed);
  Tensor f_d = gather_rows(encode_demographics(batch.D, p), borrower);
  Tensor f = fuse(f_a, f_d);

  ForwardResult out;
  out.f = f;
  out.f_A = f_a;
  out.label_logits = mlp2(f, p.Wl1, p.bl1, p.Wl2, p.bl2);
  out.domain_logits = mlp2(grad_reverse(f, cfg.grl_lambda), p.Wc1, p.bc1, p.Wc2, p.bc2);
  out.borrower = std::move(borrower);
  out.position = std::move(position);
  out.s_flag = std::move(s_flag);
  out.y = std::move(y);
  out.domain = std::move(domain);
  return out;
}

void save_checkpoint(const ModelParams& p, const std::string& path) {
  json j;
  j["config"] = json::parse(p.config.canonical_json());
  json tensors;
  for (const auto& [name, t] : p.named()) {
    json entry;
    entry["shape"] = t.shape;
    entry["data"] = *t.data;
    tensors[name] = std::move(entry);
  }
  j["tensors"] = std::move(tensors);
  atomic_write_file(path, j.dump() + "\n");
}

ModelParams load_checkpoint(const std::string& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw std::runtime_error("checkpoint " + path + ": " + e.what());
  }
  ModelConfig cfg;
  try {
    const json& c = j.at("config");
    cfg.hidden_dim = c.at("hidden_dim").get<int>();
    cfg.n_layers = c.at("n_layers").get<int>();
    cfg.ff_dim = c.at("ff_dim").get<int>();
    cfg.dropout_keep = c.at("dropout_keep").get<double>();
    cfg.max_seq_len = c.at("max_seq_len").get<int>();
    cfg.backbone = backbone_from_string(c.at("backbone").get<std::string>());
    cfg.n_demographic_features = c.at("n_demographic_features").get<int>();
    cfg.n_sequence_features = c.at("n_sequence_features").get<int>();
    cfg.grl_lambda = c.at("grl_lambda").get<double>();
    cfg.layer_norm_eps = c.at("layer_norm_eps").get<double>();

    ModelParams p = ModelParams::init(cfg, 0);
    const json& tensors = j.at("tensors");
    auto names = p.named();
    if (tensors.size() != names.size()) {
      throw std::runtime_error("expected " + std::to_string(names.size()) + " tensors, found " +
                               std::to_string(tensors.size()));
    }
    for (auto& [name, t] : names) {
      const json& entry = tensors.at(name);
      const auto shape = entry.at("shape").get<std::vector<int>>();
      if (shape != t.shape) {
        throw std::runtime_error("tensor " + name + ": shape " + shape_str(shape) +
                                 " does not match config-implied " + shape_str(t.shape));
      }
      *t.data = entry.at("data").get<std::vector<double>>();
    }
    return p;
  } catch (const json::exception& e) {
    throw std::runtime_error("checkpoint " + path + ": " + e.what());
  }
}

}  // namespace fairlend
