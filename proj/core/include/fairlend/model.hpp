#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "fairlend/data.hpp"
#include "fairlend/rng.hpp"
#include "fairlend/tensor.hpp"

namespace fairlend {

enum class Backbone { transformer, rnn, lstm, gru };
Backbone backbone_from_string(const std::string& s);  // unknown name -> error
std::string backbone_to_string(Backbone b);

struct ModelConfig {
  int hidden_dim = 64;
  int n_layers = 2;      // transformer depth; recurrent backbones are single-layer
  int ff_dim = 64;
  double dropout_keep = 0.9;
  int max_seq_len = 15;
  Backbone backbone = Backbone::transformer;
  int n_demographic_features = DemographicVector::kFeatureCount;
  int n_sequence_features = DemographicVector::kFeatureCount;  // width of C rows
  double grl_lambda = 1.0;
  double layer_norm_eps = 1e-5;

  void validate() const;
  std::string canonical_json() const;
};

struct TransformerLayerParams {
  Tensor Wq, Wk, Wv;          // hidden -> hidden projections, no bias
  Tensor Wo, bo;              // attention output projection
  Tensor ln1_gain, ln1_bias;  // first Add & Norm
  Tensor Wf1, bf1, Wf2, bf2;  // feedforward hidden -> ff -> hidden
  Tensor ln2_gain, ln2_bias;  // second Add & Norm
};

// Gate weights for the recurrent backbones. Gate order: rnn {h};
// gru {r, z, n}; lstm {i, f, g, o}.
struct RecurrentParams {
  std::vector<Tensor> Wx, Wh, b;
};

struct ModelParams {
  ModelConfig config;
  Tensor W0, b0, W1, b1;  // initial-encoder heads (S=0 head, S=1 head)
  Tensor positional;      // [max_seq_len, hidden] learnable lookup
  std::vector<TransformerLayerParams> layers;
  RecurrentParams recurrent;
  Tensor Wd1, bd1, Wd2, bd2;  // demographic MLP
  Tensor Wl1, bl1, Wl2, bl2;  // label predictor -> 2 logits (class 1 = non-default)
  Tensor Wc1, bc1, Wc2, bc2;  // domain classifier -> 2 logits (class 1 = labeled)

  static ModelParams init(const ModelConfig& cfg, uint64_t seed);
  std::vector<Tensor> all() const;  // fixed order, matches named()
  std::vector<std::pair<std::string, Tensor>> named() const;
  size_t parameter_count() const;
};

enum class RunMode { train, eval };

// Everything the losses need, packed over the batch's valid (non-padding)
// positions in (borrower, position) order.
struct ForwardResult {
  Tensor f;              // [N, hidden], unit-norm fused embeddings
  Tensor f_A;            // [N, hidden], sequence-encoder output before fusion
  Tensor label_logits;   // [N, 2]
  Tensor domain_logits;  // [N, 2], computed through the gradient reversal layer
  std::vector<int> borrower;  // packed row -> borrower index within the batch
  std::vector<int> position;  // packed row -> position t
  std::vector<double> s_flag;     // packed S values
  std::vector<int> y;             // packed labels in {-1,0,1}
  std::vector<int> domain;        // packed domain tags (1 = labeled)
};

// ---- building blocks (packed row-major [N, hidden] form) ----

// Dual-head linear encoding with positional rows added; S must be 0/1.
Tensor initial_encode(const Tensor& c_rows, const std::vector<double>& s,
                      const std::vector<int>& positions, const ModelParams& p);

// Single-sequence scaled dot-product attention over rows of h [T, hidden].
// valid marks usable key positions; causal restricts keys to j <= t. A query
// with no usable key cannot be normalized and raises an error.
Tensor attention(const Tensor& h, const TransformerLayerParams& lp,
                 const std::vector<int>& valid, bool causal);

// One full transformer layer over packed rows; sequences are the half-open
// row ranges [offsets[i], offsets[i] + lengths[i]). mask == nullptr means
// evaluation mode (no dropout).
Tensor transformer_layer(const Tensor& h, const TransformerLayerParams& lp,
                         const std::vector<int>& offsets, const std::vector<int>& lengths,
                         bool causal, const DropoutMask* mask, double ln_eps);

// Full sequence encoder (initial encoding is the caller's job): the
// transformer stack, or the configured recurrent backbone. Dropout masks are
// per transformer layer; recurrent backbones apply one mask to their output.
Tensor encode_sequence(const Tensor& h, const ModelParams& p, const std::vector<int>& offsets,
                       const std::vector<int>& lengths, RunMode mode, uint64_t dropout_seed);

Tensor recurrent_encode(const Tensor& h, const ModelParams& p, const std::vector<int>& offsets,
                        const std::vector<int>& lengths);

// Demographic 2-layer MLP: [B, n_demo] -> [B, hidden].
Tensor encode_demographics(const Tensor& d, const ModelParams& p);

// Element-wise addition then projection onto the unit hypersphere.
Tensor fuse(const Tensor& f_a, const Tensor& f_d);

ForwardResult forward(const Batch& batch, const ModelParams& p, RunMode mode,
                      uint64_t dropout_seed);

// ---- persistence ----

void save_checkpoint(const ModelParams& p, const std::string& path);  // atomic JSON
ModelParams load_checkpoint(const std::string& path);  // bit-exact round trip

}  // namespace fairlend
