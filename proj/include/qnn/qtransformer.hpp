#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qnn/qlayers.hpp"

namespace qnn {

enum class TransformerVariant { RealBaseline, QPartial, QFull };

TransformerVariant variant_from_string(const std::string& s);
std::string to_string(TransformerVariant v);

struct QTransformerConfig {
  TransformerVariant variant = TransformerVariant::QFull;
  std::size_t layers = 2;
  std::size_t d_q = 16;  // quaternion model width; real width is 4*d_q
  std::size_t heads = 2;
  std::size_t ffn_hidden = 0;  // real units; 0 derives 4 * real width
  std::size_t d_k = 0;         // per-head real key width; 0 derives real_width/heads
  std::size_t vocab = 32;
  std::size_t max_len = 48;
  InitSpec::Scheme init = InitSpec::Scheme::GlorotPerComponent;
  std::uint64_t seed = 42;

  std::size_t real_width() const { return 4 * d_q; }
  std::size_t head_dim_real() const { return d_k != 0 ? d_k : real_width() / heads; }
  std::size_t ffn_width() const { return ffn_hidden != 0 ? ffn_hidden : 4 * real_width(); }
};

// Per-head attention weights captured during a forward pass. Quaternion
// sites carry four row-normalized l x l_kv matrices; the real baseline
// carries one, stored in component 0.
struct AttentionTrace {
  struct Entry {
    std::string site;  // e.g. "enc0.h1", "dec1.self.h0", "dec0.cross.h1"
    QTensor weights;
    bool quaternion = true;
    bool causal = false;
  };
  std::vector<Entry> entries;
};

// Component-wise self-attention: scores are the Hamilton contraction of Q
// against K scaled by 1/sqrt(d_k), softmaxed per component, then combined
// with V per component without mixing. An optional additive mask (shared by
// all four components) is applied before the softmax.
ad::QVar q_self_attention(ad::QVar q, ad::QVar k, ad::QVar v, double d_k_real,
                          const Array* mask = nullptr, QTensor* weights_out = nullptr);

// Real scaled dot-product attention for the baseline variant.
ad::Var real_self_attention(ad::Var q, ad::Var k, ad::Var v, double d_k_real,
                            const Array* mask = nullptr, Array* weights_out = nullptr);

// Additive causal mask: 0 on and below the diagonal, a large negative
// number above it, so masked positions carry exactly zero attention weight.
Array causal_mask(std::size_t len);

// Sinusoidal position encodings for len rows of the given real width.
Array sinusoidal_positions(std::size_t len, std::size_t width);

// Encoder-decoder transformer with quaternion linear maps per variant:
// the full variant converts the attention projections and the position-wise
// feed-forwards, the partial variant only the attention projections (self
// and cross), the real baseline none. Residual adds, layer normalization
// and position encodings act on the concatenated real vector.
class QTransformer {
 public:
  explicit QTransformer(const QTransformerConfig& cfg);

  const QTransformerConfig& config() const { return cfg_; }
  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }

  // Token ids must be within vocab, lengths within max_len.
  ad::Var encode(const TapeBinding& binding, const std::vector<int>& src,
                 AttentionTrace* trace = nullptr) const;
  ad::Var decode(const TapeBinding& binding, const std::vector<int>& tgt_in, ad::Var memory,
                 AttentionTrace* trace = nullptr) const;
  // Teacher-forced logits over the target-input tokens: [len(tgt_in) x vocab].
  ad::Var seq2seq_logits(const TapeBinding& binding, const std::vector<int>& src,
                         const std::vector<int>& tgt_in, AttentionTrace* trace = nullptr) const;

  // Greedy decoding from bos until eos or max_steps; returns generated ids
  // without the bos/eos markers.
  std::vector<int> greedy_decode(const std::vector<int>& src, int bos, int eos,
                                 std::size_t max_steps) const;

 private:
  struct LinearMap {
    std::optional<QLinear> q;
    std::optional<RealLinear> r;
  };
  struct NormMap {
    int gain = -1;
    int bias = -1;
  };
  struct AttnBlock {
    LinearMap wq, wk, wv, wo;
  };
  struct FfnBlock {
    LinearMap w1, w2;
  };
  struct EncoderLayer {
    AttnBlock attn;
    NormMap ln1;
    FfnBlock ffn;
    NormMap ln2;
  };
  struct DecoderLayer {
    AttnBlock self_attn;
    NormMap ln1;
    AttnBlock cross_attn;
    NormMap ln2;
    FfnBlock ffn;
    NormMap ln3;
  };

  LinearMap make_linear(const std::string& name, std::size_t in_real, std::size_t out_real,
                        bool quaternion, bool bias);
  AttnBlock make_attn(const std::string& name);
  FfnBlock make_ffn(const std::string& name);
  NormMap make_norm(const std::string& name);

  ad::Var apply_linear(const TapeBinding& b, const LinearMap& m, ad::Var x,
                       ActivationKind act = ActivationKind::Identity) const;
  ad::Var apply_norm(const TapeBinding& b, const NormMap& n, ad::Var x) const;
  ad::Var attention_sublayer(const TapeBinding& b, const AttnBlock& blk, ad::Var x,
                             ad::Var kv, bool causal, const std::string& site,
                             AttentionTrace* trace) const;
  ad::Var ffn_sublayer(const TapeBinding& b, const FfnBlock& blk, ad::Var x) const;
  ad::Var embed(const TapeBinding& b, int table, const std::vector<int>& tokens) const;
  void check_tokens(const std::vector<int>& tokens) const;

  QTransformerConfig cfg_;
  ParamStore params_;
  int src_table_ = -1;
  int tgt_table_ = -1;
  std::vector<EncoderLayer> encoder_;
  std::vector<DecoderLayer> decoder_;
  RealLinear out_proj_;
};

}  // namespace qnn
