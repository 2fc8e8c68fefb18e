#include "qnn/qtransformer.hpp"

#include <cmath>

#include "qnn/error.hpp"

namespace qnn {

namespace {
constexpr double kMaskValue = -1e30;
}

TransformerVariant variant_from_string(const std::string& s) {
  if (s == "real") return TransformerVariant::RealBaseline;
  if (s == "partial") return TransformerVariant::QPartial;
  if (s == "full") return TransformerVariant::QFull;
  throw UsageError("unknown variant '" + s + "' (expected real|partial|full)");
}

std::string to_string(TransformerVariant v) {
  switch (v) {
    case TransformerVariant::RealBaseline: return "real";
    case TransformerVariant::QPartial: return "partial";
    default: return "full";
  }
}

ad::QVar q_self_attention(ad::QVar q, ad::QVar k, ad::QVar v, double d_k_real,
                          const Array* mask, QTensor* weights_out) {
  ad::Tape& tape = *q.r.tape;
  ad::QVar scores = ad::hamilton_scores(q, k);
  scores = ad::qv_scale(scores, 1.0 / std::sqrt(d_k_real));
  if (mask != nullptr) {
    ad::Var m = tape.constant(*mask);
    scores = ad::QVar{ad::add(scores.r, m), ad::add(scores.x, m), ad::add(scores.y, m),
                      ad::add(scores.z, m)};
  }
  ad::QVar weights = ad::component_softmax(scores);
  if (weights_out != nullptr) {
    *weights_out = QTensor({tape.value(weights.r).rows(), tape.value(weights.r).cols()},
                           tape.value(weights.r), tape.value(weights.x), tape.value(weights.y),
                           tape.value(weights.z));
  }
  return ad::component_matmul(weights, v);
}

ad::Var real_self_attention(ad::Var q, ad::Var k, ad::Var v, double d_k_real, const Array* mask,
                            Array* weights_out) {
  ad::Tape& tape = *q.tape;
  ad::Var scores = ad::scale(ad::matmul_nt(q, k), 1.0 / std::sqrt(d_k_real));
  if (mask != nullptr) scores = ad::add(scores, tape.constant(*mask));
  ad::Var weights = ad::row_softmax(scores);
  if (weights_out != nullptr) *weights_out = tape.value(weights);
  return ad::matmul(weights, v);
}

Array causal_mask(std::size_t len) {
  Array m(len, len, 0.0);
  for (std::size_t i = 0; i < len; ++i) {
    for (std::size_t j = i + 1; j < len; ++j) m.at(i, j) = kMaskValue;
  }
  return m;
}

Array sinusoidal_positions(std::size_t len, std::size_t width) {
  Array pe(len, width, 0.0);
  for (std::size_t pos = 0; pos < len; ++pos) {
    for (std::size_t i = 0; 2 * i < width; ++i) {
      const double rate = std::pow(10000.0, -2.0 * static_cast<double>(i) /
                                                 static_cast<double>(width));
      pe.at(pos, 2 * i) = std::sin(static_cast<double>(pos) * rate);
      if (2 * i + 1 < width) pe.at(pos, 2 * i + 1) = std::cos(static_cast<double>(pos) * rate);
    }
  }
  return pe;
}

QTransformer::LinearMap QTransformer::make_linear(const std::string& name, std::size_t in_real,
                                                  std::size_t out_real, bool quaternion,
                                                  bool bias) {
  LinearMap m;
  if (quaternion) {
    m.q = QLinear::create(params_, name, in_real / 4, out_real / 4, bias);
  } else {
    m.r = RealLinear::create(params_, name, in_real, out_real, bias);
  }
  return m;
}

QTransformer::AttnBlock QTransformer::make_attn(const std::string& name) {
  const bool quaternion = cfg_.variant != TransformerVariant::RealBaseline;
  const std::size_t w = cfg_.real_width();
  AttnBlock blk;
  blk.wq = make_linear(name + ".wq", w, w, quaternion, false);
  blk.wk = make_linear(name + ".wk", w, w, quaternion, false);
  blk.wv = make_linear(name + ".wv", w, w, quaternion, false);
  blk.wo = make_linear(name + ".wo", w, w, quaternion, false);
  return blk;
}

QTransformer::FfnBlock QTransformer::make_ffn(const std::string& name) {
  const bool quaternion = cfg_.variant == TransformerVariant::QFull;
  const std::size_t w = cfg_.real_width();
  const std::size_t h = cfg_.ffn_width();
  FfnBlock blk;
  blk.w1 = make_linear(name + ".w1", w, h, quaternion, true);
  blk.w2 = make_linear(name + ".w2", h, w, quaternion, true);
  return blk;
}

QTransformer::NormMap QTransformer::make_norm(const std::string& name) {
  NormMap n;
  n.gain = params_.add(name + ".gain", 1, cfg_.real_width(), ParamKind::Norm, ParamGroup::Other);
  n.bias = params_.add(name + ".bias", 1, cfg_.real_width(), ParamKind::Norm, ParamGroup::Other);
  for (double& v : params_.value(n.gain).data()) v = 1.0;
  return n;
}

QTransformer::QTransformer(const QTransformerConfig& cfg) : cfg_(cfg) {
  if (cfg.d_q < 1 || cfg.layers < 1 || cfg.heads < 1) {
    throw UsageError("QTransformerConfig: layers, heads and d_q must be >= 1");
  }
  if (cfg.variant == TransformerVariant::RealBaseline) {
    if (cfg.real_width() % cfg.heads != 0) {
      throw UsageError("QTransformerConfig: real width must be divisible by heads");
    }
  } else if (cfg.d_q % cfg.heads != 0) {
    throw UsageError("QTransformerConfig: d_q must be divisible by heads");
  }
  if (cfg.variant == TransformerVariant::QFull && cfg.ffn_width() % 4 != 0) {
    throw UsageError("QTransformerConfig: ffn_hidden must be divisible by 4 for the full variant");
  }
  if (cfg.vocab < 1 || cfg.max_len < 1) {
    throw UsageError("QTransformerConfig: vocab and max_len must be >= 1");
  }

  const std::size_t w = cfg_.real_width();
  src_table_ = params_.add("src_embed.table", cfg_.vocab, w, ParamKind::Embedding,
                           ParamGroup::Other);
  tgt_table_ = params_.add("tgt_embed.table", cfg_.vocab, w, ParamKind::Embedding,
                           ParamGroup::Other);
  for (std::size_t l = 0; l < cfg_.layers; ++l) {
    const std::string base = "enc" + std::to_string(l);
    EncoderLayer layer;
    layer.attn = make_attn(base + ".attn");
    layer.ln1 = make_norm(base + ".ln1");
    layer.ffn = make_ffn(base + ".ffn");
    layer.ln2 = make_norm(base + ".ln2");
    encoder_.push_back(std::move(layer));
  }
  for (std::size_t l = 0; l < cfg_.layers; ++l) {
    const std::string base = "dec" + std::to_string(l);
    DecoderLayer layer;
    layer.self_attn = make_attn(base + ".self");
    layer.ln1 = make_norm(base + ".ln1");
    layer.cross_attn = make_attn(base + ".cross");
    layer.ln2 = make_norm(base + ".ln2");
    layer.ffn = make_ffn(base + ".ffn");
    layer.ln3 = make_norm(base + ".ln3");
    decoder_.push_back(std::move(layer));
  }
  out_proj_ = RealLinear::create(params_, "out_proj", w, cfg_.vocab, true, ParamGroup::Other);

  SplitMix64 rng(cfg_.seed);
  init_embedding(params_, src_table_, rng);
  init_embedding(params_, tgt_table_, rng);
  auto init_map = [&](LinearMap& m) {
    if (m.q) init_qlinear(params_, *m.q, cfg_.init, rng);
    if (m.r) init_real_linear(params_, *m.r, rng);
  };
  for (auto& layer : encoder_) {
    init_map(layer.attn.wq);
    init_map(layer.attn.wk);
    init_map(layer.attn.wv);
    init_map(layer.attn.wo);
    init_map(layer.ffn.w1);
    init_map(layer.ffn.w2);
  }
  for (auto& layer : decoder_) {
    init_map(layer.self_attn.wq);
    init_map(layer.self_attn.wk);
    init_map(layer.self_attn.wv);
    init_map(layer.self_attn.wo);
    init_map(layer.cross_attn.wq);
    init_map(layer.cross_attn.wk);
    init_map(layer.cross_attn.wv);
    init_map(layer.cross_attn.wo);
    init_map(layer.ffn.w1);
    init_map(layer.ffn.w2);
  }
  init_real_linear(params_, out_proj_, rng);
}

ad::Var QTransformer::apply_linear(const TapeBinding& b, const LinearMap& m, ad::Var x,
                                   ActivationKind act) const {
  if (m.q) {
    ad::QVar out = m.q->forward(b, ad::real_to_quaternion(x), act);
    return ad::quaternion_to_real(out);
  }
  return m.r->forward(b, x, act);
}

ad::Var QTransformer::apply_norm(const TapeBinding& b, const NormMap& n, ad::Var x) const {
  return ad::layer_norm(x, b.var(n.gain), b.var(n.bias));
}

ad::Var QTransformer::attention_sublayer(const TapeBinding& b, const AttnBlock& blk, ad::Var x,
                                         ad::Var kv, bool causal, const std::string& site,
                                         AttentionTrace* trace) const {
  ad::Tape& tape = *b.tape;
  const std::size_t len = tape.value(x).rows();
  Array mask;
  if (causal) mask = causal_mask(len);
  const double d_k = static_cast<double>(cfg_.head_dim_real());

  if (blk.wq.q) {
    ad::QVar q = blk.wq.q->forward(b, ad::real_to_quaternion(x));
    ad::QVar k = blk.wk.q->forward(b, ad::real_to_quaternion(kv));
    ad::QVar v = blk.wv.q->forward(b, ad::real_to_quaternion(kv));
    const std::size_t head_q = cfg_.d_q / cfg_.heads;
    std::vector<std::size_t> widths(cfg_.heads, head_q);
    auto qh = ad::qv_split(q, widths);
    auto kh = ad::qv_split(k, widths);
    auto vh = ad::qv_split(v, widths);
    std::vector<ad::QVar> outs;
    for (std::size_t h = 0; h < cfg_.heads; ++h) {
      QTensor weights;
      ad::QVar o = q_self_attention(qh[h], kh[h], vh[h], d_k, causal ? &mask : nullptr,
                                    trace != nullptr ? &weights : nullptr);
      if (trace != nullptr) {
        trace->entries.push_back(
            {site + ".h" + std::to_string(h), std::move(weights), true, causal});
      }
      outs.push_back(o);
    }
    ad::QVar merged = ad::qv_concat(outs);
    return ad::quaternion_to_real(blk.wo.q->forward(b, merged));
  }

  ad::Var q = blk.wq.r->forward(b, x);
  ad::Var k = blk.wk.r->forward(b, kv);
  ad::Var v = blk.wv.r->forward(b, kv);
  const std::size_t head_w = cfg_.real_width() / cfg_.heads;
  std::vector<std::size_t> widths(cfg_.heads, head_w);
  auto qh = ad::split_cols(q, widths);
  auto kh = ad::split_cols(k, widths);
  auto vh = ad::split_cols(v, widths);
  std::vector<ad::Var> outs;
  for (std::size_t h = 0; h < cfg_.heads; ++h) {
    Array weights;
    ad::Var o = real_self_attention(qh[h], kh[h], vh[h], d_k, causal ? &mask : nullptr,
                                    trace != nullptr ? &weights : nullptr);
    if (trace != nullptr) {
      QTensor wq({weights.rows(), weights.cols()});
      wq.component(0) = weights;
      trace->entries.push_back({site + ".h" + std::to_string(h), std::move(wq), false, causal});
    }
    outs.push_back(o);
  }
  return blk.wo.r->forward(b, ad::concat_cols(outs));
}

ad::Var QTransformer::ffn_sublayer(const TapeBinding& b, const FfnBlock& blk, ad::Var x) const {
  ad::Var h = apply_linear(b, blk.w1, x, ActivationKind::Relu);
  return apply_linear(b, blk.w2, h);
}

ad::Var QTransformer::embed(const TapeBinding& b, int table, const std::vector<int>& tokens) const {
  ad::Tape& tape = *b.tape;
  ad::Var rows = ad::gather_rows(b.var(table), tokens);
  const std::size_t w = cfg_.real_width();
  ad::Var scaled = ad::scale(rows, std::sqrt(static_cast<double>(w)));
  return ad::add(scaled, tape.constant(sinusoidal_positions(tokens.size(), w)));
}

void QTransformer::check_tokens(const std::vector<int>& tokens) const {
  if (tokens.empty()) throw ContractError("transformer: sequence must be non-empty");
  if (tokens.size() > cfg_.max_len) {
    throw ContractError("transformer: sequence length exceeds max_len");
  }
  for (int id : tokens) {
    if (id < 0 || static_cast<std::size_t>(id) >= cfg_.vocab) {
      throw ContractError("transformer: token id outside vocab");
    }
  }
}

ad::Var QTransformer::encode(const TapeBinding& b, const std::vector<int>& src,
                             AttentionTrace* trace) const {
  check_tokens(src);
  ad::Var x = embed(b, src_table_, src);
  for (std::size_t l = 0; l < encoder_.size(); ++l) {
    const EncoderLayer& layer = encoder_[l];
    const std::string site = "enc" + std::to_string(l);
    ad::Var att = attention_sublayer(b, layer.attn, x, x, false, site, trace);
    x = apply_norm(b, layer.ln1, ad::add(x, att));
    ad::Var ff = ffn_sublayer(b, layer.ffn, x);
    x = apply_norm(b, layer.ln2, ad::add(x, ff));
  }
  return x;
}

ad::Var QTransformer::decode(const TapeBinding& b, const std::vector<int>& tgt_in,
                             ad::Var memory, AttentionTrace* trace) const {
  check_tokens(tgt_in);
  ad::Var x = embed(b, tgt_table_, tgt_in);
  for (std::size_t l = 0; l < decoder_.size(); ++l) {
    const DecoderLayer& layer = decoder_[l];
    const std::string base = "dec" + std::to_string(l);
    ad::Var self = attention_sublayer(b, layer.self_attn, x, x, true, base + ".self", trace);
    x = apply_norm(b, layer.ln1, ad::add(x, self));
    ad::Var cross =
        attention_sublayer(b, layer.cross_attn, x, memory, false, base + ".cross", trace);
    x = apply_norm(b, layer.ln2, ad::add(x, cross));
    ad::Var ff = ffn_sublayer(b, layer.ffn, x);
    x = apply_norm(b, layer.ln3, ad::add(x, ff));
  }
  return out_proj_.forward(b, x);
}

ad::Var QTransformer::seq2seq_logits(const TapeBinding& b, const std::vector<int>& src,
                                     const std::vector<int>& tgt_in,
                                     AttentionTrace* trace) const {
  ad::Var memory = encode(b, src, trace);
  return decode(b, tgt_in, memory, trace);
}

std::vector<int> QTransformer::greedy_decode(const std::vector<int>& src, int bos, int eos,
                                             std::size_t max_steps) const {
  ad::Tape tape;
  TapeBinding b = bind_params(tape, params_, /*trainable=*/false);
  ad::Var memory = encode(b, src);
  std::vector<int> out = {bos};
  std::vector<int> generated;
  while (generated.size() < max_steps && out.size() < cfg_.max_len) {
    ad::Var logits = decode(b, out, memory);
    const Array& lv = tape.value(logits);
    const double* row = lv.row_ptr(lv.rows() - 1);
    int best = 0;
    for (std::size_t c = 1; c < lv.cols(); ++c) {
      if (row[c] > row[best]) best = static_cast<int>(c);
    }
    if (best == eos) break;
    generated.push_back(best);
    out.push_back(best);
  }
  return generated;
}

}  // namespace qnn
