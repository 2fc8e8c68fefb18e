#include "qnn/qattention.hpp"

#include "qnn/error.hpp"

namespace qnn {

ad::QVar qatt_cross_scores(ad::QVar a, ad::QVar b) { return ad::hamilton_scores(a, b); }

ad::QVar qatt_align(ad::QVar weights, ad::QVar seq) { return ad::component_matmul(weights, seq); }

namespace {

QTensor snapshot(const TapeBinding& b, ad::QVar q) {
  const ad::Tape& t = *b.tape;
  return QTensor({t.value(q.r).rows(), t.value(q.r).cols()}, t.value(q.r), t.value(q.x),
                 t.value(q.y), t.value(q.z));
}

// [u; v; u (x) v; u - v] along the quaternion feature axis, the matching
// function applied before the compare layers.
ad::QVar matching_features(ad::QVar u, ad::QVar v) {
  const ad::QVar parts[] = {u, v, ad::hamilton_elementwise(u, v), ad::qv_sub(u, v)};
  return ad::qv_concat(parts);
}

}  // namespace

QAttModel::QAttModel(const QAttConfig& cfg) : cfg_(cfg) {
  if (cfg.d < 1 || cfg.hidden_q < 1 || cfg.num_classes < 1) {
    throw UsageError("QAttConfig: widths and num_classes must be >= 1");
  }
  if (cfg.embed_projection) {
    embed_ = EmbedProject::create_projected(params_, "embed", cfg.vocab, 4 * cfg.d, cfg.d,
                                            cfg.act);
  } else {
    embed_ = EmbedProject::create(params_, "embed", cfg.vocab, 4 * cfg.d);
  }
  compare1_ = QLinear::create(params_, "compare1", 4 * cfg.d, cfg.hidden_q, true);
  compare2_ = cfg.share_compare
                  ? compare1_
                  : QLinear::create(params_, "compare2", 4 * cfg.d, cfg.hidden_q, true);
  aggregate_ = QLinear::create(params_, "aggregate", 4 * cfg.hidden_q, cfg.hidden_q, true);
  head_ = OutputHead::create(params_, "head", 4 * cfg.hidden_q, cfg.num_classes);

  SplitMix64 rng(cfg.seed);
  init_embedding(params_, embed_.table, rng);
  if (embed_.proj) init_qlinear(params_, *embed_.proj, cfg.init, rng);
  init_qlinear(params_, compare1_, cfg.init, rng);
  if (!cfg.share_compare) {
    init_qlinear(params_, compare2_, cfg.init, rng);
  }
  init_qlinear(params_, aggregate_, cfg.init, rng);
  init_output_head(params_, head_, rng);
}

ad::Var QAttModel::forward(const TapeBinding& binding, const std::vector<int>& a_tokens,
                           const std::vector<int>& b_tokens, AlignmentState* trace) const {
  if (a_tokens.empty() || b_tokens.empty()) {
    throw ContractError("qatt_forward: sequences must be non-empty");
  }
  ad::QVar a = embed_.forward(binding, a_tokens);  // la x d
  ad::QVar b = embed_.forward(binding, b_tokens);  // lb x d

  ad::QVar e = qatt_cross_scores(a, b);                    // la x lb
  ad::QVar g = ad::component_softmax(e);                   // rows over lb
  ad::QVar f = ad::component_softmax(ad::qv_transpose(e)); // rows over la

  ad::QVar b_aligned = qatt_align(g, b);  // la x d
  ad::QVar a_aligned = qatt_align(f, a);  // lb x d

  // compare each sequence against what was aligned onto it, then pool
  ad::QVar c1 =
      ad::qv_sum_rows(compare1_.forward(binding, matching_features(a_aligned, b), cfg_.act));
  ad::QVar c2 =
      ad::qv_sum_rows(compare2_.forward(binding, matching_features(b_aligned, a), cfg_.act));

  ad::QVar y = aggregate_.forward(binding, matching_features(c1, c2), cfg_.act);
  ad::Var logits = head_.forward(binding, y);

  if (trace != nullptr) {
    trace->E = snapshot(binding, e);
    trace->G = snapshot(binding, g);
    trace->F = snapshot(binding, f);
    trace->A_aligned = snapshot(binding, a_aligned);
    trace->B_aligned = snapshot(binding, b_aligned);
    trace->C1 = snapshot(binding, c1);
    trace->C2 = snapshot(binding, c2);
    trace->Y = snapshot(binding, y);
  }
  return logits;
}

ParamStore build_real_attention_reference(const QAttConfig& cfg) {
  ParamStore store;
  const std::size_t width = 4 * cfg.d;          // real token width
  const std::size_t hidden = 4 * cfg.hidden_q;  // real compare width
  store.add("embed.table", cfg.vocab, width, ParamKind::Embedding, ParamGroup::Other);
  if (cfg.embed_projection) {
    store.add("embed.proj.W", width, width, ParamKind::WeightMatrix, ParamGroup::Transform);
  }
  store.add("compare1.W", hidden, 4 * width, ParamKind::WeightMatrix, ParamGroup::Transform);
  store.add("compare1.b", 1, hidden, ParamKind::Bias, ParamGroup::Transform);
  if (!cfg.share_compare) {
    store.add("compare2.W", hidden, 4 * width, ParamKind::WeightMatrix, ParamGroup::Transform);
    store.add("compare2.b", 1, hidden, ParamKind::Bias, ParamGroup::Transform);
  }
  store.add("aggregate.W", hidden, 4 * hidden, ParamKind::WeightMatrix, ParamGroup::Transform);
  store.add("aggregate.b", 1, hidden, ParamKind::Bias, ParamGroup::Transform);
  store.add("head.W", cfg.num_classes, hidden, ParamKind::WeightMatrix, ParamGroup::Other);
  store.add("head.b", 1, cfg.num_classes, ParamKind::Bias, ParamGroup::Other);
  return store;
}

}  // namespace qnn
