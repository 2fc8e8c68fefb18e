#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "qnn/qlayers.hpp"

namespace qnn {

struct QAttConfig {
  std::size_t d = 8;         // quaternion width per token (real width 4d)
  std::size_t hidden_q = 8;  // compare/aggregate QFFN width
  std::size_t num_classes = 2;
  std::size_t vocab = 50;
  ActivationKind act = ActivationKind::Relu;
  bool share_compare = false;  // one QFFN for both compare directions
  bool embed_projection = false;
  InitSpec::Scheme init = InitSpec::Scheme::GlorotPerComponent;
  std::uint64_t seed = 42;
};

// Attention internals captured during a forward pass, mainly for the
// normalization checks and for debugging.
struct AlignmentState {
  QTensor E;          // la x lb raw scores
  QTensor G;          // ComponentSoftmax(E), rows over lb
  QTensor F;          // ComponentSoftmax(E^T), rows over la
  QTensor A_aligned;  // A' = F A, lb x d
  QTensor B_aligned;  // B' = G B, la x d
  QTensor C1, C2;     // pooled comparisons, 1 x hidden
  QTensor Y;          // aggregate output, 1 x hidden
};

// Cross-sequence scores E[i,j] = sum_t A[i,t] (x) B[j,t]; plain Hamilton
// product with no conjugation, summed over the feature axis.
ad::QVar qatt_cross_scores(ad::QVar a, ad::QVar b);

// Per-component recombination: each output component is the real matrix
// product of the matching components. Components do not mix here.
ad::QVar qatt_align(ad::QVar weights, ad::QVar seq);

// The pairwise attention classifier: cross-attention between two token
// sequences, component-wise aligned representations, compare-and-aggregate
// feed-forwards, concatenated-component classification.
class QAttModel {
 public:
  explicit QAttModel(const QAttConfig& cfg);

  const QAttConfig& config() const { return cfg_; }
  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }

  // Records one example's graph; logits are 1 x num_classes. Both
  // sequences must be non-empty.
  ad::Var forward(const TapeBinding& binding, const std::vector<int>& a_tokens,
                  const std::vector<int>& b_tokens, AlignmentState* trace = nullptr) const;

 private:
  QAttConfig cfg_;
  ParamStore params_;
  EmbedProject embed_;
  QLinear compare1_;
  QLinear compare2_;
  QLinear aggregate_;
  OutputHead head_;
};

// Parameter layout of the real-space reference model at matched widths
// (token width 4d, compare width 4*hidden): same embedding and head, real
// dense transform layers with the same matching function. Used for
// parameter comparison only, not for training.
ParamStore build_real_attention_reference(const QAttConfig& cfg);

}  // namespace qnn
