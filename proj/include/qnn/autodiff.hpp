#pragma once

#include <deque>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "qnn/array.hpp"
#include "qnn/qcore.hpp"

namespace qnn::ad {

class Tape;

// Handle to a node on a tape. Cheap to copy; only valid for the tape that
// created it.
struct Var {
  Tape* tape = nullptr;
  int id = -1;
  bool valid() const { return tape != nullptr && id >= 0; }
};

// A quaternion value on the tape: four real arrays of identical shape, one
// per component. Component-wise ops act on each Var independently; only the
// Hamilton ops mix them.
struct QVar {
  Var r, x, y, z;
  Var comp(int c) const {
    switch (c) {
      case 0: return r;
      case 1: return x;
      case 2: return y;
      default: return z;
    }
  }
  void set_comp(int c, Var v) {
    switch (c) {
      case 0: r = v; break;
      case 1: x = v; break;
      case 2: y = v; break;
      default: z = v; break;
    }
  }
};

// Reverse-mode differentiation record. Nodes are appended in evaluation
// order; backward visits them in strict reverse creation order, so the
// gradient of a fixed tape is deterministic.
class Tape {
 public:
  struct Node {
    std::string op;
    std::vector<int> inputs;
    Array value;
    Array grad;
    bool requires_grad = false;
    bool is_param = false;
    std::function<void(Tape&, int)> backward;
  };

  // Leaves. Constants never receive gradients; inputs do; params are
  // additionally marked trainable.
  Var constant(Array value);
  Var input(Array value);
  Var param(Array value);

  // Generic record: appends a node computing `value` from `inputs` with the
  // given backward rule. Inputs must already live on this tape.
  Var record(const std::string& op, std::span<const Var> inputs, Array value,
             std::function<void(Tape&, int)> backward);

  // Runs the backward pass from a scalar loss. Gradients of all
  // requires-grad nodes are populated; repeated calls re-run from zero.
  void backward(Var loss);

  const Array& value(Var v) const;
  const Array& grad(Var v) const;
  Array& mutable_grad(Var v);

  bool is_param(Var v) const;
  std::size_t size() const { return nodes_.size(); }
  const std::vector<int>& param_ids() const { return param_ids_; }

  // Accumulates g into the node's gradient if it wants one.
  void accumulate(int id, const Array& g);
  const Node& node(int id) const { return nodes_[id]; }
  Node& node(int id) { return nodes_[id]; }

 private:
  Var leaf(Array value, bool requires_grad, bool is_param);
  // deque: references to nodes (and their value arrays) stay valid while
  // recording appends more nodes
  std::deque<Node> nodes_;
  std::vector<int> param_ids_;
};

// --- differentiable primitives -------------------------------------------

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double s);
// a (m x n) + bias (1 x n), broadcast over rows
Var add_bias(Var a, Var bias);
Var matmul(Var a, Var b);
// A (m x k) * B^T with B (n x k)
Var matmul_nt(Var a, Var b);
Var transpose(Var a);
Var concat_cols(std::span<const Var> parts);
std::vector<Var> split_cols(Var a, std::span<const std::size_t> widths);
Var sum_rows(Var a);
Var sum_all(Var a);
Var tanh(Var a);
Var relu(Var a);
Var row_softmax(Var a);
// Mean cross-entropy over rows of logits against integer labels.
Var cross_entropy_logits(Var logits, std::vector<int> labels);
// Row lookup with scatter-add backward; ids must index into the table.
Var gather_rows(Var table, std::vector<int> ids);
// Per-row normalization on the concatenated real vector, with learnable
// gain and bias (both 1 x n).
Var layer_norm(Var a, Var gain, Var bias, double eps = 1e-5);

// --- quaternion ops over component groups --------------------------------

// The structured feed-forward map: out[i,o] = sum_t w[o,t] (x) x[i,t].
// One recorded group; the backward accumulates each of the four weight
// blocks from its four structured occurrences.
QVar hamilton_linear(QVar x, QVar w);
// Pairwise scores: out[i,j] = sum_t a[i,t] (x) b[j,t].
QVar hamilton_scores(QVar a, QVar b);
// Four independent row-softmaxes, one per component.
QVar component_softmax(QVar a);

QVar qv_add(QVar a, QVar b);
QVar qv_sub(QVar a, QVar b);
QVar qv_scale(QVar a, double s);
QVar qv_transpose(QVar a);
// Elementwise Hamilton product of same-shape quaternion arrays, composed
// from elementwise primitives.
QVar hamilton_elementwise(QVar a, QVar b);
// Per-component matrix product: out_c = weights_c * values_c. Components do
// not mix.
QVar component_matmul(QVar weights, QVar values);
// Concatenation along the quaternion feature axis, component with component.
QVar qv_concat(std::span<const QVar> parts);
std::vector<QVar> qv_split(QVar a, std::span<const std::size_t> widths);
QVar qv_sum_rows(QVar a);

// Bridges between real and quaternion views: [r | x | y | z] contiguous
// blocks along the feature axis. Real width must be divisible by 4.
Var quaternion_to_real(QVar q);
QVar real_to_quaternion(Var v);

// Mounts a QTensor's components as one leaf group.
QVar qtensor_constant(Tape& tape, const QTensor& t);
QVar qtensor_input(Tape& tape, const QTensor& t);

}  // namespace qnn::ad
