#include "qnn/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "qnn/error.hpp"

namespace qnn::ad {

namespace {

void check_on_tape(const Tape* tape, std::span<const Var> inputs) {
  for (const Var& v : inputs) {
    if (v.tape != tape || v.id < 0) {
      throw GraphError("record: input node does not belong to this tape");
    }
  }
}

Tape& tape_of(Var v) {
  if (!v.valid()) throw GraphError("operation on an unbound Var");
  return *v.tape;
}

}  // namespace

Var Tape::leaf(Array value, bool requires_grad, bool is_param) {
  Node n;
  n.op = is_param ? "param" : (requires_grad ? "input" : "const");
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  n.is_param = is_param;
  nodes_.push_back(std::move(n));
  int id = static_cast<int>(nodes_.size()) - 1;
  if (is_param) param_ids_.push_back(id);
  return Var{this, id};
}

Var Tape::constant(Array value) { return leaf(std::move(value), false, false); }
Var Tape::input(Array value) { return leaf(std::move(value), true, false); }
Var Tape::param(Array value) { return leaf(std::move(value), true, true); }

Var Tape::record(const std::string& op, std::span<const Var> inputs, Array value,
                 std::function<void(Tape&, int)> backward) {
  check_on_tape(this, inputs);
  Node n;
  n.op = op;
  n.inputs.reserve(inputs.size());
  for (const Var& v : inputs) {
    n.inputs.push_back(v.id);
    n.requires_grad = n.requires_grad || nodes_[v.id].requires_grad;
  }
  n.value = std::move(value);
  n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Var{this, static_cast<int>(nodes_.size()) - 1};
}

void Tape::backward(Var loss) {
  if (loss.tape != this || loss.id < 0 || loss.id >= static_cast<int>(nodes_.size())) {
    throw GraphError("backward: loss is not on this tape");
  }
  const Node& l = nodes_[loss.id];
  if (l.value.rows() != 1 || l.value.cols() != 1) {
    throw ContractError("backward: loss must be a scalar node");
  }
  for (Node& n : nodes_) {
    if (n.requires_grad) {
      n.grad = Array(n.value.rows(), n.value.cols(), 0.0);
    }
  }
  if (!l.requires_grad) return;
  nodes_[loss.id].grad[0] = 1.0;
  for (int id = static_cast<int>(nodes_.size()) - 1; id >= 0; --id) {
    Node& n = nodes_[id];
    if (!n.requires_grad || !n.backward) continue;
    n.backward(*this, id);
  }
}

const Array& Tape::value(Var v) const { return nodes_.at(v.id).value; }

const Array& Tape::grad(Var v) const {
  const Node& n = nodes_.at(v.id);
  if (!n.requires_grad) throw ContractError("grad: node does not track gradients");
  return n.grad;
}

Array& Tape::mutable_grad(Var v) { return nodes_.at(v.id).grad; }

bool Tape::is_param(Var v) const { return nodes_.at(v.id).is_param; }

void Tape::accumulate(int id, const Array& g) {
  Node& n = nodes_[id];
  if (!n.requires_grad) return;
  add_in_place(n.grad, g);
}

// --- elementwise and linear primitives ------------------------------------

Var add(Var a, Var b) {
  Tape& t = tape_of(a);
  const Var ins[] = {a, b};
  return t.record("add", ins, qnn::add(t.value(a), t.value(b)), [](Tape& t, int id) {
    const auto& n = t.node(id);
    t.accumulate(n.inputs[0], n.grad);
    t.accumulate(n.inputs[1], n.grad);
  });
}

Var sub(Var a, Var b) {
  Tape& t = tape_of(a);
  const Var ins[] = {a, b};
  return t.record("sub", ins, qnn::sub(t.value(a), t.value(b)), [](Tape& t, int id) {
    const auto& n = t.node(id);
    t.accumulate(n.inputs[0], n.grad);
    t.accumulate(n.inputs[1], qnn::scale(n.grad, -1.0));
  });
}

Var mul(Var a, Var b) {
  Tape& t = tape_of(a);
  const Var ins[] = {a, b};
  return t.record("mul", ins, qnn::mul(t.value(a), t.value(b)), [](Tape& t, int id) {
    const auto& n = t.node(id);
    t.accumulate(n.inputs[0], qnn::mul(n.grad, t.node(n.inputs[1]).value));
    t.accumulate(n.inputs[1], qnn::mul(n.grad, t.node(n.inputs[0]).value));
  });
}

Var scale(Var a, double s) {
  Tape& t = tape_of(a);
  const Var ins[] = {a};
  return t.record("scale", ins, qnn::scale(t.value(a), s), [s](Tape& t, int id) {
    const auto& n = t.node(id);
    t.accumulate(n.inputs[0], qnn::scale(n.grad, s));
  });
}

Var add_bias(Var a, Var bias) {
  Tape& t = tape_of(a);
  const Array& av = t.value(a);
  const Array& bv = t.value(bias);
  if (bv.rows() != 1 || bv.cols() != av.cols()) {
    throw ShapeError("add_bias: bias must be a 1 x cols row");
  }
  Array out = av;
  for (std::size_t i = 0; i < out.rows(); ++i) {
    double* row = out.row_ptr(i);
    for (std::size_t j = 0; j < out.cols(); ++j) row[j] += bv[j];
  }
  const Var ins[] = {a, bias};
  return t.record("add_bias", ins, std::move(out), [](Tape& t, int id) {
    const auto& n = t.node(id);
    t.accumulate(n.inputs[0], n.grad);
    t.accumulate(n.inputs[1], qnn::sum_rows(n.grad));
  });
}

Var matmul(Var a, Var b) {
  Tape& t = tape_of(a);
  const Var ins[] = {a, b};
  return t.record("matmul", ins, qnn::matmul(t.value(a), t.value(b)), [](Tape& t, int id) {
    const auto& n = t.node(id);
    t.accumulate(n.inputs[0], qnn::matmul_nt(n.grad, t.node(n.inputs[1]).value));
    t.accumulate(n.inputs[1], qnn::matmul_tn(t.node(n.inputs[0]).value, n.grad));
  });
}

Var matmul_nt(Var a, Var b) {
  Tape& t = tape_of(a);
  const Var ins[] = {a, b};
  return t.record("matmul_nt", ins, qnn::matmul_nt(t.value(a), t.value(b)), [](Tape& t, int id) {
    const auto& n = t.node(id);
    t.accumulate(n.inputs[0], qnn::matmul(n.grad, t.node(n.inputs[1]).value));
    t.accumulate(n.inputs[1], qnn::matmul_tn(n.grad, t.node(n.inputs[0]).value));
  });
}

Var transpose(Var a) {
  Tape& t = tape_of(a);
  const Var ins[] = {a};
  return t.record("transpose", ins, qnn::transpose(t.value(a)), [](Tape& t, int id) {
    const auto& n = t.node(id);
    t.accumulate(n.inputs[0], qnn::transpose(n.grad));
  });
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw ContractError("concat_cols: needs at least one part");
  Tape& t = tape_of(parts[0]);
  std::size_t rows = t.value(parts[0]).rows();
  std::size_t total = 0;
  std::vector<std::size_t> widths;
  for (const Var& p : parts) {
    const Array& v = t.value(p);
    if (v.rows() != rows) throw ShapeError("concat_cols: row counts differ");
    widths.push_back(v.cols());
    total += v.cols();
  }
  Array out(rows, total);
  std::size_t off = 0;
  for (const Var& p : parts) {
    const Array& v = t.value(p);
    for (std::size_t i = 0; i < rows; ++i) {
      std::copy(v.row_ptr(i), v.row_ptr(i) + v.cols(), out.row_ptr(i) + off);
    }
    off += v.cols();
  }
  return t.record("concat_cols", parts, std::move(out), [widths](Tape& t, int id) {
    const auto& n = t.node(id);
    std::size_t off = 0;
    for (std::size_t k = 0; k < n.inputs.size(); ++k) {
      Array slice(n.grad.rows(), widths[k]);
      for (std::size_t i = 0; i < n.grad.rows(); ++i) {
        const double* src = n.grad.row_ptr(i) + off;
        std::copy(src, src + widths[k], slice.row_ptr(i));
      }
      t.accumulate(n.inputs[k], slice);
      off += widths[k];
    }
  });
}

std::vector<Var> split_cols(Var a, std::span<const std::size_t> widths) {
  Tape& t = tape_of(a);
  const Array& av = t.value(a);
  std::size_t total = 0;
  for (std::size_t w : widths) total += w;
  if (total != av.cols()) throw ShapeError("split_cols: widths do not sum to cols");

  std::vector<Var> outs;
  std::size_t off = 0;
  const Var ins[] = {a};
  for (std::size_t k = 0; k < widths.size(); ++k) {
    Array piece(av.rows(), widths[k]);
    for (std::size_t i = 0; i < av.rows(); ++i) {
      const double* src = av.row_ptr(i) + off;
      std::copy(src, src + widths[k], piece.row_ptr(i));
    }
    off += widths[k];
    const bool last = (k + 1 == widths.size());
    std::function<void(Tape&, int)> bw;
    if (last) {
      // Joint rule on the last sibling: pieces are recorded consecutively,
      // so by reverse order every sibling grad is final when this runs.
      std::vector<std::size_t> ws(widths.begin(), widths.end());
      bw = [ws](Tape& t, int id) {
        const auto& n = t.node(id);
        const int base = id - static_cast<int>(ws.size()) + 1;
        Array g(t.node(n.inputs[0]).value.rows(), t.node(n.inputs[0]).value.cols(), 0.0);
        std::size_t off = 0;
        for (std::size_t k = 0; k < ws.size(); ++k) {
          const Array& pg = t.node(base + static_cast<int>(k)).grad;
          for (std::size_t i = 0; i < g.rows(); ++i) {
            double* dst = g.row_ptr(i) + off;
            const double* src = pg.row_ptr(i);
            for (std::size_t j = 0; j < ws[k]; ++j) dst[j] += src[j];
          }
          off += ws[k];
        }
        t.accumulate(n.inputs[0], g);
      };
    }
    outs.push_back(t.record("split_cols", ins, std::move(piece), std::move(bw)));
  }
  return outs;
}

Var sum_rows(Var a) {
  Tape& t = tape_of(a);
  const Var ins[] = {a};
  return t.record("sum_rows", ins, qnn::sum_rows(t.value(a)), [](Tape& t, int id) {
    const auto& n = t.node(id);
    const Array& in = t.node(n.inputs[0]).value;
    Array g(in.rows(), in.cols());
    for (std::size_t i = 0; i < in.rows(); ++i) {
      std::copy(n.grad.row_ptr(0), n.grad.row_ptr(0) + in.cols(), g.row_ptr(i));
    }
    t.accumulate(n.inputs[0], g);
  });
}

Var sum_all(Var a) {
  Tape& t = tape_of(a);
  const Var ins[] = {a};
  return t.record("sum_all", ins, Array::scalar(qnn::sum_all(t.value(a))),
                  [](Tape& t, int id) {
                    const auto& n = t.node(id);
                    const Array& in = t.node(n.inputs[0]).value;
                    t.accumulate(n.inputs[0], Array(in.rows(), in.cols(), n.grad[0]));
                  });
}

Var tanh(Var a) {
  Tape& t = tape_of(a);
  Array out = t.value(a);
  for (double& v : out.data()) v = std::tanh(v);
  const Var ins[] = {a};
  return t.record("tanh", ins, std::move(out), [](Tape& t, int id) {
    const auto& n = t.node(id);
    Array g = n.grad;
    auto gd = g.data();
    auto yd = n.value.data();
    for (std::size_t k = 0; k < gd.size(); ++k) gd[k] *= 1.0 - yd[k] * yd[k];
    t.accumulate(n.inputs[0], g);
  });
}

Var relu(Var a) {
  Tape& t = tape_of(a);
  Array out = t.value(a);
  for (double& v : out.data()) v = v > 0.0 ? v : 0.0;
  const Var ins[] = {a};
  return t.record("relu", ins, std::move(out), [](Tape& t, int id) {
    const auto& n = t.node(id);
    Array g = n.grad;
    auto gd = g.data();
    auto xd = t.node(n.inputs[0]).value.data();
    for (std::size_t k = 0; k < gd.size(); ++k) {
      if (xd[k] <= 0.0) gd[k] = 0.0;
    }
    t.accumulate(n.inputs[0], g);
  });
}

Var row_softmax(Var a) {
  Tape& t = tape_of(a);
  const Var ins[] = {a};
  return t.record("row_softmax", ins, qnn::row_softmax(t.value(a)), [](Tape& t, int id) {
    const auto& n = t.node(id);
    const Array& y = n.value;
    Array g(y.rows(), y.cols());
    for (std::size_t i = 0; i < y.rows(); ++i) {
      const double* yr = y.row_ptr(i);
      const double* gr = n.grad.row_ptr(i);
      double dot = 0.0;
      for (std::size_t j = 0; j < y.cols(); ++j) dot += yr[j] * gr[j];
      double* o = g.row_ptr(i);
      for (std::size_t j = 0; j < y.cols(); ++j) o[j] = yr[j] * (gr[j] - dot);
    }
    t.accumulate(n.inputs[0], g);
  });
}

Var cross_entropy_logits(Var logits, std::vector<int> labels) {
  Tape& t = tape_of(logits);
  const Array& lv = t.value(logits);
  if (labels.size() != lv.rows()) {
    throw ShapeError("cross_entropy_logits: one label per logits row required");
  }
  for (int lab : labels) {
    if (lab < 0 || static_cast<std::size_t>(lab) >= lv.cols()) {
      throw ContractError("cross_entropy_logits: label out of range");
    }
  }
  Array probs = qnn::row_softmax(lv);
  double loss = 0.0;
  for (std::size_t i = 0; i < lv.rows(); ++i) {
    loss -= std::log(std::max(probs.at(i, labels[i]), 1e-300));
  }
  loss /= static_cast<double>(lv.rows());
  const Var ins[] = {logits};
  return t.record("cross_entropy_logits", ins, Array::scalar(loss),
                  [probs, labels](Tape& t, int id) {
                    const auto& n = t.node(id);
                    const double g0 = n.grad[0] / static_cast<double>(probs.rows());
                    Array g = probs;
                    for (std::size_t i = 0; i < g.rows(); ++i) {
                      g.at(i, labels[i]) -= 1.0;
                      double* row = g.row_ptr(i);
                      for (std::size_t j = 0; j < g.cols(); ++j) row[j] *= g0;
                    }
                    t.accumulate(n.inputs[0], g);
                  });
}

Var gather_rows(Var table, std::vector<int> ids) {
  Tape& t = tape_of(table);
  const Array& tv = t.value(table);
  for (int i : ids) {
    if (i < 0 || static_cast<std::size_t>(i) >= tv.rows()) {
      throw LookupError("gather_rows: id out of table range");
    }
  }
  Array out(ids.size(), tv.cols());
  for (std::size_t k = 0; k < ids.size(); ++k) {
    std::copy(tv.row_ptr(ids[k]), tv.row_ptr(ids[k]) + tv.cols(), out.row_ptr(k));
  }
  const Var ins[] = {table};
  return t.record("gather_rows", ins, std::move(out), [ids](Tape& t, int id) {
    const auto& n = t.node(id);
    auto& tn = t.node(n.inputs[0]);
    if (!tn.requires_grad) return;
    for (std::size_t k = 0; k < ids.size(); ++k) {
      double* dst = tn.grad.row_ptr(ids[k]);
      const double* src = n.grad.row_ptr(k);
      for (std::size_t j = 0; j < n.grad.cols(); ++j) dst[j] += src[j];
    }
  });
}

Var layer_norm(Var a, Var gain, Var bias, double eps) {
  Tape& t = tape_of(a);
  const Array& x = t.value(a);
  const Array& g = t.value(gain);
  const Array& b = t.value(bias);
  if (g.rows() != 1 || g.cols() != x.cols() || b.rows() != 1 || b.cols() != x.cols()) {
    throw ShapeError("layer_norm: gain/bias must be 1 x cols rows");
  }
  const std::size_t n = x.cols();
  Array out(x.rows(), n);
  Array xhat(x.rows(), n);
  std::vector<double> inv_sigma(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const double* row = x.row_ptr(i);
    double mu = 0.0;
    for (std::size_t j = 0; j < n; ++j) mu += row[j];
    mu /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t j = 0; j < n; ++j) var += (row[j] - mu) * (row[j] - mu);
    var /= static_cast<double>(n);
    const double is = 1.0 / std::sqrt(var + eps);
    inv_sigma[i] = is;
    double* xh = xhat.row_ptr(i);
    double* o = out.row_ptr(i);
    for (std::size_t j = 0; j < n; ++j) {
      xh[j] = (row[j] - mu) * is;
      o[j] = xh[j] * g[j] + b[j];
    }
  }
  const Var ins[] = {a, gain, bias};
  return t.record("layer_norm", ins, std::move(out),
                  [xhat, inv_sigma](Tape& t, int id) {
                    const auto& nd = t.node(id);
                    const Array& gain = t.node(nd.inputs[1]).value;
                    const std::size_t n = xhat.cols();
                    Array dx(xhat.rows(), n);
                    Array dgain(1, n, 0.0);
                    Array dbias(1, n, 0.0);
                    for (std::size_t i = 0; i < xhat.rows(); ++i) {
                      const double* go = nd.grad.row_ptr(i);
                      const double* xh = xhat.row_ptr(i);
                      double m1 = 0.0, m2 = 0.0;
                      for (std::size_t j = 0; j < n; ++j) {
                        const double dxh = go[j] * gain[j];
                        m1 += dxh;
                        m2 += dxh * xh[j];
                        dgain[j] += go[j] * xh[j];
                        dbias[j] += go[j];
                      }
                      m1 /= static_cast<double>(n);
                      m2 /= static_cast<double>(n);
                      double* o = dx.row_ptr(i);
                      for (std::size_t j = 0; j < n; ++j) {
                        o[j] = inv_sigma[i] * (go[j] * gain[j] - m1 - xh[j] * m2);
                      }
                    }
                    t.accumulate(nd.inputs[0], dx);
                    t.accumulate(nd.inputs[1], dgain);
                    t.accumulate(nd.inputs[2], dbias);
                  });
}

// --- Hamilton group ops ----------------------------------------------------

namespace {

// Shared machinery for the two structured contractions. Each output
// component oc is a sum over rc of sign(oc,rc) * f(lhs_input, rhs_input).
// The four outputs are recorded consecutively with the joint backward rule
// attached to the last one; reverse-order traversal guarantees all four
// output grads are final when it fires.
QVar record_hamilton_group(const std::string& op, QVar left, QVar right,
                           std::array<Array, 4> values,
                           std::function<void(Tape&, const std::array<int, 4>&,
                                              const std::array<int, 4>&,
                                              const std::array<int, 4>&)>
                               joint_backward) {
  Tape& t = tape_of(left.r);
  const Var ins[] = {left.r, left.x, left.y, left.z, right.r, right.x, right.y, right.z};
  QVar out;
  for (int oc = 0; oc < 4; ++oc) {
    std::function<void(Tape&, int)> bw;
    if (oc == 3) {
      bw = [joint_backward](Tape& t, int id) {
        const auto& n = t.node(id);
        std::array<int, 4> lefts = {n.inputs[0], n.inputs[1], n.inputs[2], n.inputs[3]};
        std::array<int, 4> rights = {n.inputs[4], n.inputs[5], n.inputs[6], n.inputs[7]};
        std::array<int, 4> out_ids = {id - 3, id - 2, id - 1, id};
        joint_backward(t, out_ids, lefts, rights);
      };
    }
    out.set_comp(oc, t.record(op, ins, std::move(values[oc]), std::move(bw)));
  }
  return out;
}

}  // namespace

QVar hamilton_linear(QVar x, QVar w) {
  Tape& t = tape_of(x.r);
  const Array& xr = t.value(x.r);
  const Array& wr = t.value(w.r);
  if (xr.cols() != wr.cols()) {
    throw ShapeError("hamilton_linear: input width does not match weight in_q");
  }
  // out_oc = sum_rc sign * X_rc * W_lhs^T
  std::array<const Array*, 4> xv = {&t.value(x.r), &t.value(x.x), &t.value(x.y), &t.value(x.z)};
  std::array<const Array*, 4> wv = {&t.value(w.r), &t.value(w.x), &t.value(w.y), &t.value(w.z)};
  std::array<Array, 4> out;
  for (int oc = 0; oc < 4; ++oc) {
    Array acc(xr.rows(), wr.rows(), 0.0);
    for (int rc = 0; rc < 4; ++rc) {
      axpy_in_place(acc, kHamiltonSign[oc][rc],
                    qnn::matmul_nt(*xv[rc], *wv[kHamiltonLhs[oc][rc]]));
    }
    out[oc] = std::move(acc);
  }
  return record_hamilton_group(
      "hamilton_linear", x, w, std::move(out),
      [](Tape& t, const std::array<int, 4>& outs, const std::array<int, 4>& xs,
         const std::array<int, 4>& ws) {
        for (int oc = 0; oc < 4; ++oc) {
          const Array& g = t.node(outs[oc]).grad;
          for (int rc = 0; rc < 4; ++rc) {
            const double s = kHamiltonSign[oc][rc];
            const int lc = kHamiltonLhs[oc][rc];
            // d X_rc += s * g * W_lc ; d W_lc += s * g^T * X_rc
            if (t.node(xs[rc]).requires_grad) {
              t.accumulate(xs[rc], qnn::scale(qnn::matmul(g, t.node(ws[lc]).value), s));
            }
            if (t.node(ws[lc]).requires_grad) {
              t.accumulate(ws[lc], qnn::scale(qnn::matmul_tn(g, t.node(xs[rc]).value), s));
            }
          }
        }
      });
}

QVar hamilton_scores(QVar a, QVar b) {
  Tape& t = tape_of(a.r);
  const Array& av = t.value(a.r);
  const Array& bv = t.value(b.r);
  if (av.cols() != bv.cols()) throw ShapeError("hamilton_scores: feature widths disagree");
  // out_oc = sum_rc sign * A_lhs * B_rc^T
  std::array<const Array*, 4> avs = {&t.value(a.r), &t.value(a.x), &t.value(a.y), &t.value(a.z)};
  std::array<const Array*, 4> bvs = {&t.value(b.r), &t.value(b.x), &t.value(b.y), &t.value(b.z)};
  std::array<Array, 4> out;
  for (int oc = 0; oc < 4; ++oc) {
    Array acc(av.rows(), bv.rows(), 0.0);
    for (int rc = 0; rc < 4; ++rc) {
      axpy_in_place(acc, kHamiltonSign[oc][rc],
                    qnn::matmul_nt(*avs[kHamiltonLhs[oc][rc]], *bvs[rc]));
    }
    out[oc] = std::move(acc);
  }
  return record_hamilton_group(
      "hamilton_scores", a, b, std::move(out),
      [](Tape& t, const std::array<int, 4>& outs, const std::array<int, 4>& as,
         const std::array<int, 4>& bs) {
        for (int oc = 0; oc < 4; ++oc) {
          const Array& g = t.node(outs[oc]).grad;
          for (int rc = 0; rc < 4; ++rc) {
            const double s = kHamiltonSign[oc][rc];
            const int lc = kHamiltonLhs[oc][rc];
            // d A_lc += s * g * B_rc ; d B_rc += s * g^T * A_lc
            if (t.node(as[lc]).requires_grad) {
              t.accumulate(as[lc], qnn::scale(qnn::matmul(g, t.node(bs[rc]).value), s));
            }
            if (t.node(bs[rc]).requires_grad) {
              t.accumulate(bs[rc], qnn::scale(qnn::matmul_tn(g, t.node(as[lc]).value), s));
            }
          }
        }
      });
}

QVar component_softmax(QVar a) {
  return QVar{row_softmax(a.r), row_softmax(a.x), row_softmax(a.y), row_softmax(a.z)};
}

QVar qv_add(QVar a, QVar b) {
  return QVar{add(a.r, b.r), add(a.x, b.x), add(a.y, b.y), add(a.z, b.z)};
}

QVar qv_sub(QVar a, QVar b) {
  return QVar{sub(a.r, b.r), sub(a.x, b.x), sub(a.y, b.y), sub(a.z, b.z)};
}

QVar qv_scale(QVar a, double s) {
  return QVar{scale(a.r, s), scale(a.x, s), scale(a.y, s), scale(a.z, s)};
}

QVar qv_transpose(QVar a) {
  return QVar{transpose(a.r), transpose(a.x), transpose(a.y), transpose(a.z)};
}

QVar hamilton_elementwise(QVar a, QVar b) {
  QVar out;
  for (int oc = 0; oc < 4; ++oc) {
    Var acc;
    for (int rc = 0; rc < 4; ++rc) {
      Var term = mul(a.comp(kHamiltonLhs[oc][rc]), b.comp(rc));
      if (kHamiltonSign[oc][rc] < 0) {
        acc = acc.valid() ? sub(acc, term) : scale(term, -1.0);
      } else {
        acc = acc.valid() ? add(acc, term) : term;
      }
    }
    out.set_comp(oc, acc);
  }
  return out;
}

QVar component_matmul(QVar weights, QVar values) {
  return QVar{matmul(weights.r, values.r), matmul(weights.x, values.x),
              matmul(weights.y, values.y), matmul(weights.z, values.z)};
}

QVar qv_concat(std::span<const QVar> parts) {
  std::vector<Var> rs, xs, ys, zs;
  for (const QVar& p : parts) {
    rs.push_back(p.r);
    xs.push_back(p.x);
    ys.push_back(p.y);
    zs.push_back(p.z);
  }
  return QVar{concat_cols(rs), concat_cols(xs), concat_cols(ys), concat_cols(zs)};
}

std::vector<QVar> qv_split(QVar a, std::span<const std::size_t> widths) {
  auto rs = split_cols(a.r, widths);
  auto xs = split_cols(a.x, widths);
  auto ys = split_cols(a.y, widths);
  auto zs = split_cols(a.z, widths);
  std::vector<QVar> out(widths.size());
  for (std::size_t k = 0; k < widths.size(); ++k) out[k] = QVar{rs[k], xs[k], ys[k], zs[k]};
  return out;
}

QVar qv_sum_rows(QVar a) {
  return QVar{sum_rows(a.r), sum_rows(a.x), sum_rows(a.y), sum_rows(a.z)};
}

Var quaternion_to_real(QVar q) {
  const Var parts[] = {q.r, q.x, q.y, q.z};
  return concat_cols(parts);
}

QVar real_to_quaternion(Var v) {
  Tape& t = tape_of(v);
  const Array& val = t.value(v);
  if (val.cols() % 4 != 0) {
    throw ShapeError("real_to_quaternion: real width must be divisible by 4");
  }
  const std::size_t d = val.cols() / 4;
  const std::size_t widths[] = {d, d, d, d};
  auto parts = split_cols(v, widths);
  return QVar{parts[0], parts[1], parts[2], parts[3]};
}

QVar qtensor_constant(Tape& tape, const QTensor& t) {
  return QVar{tape.constant(t.r()), tape.constant(t.x()), tape.constant(t.y()),
              tape.constant(t.z())};
}

QVar qtensor_input(Tape& tape, const QTensor& t) {
  return QVar{tape.input(t.r()), tape.input(t.x()), tape.input(t.y()), tape.input(t.z())};
}

}  // namespace qnn::ad
