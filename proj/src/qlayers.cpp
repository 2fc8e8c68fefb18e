#include "qnn/qlayers.hpp"

#include <cmath>
#include <numbers>

#include "qnn/error.hpp"

namespace qnn {

int ParamStore::add(std::string name, std::size_t rows, std::size_t cols, ParamKind kind,
                    ParamGroup group) {
  if (find(name) >= 0) throw ContractError("ParamStore: duplicate parameter '" + name + "'");
  infos_.push_back(ParamInfo{std::move(name), rows, cols, kind, group});
  values_.emplace_back(rows, cols, 0.0);
  return static_cast<int>(infos_.size()) - 1;
}

int ParamStore::find(const std::string& name) const {
  for (std::size_t k = 0; k < infos_.size(); ++k) {
    if (infos_[k].name == name) return static_cast<int>(k);
  }
  return -1;
}

std::size_t ParamStore::total_count() const {
  std::size_t n = 0;
  for (const auto& i : infos_) n += i.count();
  return n;
}

TapeBinding bind_params(ad::Tape& tape, const ParamStore& store, bool trainable) {
  TapeBinding b;
  b.tape = &tape;
  b.vars.reserve(store.size());
  for (std::size_t k = 0; k < store.size(); ++k) {
    const Array& v = store.value(static_cast<int>(k));
    b.vars.push_back(trainable ? tape.param(v) : tape.constant(v));
  }
  return b;
}

std::size_t transform_weight_count(const ParamStore& store) {
  std::size_t n = 0;
  for (std::size_t k = 0; k < store.size(); ++k) {
    const ParamInfo& i = store.info(static_cast<int>(k));
    if (i.group == ParamGroup::Transform && i.kind == ParamKind::WeightMatrix) n += i.count();
  }
  return n;
}

QParam add_qparam(ParamStore& store, const std::string& name, std::size_t rows,
                  std::size_t cols, ParamKind kind, ParamGroup group) {
  QParam p;
  p.r = store.add(name + ".r", rows, cols, kind, group);
  p.x = store.add(name + ".x", rows, cols, kind, group);
  p.y = store.add(name + ".y", rows, cols, kind, group);
  p.z = store.add(name + ".z", rows, cols, kind, group);
  return p;
}

ad::QVar qvar(const TapeBinding& binding, const QParam& p) {
  return ad::QVar{binding.var(p.r), binding.var(p.x), binding.var(p.y), binding.var(p.z)};
}

ActivationKind activation_from_string(const std::string& s) {
  if (s == "identity") return ActivationKind::Identity;
  if (s == "tanh") return ActivationKind::Tanh;
  if (s == "relu") return ActivationKind::Relu;
  throw UsageError("unknown activation '" + s + "' (expected identity|tanh|relu)");
}

std::string to_string(ActivationKind k) {
  switch (k) {
    case ActivationKind::Identity: return "identity";
    case ActivationKind::Tanh: return "tanh";
    default: return "relu";
  }
}

ad::Var apply_activation(ad::Var v, ActivationKind k) {
  switch (k) {
    case ActivationKind::Identity: return v;
    case ActivationKind::Tanh: return ad::tanh(v);
    default: return ad::relu(v);
  }
}

ad::QVar apply_activation(ad::QVar v, ActivationKind k) {
  if (k == ActivationKind::Identity) return v;
  return ad::QVar{apply_activation(v.r, k), apply_activation(v.x, k), apply_activation(v.y, k),
                  apply_activation(v.z, k)};
}

QLinear QLinear::create(ParamStore& store, const std::string& name, std::size_t in_q,
                        std::size_t out_q, bool bias, ParamGroup group) {
  QLinear l;
  l.in_q = in_q;
  l.out_q = out_q;
  l.has_bias = bias;
  l.W = add_qparam(store, name + ".W", out_q, in_q, ParamKind::WeightMatrix, group);
  if (bias) l.bias = add_qparam(store, name + ".b", 1, out_q, ParamKind::Bias, group);
  return l;
}

ad::QVar QLinear::forward(const TapeBinding& binding, ad::QVar x, ActivationKind act) const {
  ad::QVar out = ad::hamilton_linear(x, qvar(binding, W));
  if (has_bias) {
    ad::QVar b = qvar(binding, bias);
    out = ad::QVar{ad::add_bias(out.r, b.r), ad::add_bias(out.x, b.x),
                   ad::add_bias(out.y, b.y), ad::add_bias(out.z, b.z)};
  }
  return apply_activation(out, act);
}

RealLinear RealLinear::create(ParamStore& store, const std::string& name, std::size_t in_w,
                              std::size_t out_w, bool bias, ParamGroup group) {
  RealLinear l;
  l.in_w = in_w;
  l.out_w = out_w;
  l.has_bias = bias;
  l.W = store.add(name + ".W", out_w, in_w, ParamKind::WeightMatrix, group);
  if (bias) l.bias = store.add(name + ".b", 1, out_w, ParamKind::Bias, group);
  return l;
}

ad::Var RealLinear::forward(const TapeBinding& binding, ad::Var x, ActivationKind act) const {
  ad::Var out = ad::matmul_nt(x, binding.var(W));
  if (has_bias) out = ad::add_bias(out, binding.var(bias));
  return apply_activation(out, act);
}

OutputHead OutputHead::create(ParamStore& store, const std::string& name, std::size_t in_real,
                              std::size_t num_classes) {
  OutputHead h;
  h.in_real = in_real;
  h.num_classes = num_classes;
  h.W = store.add(name + ".W", num_classes, in_real, ParamKind::WeightMatrix,
                  ParamGroup::Other);
  h.bias = store.add(name + ".b", 1, num_classes, ParamKind::Bias, ParamGroup::Other);
  return h;
}

ad::Var OutputHead::forward(const TapeBinding& binding, ad::QVar q) const {
  return forward_real(binding, ad::quaternion_to_real(q));
}

ad::Var OutputHead::forward_real(const TapeBinding& binding, ad::Var v) const {
  if (binding.tape->value(v).cols() != in_real) {
    throw ShapeError("OutputHead: input width does not match head width");
  }
  return ad::add_bias(ad::matmul_nt(v, binding.var(W)), binding.var(bias));
}

InitSpec::Scheme init_scheme_from_string(const std::string& s) {
  if (s == "glorot") return InitSpec::Scheme::GlorotPerComponent;
  if (s == "polar") return InitSpec::Scheme::QuaternionPolar;
  throw UsageError("unknown init scheme '" + s + "' (expected glorot|polar)");
}

double glorot_bound(std::size_t fan_in_real, std::size_t fan_out_real) {
  return std::sqrt(6.0 / static_cast<double>(fan_in_real + fan_out_real));
}

void init_qlinear(ParamStore& store, const QLinear& layer, InitSpec::Scheme scheme,
                  SplitMix64& rng) {
  const double a = glorot_bound(4 * layer.in_q, 4 * layer.out_q);
  if (scheme == InitSpec::Scheme::GlorotPerComponent) {
    for (int c = 0; c < 4; ++c) {
      for (double& v : store.value(layer.W.comp(c)).data()) v = rng.uniform(-a, a);
    }
  } else {
    Array& wr = store.value(layer.W.r);
    Array& wx = store.value(layer.W.x);
    Array& wy = store.value(layer.W.y);
    Array& wz = store.value(layer.W.z);
    for (std::size_t k = 0; k < wr.size(); ++k) {
      const double theta = rng.uniform(-std::numbers::pi, std::numbers::pi);
      double ux = rng.next_double();
      double uy = rng.next_double();
      double uz = rng.next_double();
      double n = std::sqrt(ux * ux + uy * uy + uz * uz);
      if (n == 0.0) {
        ux = 1.0;
        n = 1.0;
      }
      const double mag = rng.uniform(0.0, a);
      wr[k] = mag * std::cos(theta);
      const double s = mag * std::sin(theta) / n;
      wx[k] = s * ux;
      wy[k] = s * uy;
      wz[k] = s * uz;
    }
  }
  // biases start at zero
}

void init_real_linear(ParamStore& store, const RealLinear& layer, SplitMix64& rng) {
  const double a = glorot_bound(layer.in_w, layer.out_w);
  for (double& v : store.value(layer.W).data()) v = rng.uniform(-a, a);
}

void init_output_head(ParamStore& store, const OutputHead& head, SplitMix64& rng) {
  const double a = glorot_bound(head.in_real, head.num_classes);
  for (double& v : store.value(head.W).data()) v = rng.uniform(-a, a);
}

void init_embedding(ParamStore& store, int table, SplitMix64& rng) {
  for (double& v : store.value(table).data()) v = rng.uniform(-0.1, 0.1);
}

QTensor real_to_qtensor(const Array& v) {
  if (v.cols() % 4 != 0) {
    throw ShapeError("real_to_qtensor: real width must be divisible by 4");
  }
  const std::size_t d = v.cols() / 4;
  QTensor out({v.rows(), d});
  for (int c = 0; c < 4; ++c) {
    Array& comp = out.component(c);
    for (std::size_t i = 0; i < v.rows(); ++i) {
      const double* src = v.row_ptr(i) + c * d;
      std::copy(src, src + d, comp.row_ptr(i));
    }
  }
  return out;
}

Array qtensor_to_real(const QTensor& q) {
  const std::size_t d = q.cols();
  Array out(q.rows(), 4 * d);
  for (int c = 0; c < 4; ++c) {
    const Array& comp = q.component(c);
    for (std::size_t i = 0; i < q.rows(); ++i) {
      std::copy(comp.row_ptr(i), comp.row_ptr(i) + d, out.row_ptr(i) + c * d);
    }
  }
  return out;
}

Array hamilton_matrix_form(const Quaternion& w) {
  Array m(4, 4);
  for (int oc = 0; oc < 4; ++oc) {
    for (int rc = 0; rc < 4; ++rc) {
      m.at(oc, rc) = kHamiltonSign[oc][rc] * w.comp(kHamiltonLhs[oc][rc]);
    }
  }
  return m;
}

EmbedProject EmbedProject::create(ParamStore& store, const std::string& name, std::size_t vocab,
                                  std::size_t width) {
  if (width % 4 != 0) throw ShapeError("EmbedProject: table width must be divisible by 4");
  EmbedProject e;
  e.vocab = vocab;
  e.width = width;
  e.table = store.add(name + ".table", vocab, width, ParamKind::Embedding, ParamGroup::Other);
  return e;
}

EmbedProject EmbedProject::create_projected(ParamStore& store, const std::string& name,
                                            std::size_t vocab, std::size_t table_width,
                                            std::size_t out_q, ActivationKind act) {
  EmbedProject e = create(store, name, vocab, table_width);
  e.proj = QLinear::create(store, name + ".proj", table_width / 4, out_q, false);
  e.act = act;
  return e;
}

ad::QVar EmbedProject::forward(const TapeBinding& binding, const std::vector<int>& tokens) const {
  ad::Var rows = ad::gather_rows(binding.var(table), tokens);
  ad::QVar q = ad::real_to_quaternion(rows);
  if (proj) q = proj->forward(binding, q, act);
  return q;
}

}  // namespace qnn
