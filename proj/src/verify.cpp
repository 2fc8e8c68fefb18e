#include "qnn/verify.hpp"

#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>

#include "qnn/qattention.hpp"
#include "qnn/qlayers.hpp"
#include "qnn/qtransformer.hpp"
#include "qnn/rng.hpp"

namespace qnn::verify {

namespace {

constexpr double kAlgebraTol = 1e-10;
constexpr double kGradTol = 1e-5;
constexpr double kFdStep = 1e-6;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3g", v);
  return buf;
}

Quaternion random_quaternion(SplitMix64& rng) {
  return Quaternion(rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2),
                    rng.uniform(-2, 2));
}

double rel_err(double got, double want) {
  double denom = std::max(std::abs(got), std::abs(want));
  return denom == 0.0 ? 0.0 : std::abs(got - want) / denom;
}

double guarded_rel_err(double analytic, double fd) {
  return std::abs(analytic - fd) / std::max({std::abs(analytic), std::abs(fd), 1e-3});
}

// Central finite differences over every parameter of a store.
double max_grad_err(ParamStore& store,
                    const std::function<ad::Var(const TapeBinding&)>& build) {
  auto eval = [&]() {
    ad::Tape tape;
    TapeBinding binding = bind_params(tape, store);
    return tape.value(build(binding))[0];
  };
  ad::Tape tape;
  TapeBinding binding = bind_params(tape, store);
  ad::Var loss = build(binding);
  tape.backward(loss);

  double worst = 0.0;
  for (std::size_t k = 0; k < store.size(); ++k) {
    const Array analytic = tape.grad(binding.var(static_cast<int>(k)));
    Array& value = store.value(static_cast<int>(k));
    for (std::size_t e = 0; e < value.size(); ++e) {
      const double orig = value[e];
      value[e] = orig + kFdStep;
      const double lp = eval();
      value[e] = orig - kFdStep;
      const double lm = eval();
      value[e] = orig;
      worst = std::max(worst, guarded_rel_err(analytic[e], (lp - lm) / (2.0 * kFdStep)));
    }
  }
  return worst;
}

}  // namespace

bool Suite::all_pass() const {
  for (const auto& r : results) {
    if (!r.pass) return false;
  }
  return true;
}

std::string Suite::render() const {
  std::ostringstream out;
  for (const auto& r : results) {
    out << (r.pass ? "[pass] " : "[FAIL] ") << r.name;
    if (!r.detail.empty()) out << ": " << r.detail;
    out << "\n";
  }
  return out.str();
}

CheckResult check_multiplication_rules() {
  const Quaternion one(1, 0, 0, 0), i(0, 1, 0, 0), j(0, 0, 1, 0), k(0, 0, 0, 1);
  const Quaternion neg = q_scale(-1, one);
  bool ok = q_hamilton(i, j) == k && q_hamilton(j, k) == i && q_hamilton(k, i) == j &&
            q_hamilton(j, i) == q_scale(-1, k) && q_hamilton(k, j) == q_scale(-1, i) &&
            q_hamilton(i, k) == q_scale(-1, j) && q_hamilton(i, i) == neg &&
            q_hamilton(j, j) == neg && q_hamilton(k, k) == neg;
  return {"algebra.multiplication_rules", ok, ok ? "ij=k jk=i ki=j and negatives, exact" : ""};
}

CheckResult check_algebra_properties(std::size_t samples) {
  SplitMix64 rng(101);
  double worst = 0.0;
  for (std::size_t n = 0; n < samples; ++n) {
    const Quaternion a = random_quaternion(rng);
    const Quaternion b = random_quaternion(rng);
    const Quaternion c = random_quaternion(rng);
    worst = std::max(worst, rel_err(q_norm(q_hamilton(a, b)), q_norm(a) * q_norm(b)));
    {
      const Quaternion lhs = q_hamilton(q_hamilton(a, b), c);
      const Quaternion rhs = q_hamilton(a, q_hamilton(b, c));
      const double denom = std::max(q_norm(lhs), q_norm(rhs));
      if (denom > 0) worst = std::max(worst, q_norm(q_sub(lhs, rhs)) / denom);
    }
    {
      const Quaternion lhs = q_hamilton(a, q_add(b, c));
      const Quaternion rhs = q_add(q_hamilton(a, b), q_hamilton(a, c));
      const double denom = std::max(q_norm(lhs), q_norm(rhs));
      if (denom > 0) worst = std::max(worst, q_norm(q_sub(lhs, rhs)) / denom);
    }
  }
  const bool ok = worst <= kAlgebraTol;
  return {"algebra.properties", ok,
          "norm/assoc/distrib worst rel err " + fmt(worst) + " over " +
              std::to_string(samples) + " samples"};
}

CheckResult check_matrix_form_oracle(std::size_t samples, HamiltonFn fn) {
  if (fn == nullptr) fn = &q_hamilton;
  SplitMix64 rng(102);
  double worst = 0.0;
  for (std::size_t n = 0; n < samples; ++n) {
    const Quaternion w = random_quaternion(rng);
    const Quaternion q = random_quaternion(rng);
    const Quaternion got = fn(w, q);
    Array v(4, 1);
    v[0] = q.r;
    v[1] = q.x;
    v[2] = q.y;
    v[3] = q.z;
    const Array want = matmul(hamilton_matrix_form(w), v);
    worst = std::max({worst, std::abs(got.r - want[0]), std::abs(got.x - want[1]),
                      std::abs(got.y - want[2]), std::abs(got.z - want[3])});
  }
  const bool ok = worst == 0.0;
  return {"hamilton.matrix_form_oracle", ok,
          "max abs diff " + fmt(worst) + " over " + std::to_string(samples) + " pairs"};
}

CheckResult check_bridge_roundtrip() {
  SplitMix64 rng(103);
  Array v(3, 8);
  for (double& e : v.data()) e = rng.uniform(-1, 1);
  const double diff = max_abs_diff(qtensor_to_real(real_to_qtensor(v)), v);
  return {"bridges.roundtrip", diff == 0.0, "max abs diff " + fmt(diff)};
}

CheckResult check_softmax_normalization() {
  double worst_sum_err = 0.0;
  double worst_masked = 0.0;

  {
    QAttConfig cfg;
    cfg.d = 3;
    cfg.hidden_q = 3;
    cfg.vocab = 12;
    cfg.seed = 104;
    QAttModel model(cfg);
    ad::Tape tape;
    TapeBinding b = bind_params(tape, model.params());
    AlignmentState trace;
    (void)model.forward(b, {1, 4, 7}, {2, 5, 8, 11}, &trace);
    for (const QTensor* w : {&trace.G, &trace.F}) {
      for (int c = 0; c < 4; ++c) {
        for (std::size_t i = 0; i < w->rows(); ++i) {
          double s = 0.0;
          for (std::size_t j = 0; j < w->cols(); ++j) s += w->component(c).at(i, j);
          worst_sum_err = std::max(worst_sum_err, std::abs(s - 1.0));
        }
      }
    }
  }

  {
    QTransformerConfig cfg;
    cfg.variant = TransformerVariant::QFull;
    cfg.layers = 1;
    cfg.d_q = 4;
    cfg.heads = 2;
    cfg.ffn_hidden = 32;
    cfg.vocab = 10;
    cfg.seed = 105;
    QTransformer model(cfg);
    ad::Tape tape;
    TapeBinding b = bind_params(tape, model.params());
    AttentionTrace trace;
    (void)model.seq2seq_logits(b, {1, 2, 3}, {0, 4, 5, 6}, &trace);
    for (const auto& e : trace.entries) {
      for (int c = 0; c < 4; ++c) {
        for (std::size_t i = 0; i < e.weights.rows(); ++i) {
          double s = 0.0;
          for (std::size_t j = 0; j < e.weights.cols(); ++j) {
            const double w = e.weights.component(c).at(i, j);
            if (e.causal && j > i) worst_masked = std::max(worst_masked, std::abs(w));
            s += w;
          }
          worst_sum_err = std::max(worst_sum_err, std::abs(s - 1.0));
        }
      }
    }
  }

  const bool ok = worst_sum_err <= 1e-6 && worst_masked == 0.0;
  return {"softmax.normalization", ok,
          "worst row-sum err " + fmt(worst_sum_err) + ", worst masked weight " +
              fmt(worst_masked)};
}

CheckResult check_gradients_qffn() {
  ParamStore store;
  QLinear layer = QLinear::create(store, "l", 3, 2, true);
  SplitMix64 rng(106);
  init_qlinear(store, layer, InitSpec::Scheme::GlorotPerComponent, rng);
  QTensor x({2, 3});
  for (int c = 0; c < 4; ++c) {
    for (double& v : x.component(c).data()) v = rng.uniform(-1, 1);
  }
  const double worst = max_grad_err(store, [&](const TapeBinding& b) {
    ad::QVar out = layer.forward(b, ad::qtensor_constant(*b.tape, x), ActivationKind::Tanh);
    ad::Var flat = ad::quaternion_to_real(out);
    return ad::sum_all(ad::mul(flat, flat));
  });
  return {"grad.qffn", worst <= kGradTol, "max rel err " + fmt(worst)};
}

CheckResult check_gradients_component_softmax() {
  ParamStore store;
  const int p = store.add("logits", 2, 3, ParamKind::WeightMatrix, ParamGroup::Other);
  SplitMix64 rng(107);
  for (double& v : store.value(p).data()) v = rng.uniform(-2, 2);
  const double worst = max_grad_err(store, [&](const TapeBinding& b) {
    // treat the same leaf as all four components to exercise each path
    ad::QVar q{b.var(p), b.var(p), b.var(p), b.var(p)};
    ad::QVar sm = ad::component_softmax(q);
    ad::Var flat = ad::quaternion_to_real(sm);
    return ad::sum_all(ad::mul(flat, flat));
  });
  return {"grad.component_softmax", worst <= kGradTol, "max rel err " + fmt(worst)};
}

CheckResult check_gradients_qatt() {
  QAttConfig cfg;
  cfg.d = 2;
  cfg.hidden_q = 2;
  cfg.num_classes = 2;
  cfg.vocab = 6;
  cfg.act = ActivationKind::Tanh;
  cfg.seed = 108;
  QAttModel model(cfg);
  const double worst = max_grad_err(model.params(), [&](const TapeBinding& b) {
    ad::Var logits = model.forward(b, {0, 2, 4}, {1, 3, 5});
    return ad::cross_entropy_logits(logits, {1});
  });
  return {"grad.qatt_end_to_end", worst <= kGradTol, "max rel err " + fmt(worst)};
}

CheckResult check_gradients_qtransformer() {
  QTransformerConfig cfg;
  cfg.variant = TransformerVariant::QFull;
  cfg.layers = 1;
  cfg.d_q = 2;
  cfg.heads = 1;
  cfg.ffn_hidden = 8;
  cfg.vocab = 6;
  cfg.max_len = 8;
  cfg.seed = 109;
  QTransformer model(cfg);
  const double worst = max_grad_err(model.params(), [&](const TapeBinding& b) {
    ad::Var logits = model.seq2seq_logits(b, {1, 2, 3}, {0, 4});
    return ad::cross_entropy_logits(logits, {4, 2});
  });
  return {"grad.qtransformer_block", worst <= kGradTol, "max rel err " + fmt(worst)};
}

CheckResult check_param_ratios() {
  bool ok = true;
  std::ostringstream detail;

  ParamStore s;
  QLinear l = QLinear::create(s, "l", 64, 64, false);
  ok = ok && 4 * l.weight_count() == 256 * 256;

  QTransformerConfig cfg;
  cfg.layers = 2;
  cfg.d_q = 4;
  cfg.heads = 2;
  cfg.ffn_hidden = 32;
  cfg.vocab = 10;
  cfg.variant = TransformerVariant::QFull;
  QTransformer full(cfg);
  cfg.variant = TransformerVariant::QPartial;
  QTransformer partial(cfg);
  cfg.variant = TransformerVariant::RealBaseline;
  QTransformer real(cfg);
  const std::size_t cf = transform_weight_count(full.params());
  const std::size_t cp = transform_weight_count(partial.params());
  const std::size_t cr = transform_weight_count(real.params());
  ok = ok && 4 * cf == cr && cf < cp && cp < cr;
  detail << "qlinear 4x exact; transformer full/partial/real = " << cf << "/" << cp << "/" << cr;
  return {"params.quarter_ratio", ok, detail.str()};
}

CheckResult check_degenerate_scores() {
  SplitMix64 rng(110);
  const std::size_t l = 3, d = 2;
  const double dk = 4.0 * d;
  QTensor q({l, d}), k({l, d});
  for (double& v : q.component(0).data()) v = rng.uniform(-1, 1);
  for (double& v : k.component(0).data()) v = rng.uniform(-1, 1);

  ad::Tape tape;
  ad::QVar scores = ad::qv_scale(
      ad::hamilton_scores(ad::qtensor_input(tape, q), ad::qtensor_input(tape, k)),
      1.0 / std::sqrt(dk));
  const Array want = scale(matmul_nt(q.component(0), k.component(0)), 1.0 / std::sqrt(dk));
  double worst = max_abs_diff(tape.value(scores.r), want);
  for (int c = 1; c < 4; ++c) {
    for (double v : tape.value(scores.comp(c)).data()) worst = std::max(worst, std::abs(v));
  }
  return {"attention.degenerate_real_consistency", worst <= 1e-10,
          "max abs diff " + fmt(worst)};
}

Suite run_all() {
  Suite suite;
  suite.results.push_back(check_multiplication_rules());
  suite.results.push_back(check_algebra_properties());
  suite.results.push_back(check_matrix_form_oracle());
  suite.results.push_back(check_bridge_roundtrip());
  suite.results.push_back(check_softmax_normalization());
  suite.results.push_back(check_gradients_qffn());
  suite.results.push_back(check_gradients_component_softmax());
  suite.results.push_back(check_gradients_qatt());
  suite.results.push_back(check_gradients_qtransformer());
  suite.results.push_back(check_param_ratios());
  suite.results.push_back(check_degenerate_scores());
  return suite;
}

}  // namespace qnn::verify
