#include "qnn/autodiff.hpp"

#include <cmath>

#include "doctest.h"
#include "gradcheck.hpp"
#include "qnn/error.hpp"
#include "qnn/rng.hpp"
#include "testutil.hpp"

using namespace qnn;
using namespace qnn::ad;
using namespace qnn::testutil;

namespace {

constexpr double kGradTol = 1e-5;

Var dot_with(Tape& t, Var v, const Array& weights) {
  return sum_all(mul(v, t.constant(weights)));
}

}  // namespace

TEST_CASE("record bookkeeping") {
  Tape t;
  Var c = t.constant(Array::scalar(3.0));
  CHECK(t.node(c.id).inputs.empty());

  Var a = t.input(Array::scalar(1.0));
  Var b = t.input(Array::scalar(2.0));
  Var s = add(a, b);
  CHECK(t.node(s.id).inputs.size() == 2);
  CHECK(t.value(s)[0] == 3.0);

  // a graph of k recorded ops has exactly k non-leaf nodes
  std::size_t leaves = t.size();
  Var u = add(s, c);
  Var v = mul(u, a);
  Var w = scale(v, 2.0);
  (void)w;
  CHECK(t.size() - leaves == 3);
}

TEST_CASE("recording rejects nodes from another tape") {
  Tape t1, t2;
  Var a = t1.input(Array::scalar(1.0));
  Var b = t2.input(Array::scalar(2.0));
  CHECK_THROWS_AS(add(a, b), GraphError);
  CHECK_THROWS_AS(add(Var{}, a), GraphError);
  CHECK_THROWS_AS(tanh(Var{}), GraphError);
}

TEST_CASE("backward requires a scalar loss") {
  Tape t;
  Var a = t.input(Array(2, 2, 1.0));
  CHECK_THROWS_AS(t.backward(a), ContractError);
  CHECK_THROWS_AS(t.backward(Var{}), GraphError);
}

TEST_CASE("linear and quadratic gradients") {
  Tape t;
  SplitMix64 rng(30);
  Array p = random_array(rng, 2, 3);
  Var v = t.param(p);

  SUBCASE("sum(p) has all-ones gradient") {
    t.backward(sum_all(v));
    for (double g : t.grad(v).data()) CHECK(g == 1.0);
  }
  SUBCASE("sum(p*p) has gradient 2p") {
    t.backward(sum_all(mul(v, v)));
    const Array& g = t.grad(v);
    for (std::size_t k = 0; k < p.size(); ++k) CHECK(g[k] == doctest::Approx(2.0 * p[k]));
  }
}

TEST_CASE("backward is deterministic for a fixed tape") {
  SplitMix64 rng(31);
  Array a = random_array(rng, 3, 3);
  Array b = random_array(rng, 3, 3);
  Tape t;
  Var va = t.input(a), vb = t.input(b);
  Var loss = sum_all(tanh(matmul(va, vb)));
  t.backward(loss);
  Array g1 = t.grad(va);
  t.backward(loss);
  CHECK(max_abs_diff(g1, t.grad(va)) == 0.0);
}

TEST_CASE("finite differences: elementwise and linear primitives") {
  SplitMix64 rng(32);
  Array a = random_array(rng, 3, 4);
  Array b = random_array(rng, 3, 4);
  Array m = random_array(rng, 4, 2);
  Array w = random_array(rng, 3, 4);  // loss weights

  auto check = [&](const char* name, const LossFn& f, std::vector<Array> leaves) {
    auto r = finite_diff_check(f, std::move(leaves));
    INFO(name << " worst at " << r.worst);
    CHECK(r.max_rel_err <= kGradTol);
  };

  check("add", [&](Tape& t, const std::vector<Var>& v) {
    return dot_with(t, add(v[0], v[1]), w);
  }, {a, b});
  check("sub", [&](Tape& t, const std::vector<Var>& v) {
    return dot_with(t, sub(v[0], v[1]), w);
  }, {a, b});
  check("mul", [&](Tape& t, const std::vector<Var>& v) {
    return dot_with(t, mul(v[0], v[1]), w);
  }, {a, b});
  check("scale", [&](Tape& t, const std::vector<Var>& v) {
    return dot_with(t, scale(v[0], -1.7), w);
  }, {a});
  check("matmul", [&](Tape& t, const std::vector<Var>& v) {
    return sum_all(matmul(v[0], v[1]));
  }, {a, m});
  check("matmul_nt", [&](Tape& t, const std::vector<Var>& v) {
    return sum_all(tanh(matmul_nt(v[0], v[1])));
  }, {a, b});
  check("transpose", [&](Tape& t, const std::vector<Var>& v) {
    return sum_all(mul(transpose(v[0]), transpose(v[0])));
  }, {a});
  check("sum_rows", [&](Tape& t, const std::vector<Var>& v) {
    return dot_with(t, sum_rows(v[0]), Array(1, 4, 0.5));
  }, {a});
  check("tanh", [&](Tape& t, const std::vector<Var>& v) {
    return dot_with(t, tanh(v[0]), w);
  }, {a});
  check("relu", [&](Tape& t, const std::vector<Var>& v) {
    return dot_with(t, relu(v[0]), w);
  }, {a});
  check("add_bias", [&](Tape& t, const std::vector<Var>& v) {
    return dot_with(t, add_bias(v[0], v[1]), w);
  }, {a, random_array(rng, 1, 4)});
  check("row_softmax", [&](Tape& t, const std::vector<Var>& v) {
    return dot_with(t, row_softmax(v[0]), w);
  }, {scale(a, 3.0) /* spread logits */});
  check("layer_norm", [&](Tape& t, const std::vector<Var>& v) {
    return dot_with(t, layer_norm(v[0], v[1], v[2]), w);
  }, {a, random_array(rng, 1, 4), random_array(rng, 1, 4)});
}

TEST_CASE("finite differences: concat, split, gather, cross-entropy") {
  SplitMix64 rng(33);
  Array a = random_array(rng, 2, 3);
  Array b = random_array(rng, 2, 2);

  auto r1 = finite_diff_check(
      [&](Tape& t, const std::vector<Var>& v) {
        const Var parts[] = {v[0], v[1]};
        Var c = concat_cols(parts);
        return sum_all(mul(c, c));
      },
      {a, b});
  CHECK(r1.max_rel_err <= kGradTol);

  auto r2 = finite_diff_check(
      [&](Tape& t, const std::vector<Var>& v) {
        const std::size_t widths[] = {1, 2};
        auto parts = split_cols(v[0], widths);
        // second split piece unused on purpose: its gradient is zero
        return sum_all(mul(parts[0], parts[0]));
      },
      {a});
  CHECK(r2.max_rel_err <= kGradTol);

  auto r3 = finite_diff_check(
      [&](Tape& t, const std::vector<Var>& v) {
        Var rows = gather_rows(v[0], {1, 0, 1});
        return sum_all(tanh(rows));
      },
      {a});
  CHECK(r3.max_rel_err <= kGradTol);

  auto r4 = finite_diff_check(
      [&](Tape& t, const std::vector<Var>& v) {
        return cross_entropy_logits(v[0], {2, 0});
      },
      {random_array(rng, 2, 4)});
  CHECK(r4.max_rel_err <= kGradTol);
}

TEST_CASE("row softmax stays normalized at extreme magnitudes") {
  SplitMix64 rng(55);
  for (double scale_factor : {1.0, 1e2, 1e6, 1e300}) {
    Array logits = random_array(rng, 4, 5);
    for (double& v : logits.data()) v *= scale_factor;
    Array sm = row_softmax(logits);
    for (std::size_t i = 0; i < sm.rows(); ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < sm.cols(); ++j) {
        CHECK(std::isfinite(sm.at(i, j)));
        s += sm.at(i, j);
      }
      CHECK(std::abs(s - 1.0) <= 1e-12);
    }
  }
}

TEST_CASE("cross entropy on uniform logits is ln(classes)") {
  Tape t;
  Var logits = t.input(Array(3, 5, 0.0));
  Var loss = cross_entropy_logits(logits, {0, 3, 4});
  CHECK(t.value(loss)[0] == doctest::Approx(std::log(5.0)).epsilon(1e-12));
}

TEST_CASE("cross entropy input validation") {
  Tape t;
  Var logits = t.input(Array(2, 3, 0.0));
  CHECK_THROWS_AS(cross_entropy_logits(logits, {0}), ShapeError);
  CHECK_THROWS_AS(cross_entropy_logits(logits, {0, 3}), ContractError);
}

TEST_CASE("gather_rows rejects out-of-range ids") {
  Tape t;
  Var table = t.input(Array(4, 2, 0.0));
  CHECK_THROWS_AS(gather_rows(table, {4}), LookupError);
  CHECK_THROWS_AS(gather_rows(table, {-1}), LookupError);
}

TEST_CASE("hamilton_linear with identity weights is a pass-through") {
  SplitMix64 rng(34);
  QTensor x = random_qtensor(rng, 3, 2);
  QTensor w({2, 2});
  for (std::size_t i = 0; i < 2; ++i) w.set(i, i, Quaternion::identity());

  Tape t;
  QVar xv = qtensor_input(t, x);
  QVar wv = qtensor_constant(t, w);
  QVar out = hamilton_linear(xv, wv);
  for (int c = 0; c < 4; ++c) {
    CHECK(max_abs_diff(t.value(out.comp(c)), x.component(c)) == 0.0);
  }

  // gradient wrt input equals the gradient of a pass-through
  Array lw = random_array(rng, 3, 2);
  Var loss;
  for (int c = 0; c < 4; ++c) {
    Var term = dot_with(t, out.comp(c), lw);
    loss = loss.valid() ? add(loss, term) : term;
  }
  t.backward(loss);
  for (int c = 0; c < 4; ++c) {
    CHECK(max_abs_diff(t.grad(xv.comp(c)), lw) == 0.0);
  }
}

TEST_CASE("hamilton_linear forward matches the scalar-loop reference") {
  SplitMix64 rng(35);
  QTensor x = random_qtensor(rng, 2, 3);
  QTensor w = random_qtensor(rng, 4, 3);  // out_q=4, in_q=3

  Tape t;
  QVar out = hamilton_linear(qtensor_input(t, x), qtensor_input(t, w));

  // out[i,o] = sum_t w[o,t] (x) x[i,t]
  for (std::size_t i = 0; i < 2; ++i) {
    for (std::size_t o = 0; o < 4; ++o) {
      Quaternion acc;
      for (std::size_t tt = 0; tt < 3; ++tt) {
        acc = q_add(acc, q_hamilton(w.at(o, tt), x.at(i, tt)));
      }
      Quaternion got(t.value(out.r).at(i, o), t.value(out.x).at(i, o), t.value(out.y).at(i, o),
                     t.value(out.z).at(i, o));
      CHECK(q_norm(q_sub(got, acc)) <= 1e-12);
    }
  }
}

TEST_CASE("finite differences: hamilton group ops") {
  SplitMix64 rng(36);
  QTensor x = random_qtensor(rng, 2, 3);
  QTensor w = random_qtensor(rng, 2, 3);
  Array lw = random_array(rng, 2, 2);

  auto qvar_from = [](Tape& t, const std::vector<Var>& v, std::size_t base) {
    return QVar{v[base], v[base + 1], v[base + 2], v[base + 3]};
  };
  auto qloss = [&](Tape& t, QVar q) {
    Var loss;
    for (int c = 0; c < 4; ++c) {
      Var term = dot_with(t, q.comp(c), lw);
      loss = loss.valid() ? add(loss, term) : term;
    }
    return loss;
  };
  std::vector<Array> leaves = {x.r(), x.x(), x.y(), x.z(), w.r(), w.x(), w.y(), w.z()};

  auto r1 = finite_diff_check(
      [&](Tape& t, const std::vector<Var>& v) {
        return qloss(t, hamilton_linear(qvar_from(t, v, 0), qvar_from(t, v, 4)));
      },
      leaves);
  INFO("hamilton_linear worst at " << r1.worst);
  CHECK(r1.max_rel_err <= kGradTol);

  auto r2 = finite_diff_check(
      [&](Tape& t, const std::vector<Var>& v) {
        return qloss(t, hamilton_scores(qvar_from(t, v, 0), qvar_from(t, v, 4)));
      },
      leaves);
  INFO("hamilton_scores worst at " << r2.worst);
  CHECK(r2.max_rel_err <= kGradTol);

  Array lw_wide = random_array(rng, 2, 3);
  auto qloss_wide = [&](Tape& t, QVar q) {
    Var loss;
    for (int c = 0; c < 4; ++c) {
      Var term = dot_with(t, q.comp(c), lw_wide);
      loss = loss.valid() ? add(loss, term) : term;
    }
    return loss;
  };

  auto r3 = finite_diff_check(
      [&](Tape& t, const std::vector<Var>& v) {
        return qloss_wide(t, hamilton_elementwise(qvar_from(t, v, 0), qvar_from(t, v, 4)));
      },
      {x.r(), x.x(), x.y(), x.z(), w.r(), w.x(), w.y(), w.z()});
  CHECK(r3.max_rel_err <= kGradTol);

  auto r4 = finite_diff_check(
      [&](Tape& t, const std::vector<Var>& v) {
        QVar sm = component_softmax(qv_scale(qvar_from(t, v, 0), 2.0));
        return qloss_wide(t, sm);
      },
      {x.r(), x.x(), x.y(), x.z()});
  CHECK(r4.max_rel_err <= kGradTol);
}

TEST_CASE("component softmax backward equals per-component softmax rule") {
  SplitMix64 rng(37);
  QTensor e = random_qtensor(rng, 2, 3, -2.0, 2.0);
  Array lw = random_array(rng, 2, 3);

  Tape t;
  QVar ev = qtensor_input(t, e);
  QVar sm = component_softmax(ev);
  Var loss;
  for (int c = 0; c < 4; ++c) {
    Var term = dot_with(t, sm.comp(c), lw);
    loss = loss.valid() ? add(loss, term) : term;
  }
  t.backward(loss);

  // hand-rolled softmax Jacobian-vector product per component
  for (int c = 0; c < 4; ++c) {
    Array y = row_softmax(e.component(c));
    Array want(2, 3);
    for (std::size_t i = 0; i < 2; ++i) {
      double dot = 0.0;
      for (std::size_t j = 0; j < 3; ++j) dot += y.at(i, j) * lw.at(i, j);
      for (std::size_t j = 0; j < 3; ++j) {
        want.at(i, j) = y.at(i, j) * (lw.at(i, j) - dot);
      }
    }
    CHECK(max_abs_diff(t.grad(ev.comp(c)), want) <= 1e-14);
  }
}

TEST_CASE("hamilton_linear weight gradient follows the structured pattern") {
  // 1x1 layer: out = w (x) q, loss = <g, out>. The gradient of each free
  // weight block accumulates its four structured occurrences.
  SplitMix64 rng(38);
  Quaternion q = random_quaternion(rng);
  Quaternion wq = random_quaternion(rng);
  Quaternion g = random_quaternion(rng);

  QTensor x({1, 1}), w({1, 1});
  x.set(0, 0, q);
  w.set(0, 0, wq);

  Tape t;
  QVar xv = qtensor_constant(t, x);
  QVar wv = qtensor_input(t, w);
  QVar out = hamilton_linear(xv, wv);
  Var loss;
  for (int c = 0; c < 4; ++c) {
    Var term = scale(out.comp(c), g.comp(c));
    loss = loss.valid() ? add(loss, term) : term;
  }
  t.backward(loss);

  // expected: dW_c = sum over structured positions sign * g_oc * q_rc
  for (int wc = 0; wc < 4; ++wc) {
    double want = 0.0;
    for (int oc = 0; oc < 4; ++oc) {
      for (int rc = 0; rc < 4; ++rc) {
        if (kHamiltonLhs[oc][rc] == wc) want += kHamiltonSign[oc][rc] * g.comp(oc) * q.comp(rc);
      }
    }
    CHECK(t.grad(wv.comp(wc))[0] == doctest::Approx(want).epsilon(1e-12));
  }

  // shared-weight gradient equals the sum of positional finite differences
  // through the explicit 4x4 structured matrix
  auto loss_of_matrix = [&](const double m[4][4]) {
    double out[4];
    const double v[4] = {q.r, q.x, q.y, q.z};
    double l = 0.0;
    for (int i = 0; i < 4; ++i) {
      out[i] = m[i][0] * v[0] + m[i][1] * v[1] + m[i][2] * v[2] + m[i][3] * v[3];
      l += g.comp(i) * out[i];
    }
    return l;
  };
  double base[4][4];
  for (int oc = 0; oc < 4; ++oc) {
    for (int rc = 0; rc < 4; ++rc) {
      base[oc][rc] = kHamiltonSign[oc][rc] * wq.comp(kHamiltonLhs[oc][rc]);
    }
  }
  const double h = 1e-6;
  for (int wc = 0; wc < 4; ++wc) {
    double sum_positional = 0.0;
    for (int oc = 0; oc < 4; ++oc) {
      for (int rc = 0; rc < 4; ++rc) {
        if (kHamiltonLhs[oc][rc] != wc) continue;
        double m[4][4];
        std::copy(&base[0][0], &base[0][0] + 16, &m[0][0]);
        m[oc][rc] = base[oc][rc] + kHamiltonSign[oc][rc] * h;
        double lp = loss_of_matrix(m);
        m[oc][rc] = base[oc][rc] - kHamiltonSign[oc][rc] * h;
        double lm = loss_of_matrix(m);
        sum_positional += (lp - lm) / (2.0 * h);
      }
    }
    CHECK(fd_rel_err(t.grad(wv.comp(wc))[0], sum_positional) <= kGradTol);
  }
}

TEST_CASE("real/quaternion bridges invert each other") {
  SplitMix64 rng(39);
  QTensor q = random_qtensor(rng, 3, 2);
  Tape t;
  QVar qv = qtensor_input(t, q);
  Var real = quaternion_to_real(qv);
  CHECK(t.value(real).cols() == 8);
  QVar back = real_to_quaternion(real);
  for (int c = 0; c < 4; ++c) {
    CHECK(max_abs_diff(t.value(back.comp(c)), q.component(c)) == 0.0);
  }

  Var bad = t.input(Array(2, 5, 0.0));
  CHECK_THROWS_AS(real_to_quaternion(bad), ShapeError);
}
