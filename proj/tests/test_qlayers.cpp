#include "qnn/qlayers.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>

#include "doctest.h"
#include "gradcheck.hpp"
#include "qnn/checkpoint.hpp"
#include "qnn/error.hpp"
#include "testutil.hpp"

using namespace qnn;
using namespace qnn::testutil;

namespace {

// Builds the 4*out x 4*in real dense matrix whose blocks follow the
// structured form, block (c_out, c_in) entry (o, t) being
// hamilton_matrix_form(W[o,t])[c_out][c_in].
Array block_real_matrix(const QTensor& w) {
  const std::size_t out_q = w.rows(), in_q = w.cols();
  Array m(4 * out_q, 4 * in_q);
  for (std::size_t o = 0; o < out_q; ++o) {
    for (std::size_t t = 0; t < in_q; ++t) {
      Array blk = hamilton_matrix_form(w.at(o, t));
      for (int co = 0; co < 4; ++co) {
        for (int ci = 0; ci < 4; ++ci) {
          m.at(co * out_q + o, ci * in_q + t) = blk.at(co, ci);
        }
      }
    }
  }
  return m;
}

void set_qparam(ParamStore& store, const QParam& p, const QTensor& t) {
  for (int c = 0; c < 4; ++c) store.value(p.comp(c)) = t.component(c);
}

}  // namespace

TEST_CASE("hamilton_matrix_form basics") {
  Array eye = hamilton_matrix_form(Quaternion::identity());
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) CHECK(eye.at(i, j) == (i == j ? 1.0 : 0.0));
  }

  // ij = k through the matrix: W=(0,1,0,0) applied to (0,0,1,0)
  Array mi = hamilton_matrix_form({0, 1, 0, 0});
  Array v(4, 1);
  v[2] = 1.0;
  Array out = matmul(mi, v);
  CHECK(out[0] == 0.0);
  CHECK(out[1] == 0.0);
  CHECK(out[2] == 0.0);
  CHECK(out[3] == 1.0);
}

TEST_CASE("matrix form matches q_hamilton on seeded pairs") {
  SplitMix64 rng(40);
  for (int k = 0; k < 200; ++k) {
    Quaternion w = random_quaternion(rng);
    Quaternion q = random_quaternion(rng);
    Array v(4, 1);
    v[0] = q.r;
    v[1] = q.x;
    v[2] = q.y;
    v[3] = q.z;
    Array got = matmul(hamilton_matrix_form(w), v);
    Quaternion want = q_hamilton(w, q);
    CHECK(got[0] == want.r);
    CHECK(got[1] == want.x);
    CHECK(got[2] == want.y);
    CHECK(got[3] == want.z);
  }
}

TEST_CASE("qffn forward: identity weights pass input through") {
  ParamStore store;
  QLinear l = QLinear::create(store, "l", 3, 3, false);
  QTensor w({3, 3});
  for (std::size_t i = 0; i < 3; ++i) w.set(i, i, Quaternion::identity());
  set_qparam(store, l.W, w);

  SplitMix64 rng(41);
  QTensor x = random_qtensor(rng, 2, 3);
  ad::Tape tape;
  TapeBinding b = bind_params(tape, store);
  ad::QVar out = l.forward(b, ad::qtensor_input(tape, x));
  for (int c = 0; c < 4; ++c) {
    CHECK(max_abs_diff(tape.value(out.comp(c)), x.component(c)) == 0.0);
  }
}

TEST_CASE("qffn forward rejects width mismatch") {
  ParamStore store;
  QLinear l = QLinear::create(store, "l", 3, 2, false);
  SplitMix64 rng(41);
  ad::Tape tape;
  TapeBinding b = bind_params(tape, store);
  CHECK_THROWS_AS(l.forward(b, ad::qtensor_input(tape, random_qtensor(rng, 2, 4))), ShapeError);
}

TEST_CASE("qffn forward: zero input with relu stays zero") {
  ParamStore store;
  QLinear l = QLinear::create(store, "l", 2, 3, true);
  SplitMix64 rng(42);
  init_qlinear(store, l, InitSpec::Scheme::GlorotPerComponent, rng);

  ad::Tape tape;
  TapeBinding b = bind_params(tape, store);
  ad::QVar out = l.forward(b, ad::qtensor_input(tape, QTensor({2, 2})), ActivationKind::Relu);
  // bias is zero-initialized, so relu(w (x) 0 + 0) == 0
  for (int c = 0; c < 4; ++c) {
    CHECK(sum_all(tape.value(out.comp(c))) == 0.0);
  }
}

TEST_CASE("qffn forward matches the scalar-loop reference") {
  ParamStore store;
  QLinear l = QLinear::create(store, "l", 3, 2, true);
  SplitMix64 rng(43);
  QTensor w = random_qtensor(rng, 2, 3);
  QTensor bias = random_qtensor(rng, 1, 2);
  set_qparam(store, l.W, w);
  set_qparam(store, l.bias, bias);
  QTensor x = random_qtensor(rng, 2, 3);

  ad::Tape tape;
  TapeBinding b = bind_params(tape, store);
  ad::QVar out = l.forward(b, ad::qtensor_input(tape, x), ActivationKind::Tanh);

  for (std::size_t i = 0; i < 2; ++i) {
    for (std::size_t o = 0; o < 2; ++o) {
      Quaternion acc = bias.at(0, o);
      for (std::size_t t = 0; t < 3; ++t) acc = q_add(acc, q_hamilton(w.at(o, t), x.at(i, t)));
      Quaternion want(std::tanh(acc.r), std::tanh(acc.x), std::tanh(acc.y), std::tanh(acc.z));
      Quaternion got(tape.value(out.r).at(i, o), tape.value(out.x).at(i, o),
                     tape.value(out.y).at(i, o), tape.value(out.z).at(i, o));
      CHECK(q_norm(q_sub(got, want)) <= 1e-12);
    }
  }
}

TEST_CASE("weight sharing: qffn equals the block real dense map") {
  SplitMix64 rng(44);
  QTensor w = random_qtensor(rng, 3, 2);  // out_q=3, in_q=2
  QTensor x = random_qtensor(rng, 4, 2);

  ParamStore store;
  QLinear l = QLinear::create(store, "l", 2, 3, false);
  set_qparam(store, l.W, w);

  ad::Tape tape;
  TapeBinding b = bind_params(tape, store);
  ad::QVar out = l.forward(b, ad::qtensor_input(tape, x));
  Array got_real(4, 12);
  {
    QTensor got({4, 3}, tape.value(out.r), tape.value(out.x), tape.value(out.y),
                tape.value(out.z));
    got_real = qtensor_to_real(got);
  }

  Array want = matmul_nt(qtensor_to_real(x), block_real_matrix(w));
  CHECK(max_abs_diff(got_real, want) <= 1e-10);
}

TEST_CASE("parameter counts and the exact quarter ratio") {
  ParamStore store;
  QLinear big = QLinear::create(store, "big", 64, 64, false);
  CHECK(big.weight_count() == 16384);
  // real dense 256 -> 256
  CHECK(4 * big.weight_count() == 256 * 256);

  QLinear tiny = QLinear::create(store, "tiny", 1, 1, false);
  CHECK(tiny.weight_count() == 4);
  CHECK(4 * tiny.weight_count() == 16);

  QLinear biased = QLinear::create(store, "biased", 3, 5, true);
  std::size_t total = 0;
  for (std::size_t k = 0; k < store.size(); ++k) {
    const ParamInfo& info = store.info(static_cast<int>(k));
    if (info.name.rfind("biased.", 0) == 0) total += info.count();
  }
  CHECK(total == 4 * 3 * 5 + 4 * 5);
}

TEST_CASE("glorot init is deterministic and within the analytic bound") {
  auto build = [](std::uint64_t seed) {
    ParamStore store;
    QLinear l = QLinear::create(store, "l", 6, 4, false);
    SplitMix64 rng(seed);
    init_qlinear(store, l, InitSpec::Scheme::GlorotPerComponent, rng);
    return store.value(l.W.r);
  };
  Array a = build(7), b = build(7), c = build(8);
  CHECK(max_abs_diff(a, b) == 0.0);
  CHECK(max_abs_diff(a, c) > 0.0);

  const double bound = glorot_bound(24, 16);
  ParamStore store;
  QLinear l = QLinear::create(store, "l", 6, 4, false);
  SplitMix64 rng(9);
  init_qlinear(store, l, InitSpec::Scheme::GlorotPerComponent, rng);
  for (int comp = 0; comp < 4; ++comp) {
    for (double v : store.value(l.W.comp(comp)).data()) {
      CHECK(std::abs(v) <= bound);
    }
  }
}

TEST_CASE("polar init: imaginary direction has unit norm") {
  ParamStore store;
  QLinear l = QLinear::create(store, "l", 5, 5, false);
  SplitMix64 rng(10);
  init_qlinear(store, l, InitSpec::Scheme::QuaternionPolar, rng);

  const Array& wr = store.value(l.W.r);
  const Array& wx = store.value(l.W.x);
  const Array& wy = store.value(l.W.y);
  const Array& wz = store.value(l.W.z);
  for (std::size_t k = 0; k < wr.size(); ++k) {
    const double mag = std::sqrt(wr[k] * wr[k] + wx[k] * wx[k] + wy[k] * wy[k] + wz[k] * wz[k]);
    if (mag < 1e-12) continue;
    // |imag| / (|w| sin theta) == 1; recover sin theta from the components
    const double imag = std::sqrt(wx[k] * wx[k] + wy[k] * wy[k] + wz[k] * wz[k]);
    const double sin_theta = imag / mag;
    if (sin_theta < 1e-9) continue;
    const double unit = imag / (mag * sin_theta);
    CHECK(unit == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(mag <= glorot_bound(20, 20) * (1 + 1e-12));
  }
}

TEST_CASE("bridges: round trip, width-4 case, width errors") {
  SplitMix64 rng(45);
  Array v = random_array(rng, 3, 8);
  QTensor q = real_to_qtensor(v);
  CHECK(q.cols() == 2);
  CHECK(max_abs_diff(qtensor_to_real(q), v) == 0.0);

  Array w4(1, 4);
  w4[0] = 1;
  w4[1] = 2;
  w4[2] = 3;
  w4[3] = 4;
  QTensor single = real_to_qtensor(w4);
  CHECK(single.at(0, 0) == Quaternion(1, 2, 3, 4));

  CHECK_THROWS_AS(real_to_qtensor(Array(1, 5)), ShapeError);
}

TEST_CASE("activation commutes with the bridges") {
  SplitMix64 rng(46);
  QTensor q = random_qtensor(rng, 2, 3);

  ad::Tape tape;
  ad::QVar qv = ad::qtensor_input(tape, q);
  ad::Var via_q = ad::quaternion_to_real(apply_activation(qv, ActivationKind::Tanh));
  ad::Var via_real = apply_activation(ad::quaternion_to_real(qv), ActivationKind::Tanh);
  CHECK(max_abs_diff(tape.value(via_q), tape.value(via_real)) == 0.0);
}

TEST_CASE("output head: zero weights give the uniform loss, one-hot selects") {
  ParamStore store;
  OutputHead head = OutputHead::create(store, "head", 8, 3);

  SplitMix64 rng(47);
  QTensor y = random_qtensor(rng, 1, 2);
  {
    ad::Tape tape;
    TapeBinding b = bind_params(tape, store);
    ad::Var logits = head.forward(b, ad::qtensor_input(tape, y));
    ad::Var loss = ad::cross_entropy_logits(logits, {1});
    CHECK(tape.value(loss)[0] == doctest::Approx(std::log(3.0)).epsilon(1e-12));
  }

  // one-hot head row reproduces a chosen component value as a logit
  store.value(head.W).at(0, 3) = 1.0;  // x-component of feature 1
  {
    ad::Tape tape;
    TapeBinding b = bind_params(tape, store);
    ad::Var logits = head.forward(b, ad::qtensor_input(tape, y));
    CHECK(tape.value(logits).at(0, 0) == y.at(0, 1).x);
  }

  // 3-class seeded case against a scalar reference
  SplitMix64 rng2(48);
  for (double& v : store.value(head.W).data()) v = rng2.uniform(-1, 1);
  for (double& v : store.value(head.bias).data()) v = rng2.uniform(-1, 1);
  {
    ad::Tape tape;
    TapeBinding b = bind_params(tape, store);
    ad::Var logits = head.forward(b, ad::qtensor_input(tape, y));
    ad::Var loss = ad::cross_entropy_logits(logits, {2});

    Array cat = qtensor_to_real(QTensor({1, 2}, y.r(), y.x(), y.y(), y.z()));
    double z[3];
    double mx = -1e300;
    for (int c = 0; c < 3; ++c) {
      z[c] = store.value(head.bias)[c];
      for (int j = 0; j < 8; ++j) z[c] += store.value(head.W).at(c, j) * cat[j];
      mx = std::max(mx, z[c]);
    }
    double denom = 0.0;
    for (double v : z) denom += std::exp(v - mx);
    double want = -(z[2] - mx - std::log(denom));
    CHECK(tape.value(loss)[0] == doctest::Approx(want).epsilon(1e-12));
  }

  CHECK_THROWS_AS([&] {
    ad::Tape tape;
    TapeBinding b = bind_params(tape, store);
    head.forward(b, ad::qtensor_input(tape, QTensor({1, 3})));
  }(), ShapeError);
}

TEST_CASE("embedding: identity projection, determinism, gradient flow") {
  ParamStore store;
  EmbedProject emb = EmbedProject::create(store, "emb", 5, 8);
  SplitMix64 rng(49);
  init_embedding(store, emb.table, rng);

  ad::Tape tape;
  TapeBinding b = bind_params(tape, store);
  ad::QVar q = emb.forward(b, {1, 3, 1});
  CHECK(tape.value(q.r).rows() == 3);
  CHECK(tape.value(q.r).cols() == 2);
  // same token id gives identical rows
  for (int c = 0; c < 4; ++c) {
    for (std::size_t j = 0; j < 2; ++j) {
      CHECK(tape.value(q.comp(c)).at(0, j) == tape.value(q.comp(c)).at(2, j));
    }
  }

  CHECK_THROWS_AS(emb.forward(b, {5}), LookupError);

  // gradient flows into the table
  auto r = finite_diff_check(
      [&](ad::Tape& t, const std::vector<ad::Var>& v) {
        ad::Var rows = ad::gather_rows(v[0], {1, 3, 1});
        ad::QVar q = ad::real_to_quaternion(rows);
        return ad::sum_all(ad::tanh(ad::quaternion_to_real(q)));
      },
      {store.value(emb.table)});
  CHECK(r.max_rel_err <= 1e-5);
}

TEST_CASE("projected embedding applies a quaternion transform") {
  ParamStore store;
  EmbedProject emb =
      EmbedProject::create_projected(store, "emb", 4, 8, 3, ActivationKind::Tanh);
  SplitMix64 rng(50);
  init_embedding(store, emb.table, rng);
  init_qlinear(store, *emb.proj, InitSpec::Scheme::GlorotPerComponent, rng);

  ad::Tape tape;
  TapeBinding b = bind_params(tape, store);
  ad::QVar q = emb.forward(b, {0, 2});
  CHECK(tape.value(q.r).rows() == 2);
  CHECK(tape.value(q.r).cols() == 3);
  for (int c = 0; c < 4; ++c) {
    for (double v : tape.value(q.comp(c)).data()) CHECK(std::abs(v) < 1.0);
  }
}

TEST_CASE("checkpoint round trip preserves manifest and values") {
  ParamStore store;
  QLinear l = QLinear::create(store, "layer", 3, 2, true);
  OutputHead head = OutputHead::create(store, "head", 8, 2);
  SplitMix64 rng(51);
  init_qlinear(store, l, InitSpec::Scheme::GlorotPerComponent, rng);
  init_output_head(store, head, rng);

  const std::string path = "/tmp/qnn_test_ckpt.qnn";
  save_checkpoint(path, store);

  auto manifest = read_manifest(path);
  CHECK(manifest.size() == store.size());
  std::size_t total = 0;
  for (const auto& e : manifest) total += e.count();
  CHECK(total == store.total_count());

  // perturb, load back, values restored
  ParamStore store2;
  QLinear l2 = QLinear::create(store2, "layer", 3, 2, true);
  OutputHead head2 = OutputHead::create(store2, "head", 8, 2);
  (void)l2;
  (void)head2;
  load_checkpoint(path, store2);
  for (std::size_t k = 0; k < store.size(); ++k) {
    CHECK(max_abs_diff(store.value(static_cast<int>(k)), store2.value(static_cast<int>(k))) ==
          0.0);
  }

  std::remove(path.c_str());
  CHECK_THROWS_AS(load_checkpoint(path, store2), IoError);
}

TEST_CASE("checkpoint load rejects a mismatched model") {
  ParamStore a;
  QLinear la = QLinear::create(a, "layer", 2, 2, false);
  (void)la;
  const std::string path = "/tmp/qnn_test_mismatch.qnn";
  save_checkpoint(path, a);

  // same tensor count, different names
  ParamStore b;
  QLinear lb = QLinear::create(b, "other", 2, 2, false);
  (void)lb;
  CHECK_THROWS_AS(load_checkpoint(path, b), IoError);

  // different tensor count
  ParamStore c;
  CHECK_THROWS_AS(load_checkpoint(path, c), IoError);
  std::remove(path.c_str());
}
