#include "qnn/qtransformer.hpp"

#include <cmath>

#include "doctest.h"
#include "gradcheck.hpp"
#include "qnn/error.hpp"
#include "testutil.hpp"

using namespace qnn;
using namespace qnn::testutil;

namespace {

QTransformerConfig tiny_config(TransformerVariant v, std::uint64_t seed = 3) {
  QTransformerConfig cfg;
  cfg.variant = v;
  cfg.layers = 1;
  cfg.d_q = 2;
  cfg.heads = 1;
  cfg.ffn_hidden = 8;
  cfg.vocab = 6;
  cfg.max_len = 8;
  cfg.seed = seed;
  return cfg;
}

Array layer_norm_ref(const Array& x) {
  Array out(x.rows(), x.cols());
  const double n = static_cast<double>(x.cols());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    double mu = 0.0;
    for (std::size_t j = 0; j < x.cols(); ++j) mu += x.at(i, j);
    mu /= n;
    double var = 0.0;
    for (std::size_t j = 0; j < x.cols(); ++j) var += (x.at(i, j) - mu) * (x.at(i, j) - mu);
    var /= n;
    const double is = 1.0 / std::sqrt(var + 1e-5);
    for (std::size_t j = 0; j < x.cols(); ++j) out.at(i, j) = (x.at(i, j) - mu) * is;
  }
  return out;
}

}  // namespace

TEST_CASE("q_self_attention: single position returns the value row") {
  SplitMix64 rng(70);
  QTensor q = random_qtensor(rng, 1, 2), k = random_qtensor(rng, 1, 2),
          v = random_qtensor(rng, 1, 2);
  ad::Tape tape;
  QTensor weights;
  ad::QVar out = q_self_attention(ad::qtensor_input(tape, q), ad::qtensor_input(tape, k),
                                  ad::qtensor_input(tape, v), 8.0, nullptr, &weights);
  for (int c = 0; c < 4; ++c) {
    CHECK(max_abs_diff(tape.value(out.comp(c)), v.component(c)) == 0.0);
    CHECK(weights.component(c)[0] == 1.0);
  }
}

TEST_CASE("q_self_attention: four row-normalized matrices, composition oracle") {
  SplitMix64 rng(71);
  const std::size_t l = 3, d = 2;
  QTensor q = random_qtensor(rng, l, d), k = random_qtensor(rng, l, d),
          v = random_qtensor(rng, l, d);
  const double dk = 4.0 * d;

  ad::Tape tape;
  QTensor weights;
  ad::QVar out = q_self_attention(ad::qtensor_input(tape, q), ad::qtensor_input(tape, k),
                                  ad::qtensor_input(tape, v), dk, nullptr, &weights);

  // every component row sums to one
  for (int c = 0; c < 4; ++c) {
    for (std::size_t i = 0; i < l; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < l; ++j) s += weights.component(c).at(i, j);
      CHECK(std::abs(s - 1.0) <= 1e-6);
    }
  }

  // straight-line oracle: scores -> per-component softmax -> per-component
  // combination with V
  QTensor scores = qt_scale(1.0 / std::sqrt(dk), hamilton_nt_reference(q, k));
  for (int c = 0; c < 4; ++c) {
    Array w = row_softmax(scores.component(c));
    CHECK(max_abs_diff(weights.component(c), w) <= 1e-12);
    Array want = matmul(w, v.component(c));
    CHECK(max_abs_diff(tape.value(out.comp(c)), want) <= 1e-12);
  }
}

TEST_CASE("causal mask zeroes attention weights exactly") {
  SplitMix64 rng(72);
  const std::size_t l = 4;
  QTensor q = random_qtensor(rng, l, 2), k = random_qtensor(rng, l, 2),
          v = random_qtensor(rng, l, 2);
  Array mask = causal_mask(l);

  ad::Tape tape;
  QTensor weights;
  (void)q_self_attention(ad::qtensor_input(tape, q), ad::qtensor_input(tape, k),
                         ad::qtensor_input(tape, v), 8.0, &mask, &weights);
  for (int c = 0; c < 4; ++c) {
    for (std::size_t i = 0; i < l; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < l; ++j) {
        if (j > i) CHECK(weights.component(c).at(i, j) == 0.0);
        s += weights.component(c).at(i, j);
      }
      CHECK(std::abs(s - 1.0) <= 1e-6);
    }
  }
}

TEST_CASE("identity projections pass the input through attention unchanged") {
  // with Wq=Wk=Wv=identity quaternion weights, Q=K=V=X
  ParamStore store;
  QLinear wq = QLinear::create(store, "wq", 2, 2, false);
  QTensor eye({2, 2});
  eye.set(0, 0, Quaternion::identity());
  eye.set(1, 1, Quaternion::identity());
  for (int c = 0; c < 4; ++c) store.value(wq.W.comp(c)) = eye.component(c);

  SplitMix64 rng(73);
  QTensor x = random_qtensor(rng, 3, 2);
  ad::Tape tape;
  TapeBinding b = bind_params(tape, store);
  ad::QVar out = wq.forward(b, ad::qtensor_input(tape, x));
  for (int c = 0; c < 4; ++c) CHECK(max_abs_diff(tape.value(out.comp(c)), x.component(c)) == 0.0);
}

TEST_CASE("projection parameter count is a quarter of the real baseline's") {
  QTransformerConfig qcfg = tiny_config(TransformerVariant::QFull);
  QTransformerConfig rcfg = tiny_config(TransformerVariant::RealBaseline);
  QTransformer qm(qcfg), rm(rcfg);

  auto qkv_count = [](const ParamStore& s, bool quaternion) {
    std::size_t n = 0;
    for (std::size_t k = 0; k < s.size(); ++k) {
      const ParamInfo& i = s.info(static_cast<int>(k));
      const bool is_qkv = i.name.find(".wq.") != std::string::npos ||
                          i.name.find(".wk.") != std::string::npos ||
                          i.name.find(".wv.") != std::string::npos ||
                          (!quaternion && (i.name.ends_with(".wq.W") ||
                                           i.name.ends_with(".wk.W") ||
                                           i.name.ends_with(".wv.W")));
      if (is_qkv && i.kind == ParamKind::WeightMatrix) n += i.count();
    }
    return n;
  };
  CHECK(4 * qkv_count(qm.params(), true) == qkv_count(rm.params(), false));
}

TEST_CASE("variant parameter ordering and exact full-variant ratio") {
  QTransformerConfig base;
  base.layers = 2;
  base.d_q = 4;
  base.heads = 2;
  base.ffn_hidden = 32;
  base.vocab = 10;

  QTransformerConfig full = base, partial = base, real = base;
  full.variant = TransformerVariant::QFull;
  partial.variant = TransformerVariant::QPartial;
  real.variant = TransformerVariant::RealBaseline;

  QTransformer mf(full), mp(partial), mr(real);
  const std::size_t cf = transform_weight_count(mf.params());
  const std::size_t cp = transform_weight_count(mp.params());
  const std::size_t cr = transform_weight_count(mr.params());

  CHECK(4 * cf == cr);      // exactly a quarter
  CHECK(cf < cp);
  CHECK(cp < cr);

  CHECK(mf.params().total_count() < mp.params().total_count());
  CHECK(mp.params().total_count() < mr.params().total_count());

  // the partial variant converts the decoder cross-attention maps too,
  // while its FFNs stay real
  CHECK(mp.params().find("dec0.cross.wq.W.r") >= 0);
  CHECK(mp.params().find("dec0.ffn.w1.W") >= 0);
  CHECK(mr.params().find("dec0.cross.wq.W") >= 0);
}

TEST_CASE("zeroed output projections reduce a block to normalization of the input") {
  QTransformerConfig cfg = tiny_config(TransformerVariant::QFull);
  QTransformer model(cfg);
  ParamStore& store = model.params();

  // zero the attention output projection and both FFN maps (and biases)
  for (std::size_t k = 0; k < store.size(); ++k) {
    const std::string& name = store.info(static_cast<int>(k)).name;
    if (name.find("enc0.attn.wo.") != std::string::npos ||
        name.find("enc0.ffn.") != std::string::npos) {
      for (double& v : store.value(static_cast<int>(k)).data()) v = 0.0;
    }
  }

  const std::vector<int> src = {1, 2, 3};
  ad::Tape tape;
  TapeBinding b = bind_params(tape, store);
  ad::Var out = model.encode(b, src);

  // reference: embed (scaled lookup + positions), then LN twice
  const Array& table = store.value(store.find("src_embed.table"));
  Array x(src.size(), cfg.real_width());
  for (std::size_t i = 0; i < src.size(); ++i) {
    for (std::size_t j = 0; j < cfg.real_width(); ++j) {
      x.at(i, j) = table.at(src[i], j) * std::sqrt(static_cast<double>(cfg.real_width()));
    }
  }
  x = add(x, sinusoidal_positions(src.size(), cfg.real_width()));
  Array want = layer_norm_ref(layer_norm_ref(x));
  CHECK(max_abs_diff(tape.value(out), want) <= 1e-10);
}

TEST_CASE("seq2seq logits have shape [len x vocab]") {
  QTransformerConfig cfg = tiny_config(TransformerVariant::QPartial);
  QTransformer model(cfg);
  ad::Tape tape;
  TapeBinding b = bind_params(tape, model.params());
  ad::Var logits = model.seq2seq_logits(b, {1, 2, 3, 4}, {0, 5, 1});
  CHECK(tape.value(logits).rows() == 3);
  CHECK(tape.value(logits).cols() == cfg.vocab);
}

TEST_CASE("token and length contract violations") {
  QTransformerConfig cfg = tiny_config(TransformerVariant::QFull);
  QTransformer model(cfg);
  ad::Tape tape;
  TapeBinding b = bind_params(tape, model.params());
  CHECK_THROWS_AS(model.encode(b, {}), ContractError);
  CHECK_THROWS_AS(model.encode(b, {1, 2, 3, 4, 5, 0, 1, 2, 3}), ContractError);  // > max_len
  CHECK_THROWS_AS(model.encode(b, {6}), ContractError);                          // vocab
}

TEST_CASE("causal masking: earlier positions are invariant to later tokens") {
  QTransformerConfig cfg = tiny_config(TransformerVariant::QFull);
  cfg.layers = 2;
  QTransformer model(cfg);
  const std::vector<int> src = {1, 2, 3};

  auto run = [&](const std::vector<int>& tgt) {
    ad::Tape tape;
    TapeBinding b = bind_params(tape, model.params());
    return tape.value(model.seq2seq_logits(b, src, tgt));
  };
  Array l1 = run({0, 4, 2, 5});
  Array l2 = run({0, 4, 2, 1});  // only the last position differs
  for (std::size_t i = 0; i + 1 < 4; ++i) {
    for (std::size_t c = 0; c < cfg.vocab; ++c) {
      CHECK(l1.at(i, c) == l2.at(i, c));
    }
  }

  // attention-weight trace: masked entries are exactly zero, rows sum to 1
  ad::Tape tape;
  TapeBinding b = bind_params(tape, model.params());
  AttentionTrace trace;
  (void)model.seq2seq_logits(b, src, {0, 4, 2, 5}, &trace);
  bool saw_causal = false;
  for (const auto& e : trace.entries) {
    const std::size_t rows = e.weights.rows(), cols = e.weights.cols();
    for (int c = 0; c < (e.quaternion ? 4 : 1); ++c) {
      for (std::size_t i = 0; i < rows; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < cols; ++j) {
          if (e.causal && j > i) CHECK(e.weights.component(c).at(i, j) == 0.0);
          s += e.weights.component(c).at(i, j);
        }
        CHECK(std::abs(s - 1.0) <= 1e-6);
      }
    }
    saw_causal = saw_causal || e.causal;
  }
  CHECK(saw_causal);
}

TEST_CASE("degenerate embeddings: r-component scores equal real dot-product scores") {
  SplitMix64 rng(74);
  const std::size_t l = 3, d = 2;
  const double dk = 4.0 * d;
  // zero imaginary components everywhere
  QTensor q({l, d}), k({l, d});
  for (double& v : q.component(0).data()) v = rng.uniform(-1, 1);
  for (double& v : k.component(0).data()) v = rng.uniform(-1, 1);

  ad::Tape tape;
  ad::QVar scores = ad::qv_scale(
      ad::hamilton_scores(ad::qtensor_input(tape, q), ad::qtensor_input(tape, k)),
      1.0 / std::sqrt(dk));

  Array want = scale(matmul_nt(q.component(0), k.component(0)), 1.0 / std::sqrt(dk));
  CHECK(max_abs_diff(tape.value(scores.r), want) <= 1e-10);
  for (int c = 1; c < 4; ++c) {
    CHECK(sum_all(tape.value(scores.comp(c))) == 0.0);
  }
}

TEST_CASE("fixed seed gives bitwise-identical logits") {
  auto run = [&]() {
    QTransformer model(tiny_config(TransformerVariant::QPartial, 17));
    ad::Tape tape;
    TapeBinding b = bind_params(tape, model.params());
    return tape.value(model.seq2seq_logits(b, {1, 2}, {0, 3}));
  };
  Array a = run(), b = run();
  CHECK(max_abs_diff(a, b) == 0.0);
}

TEST_CASE("gradients match finite differences for full and partial variants") {
  for (TransformerVariant v : {TransformerVariant::QFull, TransformerVariant::QPartial}) {
    QTransformer model(tiny_config(v, 19));
    auto r = finite_diff_check_store(model.params(), [&](TapeBinding& b) {
      ad::Var logits = model.seq2seq_logits(b, {1, 2, 3}, {0, 4});
      return ad::cross_entropy_logits(logits, {4, 2});
    });
    INFO(to_string(v) << " worst " << r.worst);
    CHECK(r.max_rel_err <= 1e-5);
  }
}

TEST_CASE("real baseline also trains: gradient check") {
  QTransformer model(tiny_config(TransformerVariant::RealBaseline, 23));
  auto r = finite_diff_check_store(model.params(), [&](TapeBinding& b) {
    ad::Var logits = model.seq2seq_logits(b, {1, 2, 3}, {0, 4});
    return ad::cross_entropy_logits(logits, {4, 2});
  });
  INFO("worst " << r.worst);
  CHECK(r.max_rel_err <= 1e-5);
}

TEST_CASE("config validation") {
  QTransformerConfig cfg = tiny_config(TransformerVariant::QFull);
  cfg.d_q = 3;
  cfg.heads = 2;  // 3 not divisible by 2
  CHECK_THROWS_AS(QTransformer{cfg}, UsageError);

  QTransformerConfig cfg2 = tiny_config(TransformerVariant::QFull);
  cfg2.ffn_hidden = 6;  // not divisible by 4
  CHECK_THROWS_AS(QTransformer{cfg2}, UsageError);

  QTransformerConfig cfg3 = tiny_config(TransformerVariant::QFull);
  cfg3.layers = 0;
  CHECK_THROWS_AS(QTransformer{cfg3}, UsageError);
}
