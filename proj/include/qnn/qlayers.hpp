#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qnn/autodiff.hpp"
#include "qnn/qcore.hpp"
#include "qnn/rng.hpp"

namespace qnn {

// --- parameters ------------------------------------------------------------

enum class ParamKind { WeightMatrix, Bias, Norm, Embedding };

// Transform parameters are the linear maps the quaternion variants convert;
// they carry the 4x weight-count comparison against the real reference.
// Everything shared between both sides (embeddings, output head, norms) is
// Other.
enum class ParamGroup { Transform, Other };

struct ParamInfo {
  std::string name;
  std::size_t rows = 0;
  std::size_t cols = 0;
  ParamKind kind = ParamKind::WeightMatrix;
  ParamGroup group = ParamGroup::Other;
  std::size_t count() const { return rows * cols; }
};

// Owns the persistent parameter values of a model. Tapes mount copies per
// step; the optimizer writes updates back between steps.
class ParamStore {
 public:
  int add(std::string name, std::size_t rows, std::size_t cols, ParamKind kind,
          ParamGroup group);
  std::size_t size() const { return infos_.size(); }
  Array& value(int idx) { return values_[idx]; }
  const Array& value(int idx) const { return values_[idx]; }
  const ParamInfo& info(int idx) const { return infos_[idx]; }
  int find(const std::string& name) const;

  std::size_t total_count() const;

 private:
  std::vector<ParamInfo> infos_;
  std::vector<Array> values_;
};

// Per-step view: every parameter mounted on one tape, in store order.
// Non-trainable bindings mount constants so evaluation skips gradient work.
struct TapeBinding {
  ad::Tape* tape = nullptr;
  std::vector<ad::Var> vars;
  ad::Var var(int idx) const { return vars.at(idx); }
};

TapeBinding bind_params(ad::Tape& tape, const ParamStore& store, bool trainable = true);

// Free real scalars across all Transform-group weight matrices; the count
// the quaternion:real comparison is taken over.
std::size_t transform_weight_count(const ParamStore& store);

// A quaternion parameter is four real parameters named <name>.r/.x/.y/.z.
struct QParam {
  int r = -1, x = -1, y = -1, z = -1;
  int comp(int c) const {
    switch (c) {
      case 0: return r;
      case 1: return x;
      case 2: return y;
      default: return z;
    }
  }
};

QParam add_qparam(ParamStore& store, const std::string& name, std::size_t rows,
                  std::size_t cols, ParamKind kind, ParamGroup group);
ad::QVar qvar(const TapeBinding& binding, const QParam& p);

// --- activations -------------------------------------------------------------

enum class ActivationKind { Identity, Tanh, Relu };

ActivationKind activation_from_string(const std::string& s);
std::string to_string(ActivationKind k);
ad::Var apply_activation(ad::Var v, ActivationKind k);
// Applied to each component independently.
ad::QVar apply_activation(ad::QVar v, ActivationKind k);

// --- layers ------------------------------------------------------------------

// Quaternion feed-forward layer: the linear map is the Hamilton product with
// a quaternion weight matrix of out_q x in_q, so it holds 4*in_q*out_q free
// real scalars where the real dense map of the same real widths holds
// 16*in_q*out_q.
struct QLinear {
  std::size_t in_q = 0;
  std::size_t out_q = 0;
  bool has_bias = false;
  QParam W;
  QParam bias;

  static QLinear create(ParamStore& store, const std::string& name, std::size_t in_q,
                        std::size_t out_q, bool bias, ParamGroup group = ParamGroup::Transform);

  ad::QVar forward(const TapeBinding& binding, ad::QVar x,
                   ActivationKind act = ActivationKind::Identity) const;

  std::size_t weight_count() const { return 4 * in_q * out_q; }
};

// Plain real dense layer (used by the real baselines and the partial
// transformer's position-wise FFN).
struct RealLinear {
  std::size_t in_w = 0;
  std::size_t out_w = 0;
  bool has_bias = false;
  int W = -1;
  int bias = -1;

  static RealLinear create(ParamStore& store, const std::string& name, std::size_t in_w,
                           std::size_t out_w, bool bias,
                           ParamGroup group = ParamGroup::Transform);

  ad::Var forward(const TapeBinding& binding, ad::Var x,
                  ActivationKind act = ActivationKind::Identity) const;

  std::size_t weight_count() const { return in_w * out_w; }
};

// Final classification head on the concatenated [r;x;y;z] vector.
struct OutputHead {
  std::size_t in_real = 0;
  std::size_t num_classes = 0;
  int W = -1;
  int bias = -1;

  static OutputHead create(ParamStore& store, const std::string& name, std::size_t in_real,
                           std::size_t num_classes);

  // logits = concat(q) * W^T + b
  ad::Var forward(const TapeBinding& binding, ad::QVar q) const;
  ad::Var forward_real(const TapeBinding& binding, ad::Var v) const;
};

// --- initialization ----------------------------------------------------------

struct InitSpec {
  enum class Scheme { GlorotPerComponent, QuaternionPolar };
  Scheme scheme = Scheme::GlorotPerComponent;
  std::uint64_t seed = 0;
};

InitSpec::Scheme init_scheme_from_string(const std::string& s);

// Uniform Glorot bound over the realized real widths.
double glorot_bound(std::size_t fan_in_real, std::size_t fan_out_real);

// Draws the four component matrices of a quaternion weight. Glorot draws
// each component independently from U(-a, a) with a computed from the real
// widths 4*in_q and 4*out_q. The polar scheme draws, per weight, an angle
// from U[-pi, pi], a unit imaginary direction from normalized U[0,1]^3
// samples and a modulus from U(0, a); the modulus distribution is our
// choice, the scheme leaves it open. Biases are zero-initialized.
void init_qlinear(ParamStore& store, const QLinear& layer, InitSpec::Scheme scheme,
                  SplitMix64& rng);
void init_real_linear(ParamStore& store, const RealLinear& layer, SplitMix64& rng);
void init_output_head(ParamStore& store, const OutputHead& head, SplitMix64& rng);
// Embedding tables draw from U(-0.1, 0.1).
void init_embedding(ParamStore& store, int table, SplitMix64& rng);

// --- real <-> quaternion bridges (value level) --------------------------------

// Splits a real array of width 4d into contiguous [r | x | y | z] blocks.
QTensor real_to_qtensor(const Array& v);
Array qtensor_to_real(const QTensor& q);

// --- structured matrix form ---------------------------------------------------

// The 4x4 real matrix of the weight-sharing form; multiplying it by
// [r,x,y,z]^T equals q_hamilton(w, q).
Array hamilton_matrix_form(const Quaternion& w);

// --- embedding projection ------------------------------------------------------

// Token lookup into a trainable real table of width 4d, bridged into
// quaternion space, optionally passed through a QLinear with nonlinearity.
struct EmbedProject {
  int table = -1;
  std::size_t vocab = 0;
  std::size_t width = 0;  // real width, divisible by 4
  std::optional<QLinear> proj;
  ActivationKind act = ActivationKind::Identity;

  static EmbedProject create(ParamStore& store, const std::string& name, std::size_t vocab,
                             std::size_t width);
  static EmbedProject create_projected(ParamStore& store, const std::string& name,
                                       std::size_t vocab, std::size_t table_width,
                                       std::size_t out_q, ActivationKind act);

  ad::QVar forward(const TapeBinding& binding, const std::vector<int>& tokens) const;
};

}  // namespace qnn
