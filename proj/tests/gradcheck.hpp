#pragma once

#include <functional>
#include <string>
#include <vector>

#include "qnn/autodiff.hpp"
#include "qnn/qlayers.hpp"

namespace qnn::testutil {

// Scalar loss as a function of a list of leaf arrays; the function mounts
// them on the given tape and records the computation.
using LossFn = std::function<ad::Var(ad::Tape&, const std::vector<ad::Var>&)>;

struct GradCheck {
  double max_rel_err = 0.0;
  std::string worst;  // "param k, element e"
};

inline double fd_rel_err(double analytic, double fd) {
  double denom = std::max({std::abs(analytic), std::abs(fd), 1e-3});
  return std::abs(analytic - fd) / denom;
}

// Central finite differences with step h against the tape's analytic
// gradients, elementwise over every leaf.
inline GradCheck finite_diff_check(const LossFn& f, std::vector<Array> leaves,
                                   double h = 1e-6) {
  auto eval = [&](const std::vector<Array>& vals) {
    ad::Tape tape;
    std::vector<ad::Var> vars;
    vars.reserve(vals.size());
    for (const Array& a : vals) vars.push_back(tape.input(a));
    ad::Var loss = f(tape, vars);
    return tape.value(loss)[0];
  };

  ad::Tape tape;
  std::vector<ad::Var> vars;
  for (const Array& a : leaves) vars.push_back(tape.input(a));
  ad::Var loss = f(tape, vars);
  tape.backward(loss);

  GradCheck result;
  for (std::size_t k = 0; k < leaves.size(); ++k) {
    const Array& analytic = tape.grad(vars[k]);
    for (std::size_t e = 0; e < leaves[k].size(); ++e) {
      const double orig = leaves[k][e];
      leaves[k][e] = orig + h;
      double lp = eval(leaves);
      leaves[k][e] = orig - h;
      double lm = eval(leaves);
      leaves[k][e] = orig;
      const double fd = (lp - lm) / (2.0 * h);
      const double err = fd_rel_err(analytic[e], fd);
      if (err > result.max_rel_err) {
        result.max_rel_err = err;
        result.worst = "leaf " + std::to_string(k) + ", element " + std::to_string(e);
      }
    }
  }
  return result;
}

// Whole-model check: loss as a function of every parameter in a store.
// build(binding) records the graph and returns the scalar loss.
template <typename BuildLoss>
GradCheck finite_diff_check_store(ParamStore& store, BuildLoss build, double h = 1e-6) {
  auto eval = [&]() {
    ad::Tape tape;
    TapeBinding binding = bind_params(tape, store);
    ad::Var loss = build(binding);
    return tape.value(loss)[0];
  };

  ad::Tape tape;
  TapeBinding binding = bind_params(tape, store);
  ad::Var loss = build(binding);
  tape.backward(loss);

  GradCheck result;
  for (std::size_t k = 0; k < store.size(); ++k) {
    const Array& analytic = tape.grad(binding.var(static_cast<int>(k)));
    Array& value = store.value(static_cast<int>(k));
    for (std::size_t e = 0; e < value.size(); ++e) {
      const double orig = value[e];
      value[e] = orig + h;
      double lp = eval();
      value[e] = orig - h;
      double lm = eval();
      value[e] = orig;
      const double fd = (lp - lm) / (2.0 * h);
      const double err = fd_rel_err(analytic[e], fd);
      if (err > result.max_rel_err) {
        result.max_rel_err = err;
        result.worst = store.info(static_cast<int>(k)).name + "[" + std::to_string(e) + "]";
      }
    }
  }
  return result;
}

}  // namespace qnn::testutil
