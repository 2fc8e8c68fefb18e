#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "qnn/qcore.hpp"

namespace qnn::verify {

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct Suite {
  std::vector<CheckResult> results;
  bool all_pass() const;
  std::string render() const;  // one "[pass|FAIL] name: detail" line per check
};

using HamiltonFn = Quaternion (*)(const Quaternion&, const Quaternion&);

// ij=k and friends, exactly.
CheckResult check_multiplication_rules();
// Norm multiplicativity, associativity, distributivity at 1e-10 relative
// error over seeded operands.
CheckResult check_algebra_properties(std::size_t samples = 1000);
// Product function agrees bitwise with the structured 4x4 matrix form. The
// function is injectable so the checker itself can be exercised against a
// deliberately broken product.
CheckResult check_matrix_form_oracle(std::size_t samples = 1000, HamiltonFn fn = nullptr);
// real->quaternion->real and back.
CheckResult check_bridge_roundtrip();
// Attention-weight rows sum to one per component; causally masked entries
// are exactly zero. Covers the pairwise attention model and the
// transformer.
CheckResult check_softmax_normalization();
// Central finite differences against analytic gradients at 1e-5.
CheckResult check_gradients_qffn();
CheckResult check_gradients_component_softmax();
CheckResult check_gradients_qatt();
CheckResult check_gradients_qtransformer();
// Quaternion:real weight-count ratios: exact quarter for the converted
// maps, strictly between for the partial variant.
CheckResult check_param_ratios();
// With zero imaginary inputs and weights, the r-component of the attention
// scores equals real scaled dot-product scores.
CheckResult check_degenerate_scores();

Suite run_all();

}  // namespace qnn::verify
