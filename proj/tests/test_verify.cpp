#include "qnn/verify.hpp"

#include <set>

#include "doctest.h"
#include "qnn/qcore.hpp"

using namespace qnn;
using namespace qnn::verify;

namespace {

// Deliberately broken product: one sign of the x-component expansion
// flipped. The oracle check must catch it.
Quaternion hamilton_with_sign_error(const Quaternion& a, const Quaternion& b) {
  return Quaternion(a.r * b.r - a.x * b.x - a.y * b.y - a.z * b.z,
                    a.x * b.r + a.r * b.x + a.z * b.y + a.y * b.z,  // -a.z*b.y flipped
                    a.y * b.r + a.z * b.x + a.r * b.y - a.x * b.z,
                    a.z * b.r - a.y * b.x + a.x * b.y + a.r * b.z);
}

}  // namespace

TEST_CASE("a fresh build passes every verification check") {
  Suite suite = run_all();
  CHECK(suite.all_pass());
  for (const auto& r : suite.results) {
    INFO(r.name << ": " << r.detail);
    CHECK(r.pass);
  }
  const std::string text = suite.render();
  CHECK(text.find("[FAIL]") == std::string::npos);
  CHECK(text.find("[pass] algebra.multiplication_rules") != std::string::npos);
}

TEST_CASE("an injected sign error in the product is caught by the matrix-form oracle") {
  CheckResult healthy = check_matrix_form_oracle(200);
  CHECK(healthy.pass);
  CheckResult broken = check_matrix_form_oracle(200, &hamilton_with_sign_error);
  CHECK(!broken.pass);
}

TEST_CASE("the gradient suite covers every trainable layer type") {
  Suite suite = run_all();
  std::set<std::string> names;
  for (const auto& r : suite.results) names.insert(r.name);
  // qffn: quaternion weight + bias; component softmax; the attention model
  // adds embeddings and the output head; the transformer block adds real
  // linear maps and layer normalization
  CHECK(names.count("grad.qffn") == 1);
  CHECK(names.count("grad.component_softmax") == 1);
  CHECK(names.count("grad.qatt_end_to_end") == 1);
  CHECK(names.count("grad.qtransformer_block") == 1);
}

TEST_CASE("failing checks render with their names") {
  Suite suite;
  suite.results.push_back({"demo.check", false, "synthetic"});
  CHECK(!suite.all_pass());
  CHECK(suite.render().find("[FAIL] demo.check: synthetic") != std::string::npos);
}
