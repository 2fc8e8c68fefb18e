#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "qnn/array.hpp"

namespace qnn {

// A quaternion scalar: one real component r and three imaginary components
// x, y, z on the basis i, j, k (the basis is implicit in component position).
// Constructors reject non-finite components.
struct Quaternion {
  double r = 0.0;
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  Quaternion() = default;
  Quaternion(double r_, double x_, double y_, double z_);

  static Quaternion identity() { return Quaternion(1.0, 0.0, 0.0, 0.0); }
  static Quaternion zero() { return Quaternion(); }

  double& comp(int c);
  double comp(int c) const;

  bool operator==(const Quaternion&) const = default;
};

Quaternion q_add(const Quaternion& a, const Quaternion& b);
Quaternion q_sub(const Quaternion& a, const Quaternion& b);
Quaternion q_scale(double alpha, const Quaternion& q);
Quaternion q_conjugate(const Quaternion& q);
double q_norm(const Quaternion& q);
// Throws DomainError on the zero quaternion.
Quaternion q_unit(const Quaternion& q);

// Hamilton product, the four-component expansion:
//   r = ar*br - ax*bx - ay*by - az*bz
//   x = ax*br + ar*bx - az*by + ay*bz
//   y = ay*br + az*bx + ar*by - ax*bz
//   z = az*br - ay*bx + ax*by + ar*bz
// Each component accumulates left to right in b-component order, which makes
// the result bit-identical to the structured 4x4 matrix-vector form.
Quaternion q_hamilton(const Quaternion& a, const Quaternion& b);

// The Hamilton product written as a contraction table: for output component
// oc and right-operand component rc, the term is sign(oc,rc) * a[lhs(oc,rc)]
// * b[rc]. Row oc of the structured matrix form is sign(oc,rc)*W[lhs(oc,rc)].
inline constexpr int kHamiltonLhs[4][4] = {
    {0, 1, 2, 3},
    {1, 0, 3, 2},
    {2, 3, 0, 1},
    {3, 2, 1, 0},
};
inline constexpr double kHamiltonSign[4][4] = {
    {+1, -1, -1, -1},
    {+1, +1, -1, +1},
    {+1, +1, +1, -1},
    {+1, -1, +1, +1},
};

// An n-dimensional quaternion array stored component-major: four real arrays
// of identical shape. Ranks 1 and 2 are what the models use (vectors map to
// 1 x n matrices); the shape list itself may have any rank including zero
// extents.
class QTensor {
 public:
  QTensor() = default;
  // Zero-filled tensor of the given shape.
  explicit QTensor(std::vector<std::size_t> shape);
  QTensor(std::vector<std::size_t> shape, Array r, Array x, Array y, Array z);

  static QTensor matrix(std::size_t rows, std::size_t cols) { return QTensor({rows, cols}); }
  static QTensor vector(std::size_t n) { return QTensor({n}); }

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t element_count() const;
  // Rank-2 view extents; a rank-1 tensor is a 1 x n row, a rank-0 a 1 x 1.
  std::size_t rows() const;
  std::size_t cols() const;

  Array& component(int c) { return comps_[c]; }
  const Array& component(int c) const { return comps_[c]; }
  Array& r() { return comps_[0]; }
  Array& x() { return comps_[1]; }
  Array& y() { return comps_[2]; }
  Array& z() { return comps_[3]; }
  const Array& r() const { return comps_[0]; }
  const Array& x() const { return comps_[1]; }
  const Array& y() const { return comps_[2]; }
  const Array& z() const { return comps_[3]; }

  Quaternion at(std::size_t i, std::size_t j) const;
  void set(std::size_t i, std::size_t j, const Quaternion& q);
  Quaternion at(std::size_t i) const { return at(0, i); }
  void set(std::size_t i, const Quaternion& q) { set(0, i, q); }

 private:
  std::vector<std::size_t> shape_;
  std::array<Array, 4> comps_;
};

// Component-wise sum/scale; shapes must agree.
QTensor qt_add(const QTensor& a, const QTensor& b);
QTensor qt_sub(const QTensor& a, const QTensor& b);
QTensor qt_scale(double alpha, const QTensor& a);

// out[i,j] = sum_t a[i,t] (x) b[t,j]: Hamilton product per element,
// quaternion addition for accumulation, inner index ascending. Computed as
// the sixteen signed component matmuls of the contraction table.
QTensor qt_hamilton_matmul(const QTensor& a, const QTensor& b);

// Scores contraction: out[i,j] = sum_t a[i,t] (x) b[j,t], i.e. A (x) B^T
// with no conjugation, summed over the shared feature axis.
QTensor qt_hamilton_nt(const QTensor& a, const QTensor& b);

}  // namespace qnn
