#include "qnn/qcore.hpp"

#include <cmath>
#include <utility>

#include "qnn/error.hpp"

namespace qnn {

Quaternion::Quaternion(double r_, double x_, double y_, double z_) : r(r_), x(x_), y(y_), z(z_) {
  if (!std::isfinite(r) || !std::isfinite(x) || !std::isfinite(y) || !std::isfinite(z)) {
    throw DomainError("Quaternion: components must be finite");
  }
}

double& Quaternion::comp(int c) {
  switch (c) {
    case 0: return r;
    case 1: return x;
    case 2: return y;
    default: return z;
  }
}

double Quaternion::comp(int c) const {
  switch (c) {
    case 0: return r;
    case 1: return x;
    case 2: return y;
    default: return z;
  }
}

Quaternion q_add(const Quaternion& a, const Quaternion& b) {
  return Quaternion(a.r + b.r, a.x + b.x, a.y + b.y, a.z + b.z);
}

Quaternion q_sub(const Quaternion& a, const Quaternion& b) {
  return Quaternion(a.r - b.r, a.x - b.x, a.y - b.y, a.z - b.z);
}

Quaternion q_scale(double alpha, const Quaternion& q) {
  if (!std::isfinite(alpha)) throw DomainError("q_scale: alpha must be finite");
  return Quaternion(alpha * q.r, alpha * q.x, alpha * q.y, alpha * q.z);
}

Quaternion q_conjugate(const Quaternion& q) { return Quaternion(q.r, -q.x, -q.y, -q.z); }

double q_norm(const Quaternion& q) {
  return std::sqrt(q.r * q.r + q.x * q.x + q.y * q.y + q.z * q.z);
}

Quaternion q_unit(const Quaternion& q) {
  double n = q_norm(q);
  if (n == 0.0) throw DomainError("q_unit: zero quaternion has no unit");
  return Quaternion(q.r / n, q.x / n, q.y / n, q.z / n);
}

Quaternion q_hamilton(const Quaternion& a, const Quaternion& b) {
  return Quaternion(a.r * b.r - a.x * b.x - a.y * b.y - a.z * b.z,
                    a.x * b.r + a.r * b.x - a.z * b.y + a.y * b.z,
                    a.y * b.r + a.z * b.x + a.r * b.y - a.x * b.z,
                    a.z * b.r - a.y * b.x + a.x * b.y + a.r * b.z);
}

namespace {

std::pair<std::size_t, std::size_t> rank2_extents(const std::vector<std::size_t>& shape) {
  if (shape.empty()) return {1, 1};
  if (shape.size() == 1) return {1, shape[0]};
  if (shape.size() == 2) return {shape[0], shape[1]};
  throw ShapeError("QTensor: operation requires rank <= 2");
}

// Higher ranks are stored flat; only the matrix operations need the rank-2
// view.
std::pair<std::size_t, std::size_t> storage_extents(const std::vector<std::size_t>& shape) {
  if (shape.size() <= 2) return rank2_extents(shape);
  std::size_t n = 1;
  for (std::size_t e : shape) n *= e;
  return {1, n};
}

}  // namespace

QTensor::QTensor(std::vector<std::size_t> shape) : shape_(std::move(shape)) {
  auto [rows, cols] = storage_extents(shape_);
  for (auto& c : comps_) c = Array(rows, cols, 0.0);
}

QTensor::QTensor(std::vector<std::size_t> shape, Array r, Array x, Array y, Array z)
    : shape_(std::move(shape)), comps_{std::move(r), std::move(x), std::move(y), std::move(z)} {
  auto [rows, cols] = storage_extents(shape_);
  for (const auto& c : comps_) {
    if (c.rows() != rows || c.cols() != cols) {
      throw ShapeError("QTensor: component arrays must all have the stated shape");
    }
  }
}

std::size_t QTensor::element_count() const {
  std::size_t n = 1;
  for (std::size_t e : shape_) n *= e;
  return n;
}

std::size_t QTensor::rows() const { return rank2_extents(shape_).first; }
std::size_t QTensor::cols() const { return rank2_extents(shape_).second; }

Quaternion QTensor::at(std::size_t i, std::size_t j) const {
  return Quaternion(comps_[0].at(i, j), comps_[1].at(i, j), comps_[2].at(i, j),
                    comps_[3].at(i, j));
}

void QTensor::set(std::size_t i, std::size_t j, const Quaternion& q) {
  comps_[0].at(i, j) = q.r;
  comps_[1].at(i, j) = q.x;
  comps_[2].at(i, j) = q.y;
  comps_[3].at(i, j) = q.z;
}

QTensor qt_add(const QTensor& a, const QTensor& b) {
  if (a.shape() != b.shape()) throw ShapeError("qt_add: shapes differ");
  QTensor out = a;
  for (int c = 0; c < 4; ++c) add_in_place(out.component(c), b.component(c));
  return out;
}

QTensor qt_sub(const QTensor& a, const QTensor& b) {
  if (a.shape() != b.shape()) throw ShapeError("qt_sub: shapes differ");
  QTensor out = a;
  for (int c = 0; c < 4; ++c) out.component(c) = sub(a.component(c), b.component(c));
  return out;
}

QTensor qt_scale(double alpha, const QTensor& a) {
  QTensor out = a;
  for (int c = 0; c < 4; ++c) out.component(c) = scale(a.component(c), alpha);
  return out;
}

QTensor qt_hamilton_matmul(const QTensor& a, const QTensor& b) {
  if (a.cols() != b.rows()) throw ShapeError("qt_hamilton_matmul: inner extents disagree");
  QTensor out({a.rows(), b.cols()});
  for (int oc = 0; oc < 4; ++oc) {
    for (int rc = 0; rc < 4; ++rc) {
      axpy_in_place(out.component(oc), kHamiltonSign[oc][rc],
                    matmul(a.component(kHamiltonLhs[oc][rc]), b.component(rc)));
    }
  }
  return out;
}

QTensor qt_hamilton_nt(const QTensor& a, const QTensor& b) {
  if (a.cols() != b.cols()) throw ShapeError("qt_hamilton_nt: feature widths disagree");
  QTensor out({a.rows(), b.rows()});
  for (int oc = 0; oc < 4; ++oc) {
    for (int rc = 0; rc < 4; ++rc) {
      axpy_in_place(out.component(oc), kHamiltonSign[oc][rc],
                    matmul_nt(a.component(kHamiltonLhs[oc][rc]), b.component(rc)));
    }
  }
  return out;
}

}  // namespace qnn
