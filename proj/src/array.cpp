#include "qnn/array.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

#include "qnn/error.hpp"

namespace qnn {

Array::Array(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw ShapeError("Array: data length does not match rows*cols");
  }
}

Array Array::row(std::vector<double> v) {
  std::size_t n = v.size();
  return Array(1, n, std::move(v));
}

bool Array::all_finite() const {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

namespace {

void check_same_shape(const Array& a, const Array& b, const char* op) {
  if (!a.same_shape(b)) {
    throw ShapeError(std::string(op) + ": operand shapes differ");
  }
}

}  // namespace

Array add(const Array& a, const Array& b) {
  check_same_shape(a, b, "add");
  Array out = a;
  auto d = out.data();
  auto bd = b.data();
  for (std::size_t k = 0; k < d.size(); ++k) d[k] += bd[k];
  return out;
}

Array sub(const Array& a, const Array& b) {
  check_same_shape(a, b, "sub");
  Array out = a;
  auto d = out.data();
  auto bd = b.data();
  for (std::size_t k = 0; k < d.size(); ++k) d[k] -= bd[k];
  return out;
}

Array mul(const Array& a, const Array& b) {
  check_same_shape(a, b, "mul");
  Array out = a;
  auto d = out.data();
  auto bd = b.data();
  for (std::size_t k = 0; k < d.size(); ++k) d[k] *= bd[k];
  return out;
}

Array scale(const Array& a, double s) {
  Array out = a;
  for (double& v : out.data()) v *= s;
  return out;
}

void add_in_place(Array& into, const Array& a) {
  check_same_shape(into, a, "add_in_place");
  auto d = into.data();
  auto ad = a.data();
  for (std::size_t k = 0; k < d.size(); ++k) d[k] += ad[k];
}

void axpy_in_place(Array& into, double s, const Array& a) {
  check_same_shape(into, a, "axpy_in_place");
  auto d = into.data();
  auto ad = a.data();
  for (std::size_t k = 0; k < d.size(); ++k) d[k] += s * ad[k];
}

Array matmul(const Array& a, const Array& b) {
  if (a.cols() != b.rows()) throw ShapeError("matmul: inner extents disagree");
  Array out(a.rows(), b.cols(), 0.0);
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  for (std::size_t i = 0; i < m; ++i) {
    double* orow = out.row_ptr(i);
    const double* arow = a.row_ptr(i);
    for (std::size_t t = 0; t < k; ++t) {
      const double av = arow[t];
      const double* brow = b.row_ptr(t);
      for (std::size_t j = 0; j < n; ++j) orow[j] += av * brow[j];
    }
  }
  return out;
}

Array matmul_nt(const Array& a, const Array& b) {
  if (a.cols() != b.cols()) throw ShapeError("matmul_nt: inner extents disagree");
  Array out(a.rows(), b.rows(), 0.0);
  const std::size_t m = a.rows(), k = a.cols(), n = b.rows();
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = a.row_ptr(i);
    double* orow = out.row_ptr(i);
    for (std::size_t j = 0; j < n; ++j) {
      const double* brow = b.row_ptr(j);
      double acc = 0.0;
      for (std::size_t t = 0; t < k; ++t) acc += arow[t] * brow[t];
      orow[j] = acc;
    }
  }
  return out;
}

Array matmul_tn(const Array& a, const Array& b) {
  if (a.rows() != b.rows()) throw ShapeError("matmul_tn: inner extents disagree");
  Array out(a.cols(), b.cols(), 0.0);
  const std::size_t k = a.rows(), m = a.cols(), n = b.cols();
  for (std::size_t t = 0; t < k; ++t) {
    const double* arow = a.row_ptr(t);
    const double* brow = b.row_ptr(t);
    for (std::size_t i = 0; i < m; ++i) {
      const double av = arow[i];
      double* orow = out.row_ptr(i);
      for (std::size_t j = 0; j < n; ++j) orow[j] += av * brow[j];
    }
  }
  return out;
}

Array transpose(const Array& a) {
  Array out(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) out.at(j, i) = a.at(i, j);
  }
  return out;
}

Array row_softmax(const Array& a) {
  Array out(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const double* in = a.row_ptr(i);
    double* o = out.row_ptr(i);
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < a.cols(); ++j) mx = std::max(mx, in[j]);
    double z = 0.0;
    for (std::size_t j = 0; j < a.cols(); ++j) {
      o[j] = std::exp(in[j] - mx);
      z += o[j];
    }
    for (std::size_t j = 0; j < a.cols(); ++j) o[j] /= z;
  }
  return out;
}

double sum_all(const Array& a) {
  double s = 0.0;
  for (double v : a.data()) s += v;
  return s;
}

Array sum_rows(const Array& a) {
  Array out(1, a.cols(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const double* row = a.row_ptr(i);
    for (std::size_t j = 0; j < a.cols(); ++j) out[j] += row[j];
  }
  return out;
}

double max_abs_diff(const Array& a, const Array& b) {
  check_same_shape(a, b, "max_abs_diff");
  double m = 0.0;
  auto ad = a.data();
  auto bd = b.data();
  for (std::size_t k = 0; k < ad.size(); ++k) m = std::max(m, std::abs(ad[k] - bd[k]));
  return m;
}

}  // namespace qnn
