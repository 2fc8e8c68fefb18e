#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace qnn {

// Dense row-major matrix of doubles. Vectors are 1xN rows, scalars 1x1.
// Zero extents are legal and produce empty storage.
class Array {
 public:
  Array() = default;
  Array(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Array(std::size_t rows, std::size_t cols, std::vector<double> data);

  static Array scalar(double v) { return Array(1, 1, v); }
  static Array row(std::vector<double> v);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool same_shape(const Array& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

  double& at(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double at(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }
  double* row_ptr(std::size_t i) { return data_.data() + i * cols_; }
  const double* row_ptr(std::size_t i) const { return data_.data() + i * cols_; }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  double& operator[](std::size_t k) { return data_[k]; }
  double operator[](std::size_t k) const { return data_[k]; }

  // Fails on non-finite entries anywhere in the matrix.
  bool all_finite() const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// Elementwise ops; shapes must match exactly.
Array add(const Array& a, const Array& b);
Array sub(const Array& a, const Array& b);
Array mul(const Array& a, const Array& b);
Array scale(const Array& a, double s);
void add_in_place(Array& into, const Array& a);
// into += s * a
void axpy_in_place(Array& into, double s, const Array& a);

// C = A(m x k) * B(k x n). Accumulation over k is ascending, so results
// are deterministic.
Array matmul(const Array& a, const Array& b);
// C = A(m x k) * B(n x k)^T
Array matmul_nt(const Array& a, const Array& b);
// C = A(k x m)^T * B(k x n)
Array matmul_tn(const Array& a, const Array& b);

Array transpose(const Array& a);

// Numerically stable softmax along each row (max-subtracted).
Array row_softmax(const Array& a);

double sum_all(const Array& a);
// Column sums as a 1 x cols row.
Array sum_rows(const Array& a);

double max_abs_diff(const Array& a, const Array& b);

}  // namespace qnn
