#include "zsd/matrix.hpp"

#include <algorithm>
#include <cmath>

#include "zsd/error.hpp"

namespace zsd {

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  Matrix m(rows.size(), rows.size() ? rows.begin()->size() : 0);
  std::size_t r = 0;
  for (const auto& row : rows) {
    require(row.size() == m.cols(), ErrorCode::shape_mismatch,
            "ragged initializer for Matrix::from_rows");
    std::copy(row.begin(), row.end(), m.data() + r * m.cols());
    ++r;
  }
  return m;
}

void Matrix::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

bool Matrix::all_finite() const {
  return std::all_of(data_.begin(), data_.end(),
                     [](double v) { return std::isfinite(v); });
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  require(a.cols() == b.rows(), ErrorCode::shape_mismatch, "matmul shape mismatch");
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double* out_row = out.data() + i * out.cols();
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      const double* b_row = b.data() + k * b.cols();
      for (std::size_t j = 0; j < b.cols(); ++j) out_row[j] += aik * b_row[j];
    }
  }
  return out;
}

Matrix matmul_bt(const Matrix& a, const Matrix& b) {
  require(a.cols() == b.cols(), ErrorCode::shape_mismatch, "matmul_bt shape mismatch");
  Matrix out(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.rows(); ++j) out(i, j) = dot(a.row(i), b.row(j));
  return out;
}

Matrix matmul_at(const Matrix& a, const Matrix& b) {
  require(a.rows() == b.rows(), ErrorCode::shape_mismatch, "matmul_at shape mismatch");
  Matrix out(a.cols(), b.cols());
  for (std::size_t k = 0; k < a.rows(); ++k) {
    const double* a_row = a.data() + k * a.cols();
    const double* b_row = b.data() + k * b.cols();
    for (std::size_t i = 0; i < a.cols(); ++i) {
      double* out_row = out.data() + i * out.cols();
      const double aki = a_row[i];
      for (std::size_t j = 0; j < b.cols(); ++j) out_row[j] += aki * b_row[j];
    }
  }
  return out;
}

Matrix transpose(const Matrix& a) {
  Matrix out(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) out(j, i) = a(i, j);
  return out;
}

Matrix hadamard(const Matrix& a, const Matrix& b) {
  require(a.same_shape(b), ErrorCode::shape_mismatch, "hadamard shape mismatch");
  Matrix out(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
  return out;
}

void add_in_place(Matrix& target, const Matrix& other) {
  require(target.same_shape(other), ErrorCode::shape_mismatch, "add shape mismatch");
  for (std::size_t i = 0; i < target.size(); ++i) target[i] += other[i];
}

void axpy_in_place(Matrix& target, double alpha, const Matrix& other) {
  require(target.same_shape(other), ErrorCode::shape_mismatch, "axpy shape mismatch");
  for (std::size_t i = 0; i < target.size(); ++i) target[i] += alpha * other[i];
}

void scale_in_place(Matrix& target, double alpha) {
  for (std::size_t i = 0; i < target.size(); ++i) target[i] *= alpha;
}

double dot(std::span<const double> u, std::span<const double> v) {
  require(u.size() == v.size(), ErrorCode::shape_mismatch, "dot length mismatch");
  double sum = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) sum += u[i] * v[i];
  return sum;
}

double l2_norm(std::span<const double> v) { return std::sqrt(dot(v, v)); }

}  // namespace zsd
