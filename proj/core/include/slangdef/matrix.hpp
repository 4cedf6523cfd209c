#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace slangdef {

/// Dense row-major matrix of doubles.
///
/// Every activation vector in the library is a 1 x n row vector and every
/// weight multiplies from the right (`y = x W`). A default-constructed
/// matrix is the 0 x 0 placeholder; any matrix built with explicit
/// dimensions has rows, cols >= 1.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> values);

  static Matrix row(std::initializer_list<double> values);
  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);
  static Matrix identity(std::size_t n);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }
  double& operator[](std::size_t i) noexcept { return data_[i]; }
  double operator[](std::size_t i) const noexcept { return data_[i]; }

  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }

  /// Copy of row `r` as a 1 x cols matrix.
  Matrix row_at(std::size_t r) const;
  void set_row(std::size_t r, const Matrix& row);

  bool same_shape(const Matrix& other) const noexcept {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }
  std::string shape_string() const;

  void fill(double value) noexcept;
  Matrix& operator+=(const Matrix& other);
  Matrix& operator-=(const Matrix& other);
  Matrix& operator*=(double s) noexcept;
  /// this += s * other
  Matrix& add_scaled(const Matrix& other, double s);

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix operator+(const Matrix& a, const Matrix& b);
Matrix operator-(const Matrix& a, const Matrix& b);
Matrix operator*(const Matrix& a, double s);

Matrix matmul(const Matrix& a, const Matrix& b);
/// a^T * b without materializing the transpose.
Matrix matmul_tn(const Matrix& a, const Matrix& b);
/// a * b^T without materializing the transpose.
Matrix matmul_nt(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& a);
/// acc += a^T * b, accumulating in place.
void add_matmul_tn(Matrix& acc, const Matrix& a, const Matrix& b);

Matrix sigmoid(const Matrix& x);
Matrix tanh(const Matrix& x);
Matrix hadamard(const Matrix& a, const Matrix& b);

/// Numerically stable softmax of a single row (max-subtracted).
Matrix softmax_row(const Matrix& x);
Matrix log_softmax_row(const Matrix& x);

struct CrossEntropy {
  double loss = 0.0;
  Matrix grad_logits;
};

/// -log softmax(logits)[target] and its gradient softmax - onehot(target).
CrossEntropy cross_entropy(const Matrix& logits, std::size_t target);

/// Row-vector concatenation [a, b].
Matrix hconcat(const Matrix& a, const Matrix& b);
Matrix slice_cols(const Matrix& a, std::size_t begin, std::size_t count);
/// Stack 1 x n rows into a T x n matrix.
Matrix stack_rows(std::span<const Matrix> rows);
/// Column sums as a 1 x cols row.
Matrix column_sums(const Matrix& a);

double sum(const Matrix& a) noexcept;
double squared_norm(const Matrix& a) noexcept;
bool all_finite(const Matrix& a) noexcept;
double max_abs(const Matrix& a) noexcept;

}  // namespace slangdef
