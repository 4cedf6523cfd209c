#include "slangdef/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "slangdef/errors.hpp"

namespace slangdef {

namespace {

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (!a.same_shape(b)) {
    throw ShapeError(std::string(op) + ": shape mismatch " + a.shape_string() + " vs " +
                     b.shape_string());
  }
}

void require_row(const Matrix& x, const char* op) {
  if (x.rows() != 1 || x.cols() == 0) {
    throw ShapeError(std::string(op) + ": expected a non-empty row vector, got " +
                     x.shape_string());
  }
}

template <typename F>
Matrix map(const Matrix& x, F f) {
  Matrix out(x.rows(), x.cols());
  auto in = x.values();
  auto dst = out.values();
  for (std::size_t i = 0; i < in.size(); ++i) dst[i] = f(in[i]);
  return out;
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {
  if (rows == 0 || cols == 0) {
    throw ShapeError("matrix dimensions must be positive, got " + std::to_string(rows) + "x" +
                     std::to_string(cols));
  }
}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), data_(std::move(values)) {
  if (rows == 0 || cols == 0) {
    throw ShapeError("matrix dimensions must be positive, got " + std::to_string(rows) + "x" +
                     std::to_string(cols));
  }
  if (data_.size() != rows * cols) {
    throw ShapeError("matrix data length " + std::to_string(data_.size()) + " does not match " +
                     shape_string());
  }
}

Matrix Matrix::row(std::initializer_list<double> values) {
  return Matrix(1, values.size(), std::vector<double>(values));
}

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.begin()->size();
  std::vector<double> data;
  data.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw ShapeError("from_rows: ragged rows");
    data.insert(data.end(), row.begin(), row.end());
  }
  return Matrix(r, c, std::move(data));
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::row_at(std::size_t r) const {
  if (r >= rows_) throw RangeError("row " + std::to_string(r) + " out of range for " + shape_string());
  Matrix out(1, cols_);
  std::copy_n(data_.begin() + static_cast<std::ptrdiff_t>(r * cols_), cols_, out.data_.begin());
  return out;
}

void Matrix::set_row(std::size_t r, const Matrix& row) {
  if (r >= rows_) throw RangeError("row " + std::to_string(r) + " out of range for " + shape_string());
  if (row.rows_ != 1 || row.cols_ != cols_) {
    throw ShapeError("set_row: expected 1x" + std::to_string(cols_) + ", got " + row.shape_string());
  }
  std::copy(row.data_.begin(), row.data_.end(),
            data_.begin() + static_cast<std::ptrdiff_t>(r * cols_));
}

std::string Matrix::shape_string() const {
  return std::to_string(rows_) + "x" + std::to_string(cols_);
}

void Matrix::fill(double value) noexcept { std::fill(data_.begin(), data_.end(), value); }

Matrix& Matrix::operator+=(const Matrix& other) {
  require_same_shape(*this, other, "operator+=");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

Matrix& Matrix::operator-=(const Matrix& other) {
  require_same_shape(*this, other, "operator-=");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
  return *this;
}

Matrix& Matrix::operator*=(double s) noexcept {
  for (double& v : data_) v *= s;
  return *this;
}

Matrix& Matrix::add_scaled(const Matrix& other, double s) {
  require_same_shape(*this, other, "add_scaled");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += s * other.data_[i];
  return *this;
}

Matrix operator+(const Matrix& a, const Matrix& b) {
  Matrix out = a;
  out += b;
  return out;
}

Matrix operator-(const Matrix& a, const Matrix& b) {
  Matrix out = a;
  out -= b;
  return out;
}

Matrix operator*(const Matrix& a, double s) {
  Matrix out = a;
  out *= s;
  return out;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: inner dimensions differ, " + a.shape_string() + " * " +
                     b.shape_string());
  }
  const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
  Matrix out(n, m);
  auto av = a.values();
  auto bv = b.values();
  auto ov = out.values();
  for (std::size_t i = 0; i < n; ++i) {
    double* orow = ov.data() + i * m;
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = av[i * k + p];
      const double* brow = bv.data() + p * m;
      for (std::size_t j = 0; j < m; ++j) orow[j] += aip * brow[j];
    }
  }
  return out;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) {
    throw ShapeError("matmul_tn: row counts differ, " + a.shape_string() + "^T * " +
                     b.shape_string());
  }
  const std::size_t k = a.rows(), n = a.cols(), m = b.cols();
  Matrix out(n, m);
  auto av = a.values();
  auto bv = b.values();
  auto ov = out.values();
  for (std::size_t p = 0; p < k; ++p) {
    const double* arow = av.data() + p * n;
    const double* brow = bv.data() + p * m;
    for (std::size_t i = 0; i < n; ++i) {
      const double api = arow[i];
      double* orow = ov.data() + i * m;
      for (std::size_t j = 0; j < m; ++j) orow[j] += api * brow[j];
    }
  }
  return out;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) {
    throw ShapeError("matmul_nt: column counts differ, " + a.shape_string() + " * " +
                     b.shape_string() + "^T");
  }
  const std::size_t n = a.rows(), k = a.cols(), m = b.rows();
  Matrix out(n, m);
  auto av = a.values();
  auto bv = b.values();
  auto ov = out.values();
  for (std::size_t i = 0; i < n; ++i) {
    const double* arow = av.data() + i * k;
    for (std::size_t j = 0; j < m; ++j) {
      const double* brow = bv.data() + j * k;
      double acc = 0.0;
      for (std::size_t p = 0; p < k; ++p) acc += arow[p] * brow[p];
      ov[i * m + j] = acc;
    }
  }
  return out;
}

void add_matmul_tn(Matrix& acc, const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || acc.rows() != a.cols() || acc.cols() != b.cols()) {
    throw ShapeError("add_matmul_tn: " + acc.shape_string() + " += " + a.shape_string() + "^T * " +
                     b.shape_string());
  }
  const std::size_t k = a.rows(), n = a.cols(), m = b.cols();
  auto av = a.values();
  auto bv = b.values();
  auto ov = acc.values();
  for (std::size_t p = 0; p < k; ++p) {
    const double* arow = av.data() + p * n;
    const double* brow = bv.data() + p * m;
    for (std::size_t i = 0; i < n; ++i) {
      const double api = arow[i];
      if (api == 0.0) continue;
      double* orow = ov.data() + i * m;
      for (std::size_t j = 0; j < m; ++j) orow[j] += api * brow[j];
    }
  }
}

Matrix transpose(const Matrix& a) {
  Matrix out(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) out(j, i) = a(i, j);
  return out;
}

Matrix sigmoid(const Matrix& x) {
  return map(x, [](double v) {
    // Split on sign so exp never overflows.
    if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
    const double e = std::exp(v);
    return e / (1.0 + e);
  });
}

Matrix tanh(const Matrix& x) {
  return map(x, [](double v) { return std::tanh(v); });
}

Matrix hadamard(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "hadamard");
  Matrix out(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
  return out;
}

Matrix softmax_row(const Matrix& x) {
  require_row(x, "softmax_row");
  const double mx = *std::max_element(x.values().begin(), x.values().end());
  Matrix out(1, x.cols());
  double total = 0.0;
  for (std::size_t i = 0; i < x.cols(); ++i) {
    out[i] = std::exp(x[i] - mx);
    total += out[i];
  }
  for (std::size_t i = 0; i < x.cols(); ++i) out[i] /= total;
  return out;
}

Matrix log_softmax_row(const Matrix& x) {
  require_row(x, "log_softmax_row");
  const double mx = *std::max_element(x.values().begin(), x.values().end());
  double total = 0.0;
  for (std::size_t i = 0; i < x.cols(); ++i) total += std::exp(x[i] - mx);
  const double lse = mx + std::log(total);
  Matrix out(1, x.cols());
  for (std::size_t i = 0; i < x.cols(); ++i) out[i] = x[i] - lse;
  return out;
}

CrossEntropy cross_entropy(const Matrix& logits, std::size_t target) {
  require_row(logits, "cross_entropy");
  if (target >= logits.cols()) {
    throw RangeError("cross_entropy: target " + std::to_string(target) + " out of range for " +
                     std::to_string(logits.cols()) + " classes");
  }
  const Matrix log_probs = log_softmax_row(logits);
  CrossEntropy ce;
  ce.loss = -log_probs[target];
  ce.grad_logits = Matrix(1, logits.cols());
  for (std::size_t i = 0; i < logits.cols(); ++i) ce.grad_logits[i] = std::exp(log_probs[i]);
  ce.grad_logits[target] -= 1.0;
  return ce;
}

Matrix hconcat(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) {
    throw ShapeError("hconcat: row counts differ, " + a.shape_string() + " vs " + b.shape_string());
  }
  Matrix out(a.rows(), a.cols() + b.cols());
  for (std::size_t r = 0; r < a.rows(); ++r) {
    for (std::size_t c = 0; c < a.cols(); ++c) out(r, c) = a(r, c);
    for (std::size_t c = 0; c < b.cols(); ++c) out(r, a.cols() + c) = b(r, c);
  }
  return out;
}

Matrix slice_cols(const Matrix& a, std::size_t begin, std::size_t count) {
  if (count == 0 || begin + count > a.cols()) {
    throw ShapeError("slice_cols: [" + std::to_string(begin) + ", " + std::to_string(begin + count) +
                     ") outside " + a.shape_string());
  }
  Matrix out(a.rows(), count);
  for (std::size_t r = 0; r < a.rows(); ++r)
    for (std::size_t c = 0; c < count; ++c) out(r, c) = a(r, begin + c);
  return out;
}

Matrix stack_rows(std::span<const Matrix> rows) {
  if (rows.empty()) throw ShapeError("stack_rows: no rows");
  const std::size_t width = rows.front().cols();
  Matrix out(rows.size(), width);
  for (std::size_t r = 0; r < rows.size(); ++r) out.set_row(r, rows[r]);
  return out;
}

Matrix column_sums(const Matrix& a) {
  Matrix out(1, a.cols());
  for (std::size_t r = 0; r < a.rows(); ++r)
    for (std::size_t c = 0; c < a.cols(); ++c) out[c] += a(r, c);
  return out;
}

double sum(const Matrix& a) noexcept {
  double total = 0.0;
  for (double v : a.values()) total += v;
  return total;
}

double squared_norm(const Matrix& a) noexcept {
  double total = 0.0;
  for (double v : a.values()) total += v * v;
  return total;
}

bool all_finite(const Matrix& a) noexcept {
  return std::all_of(a.values().begin(), a.values().end(), [](double v) { return std::isfinite(v); });
}

double max_abs(const Matrix& a) noexcept {
  double m = 0.0;
  for (double v : a.values()) m = std::max(m, std::abs(v));
  return m;
}

}  // namespace slangdef
