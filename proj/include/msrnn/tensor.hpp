#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace msrnn {

/// Raised when operand shapes do not conform.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Dense row-major matrix of doubles.
///
/// A default-constructed matrix is 0x0 and only serves as a placeholder in
/// containers; every public operation requires conforming, non-empty shapes.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix zeros(std::size_t rows, std::size_t cols) { return {rows, cols, 0.0}; }
  static Matrix ones(std::size_t rows, std::size_t cols) { return {rows, cols, 1.0}; }
  static Matrix identity(std::size_t n);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }
  std::span<double> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const noexcept {
    return {data_.data() + r * cols_, cols_};
  }
  double* data() noexcept { return data_.data(); }
  const double* data() const noexcept { return data_.data(); }

  void fill(double v);
  bool all_finite() const noexcept;

  /// "RxC", used in error messages.
  std::string shape_string() const;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

enum class Activation { sigmoid, tanh, relu, identity };

/// Parses "sigmoid" | "tanh" | "relu" | "identity"; anything else throws.
Activation parse_activation(std::string_view tag);
std::string_view to_string(Activation a) noexcept;

double activate(Activation a, double x) noexcept;
/// Derivative expressed through the activation's output y = f(x).
double activation_grad_from_output(Activation a, double y) noexcept;

Matrix matmul(const Matrix& a, const Matrix& b);
Matrix elementwise(const Matrix& a, Activation f);
Matrix add(const Matrix& a, const Matrix& b);
/// Adds a 1xC row vector to every row of a.
Matrix add_row(const Matrix& a, const Matrix& row);
Matrix subtract(const Matrix& a, const Matrix& b);
Matrix hadamard(const Matrix& a, const Matrix& b);
Matrix scale(const Matrix& a, double c);
Matrix transpose(const Matrix& a);

/// Stacks matrices with equal column counts vertically.
Matrix vconcat(std::span<const Matrix> parts);
/// Copies rows [first, first + count).
Matrix slice_rows(const Matrix& a, std::size_t first, std::size_t count);

void require_same_shape(const Matrix& a, const Matrix& b, std::string_view op);

/// xoshiro256** seeded through splitmix64.
///
/// The four state words are the first four splitmix64 outputs for the seed.
/// Doubles are the top 53 bits of a draw scaled by 2^-53, so the stream is
/// bit-identical on every platform with IEEE doubles.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0);

  std::uint64_t next_u64() noexcept;
  /// Uniform in [0, 1).
  double uniform() noexcept;
  double uniform(double lo, double hi);
  /// Uniform integer in [0, n); n > 0.
  std::uint64_t below(std::uint64_t n);
  /// Standard normal via Box-Muller (one value per call, no caching).
  double normal() noexcept;

  /// Independent generator for a labelled sub-stream (e.g. merchant index).
  Rng fork(std::uint64_t stream) const noexcept;

  friend bool operator==(const Rng&, const Rng&) = default;

 private:
  std::uint64_t seed_ = 0;
  std::uint64_t s_[4]{};
};

Matrix rng_uniform(Rng& rng, double lo, double hi, std::size_t rows, std::size_t cols);

/// Fisher-Yates using Rng::below, so shuffles are portable.
template <class T>
void shuffle(std::vector<T>& items, Rng& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.below(i));
    std::swap(items[i - 1], items[j]);
  }
}

}  // namespace msrnn
