#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace grcl {

using Vector = std::vector<double>;

/// Dense row-major matrix.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), values(r * c, 0.0) {}

  double& operator()(std::size_t i, std::size_t j) { return values[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return values[i * cols + j]; }

  std::span<const double> row(std::size_t i) const {
    return {values.data() + i * cols, cols};
  }
  std::span<double> row(std::size_t i) { return {values.data() + i * cols, cols}; }
};

// Reductions sum left to right so results are bit-stable across runs.
double dot(std::span<const double> a, std::span<const double> b);
double norm(std::span<const double> a);
double squared_distance(std::span<const double> a, std::span<const double> b);

/// y += alpha * x
void axpy(double alpha, std::span<const double> x, std::span<double> y);
void scale(double alpha, std::span<double> x);

Vector l2_normalize(std::span<const double> a);
Vector log_softmax(std::span<const double> logits);
double log_sum_exp(std::span<const double> values);

bool all_finite(std::span<const double> a);

/// Gram matrix of the given rows: out(i, j) = <rows[i], rows[j]>.
Matrix gram(std::span<const Vector> rows);

/// Solves A x = b for symmetric positive-definite A by Cholesky. Returns
/// nullopt when A is not numerically positive definite.
std::optional<Vector> solve_spd(const Matrix& a, std::span<const double> b);

}  // namespace grcl
