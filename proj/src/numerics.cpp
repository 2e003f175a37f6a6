#include "grcl/numerics.hpp"

#include <algorithm>
#include <cmath>

#include "grcl/error.hpp"

namespace grcl {

const char* errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::dimension: return "dimension";
    case Errc::degenerate_input: return "degenerate_input";
    case Errc::contract_violation: return "contract_violation";
    case Errc::missing_entry: return "missing_entry";
    case Errc::insufficient_negatives: return "insufficient_negatives";
    case Errc::numeric: return "numeric";
    case Errc::invalid_config: return "invalid_config";
    case Errc::io: return "io";
  }
  return "unknown";
}

double dot(std::span<const double> a, std::span<const double> b) {
  require(a.size() == b.size(), Errc::dimension, "dot: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

double squared_distance(std::span<const double> a, std::span<const double> b) {
  require(a.size() == b.size(), Errc::dimension, "squared_distance: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  require(x.size() == y.size(), Errc::dimension, "axpy: length mismatch");
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

void scale(double alpha, std::span<double> x) {
  for (double& v : x) v *= alpha;
}

Vector l2_normalize(std::span<const double> a) {
  const double n = norm(a);
  if (!(n > 0.0) || !std::isfinite(n)) {
    fail(Errc::degenerate_input, "l2_normalize: zero or non-finite vector");
  }
  Vector out(a.begin(), a.end());
  for (double& v : out) v /= n;
  return out;
}

double log_sum_exp(std::span<const double> values) {
  require(!values.empty(), Errc::dimension, "log_sum_exp: empty input");
  const double peak = *std::max_element(values.begin(), values.end());
  double s = 0.0;
  for (double v : values) s += std::exp(v - peak);
  return peak + std::log(s);
}

Vector log_softmax(std::span<const double> logits) {
  require(!logits.empty(), Errc::dimension, "log_softmax: empty input");
  const double lse = log_sum_exp(logits);
  Vector out(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) out[i] = logits[i] - lse;
  return out;
}

bool all_finite(std::span<const double> a) {
  return std::all_of(a.begin(), a.end(), [](double v) { return std::isfinite(v); });
}

Matrix gram(std::span<const Vector> rows) {
  Matrix g(rows.size(), rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = i; j < rows.size(); ++j) {
      g(i, j) = g(j, i) = dot(rows[i], rows[j]);
    }
  }
  return g;
}

std::optional<Vector> solve_spd(const Matrix& a, std::span<const double> b) {
  require(a.rows == a.cols && a.rows == b.size(), Errc::dimension, "solve_spd: shape mismatch");
  const std::size_t n = a.rows;
  Matrix l(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double d = a(j, j);
    for (std::size_t k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
    if (!(d > 0.0)) return std::nullopt;
    l(j, j) = std::sqrt(d);
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = a(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = s / l(j, j);
    }
  }
  Vector x(b.begin(), b.end());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < i; ++k) x[i] -= l(i, k) * x[k];
    x[i] /= l(i, i);
  }
  for (std::size_t i = n; i-- > 0;) {
    for (std::size_t k = i + 1; k < n; ++k) x[i] -= l(k, i) * x[k];
    x[i] /= l(i, i);
  }
  return x;
}

}  // namespace grcl
