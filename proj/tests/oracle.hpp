// Reference implementations used only by the tests. Everything here is
// written from the shape alone, without the library's layer tables, and
// evaluates in long double.
#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

#include "grcl/model.hpp"
#include "grcl/random.hpp"

namespace oracle {

using grcl::ModelShape;
using LVec = std::vector<long double>;

struct Forward {
  LVec features;
  LVec projector_out;  // before normalization
  LVec embedding;
  LVec logits;
};

// y = W x + b with W row-major [out][in] at flat[at], b right after it.
inline LVec dense(const std::vector<double>& flat, std::size_t& at, std::size_t in,
                  std::size_t out, const LVec& x) {
  LVec y(out);
  for (std::size_t o = 0; o < out; ++o) {
    long double acc = flat[at + in * out + o];
    for (std::size_t i = 0; i < in; ++i) acc += flat[at + o * in + i] * x[i];
    y[o] = acc;
  }
  at += in * out + out;
  return y;
}

inline LVec tanh_all(LVec v) {
  for (auto& e : v) e = std::tanh(e);
  return v;
}

inline Forward forward(const ModelShape& shape, const std::vector<double>& flat,
                       const std::vector<double>& x) {
  std::size_t at = 0;
  LVec h(x.begin(), x.end());
  std::size_t width = shape.input_dim;
  for (std::size_t hidden : shape.encoder_hidden) {
    h = tanh_all(dense(flat, at, width, hidden, h));
    width = hidden;
  }
  Forward f;
  f.features = h;
  const LVec ph = tanh_all(dense(flat, at, width, shape.projector_hidden, h));
  f.projector_out = dense(flat, at, shape.projector_hidden, shape.embed_dim, ph);
  long double n2 = 0.0L;
  for (auto v : f.projector_out) n2 += v * v;
  f.embedding = f.projector_out;
  for (auto& v : f.embedding) v /= std::sqrt(n2);
  f.logits = dense(flat, at, width, shape.num_classes, f.features);
  return f;
}

inline std::size_t param_count(const ModelShape& shape) {
  std::size_t p = 0, width = shape.input_dim;
  for (std::size_t hidden : shape.encoder_hidden) {
    p += width * hidden + hidden;
    width = hidden;
  }
  p += width * shape.projector_hidden + shape.projector_hidden;
  p += shape.projector_hidden * shape.embed_dim + shape.embed_dim;
  p += width * shape.num_classes + shape.num_classes;
  return p;
}

inline long double cross_entropy(const LVec& logits, int label) {
  long double m = logits[0];
  for (auto v : logits) m = std::max(m, v);
  long double z = 0.0L;
  for (auto v : logits) z += std::exp(v - m);
  return m + std::log(z) - logits[label];
}

inline long double dot(const LVec& a, const std::vector<double>& b) {
  long double s = 0.0L;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// -log softmax_0 over [q.k+, q.k-...] / t
inline long double nce(const LVec& q, const std::vector<double>& pos,
                       const std::vector<std::vector<double>>& negs, long double t) {
  if (negs.empty()) return 0.0L;
  std::vector<long double> logits{dot(q, pos) / t};
  for (const auto& k : negs) logits.push_back(dot(q, k) / t);
  long double m = logits[0];
  for (auto v : logits) m = std::max(m, v);
  long double z = 0.0L;
  for (auto v : logits) z += std::exp(v - m);
  return m + std::log(z) - logits[0];
}

// Central difference of f at coordinate i of x.
inline double central_difference(const std::function<long double(const std::vector<double>&)>& f,
                                 std::vector<double> x, std::size_t i, double h) {
  const double x0 = x[i];
  x[i] = x0 + h;
  const long double up = f(x);
  x[i] = x0 - h;
  const long double down = f(x);
  return static_cast<double>((up - down) / (2.0L * h));
}

// |a - n| / max(|a|, |n|, floor); the floor keeps coordinates whose gradient
// is numerically zero from dividing roundoff by roundoff.
inline double relative_error(double analytic, double numeric, double floor = 1e-6) {
  const double scale = std::max({std::fabs(analytic), std::fabs(numeric), floor});
  return std::fabs(analytic - numeric) / scale;
}

inline std::vector<double> random_input(grcl::Rng& rng, std::size_t dim, double spread = 2.0) {
  std::vector<double> x(dim);
  for (double& v : x) v = spread * (2.0 * grcl::uniform01(rng) - 1.0);
  return x;
}

inline std::vector<double> random_unit(grcl::Rng& rng, std::size_t dim) {
  std::vector<double> v(dim);
  long double n2 = 0.0L;
  for (double& e : v) {
    e = grcl::standard_normal(rng);
    n2 += static_cast<long double>(e) * e;
  }
  for (double& e : v) e = static_cast<double>(e / std::sqrt(n2));
  return v;
}

}  // namespace oracle
