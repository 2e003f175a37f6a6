#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "grcl/numerics.hpp"

namespace grcl {

/// The three per-iteration gradients, all of length P.
struct GradientSet {
  Vector g_t;   // contrastive loss
  Vector g_s;   // source cross-entropy
  Vector g_dm;  // pooled episodic-memory cross-entropy; all zeros when no memory exists
};

enum class ActiveCase { interior, source_active, memory_active, both_active };

const char* to_string(ActiveCase c);

/// Euclidean projection of g_t onto the cone {w : <w, c_i> >= 0 for all i}.
///
/// The update is w = g_t + sum_i u_i c_i with u >= 0, i.e. w = g_t - G^T u
/// for G = -(c_1; c_2; ...). For two constraints c_1 = g_s, c_2 = g_dm.
struct ProjectionResult {
  Vector w;
  Vector u_star;              // one multiplier per constraint
  double objective = 0.0;     // 0.5 |w - g_t|^2
  std::vector<double> slacks; // <w, c_i>
  ActiveCase tag = ActiveCase::interior;
  double tolerance = 0.0;     // eps used for feasibility and KKT checks
};

/// eps = 1e-9 * max(1, |g_t|, |c_i|...)
double projection_tolerance(std::span<const double> g_t, std::span<const Vector> constraints);

/// Closed-form solution of the two-variable dual by enumerating its four
/// active sets and keeping the feasible candidate of least objective.
ProjectionResult project_two(const GradientSet& g);

/// Same projection for n constraints: dual active-set enumeration for n <= 8,
/// accelerated projected gradient on the dual otherwise.
ProjectionResult project_n(std::span<const double> g_t, std::span<const Vector> constraints);

/// Primal oracle: for every subset of constraints, project g_t onto the null
/// space of that subset (Gram-Schmidt basis) and keep the feasible candidate
/// closest to g_t. Exponential in n; meant for verification only.
Vector brute_force_project(std::span<const double> g_t, std::span<const Vector> constraints);

struct KktReport {
  double primal_violation = 0.0;  // max(0, -<w, c_i>)
  double dual_violation = 0.0;    // max(0, -u_i)
  double complementarity = 0.0;   // max |u_i <w, c_i>| / max(1, u_i)
  double stationarity = 0.0;      // |w - g_t - sum u_i c_i|
  double tolerance = 0.0;

  bool satisfied() const {
    return primal_violation <= tolerance && dual_violation <= tolerance &&
           complementarity <= tolerance && stationarity <= tolerance;
  }
};

KktReport check_kkt(std::span<const double> g_t, std::span<const Vector> constraints,
                    const ProjectionResult& result);

}  // namespace grcl
