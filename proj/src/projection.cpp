#include "grcl/projection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include "grcl/error.hpp"

namespace grcl {

const char* to_string(ActiveCase c) {
  switch (c) {
    case ActiveCase::interior: return "interior";
    case ActiveCase::source_active: return "source-active";
    case ActiveCase::memory_active: return "memory-active";
    case ActiveCase::both_active: return "both-active";
  }
  return "unknown";
}

namespace {

constexpr std::size_t kEnumerationLimit = 8;

void check_inputs(std::span<const double> g_t, std::span<const Vector> constraints) {
  if (!all_finite(g_t)) fail(Errc::numeric, "projection: non-finite g_t");
  for (const Vector& c : constraints) {
    require(c.size() == g_t.size(), Errc::dimension, "projection: constraint length differs");
    if (!all_finite(c)) fail(Errc::numeric, "projection: non-finite constraint gradient");
  }
}

ActiveCase tag_from(std::span<const double> u) {
  const bool first = !u.empty() && u[0] > 0.0;
  const bool second = u.size() > 1 && std::any_of(u.begin() + 1, u.end(), [](double v) {
    return v > 0.0;
  });
  if (first && second) return ActiveCase::both_active;
  if (first) return ActiveCase::source_active;
  if (second) return ActiveCase::memory_active;
  return ActiveCase::interior;
}

ProjectionResult finish(std::span<const double> g_t, std::span<const Vector> constraints,
                        Vector u, Vector w, double tolerance) {
  ProjectionResult r;
  r.w = std::move(w);
  r.objective = 0.5 * squared_distance(r.w, g_t);
  for (const Vector& c : constraints) r.slacks.push_back(dot(r.w, c));
  r.u_star = std::move(u);
  r.tag = tag_from(r.u_star);
  r.tolerance = tolerance;
  return r;
}

ProjectionResult finish(std::span<const double> g_t, std::span<const Vector> constraints,
                        Vector u, double tolerance) {
  Vector w(g_t.begin(), g_t.end());
  for (std::size_t i = 0; i < constraints.size(); ++i) {
    if (u[i] != 0.0) axpy(u[i], constraints[i], w);
  }
  return finish(g_t, constraints, std::move(u), std::move(w), tolerance);
}

struct Candidate {
  Vector u;
  Vector w;
};

// Stationary point with the constraints in `active` held at equality:
// w = g_t - Q Q^T g_t with C_A = Q R from Gram-Schmidt, and R u_A = -Q^T g_t.
// Working in the primal avoids squaring the condition number of C_A, which
// matters when constraint gradients are nearly (anti)parallel. Returns
// nullopt when the active columns are dependent or a multiplier is negative;
// some smaller active set then describes the same point.
std::optional<Candidate> active_candidate(std::span<const double> g_t,
                                          std::span<const Vector> constraints,
                                          std::span<const std::size_t> active) {
  const std::size_t m = active.size();
  std::vector<Vector> q;
  Matrix r(m, m);
  for (std::size_t a = 0; a < m; ++a) {
    const Vector& c = constraints[active[a]];
    const double original = norm(c);
    if (original == 0.0) return std::nullopt;
    Vector v = c;
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t b = 0; b < a; ++b) {
        const double proj = dot(q[b], v);
        r(b, a) += proj;
        axpy(-proj, q[b], v);
      }
    }
    const double residual = norm(v);
    if (residual <= 1e-12 * original) return std::nullopt;
    r(a, a) = residual;
    scale(1.0 / residual, v);
    q.push_back(std::move(v));
  }

  Candidate out;
  out.w.assign(g_t.begin(), g_t.end());
  Vector rhs(m);
  for (std::size_t a = 0; a < m; ++a) {
    rhs[a] = -dot(q[a], g_t);
  }
  for (std::size_t a = 0; a < m; ++a) axpy(rhs[a], q[a], out.w);
  for (std::size_t a = 0; a < m; ++a) {
    const double extra = dot(q[a], out.w);  // re-orthogonalize
    axpy(-extra, q[a], out.w);
  }

  Vector ua(m);
  for (std::size_t a = m; a-- > 0;) {
    double v = rhs[a];
    for (std::size_t b = a + 1; b < m; ++b) v -= r(a, b) * ua[b];
    ua[a] = v / r(a, a);
    if (!(ua[a] >= 0.0)) return std::nullopt;
  }
  out.u.assign(constraints.size(), 0.0);
  for (std::size_t a = 0; a < m; ++a) out.u[active[a]] = ua[a];
  return out;
}

// Enumerates active sets; keeps the primal feasible candidate closest to g_t.
std::optional<Candidate> enumerate_active_sets(std::span<const double> g_t,
                                               std::span<const Vector> constraints, double tol) {
  const std::size_t n = constraints.size();
  std::optional<Candidate> best;
  double best_dist = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> active;
  for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
    active.clear();
    for (std::size_t i = 0; i < n; ++i) {
      if (mask & (std::size_t{1} << i)) active.push_back(i);
    }
    auto cand = active_candidate(g_t, constraints, active);
    if (!cand) continue;
    bool feasible = true;
    for (std::size_t i = 0; i < n && feasible; ++i) feasible = dot(cand->w, constraints[i]) >= -tol;
    if (!feasible) continue;
    const double dist = squared_distance(cand->w, g_t);
    if (dist < best_dist) {
      best_dist = dist;
      best = std::move(cand);
    }
  }
  return best;
}

// Accelerated projected gradient on min 0.5 u^T K u + b^T u, u >= 0.
Vector dual_projected_gradient(std::span<const double> g_t, std::span<const Vector> constraints) {
  const std::size_t n = constraints.size();
  const Matrix k = gram(constraints);
  Vector b(n);
  for (std::size_t i = 0; i < n; ++i) b[i] = dot(constraints[i], g_t);

  // Gershgorin bound on the largest eigenvalue.
  double lipschitz = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < n; ++j) row += std::abs(k(i, j));
    lipschitz = std::max(lipschitz, row);
  }
  Vector u(n, 0.0);
  if (lipschitz == 0.0) return u;
  const double step = 1.0 / lipschitz;

  Vector y = u;
  double t = 1.0;
  constexpr std::size_t kMaxIter = 2'000'000;
  for (std::size_t it = 0; it < kMaxIter; ++it) {
    Vector next(n);
    for (std::size_t i = 0; i < n; ++i) {
      double grad = b[i];
      for (std::size_t j = 0; j < n; ++j) grad += k(i, j) * y[j];
      next[i] = std::max(0.0, y[i] - step * grad);
    }
    double change = 0.0;
    double restart = 0.0;  // gradient-based restart test
    for (std::size_t i = 0; i < n; ++i) {
      change = std::max(change, std::abs(next[i] - u[i]));
      restart += (y[i] - next[i]) * (next[i] - u[i]);
    }
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    if (restart > 0.0) {
      y = next;
      t = 1.0;
    } else {
      for (std::size_t i = 0; i < n; ++i) {
        y[i] = next[i] + ((t - 1.0) / t_next) * (next[i] - u[i]);
      }
      t = t_next;
    }
    u = std::move(next);
    if (change < 1e-10) break;
  }
  return u;
}

}  // namespace

double projection_tolerance(std::span<const double> g_t, std::span<const Vector> constraints) {
  double scale = std::max(1.0, norm(g_t));
  for (const Vector& c : constraints) scale = std::max(scale, norm(c));
  return 1e-9 * scale;
}

ProjectionResult project_two(const GradientSet& g) {
  const std::vector<Vector> cs{g.g_s, g.g_dm};
  check_inputs(g.g_t, cs);
  const double tol = projection_tolerance(g.g_t, cs);

  if (auto c = enumerate_active_sets(g.g_t, cs, tol)) {
    return finish(g.g_t, cs, std::move(c->u), std::move(c->w), tol);
  }
  // Only reachable through severe cancellation; the iterative dual solver
  // still returns the projection.
  return finish(g.g_t, cs, dual_projected_gradient(g.g_t, cs), tol);
}

ProjectionResult project_n(std::span<const double> g_t, std::span<const Vector> constraints) {
  check_inputs(g_t, constraints);
  const double tol = projection_tolerance(g_t, constraints);
  if (constraints.empty()) return finish(g_t, constraints, {}, tol);
  if (constraints.size() <= kEnumerationLimit) {
    if (auto c = enumerate_active_sets(g_t, constraints, tol)) {
      return finish(g_t, constraints, std::move(c->u), std::move(c->w), tol);
    }
  }
  Vector u = dual_projected_gradient(g_t, constraints);
  // Polish: re-solve exactly on the support the iterative solver found.
  std::vector<std::size_t> support;
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (u[i] > 0.0) support.push_back(i);
  }
  if (auto c = active_candidate(g_t, constraints, support)) {
    bool feasible = true;
    for (const Vector& con : constraints) feasible = feasible && dot(c->w, con) >= -tol;
    if (feasible) return finish(g_t, constraints, std::move(c->u), std::move(c->w), tol);
  }
  return finish(g_t, constraints, std::move(u), tol);
}

Vector brute_force_project(std::span<const double> g_t, std::span<const Vector> constraints) {
  check_inputs(g_t, constraints);
  const std::size_t n = constraints.size();
  require(n < 20, Errc::contract_violation, "brute_force_project: too many constraints");
  const double tol = projection_tolerance(g_t, constraints);

  Vector best;
  double best_dist = std::numeric_limits<double>::infinity();
  for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
    // Orthonormal basis of span{c_i : i in mask}; dependent vectors drop out.
    std::vector<Vector> basis;
    for (std::size_t i = 0; i < n; ++i) {
      if (!(mask & (std::size_t{1} << i))) continue;
      Vector v = constraints[i];
      const double original = norm(v);
      for (int pass = 0; pass < 2; ++pass) {
        for (const Vector& q : basis) axpy(-dot(q, v), q, v);
      }
      const double residual = norm(v);
      if (residual <= 1e-12 * std::max(original, 1e-300)) continue;
      scale(1.0 / residual, v);
      basis.push_back(std::move(v));
    }
    Vector w(g_t.begin(), g_t.end());
    for (const Vector& q : basis) axpy(-dot(q, w), q, w);

    bool feasible = true;
    for (const Vector& c : constraints) {
      if (dot(w, c) < -tol) {
        feasible = false;
        break;
      }
    }
    if (!feasible) continue;
    const double dist = squared_distance(w, g_t);
    if (dist < best_dist) {
      best_dist = dist;
      best = std::move(w);
    }
  }
  // The null space of all constraints is always feasible, so best is set.
  return best;
}

KktReport check_kkt(std::span<const double> g_t, std::span<const Vector> constraints,
                    const ProjectionResult& result) {
  KktReport rep;
  rep.tolerance = projection_tolerance(g_t, constraints);
  Vector residual = result.w;
  axpy(-1.0, g_t, residual);
  for (std::size_t i = 0; i < constraints.size(); ++i) {
    const double slack = dot(result.w, constraints[i]);
    const double u = result.u_star[i];
    rep.primal_violation = std::max(rep.primal_violation, -slack);
    rep.dual_violation = std::max(rep.dual_violation, -u);
    rep.complementarity = std::max(rep.complementarity, std::abs(u * slack) / std::max(1.0, u));
    axpy(-u, constraints[i], residual);
  }
  rep.stationarity = norm(residual);
  return rep;
}

}  // namespace grcl
