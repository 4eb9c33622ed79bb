#include "nscbf/qp_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace nscbf {

namespace {

constexpr double kFeasibilityTol = 1e-12;
constexpr double kDependenceTol = 1e-10;
constexpr double kZeroRowTol = 1e-14;

}  // namespace

std::vector<QPRow> expanded_rows(const QPProblem& p) {
  const auto m = p.u_ref.size();
  std::vector<QPRow> rows = p.rows;
  if (p.upper) {
    for (Eigen::Index i = 0; i < m; ++i) {
      if (std::isfinite((*p.upper)[i])) rows.push_back({Vector::Unit(m, i), (*p.upper)[i]});
    }
  }
  if (p.lower) {
    for (Eigen::Index i = 0; i < m; ++i) {
      if (std::isfinite((*p.lower)[i])) rows.push_back({-Vector::Unit(m, i), -(*p.lower)[i]});
    }
  }
  return rows;
}

QPSolution solve_qp(const QPProblem& p) {
  const auto m = p.u_ref.size();
  if (m < 1) throw DimensionError("solve_qp: u_ref must have at least one entry");
  if (p.rows.size() > kMaxQPRows) {
    throw InvalidArgument("solve_qp: " + std::to_string(p.rows.size()) +
                          " rows exceeds the limit of " + std::to_string(kMaxQPRows));
  }
  if ((p.lower && p.lower->size() != m) || (p.upper && p.upper->size() != m)) {
    throw DimensionError("solve_qp: bound vectors must match u_ref");
  }

  const std::vector<QPRow> rows = expanded_rows(p);
  const int n_rows = static_cast<int>(rows.size());

  QPSolution sol;
  sol.u_star = p.u_ref;

  // Unit-normalised copies; the minimiser is invariant to positive row scaling.
  std::vector<Vector> a(n_rows);
  std::vector<double> b(n_rows), scale(n_rows);
  std::vector<bool> usable(n_rows, true);
  for (int i = 0; i < n_rows; ++i) {
    if (rows[i].a.size() != m || !rows[i].a.allFinite() || !std::isfinite(rows[i].b)) {
      throw DimensionError("solve_qp: row " + std::to_string(i) + " malformed or non-finite");
    }
    scale[i] = rows[i].a.norm();
    if (scale[i] <= kZeroRowTol) {
      usable[i] = false;
      if (rows[i].b < 0.0) {
        sol.status = QPStatus::Infeasible;
        sol.farkas = Vector::Unit(n_rows, i);
        return sol;
      }
      continue;
    }
    a[i] = rows[i].a / scale[i];
    b[i] = rows[i].b / scale[i];
  }

  Vector& u = sol.u_star;
  std::vector<int> active;
  std::vector<double> mu;  // multipliers of 0.5 ||u - u_ref||^2 on normalised rows

  const int max_iterations = 50 * (n_rows + static_cast<int>(m)) + 50;
  auto violation = [&](int j) { return a[j].dot(u) - b[j]; };
  auto tolerance = [&](int j) { return kFeasibilityTol * (1.0 + std::abs(b[j]) + u.norm()); };

  while (true) {
    int p_idx = -1;
    double worst = 0.0;
    for (int j = 0; j < n_rows; ++j) {
      if (!usable[j] || std::find(active.begin(), active.end(), j) != active.end()) continue;
      const double v = violation(j);
      if (v > tolerance(j) && v > worst) {
        worst = v;
        p_idx = j;
      }
    }
    if (p_idx < 0) break;

    double mu_p = 0.0;
    while (true) {
      if (++sol.iterations > max_iterations) {
        throw Error("solve_qp: active-set iteration limit reached");
      }
      const int q = static_cast<int>(active.size());
      Vector z = -a[p_idx];
      Vector r(q);
      if (q > 0) {
        Eigen::MatrixXd N(m, q);
        for (int k = 0; k < q; ++k) N.col(k) = a[active[k]];
        r = N.colPivHouseholderQr().solve(a[p_idx]);
        z = N * r - a[p_idx];
      }

      // Largest dual step keeping active multipliers non-negative.
      double t1 = std::numeric_limits<double>::infinity();
      int blocking = -1;
      for (int k = 0; k < q; ++k) {
        if (r[k] > 0.0) {
          const double t = mu[k] / r[k];
          if (t < t1) {
            t1 = t;
            blocking = k;
          }
        }
      }

      const double z2 = z.squaredNorm();
      const bool dependent = std::sqrt(z2) <= kDependenceTol;
      const double t2 = dependent ? std::numeric_limits<double>::infinity()
                                  : std::max(0.0, violation(p_idx)) / z2;

      if (dependent && blocking < 0) {
        // a_p = N r with r <= 0 and a_p^T u > b_p: Farkas certificate.
        sol.status = QPStatus::Infeasible;
        sol.farkas = Vector::Zero(n_rows);
        sol.farkas[p_idx] = 1.0 / scale[p_idx];
        for (int k = 0; k < q; ++k) sol.farkas[active[k]] = -r[k] / scale[active[k]];
        sol.active_rows.clear();
        sol.multipliers.clear();
        return sol;
      }

      const double t = std::min(t1, t2);
      if (!dependent) u += t * z;
      for (int k = 0; k < q; ++k) mu[k] -= t * r[k];
      mu_p += t;

      if (t2 <= t1) {
        active.push_back(p_idx);
        mu.push_back(mu_p);
        break;
      }
      active.erase(active.begin() + blocking);
      mu.erase(mu.begin() + blocking);
    }
  }

  // Recompute the projection onto the final working set in one solve; the
  // incremental steps lose digits when active rows are nearly parallel.
  if (!active.empty()) {
    const int q = static_cast<int>(active.size());
    Eigen::MatrixXd N(m, q);
    Vector c(q);
    for (int k = 0; k < q; ++k) {
      N.col(k) = a[active[k]];
      c[k] = a[active[k]].dot(p.u_ref) - b[active[k]];
    }
    const Vector delta = N.transpose().completeOrthogonalDecomposition().solve(c);
    const Vector mu_new = N.colPivHouseholderQr().solve(delta);
    const Vector u_new = p.u_ref - delta;
    auto worst_violation = [&](const Vector& x) {
      double w = 0.0;
      for (int j = 0; j < n_rows; ++j) {
        if (usable[j]) w = std::max(w, a[j].dot(x) - b[j]);
      }
      return w;
    };
    if (u_new.allFinite() && mu_new.allFinite() && mu_new.minCoeff() >= -kDependenceTol &&
        worst_violation(u_new) <= worst_violation(u)) {
      u = u_new;
      for (int k = 0; k < q; ++k) mu[k] = std::max(0.0, mu_new[k]);
    }
  }

  std::vector<int> order(active.size());
  for (std::size_t k = 0; k < order.size(); ++k) order[k] = static_cast<int>(k);
  std::sort(order.begin(), order.end(), [&](int l, int r) { return active[l] < active[r]; });
  for (int k : order) {
    sol.active_rows.push_back(active[k]);
    sol.multipliers.push_back(std::max(0.0, 2.0 * mu[k] / scale[active[k]]));
  }
  sol.status = QPStatus::Optimal;
  return sol;
}

bool verify_kkt(const QPProblem& p, const QPSolution& s, double tol) {
  if (s.status != QPStatus::Optimal || s.u_star.size() != p.u_ref.size()) return false;
  if (s.active_rows.size() != s.multipliers.size()) return false;
  const auto rows = expanded_rows(p);

  Vector stationarity = 2.0 * (s.u_star - p.u_ref);
  for (std::size_t k = 0; k < s.active_rows.size(); ++k) {
    const int i = s.active_rows[k];
    if (i < 0 || i >= static_cast<int>(rows.size())) return false;
    const double lambda = s.multipliers[k];
    if (lambda < -tol) return false;
    if (std::abs(lambda * (rows[i].a.dot(s.u_star) - rows[i].b)) > tol) return false;
    stationarity += lambda * rows[i].a;
  }
  if (stationarity.norm() > tol) return false;
  for (const auto& row : rows) {
    if (row.a.dot(s.u_star) > row.b + tol) return false;
  }
  return true;
}

}  // namespace nscbf
