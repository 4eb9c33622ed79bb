#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "nscbf/error.hpp"

namespace nscbf {

using Vector = Eigen::VectorXd;

/// Largest number of general rows `solve_qp` accepts.
inline constexpr std::size_t kMaxQPRows = 32;

/// Linear inequality a^T u <= b.
struct QPRow {
  Vector a;
  double b = 0.0;
};

/// minimize ||u - u_ref||^2  s.t.  a_i^T u <= b_i,  lower <= u <= upper.
struct QPProblem {
  Vector u_ref;
  std::vector<QPRow> rows;
  std::optional<Vector> lower;
  std::optional<Vector> upper;
};

enum class QPStatus { Optimal, Infeasible };

/// Multipliers follow the unscaled objective ||u - u_ref||^2, so stationarity
/// reads 2 (u* - u_ref) + sum_i lambda_i a_i = 0.
///
/// Row indices refer to `expanded_rows(p)`: the general rows first, then one
/// row per finite upper bound, then one per finite lower bound.
struct QPSolution {
  Vector u_star;
  std::vector<int> active_rows;
  std::vector<double> multipliers;
  QPStatus status = QPStatus::Optimal;
  /// When infeasible: y >= 0 over the expanded rows with A^T y = 0, b^T y < 0.
  Vector farkas;
  int iterations = 0;
};

std::vector<QPRow> expanded_rows(const QPProblem& p);

/// Dual active-set (Goldfarb-Idnani) solve specialised to the identity
/// Hessian. Starts from the unconstrained minimiser u_ref, so a problem whose
/// rows all hold at u_ref returns u_ref bit-for-bit.
QPSolution solve_qp(const QPProblem& p);

bool verify_kkt(const QPProblem& p, const QPSolution& s, double tol);

}  // namespace nscbf
