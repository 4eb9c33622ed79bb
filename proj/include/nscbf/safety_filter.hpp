#pragma once

#include <optional>
#include <vector>

#include "nscbf/barrier_tree.hpp"
#include "nscbf/dynamics.hpp"
#include "nscbf/qp_solver.hpp"

namespace nscbf {

/// Strictly increasing alpha: [0, inf) -> [0, inf) with alpha(0) = 0.
class ClassK {
 public:
  enum class Kind { Identity, Linear, Power };

  static ClassK identity() { return ClassK(Kind::Identity, 1.0, 1.0); }
  static ClassK linear(double gain);
  static ClassK power(double exponent, double gain);

  Kind kind() const noexcept { return kind_; }
  double gain() const noexcept { return gain_; }
  double exponent() const noexcept { return exponent_; }

  /// Negative arguments are mapped to -alpha(-h).
  double operator()(double h) const;

 private:
  ClassK(Kind kind, double gain, double exponent)
      : kind_(kind), gain_(gain), exponent_(exponent) {}

  Kind kind_;
  double gain_;
  double exponent_;
};

/// a^T u <= b for one barrier leaf.
struct ConstraintRow {
  Vector a;
  double b = 0.0;
  int leaf_index = -1;
};

/// Row for leaf i with B_i = 1/h_i:
///   dB/dx (f + g u) + 1/2 tr(sigma^T d2B/dx2 sigma) <= alpha3(h_i),
/// i.e. a = g^T grad B and b = alpha3(h_i) - grad B^T f - 1/2 tr(...).
ConstraintRow constraint_row(const SDEModel& model, const BarrierTree& tree, int leaf_index,
                             const Vector& x, const ClassK& alpha3);

struct InputBox {
  Vector lower;
  Vector upper;
};

struct FilterOptions {
  double epsilon = 0.05;
  ClassK alpha3 = ClassK::identity();
  std::optional<InputBox> bounds;
  /// Quadratic weight of a shared non-negative slack on every row; unset
  /// means hard constraints.
  std::optional<double> slack_penalty;
};

struct FilterResult {
  Vector u;
  std::vector<ConstraintRow> rows;
  /// Almost-active leaves left out because their value is below kBarrierFloor
  /// (a losing disjunct of a max node; the reciprocal barrier is undefined there).
  std::vector<int> skipped_leaves;
  QPSolution qp;
  double slack = 0.0;
};

class InfeasibleFilterError : public Error {
 public:
  InfeasibleFilterError(std::vector<ConstraintRow> rows, Vector farkas);

  const std::vector<ConstraintRow>& rows() const noexcept { return rows_; }
  const Vector& farkas() const noexcept { return farkas_; }

 private:
  std::vector<ConstraintRow> rows_;
  Vector farkas_;
};

/// Minimum-norm correction of u_ref subject to one row per almost-active leaf.
FilterResult filter_control(const SDEModel& model, const BarrierTree& tree, const Vector& x,
                            const Vector& u_ref, const FilterOptions& options = {});

}  // namespace nscbf
