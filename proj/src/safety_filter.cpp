#include "nscbf/safety_filter.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace nscbf {

ClassK ClassK::linear(double gain) {
  if (!(gain > 0.0) || !std::isfinite(gain)) throw InvalidArgument("class-K gain must be > 0");
  return ClassK(Kind::Linear, gain, 1.0);
}

ClassK ClassK::power(double exponent, double gain) {
  if (!(gain > 0.0) || !std::isfinite(gain)) throw InvalidArgument("class-K gain must be > 0");
  if (!(exponent > 0.0) || !std::isfinite(exponent)) {
    throw InvalidArgument("class-K exponent must be > 0");
  }
  return ClassK(Kind::Power, gain, exponent);
}

double ClassK::operator()(double h) const {
  switch (kind_) {
    case Kind::Identity:
      return h;
    case Kind::Linear:
      return gain_ * h;
    case Kind::Power:
      return std::copysign(gain_ * std::pow(std::abs(h), exponent_), h);
  }
  return h;
}

ConstraintRow constraint_row(const SDEModel& model, const BarrierTree& tree, int leaf_index,
                             const Vector& x, const ClassK& alpha3) {
  if (x.size() != model.state_dim || tree.state_dim() != model.state_dim) {
    throw DimensionError("constraint_row: model/tree/state dimensions disagree");
  }
  const double h = tree.leaf_barrier(leaf_index).value(x);
  ReciprocalBarrier B{0.0, {}, {}};
  try {
    B = reciprocal_barrier(h, tree.leaf_gradient(leaf_index, x), tree.leaf_hessian(leaf_index, x));
  } catch (const SingularityError& e) {
    throw SingularityError(leaf_index, "leaf " + std::to_string(leaf_index) + ": " + e.what());
  }

  const Matrix sigma = model.diffusion(x);
  const double ito = 0.5 * (B.hessian * sigma).cwiseProduct(sigma).sum();

  ConstraintRow row;
  row.a = model.input_matrix(x).transpose() * B.gradient;
  row.b = alpha3(h) - B.gradient.dot(model.drift(x)) - ito;
  row.leaf_index = leaf_index;
  return row;
}

InfeasibleFilterError::InfeasibleFilterError(std::vector<ConstraintRow> rows, Vector farkas)
    : Error("safety filter QP infeasible over " + std::to_string(rows.size()) + " rows"),
      rows_(std::move(rows)),
      farkas_(std::move(farkas)) {}

FilterResult filter_control(const SDEModel& model, const BarrierTree& tree, const Vector& x,
                            const Vector& u_ref, const FilterOptions& options) {
  if (u_ref.size() != model.input_dim) {
    throw DimensionError("filter_control: u_ref has size " + std::to_string(u_ref.size()) +
                         ", model expects " + std::to_string(model.input_dim));
  }
  const auto values = tree.leaf_values(x);
  const AlmostActiveSet near = tree.almost_active_from_values(values, options.epsilon);

  FilterResult result;
  for (int leaf : near.near) {
    if (leaf != near.active && values[leaf] < kBarrierFloor) {
      result.skipped_leaves.push_back(leaf);
      continue;
    }
    result.rows.push_back(constraint_row(model, tree, leaf, x, options.alpha3));
  }

  const auto m = u_ref.size();
  QPProblem qp;
  if (!options.slack_penalty) {
    qp.u_ref = u_ref;
    for (const auto& r : result.rows) qp.rows.push_back({r.a, r.b});
    if (options.bounds) {
      qp.lower = options.bounds->lower;
      qp.upper = options.bounds->upper;
    }
    result.qp = solve_qp(qp);
    if (result.qp.status == QPStatus::Infeasible) {
      throw InfeasibleFilterError(result.rows, result.qp.farkas);
    }
    result.u = result.qp.u_star;
    return result;
  }

  // Slack s >= 0 on every row with penalty w s^2; solved in (u, sqrt(w) s)
  // so the Hessian stays the identity.
  const double w = *options.slack_penalty;
  if (!(w > 0.0) || !std::isfinite(w)) throw InvalidArgument("slack_penalty must be > 0");
  const double inv_sqrt_w = 1.0 / std::sqrt(w);
  qp.u_ref = Vector::Zero(m + 1);
  qp.u_ref.head(m) = u_ref;
  for (const auto& r : result.rows) {
    Vector a(m + 1);
    a << r.a, -inv_sqrt_w;
    qp.rows.push_back({a, r.b});
  }
  const double inf = std::numeric_limits<double>::infinity();
  qp.lower = Vector::Constant(m + 1, -inf);
  qp.upper = Vector::Constant(m + 1, inf);
  (*qp.lower)[m] = 0.0;
  if (options.bounds) {
    qp.lower->head(m) = options.bounds->lower;
    qp.upper->head(m) = options.bounds->upper;
  }
  result.qp = solve_qp(qp);
  if (result.qp.status == QPStatus::Infeasible) {
    throw InfeasibleFilterError(result.rows, result.qp.farkas);
  }
  result.u = result.qp.u_star.head(m);
  result.slack = result.qp.u_star[m] * inv_sqrt_w;
  return result;
}

}  // namespace nscbf
