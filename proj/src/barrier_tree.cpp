#include "nscbf/barrier_tree.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

namespace nscbf {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void require_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw InvalidArgument(std::string(what) + " must be positive");
  }
}

// Unit direction and Hessian of ||d|| at d.
struct DistanceDerivatives {
  double norm;
  Eigen::Vector2d unit;
  Eigen::Matrix2d hessian;
};

DistanceDerivatives distance_derivatives(const Eigen::Vector2d& d, const std::string& label) {
  const double r = d.norm();
  if (r < kDistanceFloor) {
    throw SingularityError(-1, "leaf '" + label + "': distance " + std::to_string(r) +
                                   " below floor, gradient undefined");
  }
  const Eigen::Vector2d unit = d / r;
  return {r, unit, (Eigen::Matrix2d::Identity() - unit * unit.transpose()) / r};
}

}  // namespace

SmoothBarrier::SmoothBarrier(Kind kind, std::string label)
    : kind_(std::move(kind)), label_(std::move(label)) {
  std::visit(Overloaded{
                 [](const KeepOutDisk& k) {
                   require_positive(k.radius, "keep_out_disk radius");
                   if (k.offset < 0) throw InvalidArgument("keep_out_disk offset < 0");
                 },
                 [](const KeepInDisk& k) {
                   require_positive(k.radius, "keep_in_disk radius");
                   if (k.offset < 0) throw InvalidArgument("keep_in_disk offset < 0");
                 },
                 [](const PairwiseSeparation& k) {
                   require_positive(k.min_distance, "pairwise_separation min_distance");
                   if (k.agent_i < 0 || k.agent_j < 0 || k.agent_i == k.agent_j) {
                     throw InvalidArgument("pairwise_separation needs two distinct agents");
                   }
                   if (k.per_agent_dim < 2) {
                     throw InvalidArgument("pairwise_separation per_agent_dim must be >= 2");
                   }
                 },
             },
             kind_);
  if (label_.empty()) {
    label_ = std::visit(Overloaded{
                            [](const KeepOutDisk&) { return std::string("keep_out_disk"); },
                            [](const KeepInDisk&) { return std::string("keep_in_disk"); },
                            [](const PairwiseSeparation& k) {
                              return "pair(" + std::to_string(k.agent_i) + "," +
                                     std::to_string(k.agent_j) + ")";
                            },
                        },
                        kind_);
  }
}

int SmoothBarrier::required_dim() const noexcept {
  return std::visit(Overloaded{
                        [](const KeepOutDisk& k) { return k.offset + 2; },
                        [](const KeepInDisk& k) { return k.offset + 2; },
                        [](const PairwiseSeparation& k) {
                          return (std::max(k.agent_i, k.agent_j) + 1) * k.per_agent_dim;
                        },
                    },
                    kind_);
}

// Pairwise leaves act on the first two coordinates of each agent block.
double SmoothBarrier::value(const Vector& x) const {
  return std::visit(
      Overloaded{
          [&](const KeepOutDisk& k) {
            return (x.segment<2>(k.offset) - k.center).norm() - k.radius;
          },
          [&](const KeepInDisk& k) {
            return k.radius - (x.segment<2>(k.offset) - k.center).norm();
          },
          [&](const PairwiseSeparation& k) {
            const Eigen::Vector2d d = x.segment<2>(k.agent_i * k.per_agent_dim) -
                                      x.segment<2>(k.agent_j * k.per_agent_dim);
            return d.norm() - k.min_distance;
          },
      },
      kind_);
}

Vector SmoothBarrier::gradient(const Vector& x) const {
  Vector g = Vector::Zero(x.size());
  std::visit(Overloaded{
                 [&](const KeepOutDisk& k) {
                   g.segment<2>(k.offset) =
                       distance_derivatives(x.segment<2>(k.offset) - k.center, label_).unit;
                 },
                 [&](const KeepInDisk& k) {
                   g.segment<2>(k.offset) =
                       -distance_derivatives(x.segment<2>(k.offset) - k.center, label_).unit;
                 },
                 [&](const PairwiseSeparation& k) {
                   const int i = k.agent_i * k.per_agent_dim, j = k.agent_j * k.per_agent_dim;
                   const auto dd =
                       distance_derivatives(x.segment<2>(i) - x.segment<2>(j), label_);
                   g.segment<2>(i) = dd.unit;
                   g.segment<2>(j) = -dd.unit;
                 },
             },
             kind_);
  return g;
}

Matrix SmoothBarrier::hessian(const Vector& x) const {
  Matrix h = Matrix::Zero(x.size(), x.size());
  std::visit(Overloaded{
                 [&](const KeepOutDisk& k) {
                   h.block<2, 2>(k.offset, k.offset) =
                       distance_derivatives(x.segment<2>(k.offset) - k.center, label_).hessian;
                 },
                 [&](const KeepInDisk& k) {
                   h.block<2, 2>(k.offset, k.offset) =
                       -distance_derivatives(x.segment<2>(k.offset) - k.center, label_).hessian;
                 },
                 [&](const PairwiseSeparation& k) {
                   const int i = k.agent_i * k.per_agent_dim, j = k.agent_j * k.per_agent_dim;
                   const Eigen::Matrix2d b =
                       distance_derivatives(x.segment<2>(i) - x.segment<2>(j), label_).hessian;
                   h.block<2, 2>(i, i) = b;
                   h.block<2, 2>(j, j) = b;
                   h.block<2, 2>(i, j) = -b;
                   h.block<2, 2>(j, i) = -b;
                 },
             },
             kind_);
  return h;
}

BarrierTree::Node BarrierTree::leaf(SmoothBarrier barrier) {
  Node n;
  n.op = Node::Op::Leaf;
  n.barrier = std::move(barrier);
  return n;
}

BarrierTree::Node BarrierTree::min(std::vector<Node> children) {
  if (children.empty()) throw InvalidArgument("min node needs at least one child");
  Node n;
  n.op = Node::Op::Min;
  n.children = std::move(children);
  return n;
}

BarrierTree::Node BarrierTree::max(std::vector<Node> children) {
  if (children.empty()) throw InvalidArgument("max node needs at least one child");
  Node n;
  n.op = Node::Op::Max;
  n.children = std::move(children);
  return n;
}

BarrierTree::BarrierTree(Node root, std::optional<int> state_dim) : root_(std::move(root)) {
  int required = 0;
  std::function<void(Node&)> number = [&](Node& node) {
    if (node.op == Node::Op::Leaf) {
      if (!node.barrier) throw InvalidArgument("leaf node without a barrier");
      node.leaf_index = static_cast<int>(leaves_.size());
      leaves_.push_back(*node.barrier);
      required = std::max(required, node.barrier->required_dim());
      return;
    }
    if (node.children.empty()) throw InvalidArgument("min/max node without children");
    for (auto& child : node.children) number(child);
  };
  number(root_);
  state_dim_ = state_dim.value_or(required);
  if (state_dim_ < required) {
    throw DimensionError("barrier tree: state_dim " + std::to_string(state_dim_) +
                         " smaller than the " + std::to_string(required) +
                         " coordinates its leaves read");
  }
}

void BarrierTree::check_dim(const Vector& x) const {
  if (x.size() != state_dim_) {
    throw DimensionError("barrier tree expects state of size " + std::to_string(state_dim_) +
                         ", got " + std::to_string(x.size()));
  }
}

std::vector<double> BarrierTree::leaf_values(const Vector& x) const {
  check_dim(x);
  std::vector<double> values(leaves_.size());
  for (std::size_t i = 0; i < leaves_.size(); ++i) values[i] = leaves_[i].value(x);
  return values;
}

BarrierTree::Selection BarrierTree::select(std::span<const double> values) const {
  if (values.size() != leaves_.size()) {
    throw DimensionError("select: expected one value per leaf");
  }
  std::function<Selection(const Node&)> go = [&](const Node& node) -> Selection {
    if (node.op == Node::Op::Leaf) return {values[node.leaf_index], node.leaf_index};
    Selection best = go(node.children.front());
    for (std::size_t c = 1; c < node.children.size(); ++c) {
      const Selection s = go(node.children[c]);
      const bool better = node.op == Node::Op::Min ? s.value < best.value : s.value > best.value;
      if (better || (s.value == best.value && s.leaf < best.leaf)) best = s;
    }
    return best;
  };
  return go(root_);
}

double BarrierTree::eval(const Vector& x) const { return select(leaf_values(x)).value; }

int BarrierTree::active_leaf(const Vector& x) const { return select(leaf_values(x)).leaf; }

AlmostActiveSet BarrierTree::almost_active(const Vector& x, double epsilon) const {
  return almost_active_from_values(leaf_values(x), epsilon);
}

AlmostActiveSet BarrierTree::almost_active_from_values(std::span<const double> values,
                                                       double epsilon) const {
  if (!(epsilon >= 0.0)) throw InvalidArgument("almost_active: epsilon must be >= 0");
  const Selection sel = select(values);
  AlmostActiveSet set;
  set.active = sel.leaf;
  set.epsilon = epsilon;
  for (int i = 0; i < static_cast<int>(values.size()); ++i) {
    if (i == sel.leaf || std::abs(values[i] - sel.value) <= epsilon) set.near.push_back(i);
  }
  return set;
}

Vector BarrierTree::leaf_gradient(int index, const Vector& x) const {
  check_dim(x);
  try {
    return leaves_.at(index).gradient(x);
  } catch (const SingularityError& e) {
    throw SingularityError(index, e.what());
  }
}

Matrix BarrierTree::leaf_hessian(int index, const Vector& x) const {
  check_dim(x);
  try {
    return leaves_.at(index).hessian(x);
  } catch (const SingularityError& e) {
    throw SingularityError(index, e.what());
  }
}

ReciprocalBarrier reciprocal_barrier(double h, const Vector& grad_h, const Matrix& hess_h) {
  if (!(h >= kBarrierFloor)) {
    throw SingularityError(-1, "reciprocal barrier: h = " + std::to_string(h) +
                                   " at or through the safe-set boundary");
  }
  if (hess_h.rows() != grad_h.size() || hess_h.cols() != grad_h.size()) {
    throw DimensionError("reciprocal_barrier: Hessian/gradient size mismatch");
  }
  const double inv = 1.0 / h;
  const double inv2 = inv * inv;
  return {inv, -grad_h * inv2,
          2.0 * inv2 * inv * (grad_h * grad_h.transpose()) - inv2 * hess_h};
}

}  // namespace nscbf
