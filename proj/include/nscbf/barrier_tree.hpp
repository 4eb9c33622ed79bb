#pragma once

#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "nscbf/error.hpp"

namespace nscbf {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Distances below this are treated as the singular point of a leaf.
inline constexpr double kDistanceFloor = 1e-9;
/// Smallest leaf value accepted by the reciprocal transform B = 1/h.
inline constexpr double kBarrierFloor = 1e-9;

/// h = ||p - center|| - radius, where p = x[offset], x[offset+1].
struct KeepOutDisk {
  Eigen::Vector2d center;
  double radius = 0.0;
  int offset = 0;
};

/// h = radius - ||p - center||.
struct KeepInDisk {
  Eigen::Vector2d center;
  double radius = 0.0;
  int offset = 0;
};

/// h = ||x_i - x_j|| - min_distance on a stacked joint state.
struct PairwiseSeparation {
  int agent_i = 0;
  int agent_j = 1;
  double min_distance = 0.0;
  int per_agent_dim = 2;
};

/// A smooth (C2 away from zero distance) distance-type barrier.
class SmoothBarrier {
 public:
  using Kind = std::variant<KeepOutDisk, KeepInDisk, PairwiseSeparation>;

  SmoothBarrier(Kind kind, std::string label = {});

  const Kind& kind() const noexcept { return kind_; }
  const std::string& label() const noexcept { return label_; }
  /// Minimum state dimension the leaf reads from.
  int required_dim() const noexcept;

  double value(const Vector& x) const;
  /// Throws SingularityError when the underlying distance is below kDistanceFloor.
  Vector gradient(const Vector& x) const;
  Matrix hessian(const Vector& x) const;

 private:
  Kind kind_;
  std::string label_;
};

struct AlmostActiveSet {
  int active = -1;
  std::vector<int> near;  // ascending, always contains `active`
  double epsilon = 0.0;
};

/// Nested min/max composition of smooth leaves. Leaves are numbered
/// 0..N-1 in depth-first order at construction.
class BarrierTree {
 public:
  struct Node {
    enum class Op { Leaf, Min, Max };
    Op op = Op::Leaf;
    std::optional<SmoothBarrier> barrier;
    std::vector<Node> children;
    int leaf_index = -1;
  };

  static Node leaf(SmoothBarrier barrier);
  static Node min(std::vector<Node> children);
  static Node max(std::vector<Node> children);

  /// `state_dim` defaults to the largest dimension any leaf reads.
  explicit BarrierTree(Node root, std::optional<int> state_dim = std::nullopt);

  int state_dim() const noexcept { return state_dim_; }
  int leaf_count() const noexcept { return static_cast<int>(leaves_.size()); }
  const SmoothBarrier& leaf_barrier(int index) const { return leaves_.at(index); }
  const Node& root() const noexcept { return root_; }

  std::vector<double> leaf_values(const Vector& x) const;

  struct Selection {
    double value = 0.0;
    int leaf = -1;
  };
  /// Descends the tree over precomputed leaf values: argmin at min nodes,
  /// argmax at max nodes, lowest leaf index on ties.
  Selection select(std::span<const double> values) const;

  double eval(const Vector& x) const;
  int active_leaf(const Vector& x) const;
  AlmostActiveSet almost_active(const Vector& x, double epsilon) const;
  AlmostActiveSet almost_active_from_values(std::span<const double> values,
                                            double epsilon) const;

  /// Leaf gradient/Hessian with singularities reported against the leaf index.
  Vector leaf_gradient(int index, const Vector& x) const;
  Matrix leaf_hessian(int index, const Vector& x) const;

 private:
  void check_dim(const Vector& x) const;

  Node root_;
  std::vector<SmoothBarrier> leaves_;
  int state_dim_ = 0;
};

struct ReciprocalBarrier {
  double value;
  Vector gradient;
  Matrix hessian;
};

/// B = 1/h with first and second derivatives from those of h.
/// Throws SingularityError (leaf -1) when h < kBarrierFloor.
ReciprocalBarrier reciprocal_barrier(double h, const Vector& grad_h, const Matrix& hess_h);

}  // namespace nscbf
