#pragma once

#include <array>
#include <memory>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "l1roc/parameter.hpp"

namespace l1roc {

using Index = Eigen::Index;
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// Uniform tensor grid on an interval or a rectangle.
///
/// `K` is the number of interior nodes per direction, so the spacing is
/// h = (b - a) / (K + 1). Only interior nodes are unknowns. They are numbered
/// row-major: node (i, j) with i along x1 and j along x2 has index j * K + i.
///
/// Boundary nodes that the stencils can touch are numbered separately:
///   1D: 0 = left end, 1 = right end.
///   2D: bottom edge (j = -1) for i = 0..K-1, then top edge (j = K), then left
///       edge (i = -1) for j = 0..K-1, then right edge (i = K). Corners are
///       never referenced and are not numbered.
class Grid {
 public:
  static Grid make(int dim, Index K, std::span<const Interval> bounds);
  static Grid make(int dim, Index K, Interval bounds);

  int dim() const noexcept { return dim_; }
  Index points_per_dim() const noexcept { return K_; }
  Index interior_count() const noexcept { return dim_ == 1 ? K_ : K_ * K_; }
  Index boundary_count() const noexcept { return dim_ == 1 ? 2 : 4 * K_; }
  double step(int d) const { return h_[static_cast<std::size_t>(d)]; }
  const Interval& bounds(int d) const { return bounds_[static_cast<std::size_t>(d)]; }

  /// Coordinate `d` of interior node `node`.
  double coord(Index node, int d) const;
  /// Coordinate `d` of boundary node `b`.
  double boundary_coord(Index b, int d) const;

  Index node(Index i, Index j = 0) const noexcept { return j * K_ + i; }

  /// Interior coordinates as an interior_count x dim matrix.
  Eigen::MatrixXd coordinates() const;

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  int dim_ = 1;
  Index K_ = 0;
  std::array<Interval, 2> bounds_{};
  std::array<double, 2> h_{};
};

/// Linear finite-difference operator on interior unknowns. Dirichlet data
/// enters through `boundary`, which maps boundary node values to interior
/// rows: (A u)_full = interior * u + boundary * g.
struct SparseOperator {
  SparseMatrix interior;
  SparseMatrix boundary;

  Eigen::VectorXd apply(const Eigen::VectorXd& u, const Eigen::VectorXd& g) const;
  Eigen::VectorXd affine(const Eigen::VectorXd& g) const { return boundary * g; }
};

/// Second difference (1D) or 5-point Laplacian (2D).
SparseOperator laplacian(const Grid& grid);
/// Centered first differences, one operator per direction.
std::vector<SparseOperator> gradient(const Grid& grid);
/// (u_{i-1} + u_{i+1}) / 2 in 1D. Combined with the centered gradient this
/// yields the conservative flux difference (u_{i+1}^2 - u_{i-1}^2) / (4h).
SparseOperator neighbor_mean(const Grid& grid);

/// The operators above, assembled once per grid.
struct DifferenceOperators {
  Grid grid;
  SparseOperator laplacian;
  std::vector<SparseOperator> gradient;
  SparseOperator neighbor_mean;  // empty in 2D

  static std::shared_ptr<const DifferenceOperators> build(const Grid& grid);
};

}  // namespace l1roc
