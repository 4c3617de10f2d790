#include "l1roc/grid.hpp"

#include <cmath>

#include "l1roc/errors.hpp"

namespace l1roc {

using Triplets = std::vector<Eigen::Triplet<double>>;

Grid Grid::make(int dim, Index K, std::span<const Interval> bounds) {
  if (dim != 1 && dim != 2) throw InvalidArgument("grid: dimension must be 1 or 2");
  if (K < 2) throw InvalidArgument("grid: need at least 2 interior points per direction");
  if (bounds.size() != static_cast<std::size_t>(dim))
    throw InvalidArgument("grid: one interval per direction required");
  Grid g;
  g.dim_ = dim;
  g.K_ = K;
  for (int d = 0; d < dim; ++d) {
    const auto& b = bounds[static_cast<std::size_t>(d)];
    if (!(b.lo < b.hi) || !std::isfinite(b.lo) || !std::isfinite(b.hi))
      throw InvalidArgument("grid: degenerate bounds");
    g.bounds_[static_cast<std::size_t>(d)] = b;
    g.h_[static_cast<std::size_t>(d)] = b.width() / double(K + 1);
  }
  return g;
}

Grid Grid::make(int dim, Index K, Interval bounds) {
  const std::array<Interval, 2> b{bounds, bounds};
  return make(dim, K, std::span<const Interval>(b.data(), static_cast<std::size_t>(dim)));
}

double Grid::coord(Index node, int d) const {
  const Index i = dim_ == 1 ? node : (d == 0 ? node % K_ : node / K_);
  return bounds_[static_cast<std::size_t>(d)].lo + double(i + 1) * h_[static_cast<std::size_t>(d)];
}

double Grid::boundary_coord(Index b, int d) const {
  if (dim_ == 1) return b == 0 ? bounds_[0].lo : bounds_[0].hi;
  const Index side = b / K_;
  const Index k = b % K_;
  const auto& bx = bounds_[0];
  const auto& by = bounds_[1];
  // i, j in the extended index range [-1, K]
  Index i = 0, j = 0;
  switch (side) {
    case 0: i = k; j = -1; break;
    case 1: i = k; j = K_; break;
    case 2: i = -1; j = k; break;
    default: i = K_; j = k; break;
  }
  return d == 0 ? bx.lo + double(i + 1) * h_[0] : by.lo + double(j + 1) * h_[1];
}

Eigen::MatrixXd Grid::coordinates() const {
  Eigen::MatrixXd x(interior_count(), dim_);
  for (Index n = 0; n < interior_count(); ++n)
    for (int d = 0; d < dim_; ++d) x(n, d) = coord(n, d);
  return x;
}

Eigen::VectorXd SparseOperator::apply(const Eigen::VectorXd& u, const Eigen::VectorXd& g) const {
  if (u.size() != interior.cols()) throw InvalidArgument("operator: state has wrong length");
  Eigen::VectorXd out = interior * u;
  if (boundary.cols() > 0) {
    if (g.size() != boundary.cols()) throw InvalidArgument("operator: boundary data has wrong length");
    out += boundary * g;
  }
  return out;
}

namespace {

// Adds weight * u(i + di, j + dj) to row `row`, routing off-grid neighbours
// to the boundary block.
struct StencilBuilder {
  const Grid& grid;
  Triplets inner, bnd;

  void add(Index row, Index i, Index j, double w) {
    const Index K = grid.points_per_dim();
    if (grid.dim() == 1) {
      if (i < 0) bnd.emplace_back(row, 0, w);
      else if (i >= K) bnd.emplace_back(row, 1, w);
      else inner.emplace_back(row, i, w);
      return;
    }
    if (i >= 0 && i < K && j >= 0 && j < K) inner.emplace_back(row, grid.node(i, j), w);
    else if (j < 0) bnd.emplace_back(row, i, w);
    else if (j >= K) bnd.emplace_back(row, K + i, w);
    else if (i < 0) bnd.emplace_back(row, 2 * K + j, w);
    else bnd.emplace_back(row, 3 * K + j, w);
  }

  SparseOperator finish() {
    SparseOperator op;
    const Index n = grid.interior_count();
    op.interior.resize(n, n);
    op.interior.setFromTriplets(inner.begin(), inner.end());
    op.boundary.resize(n, grid.boundary_count());
    op.boundary.setFromTriplets(bnd.begin(), bnd.end());
    op.interior.makeCompressed();
    op.boundary.makeCompressed();
    return op;
  }
};

template <typename Fn>
void for_each_node(const Grid& g, Fn&& fn) {
  const Index K = g.points_per_dim();
  if (g.dim() == 1) {
    for (Index i = 0; i < K; ++i) fn(i, i, Index{0});
  } else {
    for (Index j = 0; j < K; ++j)
      for (Index i = 0; i < K; ++i) fn(g.node(i, j), i, j);
  }
}

}  // namespace

SparseOperator laplacian(const Grid& grid) {
  StencilBuilder b{grid, {}, {}};
  const double cx = 1.0 / (grid.step(0) * grid.step(0));
  const double cy = grid.dim() == 2 ? 1.0 / (grid.step(1) * grid.step(1)) : 0.0;
  for_each_node(grid, [&](Index row, Index i, Index j) {
    b.add(row, i - 1, j, cx);
    b.add(row, i + 1, j, cx);
    if (grid.dim() == 2) {
      b.add(row, i, j - 1, cy);
      b.add(row, i, j + 1, cy);
    }
    b.add(row, i, j, -2.0 * (cx + cy));
  });
  return b.finish();
}

std::vector<SparseOperator> gradient(const Grid& grid) {
  std::vector<SparseOperator> ops;
  for (int d = 0; d < grid.dim(); ++d) {
    StencilBuilder b{grid, {}, {}};
    const double c = 0.5 / grid.step(d);
    for_each_node(grid, [&](Index row, Index i, Index j) {
      if (d == 0) {
        b.add(row, i - 1, j, -c);
        b.add(row, i + 1, j, c);
      } else {
        b.add(row, i, j - 1, -c);
        b.add(row, i, j + 1, c);
      }
    });
    ops.push_back(b.finish());
  }
  return ops;
}

SparseOperator neighbor_mean(const Grid& grid) {
  if (grid.dim() != 1) throw InvalidArgument("neighbor_mean: only defined on 1D grids");
  StencilBuilder b{grid, {}, {}};
  for_each_node(grid, [&](Index row, Index i, Index j) {
    b.add(row, i - 1, j, 0.5);
    b.add(row, i + 1, j, 0.5);
  });
  return b.finish();
}

std::shared_ptr<const DifferenceOperators> DifferenceOperators::build(const Grid& grid) {
  auto ops = std::make_shared<DifferenceOperators>();
  ops->grid = grid;
  ops->laplacian = l1roc::laplacian(grid);
  ops->gradient = l1roc::gradient(grid);
  if (grid.dim() == 1) ops->neighbor_mean = l1roc::neighbor_mean(grid);
  return ops;
}

}  // namespace l1roc
