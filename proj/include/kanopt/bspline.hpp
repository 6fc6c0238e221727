#pragma once

#include <span>
#include <vector>

#include "kanopt/errors.hpp"
#include "kanopt/matrix.hpp"

namespace kanopt {

/// Uniform extended knot grid for B-splines of a fixed degree.
///
/// The knot vector has `intervals + 2*order + 1` entries spaced by
/// `cell()`, extending `order` cells beyond each side of [lower, upper],
/// which yields `intervals + order` basis functions forming a partition of
/// unity on [lower, upper].
struct SplineGrid {
  double lower = -1.0;
  double upper = 1.0;
  int intervals = 5;  // G
  int order = 3;      // k

  double cell() const { return (upper - lower) / intervals; }
  int basis_count() const { return intervals + order; }
  int knot_count() const { return intervals + 2 * order + 1; }
  double knot(int j) const { return lower + (j - order) * cell(); }

  void validate() const {
    if (!(lower < upper)) throw Error("spline grid: lower must be < upper");
    if (intervals < 1) throw Error("spline grid: need at least one interval");
    if (order < 0) throw Error("spline grid: negative order");
  }
};

/// Scratch size needed by the basis kernels.
inline int bspline_work_size(const SplineGrid& g) { return g.intervals + 2 * g.order; }

/// All basis values B_{i,k}(x), i = 0..G+k-1, written to `out`.
/// `work` must have at least bspline_work_size(g) entries. x is not clamped;
/// outside the extended knot range every value is zero.
void bspline_basis(double x, const SplineGrid& g, std::span<double> out, std::span<double> work);

/// Basis values and first derivatives in one pass.
void bspline_basis_and_derivative(double x, const SplineGrid& g, std::span<double> values,
                                  std::span<double> derivatives, std::span<double> work);

/// Allocating convenience wrapper.
std::vector<double> bspline_basis(double x, const SplineGrid& g);

/// One grid per input dimension: [min, max] widened by 10% of the range on
/// each side; a degenerate dimension (max == min) becomes value +- 0.5.
std::vector<SplineGrid> grids_from_samples(const Matrix& inputs, int intervals, int order);

}  // namespace kanopt
