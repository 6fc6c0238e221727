#include "kanopt/bspline.hpp"

#include <algorithm>
#include <cmath>

namespace kanopt {

namespace {

// Degree-0 indicators over all G+2k cells. The very last cell is treated as
// closed on the right so that x == knot(last) still lands in a cell.
void degree_zero(double x, const SplineGrid& g, std::span<double> w) {
  const int cells = g.intervals + 2 * g.order;
  for (int i = 0; i < cells; ++i) {
    const double t0 = g.knot(i);
    const double t1 = g.knot(i + 1);
    bool in = (x >= t0 && x < t1);
    if (i == cells - 1 && x == t1) in = true;
    w[i] = in ? 1.0 : 0.0;
  }
}

// One Cox-de Boor elevation step from degree d-1 to d, forward in-place.
// Uniform knots make every denominator d*cell, never zero.
void elevate(double x, const SplineGrid& g, int d, std::span<double> w) {
  const int count = g.intervals + 2 * g.order - d;
  const double span = d * g.cell();
  for (int i = 0; i < count; ++i) {
    const double left = (x - g.knot(i)) / span * w[i];
    const double right = (g.knot(i + d + 1) - x) / span * w[i + 1];
    w[i] = left + right;
  }
}

}  // namespace

void bspline_basis(double x, const SplineGrid& g, std::span<double> out, std::span<double> work) {
  degree_zero(x, g, work);
  for (int d = 1; d <= g.order; ++d) elevate(x, g, d, work);
  std::copy_n(work.begin(), g.basis_count(), out.begin());
}

void bspline_basis_and_derivative(double x, const SplineGrid& g, std::span<double> values,
                                  std::span<double> derivatives, std::span<double> work) {
  const int n = g.basis_count();
  degree_zero(x, g, work);
  if (g.order == 0) {
    std::copy_n(work.begin(), n, values.begin());
    std::fill_n(derivatives.begin(), n, 0.0);
    return;
  }
  for (int d = 1; d < g.order; ++d) elevate(x, g, d, work);
  // work now holds the G+k+1 degree-(k-1) values; derivative and final
  // elevation both read them, so write results to the output spans directly.
  const double h = g.cell();
  const double span = g.order * h;
  for (int i = 0; i < n; ++i) {
    derivatives[i] = (work[i] - work[i + 1]) / h;
    const double left = (x - g.knot(i)) / span * work[i];
    const double right = (g.knot(i + g.order + 1) - x) / span * work[i + 1];
    values[i] = left + right;
  }
}

std::vector<double> bspline_basis(double x, const SplineGrid& g) {
  std::vector<double> out(g.basis_count());
  std::vector<double> work(bspline_work_size(g));
  bspline_basis(x, g, out, work);
  return out;
}

std::vector<SplineGrid> grids_from_samples(const Matrix& inputs, int intervals, int order) {
  if (inputs.rows() < 2) throw Error("grids_from_samples: need at least 2 samples");
  std::vector<SplineGrid> grids;
  grids.reserve(inputs.cols());
  for (std::size_t c = 0; c < inputs.cols(); ++c) {
    double lo = inputs(0, c);
    double hi = inputs(0, c);
    for (std::size_t r = 1; r < inputs.rows(); ++r) {
      lo = std::min(lo, inputs(r, c));
      hi = std::max(hi, inputs(r, c));
    }
    SplineGrid g;
    if (hi == lo) {
      g.lower = lo - 0.5;
      g.upper = lo + 0.5;
    } else {
      const double pad = 0.1 * (hi - lo);
      g.lower = lo - pad;
      g.upper = hi + pad;
    }
    g.intervals = intervals;
    g.order = order;
    g.validate();
    grids.push_back(g);
  }
  return grids;
}

}  // namespace kanopt
