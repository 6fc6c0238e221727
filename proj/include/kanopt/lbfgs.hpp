#pragma once

#include <functional>
#include <span>
#include <vector>

namespace kanopt {

/// Objective callback: fills `grad` and returns the loss at `x`.
using Objective = std::function<double(std::span<const double> x, std::span<double> grad)>;

struct LbfgsOptions {
  int history = 10;          // stored correction pairs
  int max_iterations = 50;
  double armijo = 1e-4;      // sufficient-decrease constant c1
  double curvature = 0.9;    // strong-Wolfe curvature constant c2
  double grad_tolerance = 1e-10;
  int max_line_search = 30;
};

struct LbfgsReport {
  double initial_loss = 0.0;
  double final_loss = 0.0;
  int iterations = 0;        // accepted steps
  bool converged = false;    // gradient tolerance reached
};

/// Minimizes f starting from x (updated in place). Accepted steps satisfy the
/// strong Wolfe conditions, so the final loss never exceeds the initial one.
/// Throws TrainingDiverged if the loss or gradient turns non-finite at an
/// accepted point; the exception carries the last finite iterate.
LbfgsReport lbfgs_minimize(const Objective& f, std::vector<double>& x,
                           const LbfgsOptions& options = {});

}  // namespace kanopt
