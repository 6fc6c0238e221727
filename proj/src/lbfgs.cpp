#include "kanopt/lbfgs.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

#include "kanopt/errors.hpp"

namespace kanopt {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double inf_norm(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

bool all_finite(std::span<const double> v) {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

struct Probe {
  double step;
  double loss;
  double slope;  // directional derivative g . d
};

// Evaluates the objective along x0 + step*d. Non-finite losses are reported
// via the finite flag instead of an exception; the line search backtracks.
class LineEvaluator {
 public:
  LineEvaluator(const Objective& f, std::span<const double> x0, std::span<const double> d)
      : f_(f), x0_(x0), d_(d), x_(x0.size()), g_(x0.size()) {}

  bool eval(double step, Probe& out) {
    for (std::size_t i = 0; i < x_.size(); ++i) x_[i] = x0_[i] + step * d_[i];
    const double loss = f_(x_, g_);
    if (!std::isfinite(loss)) return false;
    out = Probe{step, loss, dot(g_, d_)};
    return true;
  }

  const std::vector<double>& point() const { return x_; }
  const std::vector<double>& gradient() const { return g_; }

 private:
  const Objective& f_;
  std::span<const double> x0_;
  std::span<const double> d_;
  std::vector<double> x_;
  std::vector<double> g_;
};

// Interpolation step inside [lo, hi]: quadratic from (lo.loss, lo.slope,
// hi.loss), clamped away from the bracket ends; bisection as fallback.
double interpolate(const Probe& lo, const Probe& hi) {
  const double dx = hi.step - lo.step;
  double cand = lo.step - 0.5 * lo.slope * dx * dx / (hi.loss - lo.loss - lo.slope * dx);
  const double a = std::min(lo.step, hi.step);
  const double b = std::max(lo.step, hi.step);
  const double guard = 0.1 * (b - a);
  if (!std::isfinite(cand) || cand < a + guard || cand > b - guard) {
    cand = 0.5 * (lo.step + hi.step);
  }
  return cand;
}

// Strong Wolfe line search (bracket + zoom). Returns true and the accepted
// probe on success; false when no acceptable finite step was found.
bool wolfe_search(LineEvaluator& ev, double loss0, double slope0, const LbfgsOptions& opt,
                  Probe& accepted) {
  const double c1 = opt.armijo;
  const double c2 = opt.curvature;
  auto armijo_ok = [&](const Probe& p) { return p.loss <= loss0 + c1 * p.step * slope0; };
  auto curvature_ok = [&](const Probe& p) { return std::abs(p.slope) <= -c2 * slope0; };

  Probe prev{0.0, loss0, slope0};
  double step = 1.0;
  int evals = 0;

  Probe lo{}, hi{};
  bool bracketed = false;
  while (evals < opt.max_line_search) {
    Probe cur{};
    if (!ev.eval(step, cur)) {
      ++evals;
      step = 0.5 * (prev.step + step);  // shrink toward the last finite point
      if (step <= prev.step || step < 1e-20) return false;
      continue;
    }
    ++evals;
    if (!armijo_ok(cur) || (evals > 1 && cur.loss >= prev.loss)) {
      lo = prev;
      hi = cur;
      bracketed = true;
      break;
    }
    if (curvature_ok(cur)) {
      accepted = cur;
      return true;
    }
    if (cur.slope >= 0.0) {
      lo = cur;
      hi = prev;
      bracketed = true;
      break;
    }
    prev = cur;
    step = std::min(2.0 * step, 1e20);
  }
  if (!bracketed) return false;

  // zoom: lo satisfies Armijo with the smaller loss, the minimizer lies
  // between lo and hi.
  while (evals < opt.max_line_search) {
    const double trial = interpolate(lo, hi);
    Probe cur{};
    if (!ev.eval(trial, cur)) {
      ++evals;
      hi = Probe{trial, std::numeric_limits<double>::infinity(), 0.0};
      continue;
    }
    ++evals;
    if (!armijo_ok(cur) || cur.loss >= lo.loss) {
      hi = cur;
    } else {
      if (curvature_ok(cur)) {
        accepted = cur;
        return true;
      }
      if (cur.slope * (hi.step - lo.step) >= 0.0) hi = lo;
      lo = cur;
    }
    if (std::abs(hi.step - lo.step) < 1e-16 * std::max(1.0, std::abs(lo.step))) break;
  }
  // Interval collapsed: fall back to the best Armijo point if it decreases.
  if (lo.step > 0.0 && lo.loss < loss0) {
    Probe cur{};
    if (ev.eval(lo.step, cur)) {
      accepted = cur;
      return true;
    }
  }
  return false;
}

}  // namespace

LbfgsReport lbfgs_minimize(const Objective& f, std::vector<double>& x,
                           const LbfgsOptions& opt) {
  const std::size_t n = x.size();
  std::vector<double> grad(n);
  double loss = f(x, grad);
  if (!std::isfinite(loss)) {
    throw TrainingDiverged("initial loss is not finite", x);
  }
  if (!all_finite(grad)) {
    throw TrainingDiverged("initial gradient is not finite", x);
  }

  LbfgsReport report;
  report.initial_loss = loss;
  report.final_loss = loss;

  struct Pair {
    std::vector<double> s, y;
    double rho;
  };
  std::deque<Pair> memory;
  std::vector<double> direction(n), q(n), alpha;

  for (int iter = 0; iter < opt.max_iterations; ++iter) {
    if (inf_norm(grad) <= opt.grad_tolerance * std::max(1.0, inf_norm(x))) {
      report.converged = true;
      break;
    }

    // Two-loop recursion for d = -H*g.
    q.assign(grad.begin(), grad.end());
    alpha.assign(memory.size(), 0.0);
    for (std::size_t i = memory.size(); i-- > 0;) {
      alpha[i] = memory[i].rho * dot(memory[i].s, q);
      for (std::size_t j = 0; j < n; ++j) q[j] -= alpha[i] * memory[i].y[j];
    }
    if (!memory.empty()) {
      const auto& last = memory.back();
      const double gamma = 1.0 / (last.rho * dot(last.y, last.y));
      for (double& v : q) v *= gamma;
    }
    for (std::size_t i = 0; i < memory.size(); ++i) {
      const double beta = memory[i].rho * dot(memory[i].y, q);
      for (std::size_t j = 0; j < n; ++j) q[j] += memory[i].s[j] * (alpha[i] - beta);
    }
    for (std::size_t j = 0; j < n; ++j) direction[j] = -q[j];

    double slope = dot(grad, direction);
    if (slope >= 0.0) {
      // Not a descent direction; restart from steepest descent.
      memory.clear();
      for (std::size_t j = 0; j < n; ++j) direction[j] = -grad[j];
      slope = dot(grad, direction);
      if (slope >= 0.0) {
        report.converged = true;
        break;
      }
    }

    LineEvaluator ev(f, x, direction);
    Probe accepted{};
    if (!wolfe_search(ev, loss, slope, opt, accepted)) break;

    if (!all_finite(ev.gradient())) {
      throw TrainingDiverged("gradient became non-finite during training", x);
    }

    Pair pair;
    pair.s.resize(n);
    pair.y.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
      pair.s[j] = ev.point()[j] - x[j];
      pair.y[j] = ev.gradient()[j] - grad[j];
    }
    const double sy = dot(pair.s, pair.y);

    x = ev.point();
    grad = ev.gradient();
    loss = accepted.loss;
    report.final_loss = loss;
    ++report.iterations;

    // Curvature safeguard: skip updates that would break positive
    // definiteness of the implicit Hessian approximation.
    const double ss = dot(pair.s, pair.s);
    const double yy = dot(pair.y, pair.y);
    if (sy > 1e-10 * std::sqrt(ss * yy)) {
      pair.rho = 1.0 / sy;
      memory.push_back(std::move(pair));
      if (static_cast<int>(memory.size()) > opt.history) memory.pop_front();
    }
  }
  return report;
}

}  // namespace kanopt
