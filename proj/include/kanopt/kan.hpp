#pragma once

#include <span>
#include <string>
#include <vector>

#include "kanopt/bspline.hpp"
#include "kanopt/data.hpp"
#include "kanopt/lbfgs.hpp"
#include "kanopt/matrix.hpp"
#include "kanopt/rng.hpp"

namespace kanopt {

enum class Head { regression, classification };

inline double silu(double x) { return x / (1.0 + std::exp(-x)); }
inline double silu_derivative(double x) {
  const double s = 1.0 / (1.0 + std::exp(-x));
  return s * (1.0 + x * (1.0 - s));
}

/// Learnable univariate edge: w_b * silu(x) + w_s * sum_i c_i B_i(x).
struct EdgeFunction {
  SplineGrid grid;
  std::vector<double> coeffs;
  double base_weight = 0.0;
  double spline_weight = 1.0;
};

double edge_eval(const EdgeFunction& e, double x);

/// Fully connected spline layer: output j sums edge(i,j) over inputs i in
/// ascending order. All edges leaving input i share that input's grid.
struct KanLayer {
  int in_dim = 0;
  int out_dim = 0;
  int basis_size = 0;                // shared across the layer
  std::vector<EdgeFunction> edges;   // edges[i * out_dim + j]

  EdgeFunction& edge(int i, int j) { return edges[static_cast<std::size_t>(i) * out_dim + j]; }
  const EdgeFunction& edge(int i, int j) const {
    return edges[static_cast<std::size_t>(i) * out_dim + j];
  }
  const SplineGrid& input_grid(int i) const { return edge(i, 0).grid; }

  int params_per_edge() const { return basis_size + 2; }
  std::size_t param_count() const {
    return static_cast<std::size_t>(in_dim) * out_dim * params_per_edge();
  }
};

using FitReport = LbfgsReport;

struct KanInit {
  int grid_intervals = 5;
  int order = 3;
  double coeff_sigma = 0.1;  // spline coefficients ~ N(0, sigma)
};

struct LossGrad {
  double loss = 0.0;
  std::vector<double> grad;
};

class KanNetwork {
 public:
  KanNetwork() = default;
  KanNetwork(std::vector<KanLayer> layers, Head head);

  /// Network with every grid set to [-1, 1] and seeded random parameters.
  static KanNetwork random(std::span<const int> shape, Head head, const KanInit& init, Rng& rng);

  /// Grids are derived from `reference_inputs`: the first layer from the data
  /// itself, deeper layers from the activations produced by the layers built
  /// so far. No grid changes happen after construction.
  static KanNetwork for_data(std::span<const int> shape, Head head, const Matrix& reference_inputs,
                             const KanInit& init, Rng& rng);

  int input_dim() const { return layers_.empty() ? 0 : layers_.front().in_dim; }
  int output_dim() const { return layers_.empty() ? 0 : layers_.back().out_dim; }
  Head head() const { return head_; }
  const std::vector<KanLayer>& layers() const { return layers_; }

  /// Head applied: length-1 value for regression, 2 softmax probabilities
  /// for classification.
  std::vector<double> forward(std::span<const double> x) const;

  /// Raw output of the layer stack, no head.
  std::vector<double> forward_raw(std::span<const double> x) const;

  std::size_t num_params() const { return num_params_; }
  std::vector<double> get_params() const;
  void set_params(std::span<const double> p);

  /// Mean loss (MSE or softmax cross-entropy) and its exact gradient in the
  /// flat-parameter layout. Production kernel: samples are processed in
  /// fixed-width chunks combined in index order, so results are identical
  /// for any thread count.
  LossGrad loss_and_gradient(const TrainingSet& d) const;

  /// Plain per-sample reference used to validate the chunked kernel.
  LossGrad loss_and_gradient_serial(const TrainingSet& d) const;

  /// Batch prediction. Regression: one value per row. Classification: the
  /// class-1 probability per row.
  std::vector<double> predict(const Matrix& inputs) const;

  /// L-BFGS (history 10, strong Wolfe) for at most `steps` iterations.
  FitReport fit(const TrainingSet& d, int steps);

  /// Human-readable dump of shapes, grids and coefficients.
  std::string describe() const;

 private:
  std::vector<KanLayer> layers_;
  Head head_ = Head::regression;
  std::size_t num_params_ = 0;
  std::vector<std::size_t> layer_offsets_;

  void finalize();
  friend struct KanKernel;
};

}  // namespace kanopt
