#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "kanopt/errors.hpp"
#include "kanopt/matrix.hpp"

namespace kanopt {

enum class Task { regression, classification };

/// Supervised training data: rows of `inputs` paired with real targets
/// (regression) or 0/1 labels (classification).
struct TrainingSet {
  Matrix inputs;
  std::vector<double> targets;
  std::vector<int> labels;
  Task task = Task::regression;

  static TrainingSet regression(Matrix x, std::vector<double> y) {
    TrainingSet d;
    d.inputs = std::move(x);
    d.targets = std::move(y);
    d.task = Task::regression;
    d.validate();
    return d;
  }

  static TrainingSet classification(Matrix x, std::vector<int> l) {
    TrainingSet d;
    d.inputs = std::move(x);
    d.labels = std::move(l);
    d.task = Task::classification;
    d.validate();
    return d;
  }

  std::size_t size() const { return inputs.rows(); }

  void validate() const {
    if (inputs.rows() == 0) throw EmptyTrainingSet();
    if (task == Task::regression) {
      if (targets.size() != inputs.rows())
        throw DimensionMismatch("targets/inputs row mismatch");
      for (double y : targets) {
        if (!std::isfinite(y)) throw Error("non-finite regression target");
      }
    } else {
      if (labels.size() != inputs.rows())
        throw DimensionMismatch("labels/inputs row mismatch");
      for (int l : labels) {
        if (l != 0 && l != 1) throw Error("classification labels must be 0 or 1");
      }
    }
    for (double v : inputs.data()) {
      if (!std::isfinite(v)) throw Error("non-finite training input");
    }
  }
};

/// Per-dimension affine map to zero mean / unit variance. Constant columns
/// keep scale 1 so the transform stays invertible.
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> scale;

  static Standardizer fit(const Matrix& x) {
    Standardizer s;
    const std::size_t n = x.rows();
    s.mean.assign(x.cols(), 0.0);
    s.scale.assign(x.cols(), 1.0);
    if (n == 0) return s;
    for (std::size_t c = 0; c < x.cols(); ++c) {
      double m = 0.0;
      for (std::size_t r = 0; r < n; ++r) m += x(r, c);
      m /= static_cast<double>(n);
      double var = 0.0;
      for (std::size_t r = 0; r < n; ++r) {
        const double d = x(r, c) - m;
        var += d * d;
      }
      var /= static_cast<double>(n);
      s.mean[c] = m;
      s.scale[c] = var > 0.0 ? std::sqrt(var) : 1.0;
    }
    return s;
  }

  void apply_row(std::span<const double> in, std::span<double> out) const {
    for (std::size_t c = 0; c < in.size(); ++c) out[c] = (in[c] - mean[c]) / scale[c];
  }

  Matrix apply(const Matrix& x) const {
    Matrix out(x.rows(), x.cols());
    for (std::size_t r = 0; r < x.rows(); ++r) apply_row(x.row(r), out.row(r));
    return out;
  }
};

/// Scalar version used for regression targets.
struct TargetScaler {
  double mean = 0.0;
  double scale = 1.0;

  static TargetScaler fit(std::span<const double> y) {
    TargetScaler t;
    if (y.empty()) return t;
    double m = 0.0;
    for (double v : y) m += v;
    m /= static_cast<double>(y.size());
    double var = 0.0;
    for (double v : y) var += (v - m) * (v - m);
    var /= static_cast<double>(y.size());
    t.mean = m;
    t.scale = var > 0.0 ? std::sqrt(var) : 1.0;
    return t;
  }

  double forward(double y) const { return (y - mean) / scale; }
  double inverse(double z) const { return z * scale + mean; }
};

}  // namespace kanopt
