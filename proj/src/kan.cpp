#include "kanopt/kan.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace kanopt {

namespace {

constexpr std::size_t kChunk = 16;  // samples per reduction chunk

KanLayer make_layer(int in_dim, int out_dim, const std::vector<SplineGrid>& grids,
                    const KanInit& init, Rng& rng) {
  KanLayer layer;
  layer.in_dim = in_dim;
  layer.out_dim = out_dim;
  layer.basis_size = grids.front().basis_count();
  layer.edges.resize(static_cast<std::size_t>(in_dim) * out_dim);
  const double bound = std::sqrt(6.0 / in_dim);
  for (int i = 0; i < in_dim; ++i) {
    for (int j = 0; j < out_dim; ++j) {
      EdgeFunction& e = layer.edge(i, j);
      e.grid = grids[i];
      e.coeffs.resize(layer.basis_size);
      for (double& c : e.coeffs) c = rng.normal(0.0, init.coeff_sigma);
      e.base_weight = rng.uniform(-bound, bound);
      e.spline_weight = 1.0;
    }
  }
  return layer;
}

void apply_layer(const KanLayer& layer, std::span<const double> in, std::span<double> out,
                 std::span<double> basis, std::span<double> work) {
  std::fill(out.begin(), out.end(), 0.0);
  for (int i = 0; i < layer.in_dim; ++i) {
    const double x = in[i];
    bspline_basis(x, layer.input_grid(i), basis, work);
    const double sv = silu(x);
    for (int j = 0; j < layer.out_dim; ++j) {
      const EdgeFunction& e = layer.edge(i, j);
      double sp = 0.0;
      for (int t = 0; t < layer.basis_size; ++t) sp += e.coeffs[t] * basis[t];
      out[j] += e.base_weight * sv + e.spline_weight * sp;
    }
  }
}

void softmax2(std::span<const double> z, std::span<double> p) {
  const double m = std::max(z[0], z[1]);
  const double e0 = std::exp(z[0] - m);
  const double e1 = std::exp(z[1] - m);
  const double sum = e0 + e1;
  p[0] = e0 / sum;
  p[1] = e1 / sum;
}

}  // namespace

double edge_eval(const EdgeFunction& e, double x) {
  const auto basis = bspline_basis(x, e.grid);
  double sp = 0.0;
  for (std::size_t i = 0; i < basis.size(); ++i) sp += e.coeffs[i] * basis[i];
  return e.base_weight * silu(x) + e.spline_weight * sp;
}

KanNetwork::KanNetwork(std::vector<KanLayer> layers, Head head)
    : layers_(std::move(layers)), head_(head) {
  finalize();
}

void KanNetwork::finalize() {
  if (layers_.empty()) throw Error("network needs at least one layer");
  for (std::size_t l = 0; l + 1 < layers_.size(); ++l) {
    if (layers_[l].out_dim != layers_[l + 1].in_dim)
      throw DimensionMismatch("consecutive layer dims disagree");
  }
  const int out = layers_.back().out_dim;
  if (head_ == Head::regression && out != 1)
    throw DimensionMismatch("regression head needs output width 1");
  if (head_ == Head::classification && out != 2)
    throw DimensionMismatch("classification head needs output width 2");
  num_params_ = 0;
  layer_offsets_.clear();
  for (const auto& layer : layers_) {
    if (layer.edges.size() != static_cast<std::size_t>(layer.in_dim) * layer.out_dim)
      throw DimensionMismatch("edge matrix shape mismatch");
    for (const auto& e : layer.edges) {
      if (static_cast<int>(e.coeffs.size()) != layer.basis_size)
        throw DimensionMismatch("edge coefficient count mismatch");
    }
    layer_offsets_.push_back(num_params_);
    num_params_ += layer.param_count();
  }
}

KanNetwork KanNetwork::random(std::span<const int> shape, Head head, const KanInit& init,
                              Rng& rng) {
  if (shape.size() < 2) throw Error("network shape needs at least two entries");
  std::vector<KanLayer> layers;
  for (std::size_t l = 0; l + 1 < shape.size(); ++l) {
    SplineGrid g{-1.0, 1.0, init.grid_intervals, init.order};
    g.validate();
    std::vector<SplineGrid> grids(shape[l], g);
    layers.push_back(make_layer(shape[l], shape[l + 1], grids, init, rng));
  }
  return KanNetwork(std::move(layers), head);
}

KanNetwork KanNetwork::for_data(std::span<const int> shape, Head head,
                                const Matrix& reference_inputs, const KanInit& init, Rng& rng) {
  if (shape.size() < 2) throw Error("network shape needs at least two entries");
  if (reference_inputs.cols() != static_cast<std::size_t>(shape[0]))
    throw DimensionMismatch("reference inputs do not match network input width");
  std::vector<KanLayer> layers;
  Matrix act = reference_inputs;
  for (std::size_t l = 0; l + 1 < shape.size(); ++l) {
    const auto grids = grids_from_samples(act, init.grid_intervals, init.order);
    KanLayer layer = make_layer(shape[l], shape[l + 1], grids, init, rng);
    Matrix next(act.rows(), layer.out_dim);
    std::vector<double> basis(layer.basis_size);
    std::vector<double> work(layer.basis_size + layer.input_grid(0).order);
    for (std::size_t r = 0; r < act.rows(); ++r) {
      apply_layer(layer, act.row(r), next.row(r), basis, work);
    }
    layers.push_back(std::move(layer));
    act = std::move(next);
  }
  return KanNetwork(std::move(layers), head);
}

std::vector<double> KanNetwork::forward_raw(std::span<const double> x) const {
  if (x.size() != static_cast<std::size_t>(input_dim()))
    throw DimensionMismatch("input width does not match network");
  std::vector<double> cur(x.begin(), x.end());
  std::vector<double> next;
  std::vector<double> basis, work;
  for (const auto& layer : layers_) {
    next.assign(layer.out_dim, 0.0);
    basis.resize(layer.basis_size);
    work.resize(layer.basis_size + layer.input_grid(0).order);
    apply_layer(layer, cur, next, basis, work);
    cur.swap(next);
  }
  return cur;
}

std::vector<double> KanNetwork::forward(std::span<const double> x) const {
  auto raw = forward_raw(x);
  if (head_ == Head::regression) return raw;
  std::vector<double> p(2);
  softmax2(raw, p);
  return p;
}

std::vector<double> KanNetwork::get_params() const {
  std::vector<double> p(num_params_);
  std::size_t pos = 0;
  for (const auto& layer : layers_) {
    for (const auto& e : layer.edges) {
      for (double c : e.coeffs) p[pos++] = c;
      p[pos++] = e.base_weight;
      p[pos++] = e.spline_weight;
    }
  }
  return p;
}

void KanNetwork::set_params(std::span<const double> p) {
  if (p.size() != num_params_) throw DimensionMismatch("parameter vector length mismatch");
  std::size_t pos = 0;
  for (auto& layer : layers_) {
    for (auto& e : layer.edges) {
      for (double& c : e.coeffs) c = p[pos++];
      e.base_weight = p[pos++];
      e.spline_weight = p[pos++];
    }
  }
}

// Per-sample forward/backward state for one network topology. One instance
// per thread; all buffers are reused across samples.
struct KanKernel {
  const KanNetwork& net;
  struct LayerCache {
    std::vector<double> input;
    std::vector<double> silu_v, silu_d;
    std::vector<double> basis_v, basis_d;  // in_dim * basis_size
    std::vector<double> spline;            // in_dim * out_dim
    std::vector<double> output;
  };
  std::vector<LayerCache> cache;
  std::vector<double> work;
  std::vector<double> delta_out, delta_in;

  explicit KanKernel(const KanNetwork& n) : net(n) {
    std::size_t max_work = 0, max_dim = 0;
    for (const auto& layer : n.layers_) {
      LayerCache c;
      c.input.resize(layer.in_dim);
      c.silu_v.resize(layer.in_dim);
      c.silu_d.resize(layer.in_dim);
      c.basis_v.resize(static_cast<std::size_t>(layer.in_dim) * layer.basis_size);
      c.basis_d.resize(static_cast<std::size_t>(layer.in_dim) * layer.basis_size);
      c.spline.resize(static_cast<std::size_t>(layer.in_dim) * layer.out_dim);
      c.output.resize(layer.out_dim);
      cache.push_back(std::move(c));
      max_work = std::max(max_work, static_cast<std::size_t>(bspline_work_size(layer.input_grid(0))));
      max_dim = std::max({max_dim, static_cast<std::size_t>(layer.in_dim),
                          static_cast<std::size_t>(layer.out_dim)});
    }
    work.resize(max_work);
    delta_out.resize(max_dim);
    delta_in.resize(max_dim);
  }

  std::span<const double> forward(std::span<const double> x) {
    std::copy(x.begin(), x.end(), cache[0].input.begin());
    for (std::size_t l = 0; l < net.layers_.size(); ++l) {
      const KanLayer& layer = net.layers_[l];
      LayerCache& c = cache[l];
      const int m = layer.basis_size;
      std::fill(c.output.begin(), c.output.end(), 0.0);
      for (int i = 0; i < layer.in_dim; ++i) {
        const double xv = c.input[i];
        bspline_basis_and_derivative(xv, layer.input_grid(i),
                                     std::span(c.basis_v).subspan(i * m, m),
                                     std::span(c.basis_d).subspan(i * m, m), work);
        c.silu_v[i] = silu(xv);
        c.silu_d[i] = silu_derivative(xv);
        for (int j = 0; j < layer.out_dim; ++j) {
          const EdgeFunction& e = layer.edge(i, j);
          double sp = 0.0;
          for (int t = 0; t < m; ++t) sp += e.coeffs[t] * c.basis_v[i * m + t];
          c.spline[static_cast<std::size_t>(i) * layer.out_dim + j] = sp;
          c.output[j] += e.base_weight * c.silu_v[i] + e.spline_weight * sp;
        }
      }
      if (l + 1 < net.layers_.size()) {
        std::copy(c.output.begin(), c.output.end(), cache[l + 1].input.begin());
      }
    }
    return cache.back().output;
  }

  // Accumulates d(sample loss)/d(params) into grad given d(loss)/d(raw out).
  void backward(std::span<const double> dout_final, std::span<double> grad) {
    std::copy(dout_final.begin(), dout_final.end(), delta_out.begin());
    for (std::size_t l = net.layers_.size(); l-- > 0;) {
      const KanLayer& layer = net.layers_[l];
      const LayerCache& c = cache[l];
      const int m = layer.basis_size;
      const std::size_t stride = static_cast<std::size_t>(m) + 2;
      for (int i = 0; i < layer.in_dim; ++i) {
        double dx = 0.0;
        const std::size_t row = static_cast<std::size_t>(i) * layer.out_dim;
        for (int j = 0; j < layer.out_dim; ++j) {
          const double g = delta_out[j];
          const EdgeFunction& e = layer.edge(i, j);
          const std::size_t off = net.layer_offsets_[l] + (row + j) * stride;
          double der_dot = 0.0;
          for (int t = 0; t < m; ++t) {
            grad[off + t] += g * e.spline_weight * c.basis_v[i * m + t];
            der_dot += e.coeffs[t] * c.basis_d[i * m + t];
          }
          grad[off + m] += g * c.silu_v[i];       // base weight
          grad[off + m + 1] += g * c.spline[row + j];  // spline weight
          dx += g * (e.base_weight * c.silu_d[i] + e.spline_weight * der_dot);
        }
        delta_in[i] = dx;
      }
      delta_out.swap(delta_in);
    }
  }

  // Per-sample loss (unscaled); fills dout for backward.
  double head_loss(const TrainingSet& d, std::size_t sample, std::span<const double> raw,
                   std::span<double> dout) const {
    if (net.head_ == Head::regression) {
      const double err = raw[0] - d.targets[sample];
      dout[0] = 2.0 * err;
      return err * err;
    }
    const double m = std::max(raw[0], raw[1]);
    const double lse = m + std::log(std::exp(raw[0] - m) + std::exp(raw[1] - m));
    double p[2];
    softmax2(raw, p);
    const int label = d.labels[sample];
    dout[0] = p[0] - (label == 0 ? 1.0 : 0.0);
    dout[1] = p[1] - (label == 1 ? 1.0 : 0.0);
    return lse - raw[label];
  }
};

namespace {

void check_batch(const KanNetwork& net, const TrainingSet& d) {
  if (d.size() == 0) throw EmptyTrainingSet();
  d.validate();
  if (d.inputs.cols() != static_cast<std::size_t>(net.input_dim()))
    throw DimensionMismatch("training inputs do not match network input width");
  if ((d.task == Task::regression) != (net.head() == Head::regression))
    throw Error("training set task does not match network head");
}

}  // namespace

LossGrad KanNetwork::loss_and_gradient_serial(const TrainingSet& d) const {
  check_batch(*this, d);
  const std::size_t batch = d.size();
  LossGrad out;
  out.grad.assign(num_params_, 0.0);
  KanKernel kernel(*this);
  std::vector<double> dout(output_dim());
  double loss = 0.0;
  for (std::size_t s = 0; s < batch; ++s) {
    const auto raw = kernel.forward(d.inputs.row(s));
    loss += kernel.head_loss(d, s, raw, dout);
    kernel.backward(dout, out.grad);
  }
  const double inv = 1.0 / static_cast<double>(batch);
  out.loss = loss * inv;
  for (double& g : out.grad) g *= inv;
  return out;
}

LossGrad KanNetwork::loss_and_gradient(const TrainingSet& d) const {
  check_batch(*this, d);
  const std::size_t batch = d.size();
  const std::size_t num_chunks = (batch + kChunk - 1) / kChunk;
  std::vector<double> chunk_loss(num_chunks, 0.0);
  std::vector<std::vector<double>> chunk_grad(num_chunks);

#pragma omp parallel
  {
    KanKernel kernel(*this);
    std::vector<double> dout(output_dim());
#pragma omp for schedule(static)
    for (long long ci = 0; ci < static_cast<long long>(num_chunks); ++ci) {
      const std::size_t c = static_cast<std::size_t>(ci);
      auto& grad = chunk_grad[c];
      grad.assign(num_params_, 0.0);
      const std::size_t begin = c * kChunk;
      const std::size_t end = std::min(batch, begin + kChunk);
      double loss = 0.0;
      for (std::size_t s = begin; s < end; ++s) {
        const auto raw = kernel.forward(d.inputs.row(s));
        loss += kernel.head_loss(d, s, raw, dout);
        kernel.backward(dout, grad);
      }
      chunk_loss[c] = loss;
    }
  }

  // Combine in chunk order: the result does not depend on the thread count.
  LossGrad out;
  out.grad.assign(num_params_, 0.0);
  double loss = 0.0;
  for (std::size_t c = 0; c < num_chunks; ++c) {
    loss += chunk_loss[c];
    const auto& g = chunk_grad[c];
    for (std::size_t j = 0; j < num_params_; ++j) out.grad[j] += g[j];
  }
  const double inv = 1.0 / static_cast<double>(batch);
  out.loss = loss * inv;
  for (double& g : out.grad) g *= inv;
  return out;
}

std::vector<double> KanNetwork::predict(const Matrix& inputs) const {
  if (inputs.cols() != static_cast<std::size_t>(input_dim()))
    throw DimensionMismatch("prediction inputs do not match network input width");
  std::vector<double> out(inputs.rows());
#pragma omp parallel
  {
    KanKernel kernel(*this);
#pragma omp for schedule(static)
    for (long long r = 0; r < static_cast<long long>(inputs.rows()); ++r) {
      const auto raw = kernel.forward(inputs.row(static_cast<std::size_t>(r)));
      if (head_ == Head::regression) {
        out[static_cast<std::size_t>(r)] = raw[0];
      } else {
        double p[2];
        softmax2(raw, p);
        out[static_cast<std::size_t>(r)] = p[1];
      }
    }
  }
  return out;
}

FitReport KanNetwork::fit(const TrainingSet& d, int steps) {
  if (steps < 1) throw Error("fit: steps must be >= 1");
  check_batch(*this, d);
  LbfgsOptions opt;
  opt.max_iterations = steps;
  auto params = get_params();
  try {
    const auto report = lbfgs_minimize(
        [&](std::span<const double> x, std::span<double> g) {
          set_params(x);
          auto lg = loss_and_gradient(d);
          std::copy(lg.grad.begin(), lg.grad.end(), g.begin());
          return lg.loss;
        },
        params, opt);
    set_params(params);
    return report;
  } catch (TrainingDiverged& e) {
    set_params(e.last_finite_parameters);
    throw;
  }
}

std::string KanNetwork::describe() const {
  std::ostringstream os;
  os << "KanNetwork head=" << (head_ == Head::regression ? "regression" : "classification")
     << " params=" << num_params_ << "\n";
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto& layer = layers_[l];
    os << "layer " << l << ": " << layer.in_dim << " -> " << layer.out_dim
       << " (basis " << layer.basis_size << ")\n";
    for (int i = 0; i < layer.in_dim; ++i) {
      const auto& g = layer.input_grid(i);
      os << "  input " << i << " grid [" << g.lower << ", " << g.upper << "] G=" << g.intervals
         << " k=" << g.order << "\n";
    }
    for (int i = 0; i < layer.in_dim; ++i) {
      for (int j = 0; j < layer.out_dim; ++j) {
        const auto& e = layer.edge(i, j);
        os << "  edge (" << i << "," << j << ") wb=" << e.base_weight << " ws=" << e.spline_weight
           << " coeffs=[";
        for (std::size_t t = 0; t < e.coeffs.size(); ++t) {
          if (t) os << ", ";
          os << e.coeffs[t];
        }
        os << "]\n";
      }
    }
  }
  return os.str();
}

}  // namespace kanopt
