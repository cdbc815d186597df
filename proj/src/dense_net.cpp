#include "bdrl/dense_net.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace bdrl {
namespace {

double stable_sigmoid(double z) {
  if (z >= 0.0) {
    return 1.0 / (1.0 + std::exp(-z));
  }
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double stable_softplus(double z) {
  // max(z, 0) + log1p(exp(-|z|)) never overflows.
  return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z)));
}

// Applies an activation elementwise (softmax handled separately).
void apply_activation(Activation act, const Tensor& z, Tensor& out) {
  const std::size_t n = z.size();
  const double* zp = z.data();
  double* op = out.data();
  switch (act) {
    case Activation::identity:
      std::copy(zp, zp + n, op);
      break;
    case Activation::relu:
      for (std::size_t i = 0; i < n; ++i) op[i] = zp[i] > 0.0 ? zp[i] : 0.0;
      break;
    case Activation::tanh:
      for (std::size_t i = 0; i < n; ++i) op[i] = std::tanh(zp[i]);
      break;
    case Activation::sigmoid:
      for (std::size_t i = 0; i < n; ++i) op[i] = stable_sigmoid(zp[i]);
      break;
    case Activation::softplus:
      for (std::size_t i = 0; i < n; ++i) op[i] = stable_softplus(zp[i]);
      break;
    case Activation::softmax: {
      // Per-row, max-shifted for stability.
      const std::size_t rows = z.rows();
      const std::size_t cols = z.cols();
      for (std::size_t r = 0; r < rows; ++r) {
        const double* zr = zp + r * cols;
        double* orow = op + r * cols;
        double m = zr[0];
        for (std::size_t c = 1; c < cols; ++c) m = std::max(m, zr[c]);
        double sum = 0.0;
        for (std::size_t c = 0; c < cols; ++c) {
          orow[c] = std::exp(zr[c] - m);
          sum += orow[c];
        }
        for (std::size_t c = 0; c < cols; ++c) orow[c] /= sum;
      }
      break;
    }
  }
}

// dZ from dA given pre-activation z and post-activation a.
void activation_backward(Activation act, const Tensor& z, const Tensor& a,
                         const Tensor& da, Tensor& dz) {
  const std::size_t n = z.size();
  const double* zp = z.data();
  const double* ap = a.data();
  const double* dap = da.data();
  double* dzp = dz.data();
  switch (act) {
    case Activation::identity:
      std::copy(dap, dap + n, dzp);
      break;
    case Activation::relu:
      for (std::size_t i = 0; i < n; ++i) dzp[i] = zp[i] > 0.0 ? dap[i] : 0.0;
      break;
    case Activation::tanh:
      for (std::size_t i = 0; i < n; ++i) dzp[i] = dap[i] * (1.0 - ap[i] * ap[i]);
      break;
    case Activation::sigmoid:
      for (std::size_t i = 0; i < n; ++i) dzp[i] = dap[i] * ap[i] * (1.0 - ap[i]);
      break;
    case Activation::softplus:
      for (std::size_t i = 0; i < n; ++i) dzp[i] = dap[i] * stable_sigmoid(zp[i]);
      break;
    case Activation::softmax: {
      // dz_i = a_i * (da_i - sum_j da_j a_j), per row.
      const std::size_t rows = z.rows();
      const std::size_t cols = z.cols();
      for (std::size_t r = 0; r < rows; ++r) {
        const double* ar = ap + r * cols;
        const double* dar = dap + r * cols;
        double* dzr = dzp + r * cols;
        double dot = 0.0;
        for (std::size_t c = 0; c < cols; ++c) dot += dar[c] * ar[c];
        for (std::size_t c = 0; c < cols; ++c) dzr[c] = ar[c] * (dar[c] - dot);
      }
      break;
    }
  }
}

}  // namespace

std::string to_string(Activation a) {
  switch (a) {
    case Activation::identity: return "identity";
    case Activation::relu: return "relu";
    case Activation::tanh: return "tanh";
    case Activation::softmax: return "softmax";
    case Activation::sigmoid: return "sigmoid";
    case Activation::softplus: return "softplus";
  }
  throw std::logic_error("to_string: unknown activation");
}

Activation activation_from_string(const std::string& name) {
  if (name == "identity") return Activation::identity;
  if (name == "relu") return Activation::relu;
  if (name == "tanh") return Activation::tanh;
  if (name == "softmax") return Activation::softmax;
  if (name == "sigmoid") return Activation::sigmoid;
  if (name == "softplus") return Activation::softplus;
  throw std::invalid_argument("unknown activation name: " + name);
}

void ParamGrads::add_scaled(const ParamGrads& other, double c) {
  if (layers.size() != other.layers.size()) {
    throw std::invalid_argument("ParamGrads::add_scaled: layer count mismatch");
  }
  for (std::size_t l = 0; l < layers.size(); ++l) {
    LayerGrads& mine = layers[l];
    const LayerGrads& theirs = other.layers[l];
    if (mine.weights.size() != theirs.weights.size() ||
        mine.biases.size() != theirs.biases.size()) {
      throw std::invalid_argument("ParamGrads::add_scaled: shape mismatch");
    }
    double* w = mine.weights.data();
    const double* ow = theirs.weights.data();
    for (std::size_t i = 0; i < mine.weights.size(); ++i) w[i] += c * ow[i];
    for (std::size_t i = 0; i < mine.biases.size(); ++i) {
      mine.biases[i] += c * theirs.biases[i];
    }
  }
}

void ParamGrads::scale(double c) {
  for (LayerGrads& lg : layers) {
    for (double& w : lg.weights.values()) w *= c;
    for (double& b : lg.biases) b *= c;
  }
}

bool ParamGrads::all_finite() const {
  for (const LayerGrads& lg : layers) {
    if (!lg.weights.all_finite()) return false;
    for (double b : lg.biases) {
      if (!std::isfinite(b)) return false;
    }
  }
  return true;
}

void DenseNet::build(std::size_t input_dim, std::span<const LayerSpec> layers) {
  if (input_dim == 0) {
    throw std::invalid_argument("DenseNet: input_dim must be positive");
  }
  if (layers.empty()) {
    throw std::invalid_argument("DenseNet: at least one layer required");
  }
  input_dim_ = input_dim;
  std::size_t in = input_dim;
  layers_.reserve(layers.size());
  for (const LayerSpec& spec : layers) {
    if (spec.width == 0) {
      throw std::invalid_argument("DenseNet: layer width must be positive");
    }
    Layer layer{Tensor::matrix(spec.width, in),
                std::vector<double>(spec.width, 0.0), spec.act};
    layers_.push_back(std::move(layer));
    in = spec.width;
  }
}

DenseNet::DenseNet(std::size_t input_dim, std::span<const LayerSpec> layers,
                   SeededRng& rng) {
  build(input_dim, layers);
  for (Layer& layer : layers_) {
    const double fan_in = static_cast<double>(layer.w.cols());
    const double fan_out = static_cast<double>(layer.w.rows());
    const double bound = std::sqrt(6.0 / (fan_in + fan_out));
    for (double& w : layer.w.values()) w = rng.uniform(-bound, bound);
  }
}

DenseNet::DenseNet(std::size_t input_dim, std::span<const LayerSpec> layers) {
  build(input_dim, layers);
}

std::size_t DenseNet::layer_width(std::size_t i) const {
  return weights(i).rows();
}

Activation DenseNet::layer_activation(std::size_t i) const {
  if (i >= layers_.size()) throw std::invalid_argument("DenseNet: bad layer index");
  return layers_[i].act;
}

const Tensor& DenseNet::weights(std::size_t i) const {
  if (i >= layers_.size()) throw std::invalid_argument("DenseNet: bad layer index");
  return layers_[i].w;
}

Tensor& DenseNet::weights(std::size_t i) {
  if (i >= layers_.size()) throw std::invalid_argument("DenseNet: bad layer index");
  return layers_[i].w;
}

const std::vector<double>& DenseNet::biases(std::size_t i) const {
  if (i >= layers_.size()) throw std::invalid_argument("DenseNet: bad layer index");
  return layers_[i].b;
}

std::vector<double>& DenseNet::biases(std::size_t i) {
  if (i >= layers_.size()) throw std::invalid_argument("DenseNet: bad layer index");
  return layers_[i].b;
}

std::size_t DenseNet::param_count() const {
  std::size_t n = 0;
  for (const Layer& layer : layers_) n += layer.w.size() + layer.b.size();
  return n;
}

double DenseNet::get_param(std::size_t flat_index) const {
  for (const Layer& layer : layers_) {
    if (flat_index < layer.w.size()) return layer.w[flat_index];
    flat_index -= layer.w.size();
    if (flat_index < layer.b.size()) return layer.b[flat_index];
    flat_index -= layer.b.size();
  }
  throw std::invalid_argument("DenseNet::get_param: index out of range");
}

void DenseNet::set_param(std::size_t flat_index, double value) {
  for (Layer& layer : layers_) {
    if (flat_index < layer.w.size()) {
      layer.w[flat_index] = value;
      return;
    }
    flat_index -= layer.w.size();
    if (flat_index < layer.b.size()) {
      layer.b[flat_index] = value;
      return;
    }
    flat_index -= layer.b.size();
  }
  throw std::invalid_argument("DenseNet::set_param: index out of range");
}

Tensor DenseNet::forward(const Tensor& input) {
  if (!(input.is_vector() || input.is_matrix())) {
    throw std::invalid_argument("DenseNet::forward: input must be rank 1 or 2");
  }
  if (input.cols() != input_dim_) {
    throw std::invalid_argument("DenseNet::forward: input width mismatch");
  }
  const std::size_t batch = input.rows();
  if (batch == 0) {
    throw std::invalid_argument("DenseNet::forward: empty batch");
  }

  cached_vector_input_ = input.is_vector();
  cached_input_ = input.is_vector()
                      ? Tensor::matrix(1, input.size(),
                                       {input.data(), input.data() + input.size()})
                      : input;
  pre_acts_.clear();
  post_acts_.clear();
  pre_acts_.reserve(layers_.size());
  post_acts_.reserve(layers_.size());

  const Tensor* x = &cached_input_;
  for (const Layer& layer : layers_) {
    const std::size_t in = layer.w.cols();
    const std::size_t out = layer.w.rows();
    Tensor z = Tensor::matrix(batch, out);
    const double* xp = x->data();
    const double* wp = layer.w.data();
    double* zp = z.data();
    for (std::size_t r = 0; r < batch; ++r) {
      const double* xr = xp + r * in;
      double* zr = zp + r * out;
      for (std::size_t o = 0; o < out; ++o) {
        const double* wo = wp + o * in;
        double acc = layer.b[o];
        for (std::size_t i = 0; i < in; ++i) acc += xr[i] * wo[i];
        zr[o] = acc;
      }
    }
    Tensor a = Tensor::matrix(batch, out);
    apply_activation(layer.act, z, a);
    pre_acts_.push_back(std::move(z));
    post_acts_.push_back(std::move(a));
    x = &post_acts_.back();
  }
  cache_valid_ = true;

  const Tensor& out = post_acts_.back();
  if (!out.all_finite()) {
    throw std::runtime_error("DenseNet::forward: non-finite output");
  }
  if (cached_vector_input_) {
    return Tensor::vector({out.data(), out.data() + out.size()});
  }
  return out;
}

void DenseNet::clear_cache() {
  cache_valid_ = false;
  cached_input_ = Tensor();
  pre_acts_.clear();
  post_acts_.clear();
}

ParamGrads DenseNet::backward(const Tensor& output_grad) {
  if (!cache_valid_) {
    throw std::logic_error("DenseNet::backward: no forward cache pending");
  }
  const std::size_t batch = cached_input_.rows();
  if (output_grad.cols() != output_dim() || output_grad.rows() != batch) {
    throw std::invalid_argument("DenseNet::backward: output_grad shape mismatch");
  }

  ParamGrads grads = zero_grads();
  Tensor da = output_grad.is_vector()
                  ? Tensor::matrix(1, output_grad.size(),
                                   {output_grad.data(),
                                    output_grad.data() + output_grad.size()})
                  : output_grad;

  for (std::size_t li = layers_.size(); li-- > 0;) {
    const Layer& layer = layers_[li];
    const std::size_t in = layer.w.cols();
    const std::size_t out = layer.w.rows();
    const Tensor& prev =
        (li == 0) ? cached_input_ : post_acts_[li - 1];

    Tensor dz = Tensor::matrix(batch, out);
    activation_backward(layer.act, pre_acts_[li], post_acts_[li], da, dz);

    LayerGrads& lg = grads.layers[li];
    double* dwp = lg.weights.data();
    const double* dzp = dz.data();
    const double* pp = prev.data();
    for (std::size_t r = 0; r < batch; ++r) {
      const double* dzr = dzp + r * out;
      const double* pr = pp + r * in;
      for (std::size_t o = 0; o < out; ++o) {
        const double g = dzr[o];
        if (g == 0.0) continue;
        double* dwo = dwp + o * in;
        for (std::size_t i = 0; i < in; ++i) dwo[i] += g * pr[i];
        lg.biases[o] += g;
      }
    }

    Tensor dx = Tensor::matrix(batch, in);
    const double* wp = layer.w.data();
    double* dxp = dx.data();
    for (std::size_t r = 0; r < batch; ++r) {
      const double* dzr = dzp + r * out;
      double* dxr = dxp + r * in;
      for (std::size_t o = 0; o < out; ++o) {
        const double g = dzr[o];
        if (g == 0.0) continue;
        const double* wo = wp + o * in;
        for (std::size_t i = 0; i < in; ++i) dxr[i] += g * wo[i];
      }
    }
    da = std::move(dx);
  }

  if (cached_vector_input_) {
    grads.input_grad =
        Tensor::vector({da.data(), da.data() + da.size()});
  } else {
    grads.input_grad = std::move(da);
  }
  clear_cache();
  return grads;
}

ParamGrads DenseNet::zero_grads() const {
  ParamGrads grads;
  grads.layers.reserve(layers_.size());
  for (const Layer& layer : layers_) {
    grads.layers.push_back(LayerGrads{
        Tensor::matrix(layer.w.rows(), layer.w.cols()),
        std::vector<double>(layer.b.size(), 0.0)});
  }
  return grads;
}

}  // namespace bdrl
