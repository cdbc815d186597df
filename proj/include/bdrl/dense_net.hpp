#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "bdrl/rng.hpp"
#include "bdrl/tensor.hpp"

namespace bdrl {

// Activation functions supported by DenseNet layers.  softmax is applied
// per row and is intended for output layers only.
enum class Activation {
  identity,
  relu,
  tanh,
  softmax,
  sigmoid,
  softplus,
};

std::string to_string(Activation a);
Activation activation_from_string(const std::string& name);

// Width and activation of one fully connected layer.
struct LayerSpec {
  std::size_t width = 0;
  Activation act = Activation::identity;
};

// Per-layer parameter gradients (same shapes as the layer parameters).
struct LayerGrads {
  Tensor weights;               // out x in, row-major
  std::vector<double> biases;   // out
};

// Gradients for a whole network plus the gradient with respect to its
// input, which lets networks be chained (e.g. a shared trunk feeding a
// separate head).
struct ParamGrads {
  std::vector<LayerGrads> layers;
  Tensor input_grad;  // same shape as the forward input

  // this += c * other (parameter gradients only; input_grad untouched).
  void add_scaled(const ParamGrads& other, double c);
  void scale(double c);
  bool all_finite() const;
};

// Fully connected feed-forward network on doubles.
//
// Weight matrices are row-major out x in, so row o holds the incoming
// weights of output unit o.  Initialisation draws each weight uniformly
// from +-sqrt(6 / (fan_in + fan_out)) and zeroes the biases.
//
// forward() accepts either a single input vector (rank 1) or a batch
// matrix with one example per row (rank 2), caching activations for a
// following backward().  backward() consumes the cache: it must follow a
// forward() and leaves the network cache-free, so memory use is bounded by
// one batch regardless of how long training runs.
class DenseNet {
 public:
  // Randomly initialised network.  Requires input_dim > 0 and at least
  // one layer with positive width.
  DenseNet(std::size_t input_dim, std::span<const LayerSpec> layers,
           SeededRng& rng);

  // Zero-initialised network (used when loading snapshots).
  DenseNet(std::size_t input_dim, std::span<const LayerSpec> layers);

  std::size_t input_dim() const { return input_dim_; }
  std::size_t output_dim() const { return layers_.back().w.rows(); }
  std::size_t layer_count() const { return layers_.size(); }
  std::size_t layer_width(std::size_t i) const;
  Activation layer_activation(std::size_t i) const;

  const Tensor& weights(std::size_t i) const;
  Tensor& weights(std::size_t i);
  const std::vector<double>& biases(std::size_t i) const;
  std::vector<double>& biases(std::size_t i);

  // Flat parameter view in a fixed order: layer 0 weights (row-major),
  // layer 0 biases, layer 1 weights, ...  Used by the finite-difference
  // checker and by snapshots.
  std::size_t param_count() const;
  double get_param(std::size_t flat_index) const;
  void set_param(std::size_t flat_index, double value);

  // Forward pass.  Output has the same rank as the input: vector in,
  // vector out; batch matrix in, batch matrix out (rows preserved).
  // Throws std::invalid_argument on a dimension mismatch and
  // std::runtime_error if the result is non-finite.
  Tensor forward(const Tensor& input);

  // True when a forward cache is pending (forward called, backward not).
  bool has_cache() const { return cache_valid_; }
  void clear_cache();

  // Backward pass for the most recent forward().  output_grad must match
  // the forward output's shape; the mean/sum convention is the caller's
  // (gradients are linear, so any scaling of output_grad scales the
  // result).  Throws std::logic_error when no forward cache is pending.
  ParamGrads backward(const Tensor& output_grad);

  // Zero gradients congruent with this network (handy as an accumulator).
  ParamGrads zero_grads() const;

 private:
  struct Layer {
    Tensor w;                 // out x in
    std::vector<double> b;    // out
    Activation act;
  };

  void build(std::size_t input_dim, std::span<const LayerSpec> layers);

  std::size_t input_dim_ = 0;
  std::vector<Layer> layers_;

  // Forward cache (cleared by backward / clear_cache).
  bool cache_valid_ = false;
  bool cached_vector_input_ = false;
  Tensor cached_input_;              // batch matrix
  std::vector<Tensor> pre_acts_;     // per layer, batch matrix
  std::vector<Tensor> post_acts_;    // per layer, batch matrix
};

}  // namespace bdrl
