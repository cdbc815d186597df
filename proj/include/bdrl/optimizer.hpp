#pragma once

#include <cstddef>
#include <vector>

#include "bdrl/dense_net.hpp"

namespace bdrl {

// First-order optimizer state for one network.  Construct via the sgd()
// or adam() factories, then drive parameter updates with apply_update().
//
// Adam keeps first/second moment vectors sized to the network it first
// updates; reusing the state for a differently sized network is an error.
class OptimizerState {
 public:
  enum class Kind { sgd, adam };

  static OptimizerState sgd(double learning_rate);
  static OptimizerState adam(double learning_rate, double beta1 = 0.9,
                             double beta2 = 0.999, double epsilon = 1e-8);

  Kind kind() const { return kind_; }
  double learning_rate() const { return lr_; }
  // Number of apply_update() calls performed with this state.
  std::size_t step_count() const { return steps_; }

 private:
  friend void apply_update(DenseNet&, const ParamGrads&, OptimizerState&);

  OptimizerState(Kind kind, double lr, double b1, double b2, double eps);

  Kind kind_;
  double lr_;
  double beta1_;
  double beta2_;
  double eps_;
  std::size_t steps_ = 0;
  std::vector<double> m_;  // adam first moment, flat parameter order
  std::vector<double> v_;  // adam second moment
};

// Applies one in-place update to net from grads.
//
// SGD:   w -= lr * g
// Adam:  standard bias-corrected update with the state's beta1/beta2/eps.
//
// Throws std::invalid_argument when grads are not congruent with net's
// layer shapes (or the Adam state was sized for a different network), and
// std::runtime_error when grads contain non-finite values; in both cases
// the parameters are left untouched.
void apply_update(DenseNet& net, const ParamGrads& grads, OptimizerState& opt);

}  // namespace bdrl
