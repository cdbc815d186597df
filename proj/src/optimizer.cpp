#include "bdrl/optimizer.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace bdrl {

OptimizerState::OptimizerState(Kind kind, double lr, double b1, double b2,
                               double eps)
    : kind_(kind), lr_(lr), beta1_(b1), beta2_(b2), eps_(eps) {
  if (!(lr > 0.0) || !std::isfinite(lr)) {
    throw std::invalid_argument("OptimizerState: learning rate must be positive");
  }
}

OptimizerState OptimizerState::sgd(double learning_rate) {
  return OptimizerState(Kind::sgd, learning_rate, 0.0, 0.0, 0.0);
}

OptimizerState OptimizerState::adam(double learning_rate, double beta1,
                                    double beta2, double epsilon) {
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw std::invalid_argument("OptimizerState: betas must lie in [0, 1)");
  }
  if (!(epsilon > 0.0)) {
    throw std::invalid_argument("OptimizerState: epsilon must be positive");
  }
  return OptimizerState(Kind::adam, learning_rate, beta1, beta2, epsilon);
}

void apply_update(DenseNet& net, const ParamGrads& grads, OptimizerState& opt) {
  if (grads.layers.size() != net.layer_count()) {
    throw std::invalid_argument("apply_update: gradient layer count mismatch");
  }
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    const LayerGrads& lg = grads.layers[l];
    if (lg.weights.shape() != net.weights(l).shape() ||
        lg.biases.size() != net.biases(l).size()) {
      throw std::invalid_argument("apply_update: gradient shape mismatch at layer " +
                                  std::to_string(l));
    }
  }
  if (!grads.all_finite()) {
    throw std::runtime_error(
        "apply_update: non-finite gradient; update rejected, parameters unchanged");
  }

  if (opt.kind_ == OptimizerState::Kind::sgd) {
    const double lr = opt.lr_;
    for (std::size_t l = 0; l < net.layer_count(); ++l) {
      const LayerGrads& lg = grads.layers[l];
      double* w = net.weights(l).data();
      const double* gw = lg.weights.data();
      for (std::size_t i = 0; i < lg.weights.size(); ++i) w[i] -= lr * gw[i];
      std::vector<double>& b = net.biases(l);
      for (std::size_t i = 0; i < b.size(); ++i) b[i] -= lr * lg.biases[i];
    }
    ++opt.steps_;
    return;
  }

  // Adam.
  const std::size_t n = net.param_count();
  if (opt.m_.empty()) {
    opt.m_.assign(n, 0.0);
    opt.v_.assign(n, 0.0);
  } else if (opt.m_.size() != n) {
    throw std::invalid_argument(
        "apply_update: Adam state was initialised for a different network");
  }

  const std::size_t t = opt.steps_ + 1;
  const double bc1 = 1.0 - std::pow(opt.beta1_, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(opt.beta2_, static_cast<double>(t));

  std::size_t flat = 0;
  auto update_one = [&](double* param, double g) {
    double& m = opt.m_[flat];
    double& v = opt.v_[flat];
    m = opt.beta1_ * m + (1.0 - opt.beta1_) * g;
    v = opt.beta2_ * v + (1.0 - opt.beta2_) * g * g;
    const double mhat = m / bc1;
    const double vhat = v / bc2;
    *param -= opt.lr_ * mhat / (std::sqrt(vhat) + opt.eps_);
    ++flat;
  };

  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    const LayerGrads& lg = grads.layers[l];
    double* w = net.weights(l).data();
    const double* gw = lg.weights.data();
    for (std::size_t i = 0; i < lg.weights.size(); ++i) update_one(&w[i], gw[i]);
    std::vector<double>& b = net.biases(l);
    for (std::size_t i = 0; i < b.size(); ++i) update_one(&b[i], lg.biases[i]);
  }
  ++opt.steps_;
}

}  // namespace bdrl
