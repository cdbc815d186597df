#include "bdrl/gradient_check.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace bdrl {
namespace {

// Flattened analytic gradient in the network's parameter order.
double analytic_at(const ParamGrads& grads, std::size_t flat_index) {
  for (const LayerGrads& lg : grads.layers) {
    if (flat_index < lg.weights.size()) return lg.weights[flat_index];
    flat_index -= lg.weights.size();
    if (flat_index < lg.biases.size()) return lg.biases[flat_index];
    flat_index -= lg.biases.size();
  }
  throw std::invalid_argument("finite_diff_check: analytic grads too small");
}

}  // namespace

double finite_diff_check(std::span<DenseNet* const> nets,
                         const std::function<double()>& loss_fn,
                         std::span<const ParamGrads> analytic, double epsilon) {
  if (!(epsilon > 0.0) || epsilon > 1e-2) {
    throw std::invalid_argument("finite_diff_check: epsilon must lie in (0, 1e-2]");
  }
  if (nets.size() != analytic.size()) {
    throw std::invalid_argument(
        "finite_diff_check: one ParamGrads required per network");
  }

  double max_rel = 0.0;
  for (std::size_t ni = 0; ni < nets.size(); ++ni) {
    DenseNet& net = *nets[ni];
    const ParamGrads& grads = analytic[ni];
    const std::size_t n = net.param_count();
    for (std::size_t p = 0; p < n; ++p) {
      const double original = net.get_param(p);

      net.set_param(p, original + epsilon);
      const double loss_plus = loss_fn();
      net.set_param(p, original - epsilon);
      const double loss_minus = loss_fn();
      net.set_param(p, original);

      if (!std::isfinite(loss_plus) || !std::isfinite(loss_minus)) {
        throw std::runtime_error(
            "finite_diff_check: non-finite loss at network " +
            std::to_string(ni) + ", parameter " + std::to_string(p));
      }

      const double fd = (loss_plus - loss_minus) / (2.0 * epsilon);
      const double an = analytic_at(grads, p);
      const double denom = std::max({1.0, std::abs(fd), std::abs(an)});
      max_rel = std::max(max_rel, std::abs(fd - an) / denom);
    }
  }
  return max_rel;
}

double finite_diff_check(DenseNet& net, const std::function<double()>& loss_fn,
                         const ParamGrads& analytic, double epsilon) {
  DenseNet* nets[] = {&net};
  const ParamGrads* single = &analytic;
  return finite_diff_check(std::span<DenseNet* const>(nets, 1), loss_fn,
                           std::span<const ParamGrads>(single, 1), epsilon);
}

}  // namespace bdrl
