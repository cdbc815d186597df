#pragma once

#include <functional>
#include <span>

#include "bdrl/dense_net.hpp"

namespace bdrl {

// Central finite-difference verification of analytic gradients.
//
// loss_fn must recompute the scalar loss from the networks' *current*
// parameters (it is called repeatedly while individual parameters are
// perturbed by +-epsilon and must not keep state across calls).  analytic
// holds the caller's gradients of that same loss, one ParamGrads per
// network, in matching order.
//
// Returns the maximum relative error over all parameters, where
//   rel = |fd - an| / max(1, |fd|, |an|).
//
// Requires epsilon in (0, 1e-2]; throws std::invalid_argument otherwise.
// Throws std::runtime_error naming the offending network/parameter when
// the loss evaluates non-finite at a perturbed point.  Parameters are
// always restored to their original values.
double finite_diff_check(std::span<DenseNet* const> nets,
                         const std::function<double()>& loss_fn,
                         std::span<const ParamGrads> analytic, double epsilon);

// Single-network convenience overload.
double finite_diff_check(DenseNet& net, const std::function<double()>& loss_fn,
                         const ParamGrads& analytic, double epsilon);

}  // namespace bdrl
