#pragma once

#include <string>

#include "bdrl/dense_net.hpp"

namespace bdrl {

// Binary network snapshots.
//
// Format (all integers little-endian):
//   magic "BDRL" | u32 version (=1) | u32 layer_count |
//   per layer: u32 in_dim | u32 out_dim | u32 activation code |
//              out*in f64 weights (row-major) | out f64 biases
//
// Activation codes follow the Activation enum order (identity=0, relu=1,
// tanh=2, softmax=3, sigmoid=4, softplus=5).
//
// save_net throws std::runtime_error on I/O failure; load_net throws
// std::runtime_error on I/O failure, bad magic/version, or truncation.
void save_net(const DenseNet& net, const std::string& path);
DenseNet load_net(const std::string& path);

}  // namespace bdrl
