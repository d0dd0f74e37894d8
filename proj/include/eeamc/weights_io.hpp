#pragma once

#include <string>

#include "eeamc/graph.hpp"

namespace eeamc {

// EEWT weight file, little-endian:
//   magic "EEWT" | version u32 (=1) | variant u8 | layer count u32
//   per layer: kind u8 | extents (u32 each, per kind) | float32 payload
//
// Extents and payload by kind:
//   Conv1D       in,out,kernel,stride,pad      weight[out*in*k], bias[out]
//   ReLU         -                             -
//   MaxPool1D    window,stride                 -
//   BatchNorm1D  channels                      momentum, epsilon, gamma[C],
//                                              beta[C], run_mean[C], run_var[C]
//   Dense        in,out                        weight[out*in], bias[out]
//   Dropout      -                             rate
//   Softmax      -                             -
//
// Layers are streamed in graph order (common, exit head, tail). The exit
// head is recovered on load as the five layers ending at the first Softmax;
// a baseline file is all tail. Round-trips are bit-exact.

void save_weights(const BranchGraph& g, const std::string& path);

BranchGraph load_weights(const std::string& path);

} // namespace eeamc
