// include/lidkit/ops.h

// Copyright 2026  LIDKit Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef LIDKIT_OPS_H_
#define LIDKIT_OPS_H_

#include <vector>

#include "lidkit/tensor.h"

namespace lidkit {

// Every op runs forward immediately; when `tape` is non-null and some input
// lies on a differentiable path, the op also records its adjoint closure.
// Pass tape == nullptr for pure inference.
//
// All reductions accumulate in a fixed left-to-right order per output
// element, so results are bitwise reproducible run to run. Internal
// parallelism only ever splits work across disjoint output elements.

// 2D convolution geometry. Table-style 3x3/pad-1 convolutions and the 1x1
// projection used on downsampling shortcuts are the only supported forms.
struct ConvSpec {
  int kernel = 3;
  int padding = 1;
  int stride = 1;
  index_t in_channels = 0;
  index_t out_channels = 0;

  void validate() const;
  static index_t out_extent(index_t n, int kernel, int padding, int stride) {
    return (n + 2 * padding - kernel) / stride + 1;
  }
  index_t out_extent(index_t n) const { return out_extent(n, kernel, padding, stride); }
};

enum class Activation { kTanh, kRelu, kSigmoid };

// Learnable scale/shift plus running statistics for one normalization layer.
struct BatchNormState {
  Tensor gamma;         // (C), learnable
  Tensor beta;          // (C), learnable
  Tensor running_mean;  // (C), updated in training mode only
  Tensor running_var;   // (C)
  double momentum = 0.1;
  double epsilon = 1e-5;

  static BatchNormState make(index_t channels);
};

// input (N,Cin,H,W) or (Cin,H,W); weight (Cout,Cin,k,k); bias (Cout) or
// undefined. Output spatial extents follow ConvSpec::out_extent on both axes.
Tensor conv2d(Tape *tape, const Tensor &input, const ConvSpec &spec,
              const Tensor &weight, const Tensor &bias);

// input (...,n); weight (m,n); bias (m) or undefined; output (...,m) with
// out[..., j] = sum_k weight[j,k] * in[..., k] + bias[j].
Tensor affine(Tape *tape, const Tensor &input, const Tensor &weight,
              const Tensor &bias);

Tensor elementwise(Tape *tape, const Tensor &input, Activation kind);
inline Tensor tanh_op(Tape *t, const Tensor &x) { return elementwise(t, x, Activation::kTanh); }
inline Tensor relu(Tape *t, const Tensor &x) { return elementwise(t, x, Activation::kRelu); }
inline Tensor sigmoid(Tape *t, const Tensor &x) { return elementwise(t, x, Activation::kSigmoid); }

// Max-subtracted softmax of a length-n vector.
Tensor softmax(Tape *tape, const Tensor &input);
// Row-wise softmax / log-softmax of an (R,C) matrix.
Tensor softmax_rows(Tape *tape, const Tensor &input);
Tensor log_softmax_rows(Tape *tape, const Tensor &input);

// input (N,C,H,W). Training mode normalizes with batch statistics (requires
// N*H*W >= 2) and updates running statistics in `state`; inference mode uses
// the running statistics unchanged.
Tensor batch_norm(Tape *tape, const Tensor &input, BatchNormState &state,
                  bool training);

Tensor add(Tape *tape, const Tensor &a, const Tensor &b);
Tensor mul(Tape *tape, const Tensor &a, const Tensor &b);
Tensor scale(Tape *tape, const Tensor &a, double factor);
Tensor sum(Tape *tape, const Tensor &input);       // -> scalar
Tensor mean_all(Tape *tape, const Tensor &input);  // -> scalar

// Mean over one axis; output drops that axis.
Tensor mean_axis(Tape *tape, const Tensor &input, int axis);

// (N,C,W) at time w -> (N,C).
Tensor slice_time(Tape *tape, const Tensor &input, index_t w);
// (R,C) columns [c0,c1) -> (R,c1-c0).
Tensor slice_cols(Tape *tape, const Tensor &input, index_t c0, index_t c1);
// (R,A) ++ (R,B) -> (R,A+B).
Tensor concat_cols(Tape *tape, const Tensor &a, const Tensor &b);
// T tensors of (N,F) -> (N,T,F).
Tensor stack_steps(Tape *tape, const std::vector<Tensor> &steps);
// Same element count, new extents (contiguous copy).
Tensor reshape(Tape *tape, const Tensor &input, std::vector<index_t> shape);
// weights (N,T) applied to sequence (N,T,F): out[n,f] = sum_t w[n,t]*x[n,t,f].
Tensor attend(Tape *tape, const Tensor &weights, const Tensor &sequence);

// Mean over rows of -log softmax(logits)[label]; logits (N,C).
Tensor cross_entropy_mean(Tape *tape, const Tensor &logits,
                          const std::vector<int> &labels);

}  // namespace lidkit

#endif  // LIDKIT_OPS_H_
