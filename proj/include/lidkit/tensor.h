// include/lidkit/tensor.h

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

#ifndef LIDKIT_TENSOR_H_
#define LIDKIT_TENSOR_H_

#include <cstdint>
#include <functional>
#include <initializer_list>
#include <memory>
#include <string>
#include <vector>

namespace lidkit {

using index_t = std::int64_t;

// Dense 64-bit float array in row-major order with shape metadata and an
// optional same-shape gradient buffer. Tensor is a cheap shared handle:
// copies alias the same storage, clone() makes a deep copy.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<index_t> shape, bool requires_grad = false);

  static Tensor zeros(std::vector<index_t> shape);
  static Tensor full(std::vector<index_t> shape, double value);
  static Tensor from(std::vector<index_t> shape, std::vector<double> values,
                     bool requires_grad = false);
  static Tensor scalar(double value);

  bool defined() const { return impl_ != nullptr; }
  const std::vector<index_t> &shape() const;
  int rank() const;
  index_t dim(int axis) const;
  index_t numel() const;

  double *data();
  const double *data() const;

  // True for leaves the optimizer owns; their gradients are kept after
  // backward().
  bool requires_grad() const;
  void set_requires_grad(bool value);

  // True when this tensor lies on a differentiable path (a leaf with
  // requires_grad, or an op output derived from one).
  bool needs_grad() const;
  void mark_needs_grad();

  // Gradient buffer, allocated zero-filled on first access.
  double *grad();
  const double *grad_data() const;  // nullptr when never allocated
  bool has_grad() const;
  void zero_grad();
  void drop_grad();

  double value() const;  // requires numel() == 1
  double at(std::initializer_list<index_t> idx) const;
  double &at(std::initializer_list<index_t> idx);

  Tensor clone() const;  // deep copy of values only, fresh leaf
  bool all_finite() const;
  std::string shape_str() const;  // e.g. "(16, 64, 200)"

  static index_t numel_of(const std::vector<index_t> &shape);
  static std::string shape_str(const std::vector<index_t> &shape);

 private:
  struct Data;
  std::shared_ptr<Data> impl_;
};

// Replayable record of executed operations. Each forward op that runs under a
// tape appends one node holding the tensors it touched and a closure that
// pushes the output adjoint into the input adjoints. Nodes are appended in
// execution order, so inputs of any node precede it, and backward() replays
// the closures once each, in reverse. Exactly one logical thread may mutate a
// tape.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape &) = delete;
  Tape &operator=(const Tape &) = delete;

  void record(std::vector<Tensor> keep_alive, std::function<void()> backward);

  // Seeds d(loss)/d(loss) = 1 and replays all adjoints in reverse order.
  // Leaves that do not influence the loss keep their (zero) gradients.
  // Rejects non-scalar losses. Node storage is released as the sweep
  // retires each node.
  void backward(const Tensor &loss);

  std::size_t size() const { return nodes_.size(); }
  void clear() { nodes_.clear(); }

 private:
  struct Node {
    std::vector<Tensor> refs;
    std::function<void()> fn;
  };
  std::vector<Node> nodes_;
};

}  // namespace lidkit

#endif  // LIDKIT_TENSOR_H_
