// src/tensor.cc

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

#include "lidkit/tensor.h"

#include <cmath>
#include <cstring>
#include <sstream>

#include "lidkit/errors.h"

namespace lidkit {

struct Tensor::Data {
  std::vector<index_t> shape;
  std::vector<double> values;
  std::vector<double> grad;  // empty until first grad() access
  bool requires_grad = false;
  bool needs_grad = false;
};

namespace {

index_t checked_numel(const std::vector<index_t> &shape) {
  index_t n = 1;
  for (index_t e : shape) {
    if (e <= 0) {
      throw DataError("tensor extents must be positive, got shape " +
                      Tensor::shape_str(shape));
    }
    n *= e;
  }
  return n;
}

}  // namespace

Tensor::Tensor(std::vector<index_t> shape, bool requires_grad) {
  impl_ = std::make_shared<Data>();
  impl_->values.assign(static_cast<std::size_t>(checked_numel(shape)), 0.0);
  impl_->shape = std::move(shape);
  impl_->requires_grad = requires_grad;
  impl_->needs_grad = requires_grad;
}

Tensor Tensor::zeros(std::vector<index_t> shape) { return Tensor(std::move(shape)); }

Tensor Tensor::full(std::vector<index_t> shape, double value) {
  Tensor t(std::move(shape));
  for (index_t i = 0; i < t.numel(); ++i) t.data()[i] = value;
  return t;
}

Tensor Tensor::from(std::vector<index_t> shape, std::vector<double> values,
                    bool requires_grad) {
  if (checked_numel(shape) != static_cast<index_t>(values.size())) {
    throw DataError("value count " + std::to_string(values.size()) +
                    " does not match shape " + shape_str(shape));
  }
  Tensor t;
  t.impl_ = std::make_shared<Data>();
  t.impl_->shape = std::move(shape);
  t.impl_->values = std::move(values);
  t.impl_->requires_grad = requires_grad;
  t.impl_->needs_grad = requires_grad;
  return t;
}

Tensor Tensor::scalar(double value) { return from({1}, {value}); }

const std::vector<index_t> &Tensor::shape() const { return impl_->shape; }

int Tensor::rank() const { return static_cast<int>(impl_->shape.size()); }

index_t Tensor::dim(int axis) const {
  if (axis < 0 || axis >= rank()) {
    throw DataError("axis " + std::to_string(axis) + " out of range for shape " +
                    shape_str());
  }
  return impl_->shape[static_cast<std::size_t>(axis)];
}

index_t Tensor::numel() const {
  return static_cast<index_t>(impl_->values.size());
}

double *Tensor::data() { return impl_->values.data(); }
const double *Tensor::data() const { return impl_->values.data(); }

bool Tensor::requires_grad() const { return impl_ && impl_->requires_grad; }

void Tensor::set_requires_grad(bool value) {
  impl_->requires_grad = value;
  if (value) impl_->needs_grad = true;
}

bool Tensor::needs_grad() const { return impl_ && impl_->needs_grad; }

void Tensor::mark_needs_grad() { impl_->needs_grad = true; }

double *Tensor::grad() {
  if (impl_->grad.empty()) impl_->grad.assign(impl_->values.size(), 0.0);
  return impl_->grad.data();
}

const double *Tensor::grad_data() const {
  return impl_->grad.empty() ? nullptr : impl_->grad.data();
}

bool Tensor::has_grad() const { return impl_ && !impl_->grad.empty(); }

void Tensor::zero_grad() {
  if (!impl_->grad.empty()) std::memset(impl_->grad.data(), 0, impl_->grad.size() * sizeof(double));
}

void Tensor::drop_grad() { impl_->grad.clear(); impl_->grad.shrink_to_fit(); }

double Tensor::value() const {
  if (numel() != 1) {
    throw DataError("value() requires a scalar tensor, got shape " + shape_str());
  }
  return impl_->values[0];
}

double Tensor::at(std::initializer_list<index_t> idx) const {
  return const_cast<Tensor *>(this)->at(idx);
}

double &Tensor::at(std::initializer_list<index_t> idx) {
  if (static_cast<int>(idx.size()) != rank()) {
    throw DataError("index rank " + std::to_string(idx.size()) +
                    " does not match tensor rank " + std::to_string(rank()));
  }
  index_t flat = 0;
  int axis = 0;
  for (index_t i : idx) {
    index_t extent = impl_->shape[static_cast<std::size_t>(axis)];
    if (i < 0 || i >= extent) {
      throw DataError("index out of range for shape " + shape_str());
    }
    flat = flat * extent + i;
    ++axis;
  }
  return impl_->values[static_cast<std::size_t>(flat)];
}

Tensor Tensor::clone() const {
  return Tensor::from(impl_->shape, impl_->values, impl_->requires_grad);
}

bool Tensor::all_finite() const {
  for (double v : impl_->values) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

index_t Tensor::numel_of(const std::vector<index_t> &shape) {
  index_t n = 1;
  for (index_t e : shape) n *= e;
  return n;
}

std::string Tensor::shape_str(const std::vector<index_t> &shape) {
  std::ostringstream os;
  os << "(";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ", ";
    os << shape[i];
  }
  os << ")";
  return os.str();
}

std::string Tensor::shape_str() const { return shape_str(impl_->shape); }

void Tape::record(std::vector<Tensor> keep_alive, std::function<void()> backward) {
  nodes_.push_back(Node{std::move(keep_alive), std::move(backward)});
}

void Tape::backward(const Tensor &loss) {
  if (!loss.defined() || loss.numel() != 1) {
    throw DataError("backward() requires a scalar loss");
  }
  Tensor seed = loss;
  if (seed.needs_grad()) seed.grad()[0] = 1.0;
  for (std::size_t i = nodes_.size(); i-- > 0;) {
    nodes_[i].fn();
    // Retire the node so intermediate buffers referenced only by the tape
    // are freed as the sweep walks back.
    nodes_[i].fn = nullptr;
    nodes_[i].refs.clear();
  }
  nodes_.clear();
}

}  // namespace lidkit
