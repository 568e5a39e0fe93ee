// include/lidkit/checkpoint.h

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

#ifndef LIDKIT_CHECKPOINT_H_
#define LIDKIT_CHECKPOINT_H_

#include <limits>
#include <string>
#include <vector>

#include "lidkit/model.h"

namespace lidkit {

// Checkpoint layout (little-endian):
//   magic "ULCK", version byte 0x01,
//   u32 config length + JSON config record (model config, head, class names,
//   config hash, optimizer scalars),
//   u32 tensor count, then per tensor: u32 name length, name bytes,
//   u32 rank, u32 extents, f64 values.
// Model tensors (weights plus normalization running statistics) are stored
// under their parameter names; optimizer momentum buffers under
// "opt.momentum.<name>".
struct Checkpoint {
  ModelConfig config;
  PoolingHead head = PoolingHead::kSap;
  std::vector<std::string> class_names;
  std::string config_hash;

  bool has_optimizer = false;
  int lr_index = 0;
  double best_loss = std::numeric_limits<double>::infinity();
  int epochs_since_improvement = 0;

  ParameterStore params;
  ParameterStore momentum;
};

void save_checkpoint(const std::string &path, const Checkpoint &ckpt);
Checkpoint load_checkpoint(const std::string &path);

}  // namespace lidkit

#endif  // LIDKIT_CHECKPOINT_H_
