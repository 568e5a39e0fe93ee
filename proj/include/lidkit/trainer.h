// include/lidkit/trainer.h

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

#ifndef LIDKIT_TRAINER_H_
#define LIDKIT_TRAINER_H_

#include <functional>
#include <limits>
#include <vector>

#include "lidkit/features.h"
#include "lidkit/model.h"
#include "lidkit/rng.h"

namespace lidkit {

struct TrainConfig {
  index_t batch_size = 128;
  index_t length_min = 200;  // dynamic batch length bounds, inclusive
  index_t length_max = 1000;
  std::vector<double> lr_ladder = {0.1, 0.01, 0.001};
  double momentum = 0.9;
  double weight_decay = 1e-4;
  int plateau_patience = 3;
  double plateau_threshold = 1e-3;  // relative improvement counted as progress
  std::uint64_t seed = 1;
  int epochs = 50;
  // Stop once epoch training accuracy reaches this value (0 disables).
  double target_accuracy = 0.0;

  void validate() const;
};

// SGD-momentum state plus the plateau scheduler position.
struct OptimizerState {
  ParameterStore momentum;
  int lr_index = 0;
  double best_loss = std::numeric_limits<double>::infinity();
  int epochs_since_improvement = 0;

  static OptimizerState make(const ParameterStore &params);
  double lr(const TrainConfig &config) const {
    return config.lr_ladder[static_cast<std::size_t>(lr_index)];
  }
};

// Uniform integer in [length_min, length_max].
index_t sample_batch_length(Rng &rng, const TrainConfig &config);

// L0 == target: unchanged; L0 > target: contiguous crop at a random start;
// L0 < target: cyclic repetition truncated to target.
Tensor crop_or_extend(const Tensor &features, index_t target, Rng &rng);

struct Batch {
  Tensor features;  // (B, 64, L)
  std::vector<int> labels;
};

// Assembles the dynamic-length batch for the given utterance indices; all
// members share one L. Utterances must have nonempty features.
Batch make_batch(const std::vector<FeatureSequence> &data,
                 const std::vector<index_t> &indices, index_t length, Rng &rng);

// v <- m v + (g + wd p); p <- p - lr v, for every trainable parameter.
void sgd_step(ParameterStore &params, OptimizerState &state, const TrainConfig &config);

// Advances one rung down the ladder after `plateau_patience` consecutive
// epochs without a relative improvement of `plateau_threshold` over the best
// loss; the last rung is terminal. Returns true when the rate changed.
bool plateau_schedule(OptimizerState &state, double epoch_loss, const TrainConfig &config);

struct EpochStats {
  int epoch = 0;  // 1-based
  double lr = 0.0;
  double mean_loss = 0.0;
  double accuracy = 0.0;
};

struct TrainResult {
  std::vector<EpochStats> trace;
  OptimizerState state;
  bool reached_target = false;
};

// Runs the full loop: shuffled epochs of dynamic-length batches, forward
// with the chosen head, cross-entropy, backward, SGD step, plateau schedule.
// Throws NumericError on a non-finite loss. `on_epoch`, when set, observes
// each epoch's stats.
TrainResult train(Model &model, PoolingHead head,
                  const std::vector<FeatureSequence> &data, const TrainConfig &config,
                  const std::function<void(const EpochStats &)> &on_epoch = nullptr);

}  // namespace lidkit

#endif  // LIDKIT_TRAINER_H_
