// src/trainer.cc

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

#include "lidkit/trainer.h"

#include <cmath>
#include <cstring>

#include "lidkit/errors.h"
#include "lidkit/ops.h"

namespace lidkit {

void TrainConfig::validate() const {
  if (batch_size < 1) throw DataError("TrainConfig: batch_size must be positive");
  if (length_min < 8 || length_max < length_min) {
    throw DataError("TrainConfig: need 8 <= length_min <= length_max");
  }
  if (lr_ladder.empty()) throw DataError("TrainConfig: empty lr ladder");
  for (std::size_t i = 1; i < lr_ladder.size(); ++i) {
    if (lr_ladder[i] >= lr_ladder[i - 1]) {
      throw DataError("TrainConfig: lr ladder must be strictly decreasing");
    }
  }
  if (momentum < 0.0 || momentum >= 1.0) throw DataError("TrainConfig: bad momentum");
  if (plateau_patience < 1) throw DataError("TrainConfig: plateau_patience must be >= 1");
  if (epochs < 1) throw DataError("TrainConfig: epochs must be >= 1");
}

OptimizerState OptimizerState::make(const ParameterStore &params) {
  OptimizerState state;
  for (const std::string &name : params.trainable_names()) {
    state.momentum.add(name, Tensor::zeros(params.get(name).shape()));
  }
  return state;
}

index_t sample_batch_length(Rng &rng, const TrainConfig &config) {
  return rng.uniform_int(config.length_min, config.length_max);
}

Tensor crop_or_extend(const Tensor &features, index_t target, Rng &rng) {
  if (features.rank() != 2) {
    throw DataError("crop_or_extend: expects (D,L), got " + features.shape_str());
  }
  const index_t d = features.dim(0), l0 = features.dim(1);
  if (l0 < 1 || target < 1) throw DataError("crop_or_extend: empty input or target");
  if (l0 == target) return features;
  Tensor out = Tensor::zeros({d, target});
  const double *src = features.data();
  double *dst = out.data();
  if (l0 > target) {
    const index_t start = rng.uniform_int(0, l0 - target);
    for (index_t r = 0; r < d; ++r) {
      std::memcpy(dst + r * target, src + r * l0 + start,
                  static_cast<std::size_t>(target) * sizeof(double));
    }
  } else {
    for (index_t r = 0; r < d; ++r) {
      for (index_t t = 0; t < target; ++t) {
        dst[r * target + t] = src[r * l0 + (t % l0)];
      }
    }
  }
  return out;
}

Batch make_batch(const std::vector<FeatureSequence> &data,
                 const std::vector<index_t> &indices, index_t length, Rng &rng) {
  if (indices.empty()) throw DataError("make_batch: no utterances selected");
  const auto b = static_cast<index_t>(indices.size());
  Batch batch;
  batch.features = Tensor::zeros({b, kFeatureDim, length});
  batch.labels.reserve(static_cast<std::size_t>(b));
  double *dst = batch.features.data();
  for (index_t i = 0; i < b; ++i) {
    const FeatureSequence &utt = data[static_cast<std::size_t>(indices[static_cast<std::size_t>(i)])];
    if (utt.num_frames() < 1) {
      throw DataError("make_batch: utterance '" + utt.utterance_id + "' has no frames");
    }
    Tensor fixed = crop_or_extend(utt.features, length, rng);
    std::memcpy(dst + i * kFeatureDim * length, fixed.data(),
                static_cast<std::size_t>(kFeatureDim * length) * sizeof(double));
    batch.labels.push_back(utt.label);
  }
  return batch;
}

void sgd_step(ParameterStore &params, OptimizerState &state, const TrainConfig &config) {
  const double lr = state.lr(config);
  const double m = config.momentum;
  const double wd = config.weight_decay;
  for (const std::string &name : params.trainable_names()) {
    Tensor &p = params.get(name);
    Tensor &v = state.momentum.get(name);
    if (v.shape() != p.shape()) {
      throw DataError("sgd_step: momentum buffer shape mismatch for " + name);
    }
    const double *g = p.grad();
    double *pv = p.data();
    double *vv = v.data();
    const index_t n = p.numel();
    for (index_t i = 0; i < n; ++i) {
      const double grad = g[i] + wd * pv[i];
      vv[i] = m * vv[i] + grad;
      pv[i] -= lr * vv[i];
    }
  }
}

bool plateau_schedule(OptimizerState &state, double epoch_loss, const TrainConfig &config) {
  const bool improved =
      epoch_loss < state.best_loss * (1.0 - config.plateau_threshold) ||
      !std::isfinite(state.best_loss);
  if (epoch_loss < state.best_loss) state.best_loss = epoch_loss;
  if (improved) {
    state.epochs_since_improvement = 0;
    return false;
  }
  ++state.epochs_since_improvement;
  if (state.epochs_since_improvement >= config.plateau_patience &&
      state.lr_index + 1 < static_cast<int>(config.lr_ladder.size())) {
    ++state.lr_index;
    state.epochs_since_improvement = 0;
    return true;
  }
  return false;
}

TrainResult train(Model &model, PoolingHead head,
                  const std::vector<FeatureSequence> &data, const TrainConfig &config,
                  const std::function<void(const EpochStats &)> &on_epoch) {
  config.validate();
  if (data.empty()) throw DataError("train: empty dataset");
  for (const FeatureSequence &utt : data) {
    if (utt.label < 0 || utt.label >= model.config().num_classes) {
      throw DataError("train: utterance '" + utt.utterance_id + "' has label " +
                      std::to_string(utt.label) + " outside the model's " +
                      std::to_string(model.config().num_classes) + " classes");
    }
  }

  Rng rng(config.seed);
  TrainResult result;
  result.state = OptimizerState::make(model.params());
  const auto n = static_cast<index_t>(data.size());
  const index_t steps = (n + config.batch_size - 1) / config.batch_size;
  std::vector<index_t> perm(static_cast<std::size_t>(n));
  for (index_t i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = i;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    rng.shuffle(perm);
    double loss_sum = 0.0;
    index_t correct = 0, total = 0;
    for (index_t step = 0; step < steps; ++step) {
      std::vector<index_t> picks;
      picks.reserve(static_cast<std::size_t>(config.batch_size));
      for (index_t j = 0; j < config.batch_size; ++j) {
        // wrap around the shuffled order for the final partial batch
        index_t idx = perm[static_cast<std::size_t>((step * config.batch_size + j) % n)];
        // resample forward past unusable utterances
        index_t guard = 0;
        while (data[static_cast<std::size_t>(idx)].num_frames() < 1 && guard++ < n) {
          idx = perm[static_cast<std::size_t>((step * config.batch_size + j + guard) % n)];
        }
        if (data[static_cast<std::size_t>(idx)].num_frames() < 1) {
          throw DataError("train: no usable utterances");
        }
        picks.push_back(idx);
      }
      const index_t length = sample_batch_length(rng, config);
      Batch batch = make_batch(data, picks, length, rng);

      Tape tape;
      model.params().zero_grads();
      Tensor logits = model.forward_logits(&tape, batch.features, head, true);
      Tensor loss = cross_entropy_mean(&tape, logits, batch.labels);
      const double loss_value = loss.value();
      if (!std::isfinite(loss_value)) {
        throw NumericError("train: non-finite loss at epoch " + std::to_string(epoch) +
                           " step " + std::to_string(step + 1));
      }
      loss_sum += loss_value;
      const index_t b = logits.dim(0), c = logits.dim(1);
      for (index_t r = 0; r < b; ++r) {
        index_t argmax = 0;
        for (index_t j = 1; j < c; ++j) {
          if (logits.at({r, j}) > logits.at({r, argmax})) argmax = j;
        }
        if (argmax == batch.labels[static_cast<std::size_t>(r)]) ++correct;
        ++total;
      }
      tape.backward(loss);
      sgd_step(model.params(), result.state, config);
    }

    EpochStats stats;
    stats.epoch = epoch;
    stats.lr = result.state.lr(config);
    stats.mean_loss = loss_sum / static_cast<double>(steps);
    stats.accuracy = static_cast<double>(correct) / static_cast<double>(total);
    result.trace.push_back(stats);
    if (on_epoch) on_epoch(stats);
    plateau_schedule(result.state, stats.mean_loss, config);
    if (config.target_accuracy > 0.0 && stats.accuracy >= config.target_accuracy) {
      result.reached_target = true;
      break;
    }
  }
  return result;
}

}  // namespace lidkit
