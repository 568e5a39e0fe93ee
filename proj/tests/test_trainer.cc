// tests/test_trainer.cc

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

#include <cmath>

#include "doctest.h"
#include "lidkit/errors.h"
#include "lidkit/trainer.h"
#include "test_util.h"

using namespace lidkit;
using lidkit_test::random_tensor;

namespace {

// Two trivially separable feature "languages": band-limited constant
// patterns plus small noise, long enough to exercise crop/extend.
std::vector<FeatureSequence> toy_dataset(index_t per_class, index_t frames, Rng &rng) {
  std::vector<FeatureSequence> data;
  for (index_t cls = 0; cls < 2; ++cls) {
    for (index_t i = 0; i < per_class; ++i) {
      FeatureSequence utt;
      utt.utterance_id = "toy" + std::to_string(cls) + "_" + std::to_string(i);
      utt.label = static_cast<int>(cls);
      utt.features = Tensor::zeros({kFeatureDim, frames});
      for (index_t d = 0; d < kFeatureDim; ++d) {
        const double base = (cls == 0) ? (d < 32 ? 1.0 : -1.0) : (d < 32 ? -1.0 : 1.0);
        for (index_t t = 0; t < frames; ++t) {
          utt.features.at({d, t}) = base + 0.05 * rng.uniform(-1.0, 1.0);
        }
      }
      data.push_back(std::move(utt));
    }
  }
  return data;
}

}  // namespace

TEST_CASE("sample_batch_length: bounds, determinism, and uniform mean") {
  TrainConfig cfg;
  Rng rng(7);
  double sum = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const index_t l = sample_batch_length(rng, cfg);
    REQUIRE(l >= 200);
    REQUIRE(l <= 1000);
    sum += static_cast<double>(l);
  }
  CHECK(std::fabs(sum / 100000.0 - 600.0) < 10.0);

  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) {
    CHECK(sample_batch_length(a, cfg) == sample_batch_length(b, cfg));
  }
}

TEST_CASE("crop_or_extend: identity, cyclic extension, contiguous crop") {
  Rng rng(11);
  Tensor seq = random_tensor({3, 150}, rng);

  Rng r1(1);
  Tensor same = crop_or_extend(seq, 150, r1);
  CHECK(same.data() == seq.data());  // unchanged, shares storage

  Tensor extended = crop_or_extend(seq, 400, r1);
  REQUIRE(extended.shape() == std::vector<index_t>{3, 400});
  for (index_t d = 0; d < 3; ++d) {
    for (index_t t = 0; t < 400; ++t) {
      CHECK(extended.at({d, t}) == seq.at({d, t % 150}));  // frames 0..149,0..149,0..99
    }
  }

  Tensor longer = random_tensor({2, 1200}, rng);
  Rng r2(2);
  Tensor cropped = crop_or_extend(longer, 800, r2);
  REQUIRE(cropped.shape() == std::vector<index_t>{2, 800});
  // contiguous slice: find the start via the first column, then verify all
  index_t start = -1;
  for (index_t s = 0; s <= 400; ++s) {
    if (longer.at({0, s}) == cropped.at({0, 0})) {
      start = s;
      break;
    }
  }
  REQUIRE(start >= 0);
  for (index_t d = 0; d < 2; ++d) {
    for (index_t t = 0; t < 800; t += 13) {
      CHECK(cropped.at({d, t}) == longer.at({d, start + t}));
    }
  }
}

TEST_CASE("make_batch: shared length, labels aligned, deterministic") {
  Rng data_rng(21);
  auto data = toy_dataset(3, 120, data_rng);
  std::vector<index_t> picks{0, 3, 1, 4};
  Rng r1(5), r2(5);
  Batch a = make_batch(data, picks, 512, r1);
  Batch b = make_batch(data, picks, 512, r2);
  REQUIRE(a.features.shape() == std::vector<index_t>{4, 64, 512});
  CHECK(a.labels == std::vector<int>{0, 1, 0, 1});
  for (index_t i = 0; i < a.features.numel(); ++i) {
    CHECK(a.features.data()[i] == b.features.data()[i]);
  }
  // every utterance shorter than 512 -> all extended cyclically
  for (std::size_t k = 0; k < picks.size(); ++k) {
    const FeatureSequence &u = data[static_cast<std::size_t>(picks[k])];
    for (index_t t = 0; t < 512; t += 77) {
      CHECK(a.features.at({static_cast<index_t>(k), 5, t}) ==
            u.features.at({5, t % 120}));
    }
  }
}

TEST_CASE("sgd_step matches the hand-arithmetic update exactly") {
  ParameterStore params;
  Tensor p(std::vector<index_t>{1}, true);
  p.data()[0] = 1.0;
  p.grad()[0] = 0.5;
  params.add("p", p);
  OptimizerState state = OptimizerState::make(params);
  TrainConfig cfg;
  cfg.lr_ladder = {0.1};
  cfg.momentum = 0.9;
  cfg.weight_decay = 1e-4;
  sgd_step(params, state, cfg);
  CHECK(std::fabs(state.momentum.get("p").data()[0] - 0.5001) < 1e-15);
  CHECK(std::fabs(params.get("p").data()[0] - 0.94999) < 1e-15);
}

TEST_CASE("sgd_step: zero gradient and zero decay leave parameters unchanged") {
  ParameterStore params;
  Tensor p(std::vector<index_t>{3}, true);
  p.data()[0] = 1.0;
  p.data()[1] = -2.0;
  p.data()[2] = 0.5;
  p.zero_grad();
  params.add("p", p);
  OptimizerState state = OptimizerState::make(params);
  TrainConfig cfg;
  cfg.weight_decay = 0.0;
  for (int i = 0; i < 5; ++i) sgd_step(params, state, cfg);
  CHECK(params.get("p").data()[0] == 1.0);
  CHECK(params.get("p").data()[1] == -2.0);
  CHECK(params.get("p").data()[2] == 0.5);
}

TEST_CASE("sgd_step: two steps reproduce the momentum recurrence") {
  ParameterStore params;
  Tensor p(std::vector<index_t>{1}, true);
  p.data()[0] = 2.0;
  params.add("p", p);
  OptimizerState state = OptimizerState::make(params);
  TrainConfig cfg;
  cfg.lr_ladder = {0.05};
  cfg.momentum = 0.9;
  cfg.weight_decay = 0.0;
  const double g = 0.3, lr = 0.05, m = 0.9;

  // recurrence oracle: v_k = m v_{k-1} + g, p_k = p_{k-1} - lr v_k
  double v = 0.0, expect = 2.0;
  for (int k = 0; k < 2; ++k) {
    params.get("p").zero_grad();
    params.get("p").grad()[0] = g;
    sgd_step(params, state, cfg);
    v = m * v + g;
    expect -= lr * v;
    CHECK(params.get("p").data()[0] == doctest::Approx(expect).epsilon(1e-15));
  }
}

TEST_CASE("plateau_schedule walks down the ladder and clamps") {
  TrainConfig cfg;
  cfg.plateau_patience = 3;
  cfg.plateau_threshold = 1e-3;
  OptimizerState state;
  state.momentum = ParameterStore{};

  SUBCASE("decreasing losses keep the first rung") {
    double loss = 10.0;
    for (int e = 0; e < 12; ++e) {
      plateau_schedule(state, loss, cfg);
      loss *= 0.9;
    }
    CHECK(state.lr_index == 0);
    CHECK(state.lr(cfg) == 0.1);
  }

  SUBCASE("flat losses drop a rung per patience window, then clamp") {
    plateau_schedule(state, 1.0, cfg);  // baseline
    CHECK(state.lr_index == 0);
    for (int e = 0; e < 3; ++e) plateau_schedule(state, 1.0, cfg);
    CHECK(state.lr_index == 1);
    CHECK(state.lr(cfg) == 0.01);
    for (int e = 0; e < 3; ++e) plateau_schedule(state, 1.0, cfg);
    CHECK(state.lr_index == 2);
    CHECK(state.lr(cfg) == 0.001);
    for (int e = 0; e < 10; ++e) plateau_schedule(state, 1.0, cfg);
    CHECK(state.lr_index == 2);  // terminal rung
  }
}

TEST_CASE("train: loss decreases, zero lr freezes, fixed seed reproduces") {
  Rng data_rng(31);
  auto data = toy_dataset(4, 60, data_rng);
  ModelConfig mc = ModelConfig::tiny();
  mc.num_classes = 2;

  TrainConfig cfg;
  cfg.batch_size = 4;
  cfg.length_min = 16;
  cfg.length_max = 32;
  cfg.lr_ladder = {0.02, 0.002};
  cfg.epochs = 5;
  cfg.seed = 77;

  SUBCASE("loss on a fixed batch strictly decreases over the first 5 steps") {
    Model model(mc, 99);
    OptimizerState state = OptimizerState::make(model.params());
    TrainConfig small = cfg;
    small.lr_ladder = {0.01};
    Rng rng(3);
    Batch batch = make_batch(data, {0, 1, 4, 5}, 24, rng);
    double prev = 1e30;
    for (int step = 0; step < 5; ++step) {
      Tape tape;
      model.params().zero_grads();
      Tensor logits = model.forward_logits(&tape, batch.features, PoolingHead::kSap, true);
      Tensor loss = cross_entropy_mean(&tape, logits, batch.labels);
      CHECK(loss.value() < prev);
      prev = loss.value();
      tape.backward(loss);
      sgd_step(model.params(), state, small);
    }
  }

  SUBCASE("toy set is learned to high accuracy with early stop") {
    Model model(mc, 99);
    TrainConfig overfit = cfg;
    overfit.epochs = 40;
    overfit.target_accuracy = 0.95;
    TrainResult res = train(model, PoolingHead::kSap, data, overfit);
    CHECK(res.reached_target);
    CHECK(res.trace.back().accuracy >= 0.95);
    CHECK(res.trace.size() <= 40);
  }

  SUBCASE("fixed seed gives bitwise-identical first-epoch loss") {
    Model m1(mc, 99);
    Model m2(mc, 99);
    TrainConfig one = cfg;
    one.epochs = 1;
    TrainResult r1 = train(m1, PoolingHead::kSap, data, one);
    TrainResult r2 = train(m2, PoolingHead::kSap, data, one);
    CHECK(r1.trace[0].mean_loss == r2.trace[0].mean_loss);
    CHECK(r1.trace[0].accuracy == r2.trace[0].accuracy);
  }

  SUBCASE("zero learning rate leaves parameters unchanged") {
    Model model(mc, 99);
    Tensor before = model.params().get("conv1.weight").clone();
    TrainConfig frozen = cfg;
    frozen.lr_ladder = {0.0};
    frozen.weight_decay = 0.0;
    frozen.epochs = 1;
    TrainResult res = train(model, PoolingHead::kSap, data, frozen);
    Tensor after = model.params().get("conv1.weight");
    for (index_t i = 0; i < before.numel(); ++i) {
      CHECK(before.data()[i] == after.data()[i]);
    }
  }

  SUBCASE("out-of-range labels are rejected") {
    auto bad = data;
    bad[0].label = 7;
    Model model(mc, 99);
    CHECK_THROWS_AS(train(model, PoolingHead::kSap, bad, cfg), DataError);
  }
}

TEST_CASE("train config validation") {
  TrainConfig cfg;
  cfg.length_min = 4;
  CHECK_THROWS_AS(cfg.validate(), DataError);
  cfg = TrainConfig{};
  cfg.lr_ladder = {0.1, 0.1};
  CHECK_THROWS_AS(cfg.validate(), DataError);
  cfg = TrainConfig{};
  CHECK_NOTHROW(cfg.validate());
}
