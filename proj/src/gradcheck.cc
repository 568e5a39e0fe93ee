// src/gradcheck.cc

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

#include "lidkit/gradcheck.h"

#include <cmath>
#include <functional>

#include "lidkit/model.h"
#include "lidkit/ops.h"
#include "lidkit/rng.h"
#include "lidkit/tensor.h"

namespace lidkit {

namespace {

constexpr double kStep = 1e-5;

Tensor rand_tensor(std::vector<index_t> shape, Rng &rng, double lo = -1.0,
                   double hi = 1.0, bool requires_grad = false) {
  Tensor t(std::move(shape), requires_grad);
  for (index_t i = 0; i < t.numel(); ++i) t.data()[i] = rng.uniform(lo, hi);
  return t;
}

// Checks a scalar-valued graph builder against central differences on the
// given leaves; samples at most max_coords coordinates per leaf.
GradCheckResult check_case(const std::string &name,
                           const std::function<Tensor(Tape *)> &build,
                           std::vector<Tensor> leaves, double tolerance,
                           Rng &coord_rng, int max_coords = 0) {
  GradCheckResult result;
  result.name = name;
  for (Tensor &l : leaves) l.zero_grad();
  Tape tape;
  Tensor loss = build(&tape);
  tape.backward(loss);
  std::vector<std::vector<double>> analytic;
  for (Tensor &l : leaves) analytic.emplace_back(l.grad(), l.grad() + l.numel());

  for (std::size_t li = 0; li < leaves.size(); ++li) {
    Tensor &leaf = leaves[li];
    std::vector<index_t> coords;
    if (max_coords <= 0 || leaf.numel() <= max_coords) {
      for (index_t i = 0; i < leaf.numel(); ++i) coords.push_back(i);
    } else {
      for (int c = 0; c < max_coords; ++c) {
        coords.push_back(coord_rng.uniform_int(0, leaf.numel() - 1));
      }
    }
    for (index_t i : coords) {
      double *d = leaf.data();
      const double keep = d[i];
      d[i] = keep + kStep;
      const double fp = build(nullptr).value();
      d[i] = keep - kStep;
      const double fm = build(nullptr).value();
      d[i] = keep;
      const double numeric = (fp - fm) / (2.0 * kStep);
      const double exact = analytic[li][static_cast<std::size_t>(i)];
      const double rel = std::fabs(exact - numeric) /
                         std::max(std::fabs(exact) + std::fabs(numeric), 1e-4);
      result.max_rel_error = std::max(result.max_rel_error, rel);
      ++result.coords_checked;
    }
  }
  result.passed = result.max_rel_error < tolerance;
  return result;
}

}  // namespace

std::vector<GradCheckResult> run_gradient_checks(std::uint64_t seed, double tolerance) {
  Rng rng(seed);
  Rng coord_rng = rng.fork(999);
  std::vector<GradCheckResult> results;
  auto run = [&](const std::string &name, const std::function<Tensor(Tape *)> &build,
                 std::vector<Tensor> leaves, int max_coords = 0) {
    results.push_back(check_case(name, build, std::move(leaves), tolerance, coord_rng,
                                 max_coords));
  };

  {
    Tensor x = rand_tensor({3, 5}, rng, -1, 1, true);
    Tensor w = rand_tensor({4, 5}, rng, -1, 1, true);
    Tensor b = rand_tensor({4}, rng, -1, 1, true);
    Tensor r = rand_tensor({3, 4}, rng);
    run("affine", [=](Tape *t) { return sum(t, mul(t, affine(t, x, w, b), r)); },
        {x, w, b});
  }
  {
    Tensor x = rand_tensor({2, 6}, rng, -2, 2, true);
    for (index_t i = 0; i < x.numel(); ++i) {
      if (std::fabs(x.data()[i]) < 0.15) x.data()[i] += 0.4;  // avoid the relu kink
    }
    Tensor r = rand_tensor({2, 6}, rng);
    run("tanh", [=](Tape *t) { return sum(t, mul(t, tanh_op(t, x), r)); }, {x});
    run("sigmoid", [=](Tape *t) { return sum(t, mul(t, sigmoid(t, x), r)); }, {x});
    run("relu", [=](Tape *t) { return sum(t, mul(t, relu(t, x), r)); }, {x});
  }
  {
    Tensor v = rand_tensor({7}, rng, -2, 2, true);
    Tensor rv = rand_tensor({7}, rng);
    run("softmax", [=](Tape *t) { return sum(t, mul(t, softmax(t, v), rv)); }, {v});
    Tensor x = rand_tensor({3, 5}, rng, -2, 2, true);
    Tensor r = rand_tensor({3, 5}, rng);
    run("softmax_rows", [=](Tape *t) { return sum(t, mul(t, softmax_rows(t, x), r)); },
        {x});
    run("log_softmax_rows",
        [=](Tape *t) { return sum(t, mul(t, log_softmax_rows(t, x), r)); }, {x});
  }
  {
    Tensor x = rand_tensor({2, 2, 4, 5}, rng, -1, 1, true);
    Tensor w = rand_tensor({3, 2, 3, 3}, rng, -1, 1, true);
    Tensor b = rand_tensor({3}, rng, -1, 1, true);
    Tensor r1 = rand_tensor({2, 3, 4, 5}, rng);
    ConvSpec s1{3, 1, 1, 2, 3};
    run("conv2d_3x3_s1",
        [=](Tape *t) { return sum(t, mul(t, conv2d(t, x, s1, w, b), r1)); }, {x, w, b});
    ConvSpec s2{3, 1, 2, 2, 3};
    Tensor r2 = rand_tensor({2, 3, 2, 3}, rng);
    run("conv2d_3x3_s2",
        [=](Tape *t) { return sum(t, mul(t, conv2d(t, x, s2, w, Tensor()), r2)); },
        {x, w});
    Tensor w1 = rand_tensor({3, 2, 1, 1}, rng, -1, 1, true);
    ConvSpec s3{1, 0, 2, 2, 3};
    Tensor r3 = rand_tensor({2, 3, 2, 3}, rng);
    run("conv2d_1x1_s2",
        [=](Tape *t) { return sum(t, mul(t, conv2d(t, x, s3, w1, Tensor()), r3)); },
        {x, w1});
  }
  {
    Tensor x = rand_tensor({3, 2, 2, 3}, rng, -2, 2, true);
    BatchNormState st = BatchNormState::make(2);
    st.gamma = Tensor::from({2}, {1.2, 0.8}, true);
    st.beta = Tensor::from({2}, {0.1, -0.3}, true);
    Tensor r = rand_tensor({3, 2, 2, 3}, rng);
    auto st_shared = std::make_shared<BatchNormState>(st);
    run("batch_norm_train",
        [=](Tape *t) { return sum(t, mul(t, batch_norm(t, x, *st_shared, true), r)); },
        {x, st.gamma, st.beta});
  }
  {
    Tensor a = rand_tensor({2, 4}, rng, -1, 1, true);
    Tensor b = rand_tensor({2, 4}, rng, -1, 1, true);
    Tensor r = rand_tensor({2, 4}, rng);
    run("add_mul_scale",
        [=](Tape *t) {
          return sum(t, mul(t, scale(t, add(t, a, mul(t, a, b)), 0.7), r));
        },
        {a, b});
  }
  {
    Tensor x = rand_tensor({2, 3, 4}, rng, -1, 1, true);
    Tensor r = rand_tensor({2, 4}, rng);
    run("mean_axis", [=](Tape *t) { return sum(t, mul(t, mean_axis(t, x, 1), r)); }, {x});
    Tensor r2 = rand_tensor({2, 3}, rng);
    run("slice_time", [=](Tape *t) { return sum(t, mul(t, slice_time(t, x, 2), r2)); },
        {x});
    Tensor m = rand_tensor({3, 6}, rng, -1, 1, true);
    Tensor r3 = rand_tensor({3, 3}, rng);
    run("slice_cols", [=](Tape *t) { return sum(t, mul(t, slice_cols(t, m, 1, 4), r3)); },
        {m});
    Tensor p = rand_tensor({3, 2}, rng, -1, 1, true);
    Tensor q = rand_tensor({3, 3}, rng, -1, 1, true);
    Tensor r4 = rand_tensor({3, 5}, rng);
    run("concat_cols",
        [=](Tape *t) { return sum(t, mul(t, concat_cols(t, p, q), r4)); }, {p, q});
    Tensor s0 = rand_tensor({2, 3}, rng, -1, 1, true);
    Tensor s1 = rand_tensor({2, 3}, rng, -1, 1, true);
    Tensor r5 = rand_tensor({2, 2, 3}, rng);
    run("stack_steps",
        [=](Tape *t) {
          return sum(t, mul(t, stack_steps(t, {s0, s1}), r5));
        },
        {s0, s1});
    Tensor r6 = rand_tensor({12, 2}, rng);
    run("reshape",
        [=](Tape *t) { return sum(t, mul(t, reshape(t, x, {12, 2}), r6)); }, {x});
    Tensor alpha = rand_tensor({2, 3}, rng, 0.05, 0.95, true);
    Tensor r7 = rand_tensor({2, 4}, rng);
    run("attend", [=](Tape *t) { return sum(t, mul(t, attend(t, alpha, x), r7)); },
        {alpha, x});
  }
  {
    Tensor logits = rand_tensor({4, 5}, rng, -2, 2, true);
    std::vector<int> labels{0, 2, 4, 1};
    run("cross_entropy_mean",
        [=](Tape *t) { return cross_entropy_mean(t, logits, labels); }, {logits});
  }
  {
    // two-layer BLSTM on a short sequence, all direction parameters
    ModelConfig cfg = ModelConfig::tiny();
    auto model = std::make_shared<Model>(cfg, rng.next_u64());
    Tensor seq = rand_tensor({1, cfg.channels[3], 4}, rng, -1, 1, true);
    Tensor r = rand_tensor({1, 4, cfg.embedding_dim()}, rng);
    std::vector<Tensor> leaves{seq};
    for (const std::string &name : model->params().trainable_names()) {
      if (name.rfind("blstm.", 0) == 0) leaves.push_back(model->params().get(name));
    }
    run("blstm_forward",
        [=](Tape *t) { return sum(t, mul(t, model->blstm_forward(t, seq), r)); },
        leaves);
  }
  {
    ModelConfig cfg = ModelConfig::tiny();
    auto model = std::make_shared<Model>(cfg, rng.next_u64());
    Tensor seq = rand_tensor({2, 3, cfg.embedding_dim()}, rng, -1, 1, true);
    std::vector<int> labels{0, 2};
    std::vector<Tensor> leaves{seq};
    for (const char *name : {"sap.w", "sap.b", "sap.mu", "fc.weight", "fc.bias",
                             "out.weight", "out.bias"}) {
      leaves.push_back(model->params().get(name));
    }
    run("sap_classify",
        [=](Tape *t) {
          return cross_entropy_mean(t, model->classify(t, model->sap_pool(t, seq)),
                                    labels);
        },
        leaves);
  }
  {
    // composed tiny model end to end, sampled coordinates per parameter
    ModelConfig cfg = ModelConfig::tiny();
    auto model = std::make_shared<Model>(cfg, rng.next_u64());
    Tensor feats = rand_tensor({2, 64, 11}, rng, -1, 1, true);
    std::vector<int> labels{1, 2};
    std::vector<Tensor> leaves{feats};
    for (const std::string &name : model->params().trainable_names()) {
      leaves.push_back(model->params().get(name));
    }
    for (PoolingHead head : {PoolingHead::kSap, PoolingHead::kTap}) {
      run(std::string("model_") + head_name(head),
          [=](Tape *t) {
            Tensor logits = model->forward_logits(t, feats, head, true);
            return cross_entropy_mean(t, logits, labels);
          },
          leaves, 4);
    }
  }
  return results;
}

}  // namespace lidkit
