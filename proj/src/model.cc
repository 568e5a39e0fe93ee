// src/model.cc

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

#include "lidkit/model.h"

#include <cmath>

#include "lidkit/errors.h"

namespace lidkit {

void ModelConfig::validate() const {
  if (input_dim != kFeatureDim) {
    throw DataError("ModelConfig: input_dim must be " + std::to_string(kFeatureDim));
  }
  for (index_t c : channels) {
    if (c < 1) throw DataError("ModelConfig: channel counts must be positive");
  }
  for (int b : blocks) {
    if (b < 1) throw DataError("ModelConfig: block counts must be positive");
  }
  if (blstm_layers < 1 || blstm_hidden < 1 || num_classes < 2) {
    throw DataError("ModelConfig: bad blstm/classifier sizes");
  }
}

ModelConfig ModelConfig::paper() { return ModelConfig{}; }

ModelConfig ModelConfig::tiny() {
  ModelConfig c;
  c.channels = {2, 2, 2, 2};
  c.blocks = {1, 1, 1, 1};
  c.blstm_hidden = 2;
  c.num_classes = 3;
  return c;
}

ModelConfig ModelConfig::desk() {
  ModelConfig c;
  c.channels = {8, 16, 32, 64};
  c.blocks = {1, 1, 1, 1};
  c.blstm_hidden = 32;
  c.num_classes = 4;
  return c;
}

ModelConfig ModelConfig::preset(const std::string &name) {
  if (name == "paper") return paper();
  if (name == "tiny") return tiny();
  if (name == "desk") return desk();
  throw UsageError("unknown model preset '" + name + "' (expected paper, tiny or desk)");
}

PoolingHead parse_head(const std::string &name) {
  if (name == "sap") return PoolingHead::kSap;
  if (name == "tap") return PoolingHead::kTap;
  throw UsageError("unknown pooling head '" + name + "' (expected sap or tap)");
}

std::string head_name(PoolingHead head) {
  return head == PoolingHead::kSap ? "sap" : "tap";
}

Tensor &ParameterStore::add(const std::string &name, Tensor t) {
  auto [it, inserted] = by_name_.emplace(name, std::move(t));
  if (!inserted) throw DataError("duplicate parameter name: " + name);
  order_.push_back(name);
  return it->second;
}

Tensor &ParameterStore::get(const std::string &name) {
  auto it = by_name_.find(name);
  if (it == by_name_.end()) throw DataError("unknown parameter: " + name);
  return it->second;
}

const Tensor &ParameterStore::get(const std::string &name) const {
  auto it = by_name_.find(name);
  if (it == by_name_.end()) throw DataError("unknown parameter: " + name);
  return it->second;
}

index_t ParameterStore::total_parameters() const {
  index_t n = 0;
  for (const auto &[name, t] : by_name_) n += t.numel();
  return n;
}

std::vector<Tensor> ParameterStore::trainable() const {
  std::vector<Tensor> out;
  for (const std::string &name : order_) {
    const Tensor &t = by_name_.at(name);
    if (t.requires_grad()) out.push_back(t);
  }
  return out;
}

std::vector<std::string> ParameterStore::trainable_names() const {
  std::vector<std::string> out;
  for (const std::string &name : order_) {
    if (by_name_.at(name).requires_grad()) out.push_back(name);
  }
  return out;
}

void ParameterStore::zero_grads() {
  for (const std::string &name : order_) {
    Tensor &t = by_name_.at(name);
    if (t.requires_grad()) t.zero_grad();
  }
}

Tensor height_pool_squeeze(Tape *tape, const Tensor &block) {
  if (block.rank() == 3) return mean_axis(tape, block, 1);
  if (block.rank() == 4) return mean_axis(tape, block, 2);
  throw DataError("height_pool_squeeze: expects (C,H,W) or (N,C,H,W), got " +
                  block.shape_str());
}

Tensor Model::register_uniform(const std::string &name, std::vector<index_t> shape,
                               double bound, Rng &rng, bool requires_grad) {
  Tensor t(shape, requires_grad);
  for (index_t i = 0; i < t.numel(); ++i) t.data()[i] = rng.uniform(-bound, bound);
  return store_.add(name, t);
}

Tensor Model::register_zeros(const std::string &name, std::vector<index_t> shape,
                             bool requires_grad) {
  Tensor t(std::move(shape), requires_grad);
  return store_.add(name, t);
}

Tensor Model::register_conv(const std::string &name, const ConvSpec &spec, Rng &rng) {
  const double fan_in =
      static_cast<double>(spec.in_channels) * spec.kernel * spec.kernel;
  return register_uniform(name, {spec.out_channels, spec.in_channels, spec.kernel, spec.kernel},
                          std::sqrt(6.0 / fan_in), rng);
}

BatchNormState Model::register_bn(const std::string &name, index_t channels) {
  BatchNormState bn = BatchNormState::make(channels);
  bn.gamma.set_requires_grad(true);
  bn.beta.set_requires_grad(true);
  store_.add(name + ".gamma", bn.gamma);
  store_.add(name + ".beta", bn.beta);
  store_.add(name + ".running_mean", bn.running_mean);
  store_.add(name + ".running_var", bn.running_var);
  return bn;
}

Tensor Model::register_affine_weight(const std::string &name, index_t out, index_t in,
                                     Rng &rng) {
  return register_uniform(name, {out, in}, std::sqrt(6.0 / static_cast<double>(in)), rng);
}

Model::Model(const ModelConfig &config, std::uint64_t seed) : config_(config) {
  config_.validate();
  Rng rng(seed);

  conv1_.spec = ConvSpec{3, 1, 1, 1, config_.channels[0]};
  conv1_.weight = register_conv("conv1.weight", conv1_.spec, rng);
  conv1_bn_ = register_bn("conv1.bn", config_.channels[0]);

  index_t in_ch = config_.channels[0];
  stages_.resize(4);
  for (int s = 0; s < 4; ++s) {
    const index_t out_ch = config_.channels[static_cast<std::size_t>(s)];
    for (int b = 0; b < config_.blocks[static_cast<std::size_t>(s)]; ++b) {
      const int stride = (s > 0 && b == 0) ? 2 : 1;
      const std::string prefix =
          "res" + std::to_string(s + 1) + "." + std::to_string(b) + ".";
      ResidualBlock block;
      block.conv1.spec = ConvSpec{3, 1, stride, in_ch, out_ch};
      block.conv1.weight = register_conv(prefix + "conv1.weight", block.conv1.spec, rng);
      block.bn1 = register_bn(prefix + "bn1", out_ch);
      block.conv2.spec = ConvSpec{3, 1, 1, out_ch, out_ch};
      block.conv2.weight = register_conv(prefix + "conv2.weight", block.conv2.spec, rng);
      block.bn2 = register_bn(prefix + "bn2", out_ch);
      block.has_shortcut = stride != 1 || in_ch != out_ch;
      if (block.has_shortcut) {
        block.shortcut.spec = ConvSpec{1, 0, stride, in_ch, out_ch};
        block.shortcut.weight =
            register_conv(prefix + "shortcut.weight", block.shortcut.spec, rng);
        block.shortcut_bn = register_bn(prefix + "shortcut_bn", out_ch);
      }
      stages_[static_cast<std::size_t>(s)].push_back(std::move(block));
      in_ch = out_ch;
    }
  }

  const index_t R = config_.blstm_hidden;
  index_t lstm_in = config_.channels[3];
  for (int l = 0; l < config_.blstm_layers; ++l) {
    BlstmLayer layer;
    layer.input_dim = lstm_in;
    for (const char *dir : {"fwd", "bwd"}) {
      const std::string prefix =
          "blstm." + std::to_string(l) + "." + dir + ".";
      LstmDirection d;
      d.w_ih = register_uniform(prefix + "w_ih", {4 * R, lstm_in},
                                1.0 / std::sqrt(static_cast<double>(lstm_in)), rng);
      d.w_hh = register_uniform(prefix + "w_hh", {4 * R, R},
                                1.0 / std::sqrt(static_cast<double>(R)), rng);
      d.bias = register_zeros(prefix + "bias", {4 * R});
      // forget-gate chunk starts trainable rather than closed
      for (index_t i = R; i < 2 * R; ++i) d.bias.data()[i] = 1.0;
      if (std::string(dir) == "fwd") {
        layer.fwd = d;
      } else {
        layer.bwd = d;
      }
    }
    blstm_.push_back(layer);
    lstm_in = 2 * R;
  }

  const index_t F = config_.embedding_dim();
  sap_w_ = register_affine_weight("sap.w", F, F, rng);
  sap_b_ = register_zeros("sap.b", {F});
  sap_mu_ = register_uniform("sap.mu", {F}, 0.05, rng);
  fc_w_ = register_affine_weight("fc.weight", F, F, rng);
  fc_b_ = register_zeros("fc.bias", {F});
  out_w_ = register_affine_weight("out.weight", config_.num_classes, F, rng);
  out_b_ = register_zeros("out.bias", {config_.num_classes});
}

void Model::load_values(const ParameterStore &source) {
  for (const std::string &name : store_.names()) {
    if (!source.has(name)) {
      throw DataError("checkpoint is missing parameter '" + name + "'");
    }
    const Tensor &src = source.get(name);
    Tensor &dst = store_.get(name);
    if (src.shape() != dst.shape()) {
      throw DataError("parameter '" + name + "' has shape " + src.shape_str() +
                      ", model expects " + dst.shape_str());
    }
    std::copy(src.data(), src.data() + src.numel(), dst.data());
  }
}

Tensor Model::conv_bn_relu(Tape *tape, const Tensor &x, ConvLayer &conv,
                           BatchNormState &bn, bool training) {
  Tensor y = conv2d(tape, x, conv.spec, conv.weight, Tensor());
  y = batch_norm(tape, y, bn, training);
  return relu(tape, y);
}

Tensor Model::block_forward(Tape *tape, const Tensor &x, ResidualBlock &block,
                            bool training) {
  Tensor y = conv_bn_relu(tape, x, block.conv1, block.bn1, training);
  y = conv2d(tape, y, block.conv2.spec, block.conv2.weight, Tensor());
  y = batch_norm(tape, y, block.bn2, training);
  Tensor sc = x;
  if (block.has_shortcut) {
    sc = conv2d(tape, x, block.shortcut.spec, block.shortcut.weight, Tensor());
    sc = batch_norm(tape, sc, block.shortcut_bn, training);
  }
  return relu(tape, add(tape, y, sc));
}

Tensor Model::resnet_forward(Tape *tape, const Tensor &features, bool training) {
  Tensor x = features;
  if (x.rank() == 2) {
    x = reshape(tape, x, {1, 1, x.dim(0), x.dim(1)});
  } else if (x.rank() == 3) {
    x = reshape(tape, x, {x.dim(0), 1, x.dim(1), x.dim(2)});
  } else {
    throw DataError("resnet_forward: expects (64,L) or (N,64,L), got " +
                    features.shape_str());
  }
  if (x.dim(2) != config_.input_dim) {
    throw DataError("resnet_forward: feature dimension " + std::to_string(x.dim(2)) +
                    " does not match input_dim " + std::to_string(config_.input_dim));
  }
  if (x.dim(3) < 8) {
    throw DataError("input too short: need at least 8 frames, got " +
                    std::to_string(x.dim(3)));
  }
  x = conv_bn_relu(tape, x, conv1_, conv1_bn_, training);
  for (auto &stage : stages_) {
    for (auto &block : stage) x = block_forward(tape, x, block, training);
  }
  return x;
}

std::vector<Tensor> Model::run_direction(Tape *tape, const std::vector<Tensor> &inputs,
                                         LstmDirection &dir, bool backward) const {
  const index_t R = config_.blstm_hidden;
  const index_t N = inputs.front().dim(0);
  const auto W = static_cast<index_t>(inputs.size());
  Tensor h = Tensor::zeros({N, R});
  Tensor c = Tensor::zeros({N, R});
  std::vector<Tensor> outputs(static_cast<std::size_t>(W));
  // LstmDirection holds shared tensor handles; copies keep the graph valid.
  LstmDirection d = dir;
  for (index_t step = 0; step < W; ++step) {
    const index_t t = backward ? W - 1 - step : step;
    const Tensor &x_t = inputs[static_cast<std::size_t>(t)];
    Tensor z = affine(tape, x_t, d.w_ih, d.bias);
    z = add(tape, z, affine(tape, h, d.w_hh, Tensor()));
    Tensor gate_i = sigmoid(tape, slice_cols(tape, z, 0, R));
    Tensor gate_f = sigmoid(tape, slice_cols(tape, z, R, 2 * R));
    Tensor gate_g = tanh_op(tape, slice_cols(tape, z, 2 * R, 3 * R));
    Tensor gate_o = sigmoid(tape, slice_cols(tape, z, 3 * R, 4 * R));
    c = add(tape, mul(tape, gate_f, c), mul(tape, gate_i, gate_g));
    h = mul(tape, gate_o, tanh_op(tape, c));
    outputs[static_cast<std::size_t>(t)] = h;
  }
  return outputs;
}

Tensor Model::blstm_forward(Tape *tape, const Tensor &sequence) {
  if (sequence.rank() != 3) {
    throw DataError("blstm_forward: expects (N,C,W), got " + sequence.shape_str());
  }
  const index_t W = sequence.dim(2);
  std::vector<Tensor> steps;
  steps.reserve(static_cast<std::size_t>(W));
  for (index_t t = 0; t < W; ++t) steps.push_back(slice_time(tape, sequence, t));

  for (auto &layer : blstm_) {
    if (steps.front().dim(1) != layer.input_dim) {
      throw DataError("blstm_forward: step width " + std::to_string(steps.front().dim(1)) +
                      " does not match layer input " + std::to_string(layer.input_dim));
    }
    std::vector<Tensor> fwd = run_direction(tape, steps, layer.fwd, false);
    std::vector<Tensor> bwd = run_direction(tape, steps, layer.bwd, true);
    std::vector<Tensor> merged(steps.size());
    for (std::size_t t = 0; t < steps.size(); ++t) {
      merged[t] = concat_cols(tape, fwd[t], bwd[t]);
    }
    steps = std::move(merged);
  }
  return stack_steps(tape, steps);
}

Tensor Model::frontend(Tape *tape, const Tensor &features, bool training) {
  Tensor block = resnet_forward(tape, features, training);
  Tensor pooled = height_pool_squeeze(tape, block);  // (N,C,W)
  return blstm_forward(tape, pooled);
}

Tensor Model::sap_pool(Tape *tape, const Tensor &sequence, Tensor *alpha_out) {
  if (sequence.rank() != 3) {
    throw DataError("sap_pool: expects (N,T,F), got " + sequence.shape_str());
  }
  const index_t N = sequence.dim(0), T = sequence.dim(1);
  Tensor h = tanh_op(tape, affine(tape, sequence, sap_w_, sap_b_));
  Tensor mu_row = reshape(tape, sap_mu_, {1, sap_mu_.dim(0)});
  Tensor scores = affine(tape, h, mu_row, Tensor());  // (N,T,1)
  Tensor alpha = softmax_rows(tape, reshape(tape, scores, {N, T}));
  if (alpha_out != nullptr) *alpha_out = alpha;
  return attend(tape, alpha, sequence);
}

Tensor Model::tap_pool(Tape *tape, const Tensor &sequence) {
  if (sequence.rank() != 3) {
    throw DataError("tap_pool: expects (N,T,F), got " + sequence.shape_str());
  }
  return mean_axis(tape, sequence, 1);
}

Tensor Model::classify(Tape *tape, const Tensor &embedding) {
  Tensor h = relu(tape, affine(tape, embedding, fc_w_, fc_b_));
  return affine(tape, h, out_w_, out_b_);
}

Tensor Model::forward_logits(Tape *tape, const Tensor &features, PoolingHead head,
                             bool training, Tensor *alpha_out) {
  Tensor seq = frontend(tape, features, training);
  Tensor e = head == PoolingHead::kSap ? sap_pool(tape, seq, alpha_out)
                                       : tap_pool(tape, seq);
  return classify(tape, e);
}

Tensor Model::utterance_log_posteriors(const Tensor &features, PoolingHead head,
                                       Tensor *alpha_out) {
  if (features.rank() != 2) {
    throw DataError("utterance_log_posteriors: expects (64,L), got " +
                    features.shape_str());
  }
  Tensor logits = forward_logits(nullptr, features, head, false, alpha_out);
  Tensor logp = log_softmax_rows(nullptr, logits);
  return reshape(nullptr, logp, {config_.num_classes});
}

}  // namespace lidkit
