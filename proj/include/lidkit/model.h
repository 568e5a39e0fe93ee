// include/lidkit/model.h

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

#ifndef LIDKIT_MODEL_H_
#define LIDKIT_MODEL_H_

#include <array>
#include <map>
#include <string>
#include <vector>

#include "lidkit/features.h"
#include "lidkit/ops.h"
#include "lidkit/rng.h"
#include "lidkit/tensor.h"

namespace lidkit {

// Residual CNN + two-layer BLSTM + pooling head. The "paper" preset is the
// full-size architecture; "tiny" is the reduced configuration used by the
// gradient checks; "desk" is a small configuration that trains in minutes on
// a laptop CPU.
struct ModelConfig {
  index_t input_dim = kFeatureDim;
  std::array<index_t, 4> channels = {16, 32, 64, 128};
  std::array<int, 4> blocks = {3, 4, 6, 3};
  int blstm_layers = 2;
  index_t blstm_hidden = 128;  // R; embeddings are 2R wide
  index_t num_classes = 14;

  index_t embedding_dim() const { return 2 * blstm_hidden; }
  void validate() const;

  static ModelConfig paper();
  static ModelConfig tiny();
  static ModelConfig desk();
  static ModelConfig preset(const std::string &name);
};

enum class PoolingHead { kSap, kTap };
PoolingHead parse_head(const std::string &name);
std::string head_name(PoolingHead head);

// Named tensor collection with stable insertion order. Learnable tensors are
// marked requires_grad; running statistics are stored alongside them.
class ParameterStore {
 public:
  Tensor &add(const std::string &name, Tensor t);
  Tensor &get(const std::string &name);
  const Tensor &get(const std::string &name) const;
  bool has(const std::string &name) const { return by_name_.count(name) != 0; }
  const std::vector<std::string> &names() const { return order_; }
  std::size_t size() const { return order_.size(); }
  index_t total_parameters() const;
  std::vector<Tensor> trainable() const;
  std::vector<std::string> trainable_names() const;
  void zero_grads();

 private:
  std::map<std::string, Tensor> by_name_;
  std::vector<std::string> order_;
};

// Mean over the height axis of a CNN block, squeezing it away:
// (C,H,W) -> (C,W) or (N,C,H,W) -> (N,C,W).
Tensor height_pool_squeeze(Tape *tape, const Tensor &block);

class Model {
 public:
  // Fresh model with seeded initialization.
  Model(const ModelConfig &config, std::uint64_t seed);

  const ModelConfig &config() const { return config_; }
  ParameterStore &params() { return store_; }
  const ParameterStore &params() const { return store_; }

  // Copies values (by name) from another store, e.g. a loaded checkpoint.
  void load_values(const ParameterStore &source);

  // features: (N,64,L) batch or (64,L); returns (N, channels[3], 8, W) with
  // W = ceil(ceil(ceil(L/2)/2)/2). Requires L >= 8.
  Tensor resnet_forward(Tape *tape, const Tensor &features, bool training);

  // (N,C,W) -> (N, W, 2R) sequence of concatenated direction outputs.
  Tensor blstm_forward(Tape *tape, const Tensor &sequence);

  // resnet -> height pool -> blstm; (N,64,L) or (64,L) -> (N, W, 2R).
  Tensor frontend(Tape *tape, const Tensor &features, bool training);

  // (N,T,F) -> (N,F); alpha_out, when given, receives the (N,T) weights.
  Tensor sap_pool(Tape *tape, const Tensor &sequence, Tensor *alpha_out = nullptr);
  Tensor tap_pool(Tape *tape, const Tensor &sequence);

  // (N,F) embedding -> (N,num_classes) logits via the relu FC layer.
  Tensor classify(Tape *tape, const Tensor &embedding);

  // Full pipeline to logits.
  Tensor forward_logits(Tape *tape, const Tensor &features, PoolingHead head,
                        bool training, Tensor *alpha_out = nullptr);

  // Single utterance (64,L) -> num_classes log-posteriors, inference mode.
  Tensor utterance_log_posteriors(const Tensor &features, PoolingHead head,
                                  Tensor *alpha_out = nullptr);

 private:
  struct ConvLayer {
    ConvSpec spec;
    Tensor weight;
  };
  struct ResidualBlock {
    ConvLayer conv1, conv2;
    BatchNormState bn1, bn2;
    bool has_shortcut = false;
    ConvLayer shortcut;
    BatchNormState shortcut_bn;
  };
  struct LstmDirection {
    Tensor w_ih;  // (4R, In)
    Tensor w_hh;  // (4R, R)
    Tensor bias;  // (4R)
  };
  struct BlstmLayer {
    LstmDirection fwd, bwd;
    index_t input_dim = 0;
  };

  Tensor conv_bn_relu(Tape *tape, const Tensor &x, ConvLayer &conv,
                      BatchNormState &bn, bool training);
  Tensor block_forward(Tape *tape, const Tensor &x, ResidualBlock &block,
                       bool training);
  std::vector<Tensor> run_direction(Tape *tape, const std::vector<Tensor> &inputs,
                                    LstmDirection &dir, bool backward) const;

  Tensor register_conv(const std::string &name, const ConvSpec &spec, Rng &rng);
  BatchNormState register_bn(const std::string &name, index_t channels);
  Tensor register_affine_weight(const std::string &name, index_t out, index_t in,
                                Rng &rng);
  Tensor register_uniform(const std::string &name, std::vector<index_t> shape,
                          double bound, Rng &rng, bool requires_grad = true);
  Tensor register_zeros(const std::string &name, std::vector<index_t> shape,
                        bool requires_grad = true);

  ModelConfig config_;
  ParameterStore store_;
  ConvLayer conv1_;
  BatchNormState conv1_bn_;
  std::vector<std::vector<ResidualBlock>> stages_;
  std::vector<BlstmLayer> blstm_;
  Tensor sap_w_, sap_b_, sap_mu_;  // (F,F), (F), (F)
  Tensor fc_w_, fc_b_, out_w_, out_b_;
};

}  // namespace lidkit

#endif  // LIDKIT_MODEL_H_
