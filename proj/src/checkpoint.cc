// src/checkpoint.cc

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

#include "lidkit/checkpoint.h"

#include <bit>
#include <cstdint>
#include <fstream>

#include "json.hpp"
#include "lidkit/errors.h"

namespace lidkit {

static_assert(std::endian::native == std::endian::little,
              "checkpoints assume a little-endian host");

namespace {

constexpr char kMagic[4] = {'U', 'L', 'C', 'K'};
constexpr unsigned char kVersion = 1;
constexpr const char *kMomentumPrefix = "opt.momentum.";

using nlohmann::json;

void write_u32(std::ostream &out, std::uint32_t v) {
  out.write(reinterpret_cast<const char *>(&v), 4);
}

std::uint32_t read_u32(std::istream &in) {
  std::uint32_t v = 0;
  in.read(reinterpret_cast<char *>(&v), 4);
  return v;
}

void write_tensor(std::ostream &out, const std::string &name, const Tensor &t) {
  write_u32(out, static_cast<std::uint32_t>(name.size()));
  out.write(name.data(), static_cast<std::streamsize>(name.size()));
  write_u32(out, static_cast<std::uint32_t>(t.rank()));
  for (int i = 0; i < t.rank(); ++i) {
    write_u32(out, static_cast<std::uint32_t>(t.dim(i)));
  }
  out.write(reinterpret_cast<const char *>(t.data()),
            static_cast<std::streamsize>(t.numel() * sizeof(double)));
}

json config_to_json(const Checkpoint &ckpt) {
  const ModelConfig &c = ckpt.config;
  json j;
  j["model"] = {
      {"input_dim", c.input_dim},
      {"channels", c.channels},
      {"blocks", c.blocks},
      {"blstm_layers", c.blstm_layers},
      {"blstm_hidden", c.blstm_hidden},
      {"num_classes", c.num_classes},
  };
  j["head"] = head_name(ckpt.head);
  j["class_names"] = ckpt.class_names;
  j["config_hash"] = ckpt.config_hash;
  if (ckpt.has_optimizer) {
    j["optimizer"] = {
        {"lr_index", ckpt.lr_index},
        {"best_loss", ckpt.best_loss},
        {"epochs_since_improvement", ckpt.epochs_since_improvement},
    };
  }
  return j;
}

void config_from_json(const json &j, Checkpoint &ckpt) {
  const json &m = j.at("model");
  ModelConfig c;
  c.input_dim = m.at("input_dim").get<index_t>();
  const auto channels = m.at("channels").get<std::vector<index_t>>();
  const auto blocks = m.at("blocks").get<std::vector<int>>();
  if (channels.size() != 4 || blocks.size() != 4) {
    throw DataError("checkpoint config: channels/blocks must have 4 entries");
  }
  std::copy(channels.begin(), channels.end(), c.channels.begin());
  std::copy(blocks.begin(), blocks.end(), c.blocks.begin());
  c.blstm_layers = m.at("blstm_layers").get<int>();
  c.blstm_hidden = m.at("blstm_hidden").get<index_t>();
  c.num_classes = m.at("num_classes").get<index_t>();
  ckpt.config = c;
  ckpt.head = parse_head(j.at("head").get<std::string>());
  ckpt.class_names = j.at("class_names").get<std::vector<std::string>>();
  ckpt.config_hash = j.value("config_hash", "");
  if (j.contains("optimizer")) {
    ckpt.has_optimizer = true;
    ckpt.lr_index = j["optimizer"].at("lr_index").get<int>();
    ckpt.best_loss = j["optimizer"].at("best_loss").get<double>();
    ckpt.epochs_since_improvement =
        j["optimizer"].at("epochs_since_improvement").get<int>();
  }
}

}  // namespace

void save_checkpoint(const std::string &path, const Checkpoint &ckpt) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot create checkpoint: " + path);
  out.write(kMagic, 4);
  out.put(static_cast<char>(kVersion));
  const std::string cfg = config_to_json(ckpt).dump();
  write_u32(out, static_cast<std::uint32_t>(cfg.size()));
  out.write(cfg.data(), static_cast<std::streamsize>(cfg.size()));
  const auto count = static_cast<std::uint32_t>(ckpt.params.size() + ckpt.momentum.size());
  write_u32(out, count);
  for (const std::string &name : ckpt.params.names()) {
    write_tensor(out, name, ckpt.params.get(name));
  }
  for (const std::string &name : ckpt.momentum.names()) {
    write_tensor(out, kMomentumPrefix + name, ckpt.momentum.get(name));
  }
  if (!out) throw DataError("failed writing checkpoint: " + path);
}

Checkpoint load_checkpoint(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint: " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::string(magic, 4) != std::string(kMagic, 4)) {
    throw DataError(path + ": not a ULCK checkpoint");
  }
  const int version = in.get();
  if (version != kVersion) {
    throw DataError(path + ": unsupported checkpoint version " + std::to_string(version));
  }
  Checkpoint ckpt;
  const std::uint32_t cfg_len = read_u32(in);
  std::string cfg(cfg_len, '\0');
  in.read(cfg.data(), cfg_len);
  if (!in) throw DataError(path + ": truncated config record");
  try {
    config_from_json(json::parse(cfg), ckpt);
  } catch (const json::exception &e) {
    throw DataError(path + ": bad config record: " + e.what());
  }
  const std::uint32_t count = read_u32(in);
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint32_t name_len = read_u32(in);
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    const std::uint32_t rank = read_u32(in);
    if (!in || rank == 0 || rank > 8) {
      throw DataError(path + ": malformed tensor record '" + name + "'");
    }
    std::vector<index_t> shape(rank);
    for (std::uint32_t d = 0; d < rank; ++d) {
      shape[d] = static_cast<index_t>(read_u32(in));
    }
    Tensor t = Tensor::zeros(shape);
    in.read(reinterpret_cast<char *>(t.data()),
            static_cast<std::streamsize>(t.numel() * sizeof(double)));
    if (!in) throw DataError(path + ": truncated tensor '" + name + "'");
    if (name.rfind(kMomentumPrefix, 0) == 0) {
      ckpt.momentum.add(name.substr(std::string(kMomentumPrefix).size()), t);
    } else {
      ckpt.params.add(name, t);
    }
  }
  return ckpt;
}

}  // namespace lidkit
