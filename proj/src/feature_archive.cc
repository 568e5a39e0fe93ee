// src/feature_archive.cc

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

#include "lidkit/feature_archive.h"

#include <bit>
#include <cstdint>
#include <fstream>

#include "lidkit/errors.h"

namespace lidkit {

static_assert(std::endian::native == std::endian::little,
              "feature archives assume a little-endian host");

namespace {

constexpr char kMagic[4] = {'U', 'L', 'F', 'B'};
constexpr unsigned char kVersion = 1;

void write_u32(std::ostream &out, std::uint32_t v) {
  out.write(reinterpret_cast<const char *>(&v), 4);
}

void write_i32(std::ostream &out, std::int32_t v) {
  out.write(reinterpret_cast<const char *>(&v), 4);
}

std::uint32_t read_u32(std::istream &in) {
  std::uint32_t v = 0;
  in.read(reinterpret_cast<char *>(&v), 4);
  return v;
}

std::int32_t read_i32(std::istream &in) {
  std::int32_t v = 0;
  in.read(reinterpret_cast<char *>(&v), 4);
  return v;
}

}  // namespace

void write_feature_archive(const std::string &path,
                           const std::vector<FeatureSequence> &utterances) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot create feature archive: " + path);
  out.write(kMagic, 4);
  out.put(static_cast<char>(kVersion));
  for (const FeatureSequence &u : utterances) {
    write_u32(out, static_cast<std::uint32_t>(u.utterance_id.size()));
    out.write(u.utterance_id.data(), static_cast<std::streamsize>(u.utterance_id.size()));
    write_i32(out, u.label);
    const index_t d = u.features.dim(0), l = u.features.dim(1);
    write_u32(out, static_cast<std::uint32_t>(d));
    write_u32(out, static_cast<std::uint32_t>(l));
    const double *src = u.features.data();
    std::vector<float> row(static_cast<std::size_t>(d * l));
    for (index_t i = 0; i < d * l; ++i) row[static_cast<std::size_t>(i)] = static_cast<float>(src[i]);
    out.write(reinterpret_cast<const char *>(row.data()),
              static_cast<std::streamsize>(row.size() * sizeof(float)));
  }
  if (!out) throw DataError("failed writing feature archive: " + path);
}

std::vector<FeatureSequence> read_feature_archive(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open feature archive: " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::string(magic, 4) != std::string(kMagic, 4)) {
    throw DataError(path + ": not a ULFB feature archive");
  }
  const int version = in.get();
  if (version != kVersion) {
    throw DataError(path + ": unsupported archive version " + std::to_string(version));
  }
  std::vector<FeatureSequence> utterances;
  while (true) {
    const std::uint32_t id_len = read_u32(in);
    if (in.eof()) break;
    if (!in) throw DataError(path + ": truncated record header");
    FeatureSequence u;
    u.utterance_id.resize(id_len);
    in.read(u.utterance_id.data(), id_len);
    u.label = read_i32(in);
    const std::uint32_t d = read_u32(in);
    const std::uint32_t l = read_u32(in);
    if (!in || d == 0 || l == 0) {
      throw DataError(path + ": malformed record for id '" + u.utterance_id + "'");
    }
    if (d != static_cast<std::uint32_t>(kFeatureDim)) {
      throw DataError(path + ": record '" + u.utterance_id + "' has dimension " +
                      std::to_string(d) + ", expected " + std::to_string(kFeatureDim));
    }
    std::vector<float> raw(static_cast<std::size_t>(d) * l);
    in.read(reinterpret_cast<char *>(raw.data()),
            static_cast<std::streamsize>(raw.size() * sizeof(float)));
    if (!in) throw DataError(path + ": truncated features for id '" + u.utterance_id + "'");
    u.features = Tensor::zeros({static_cast<index_t>(d), static_cast<index_t>(l)});
    double *dst = u.features.data();
    for (std::size_t i = 0; i < raw.size(); ++i) dst[i] = static_cast<double>(raw[i]);
    utterances.push_back(std::move(u));
  }
  return utterances;
}

}  // namespace lidkit
