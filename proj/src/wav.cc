// src/wav.cc

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

#include "lidkit/wav.h"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "lidkit/errors.h"

namespace lidkit {

namespace {

std::uint32_t read_u32(std::istream &in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char *>(b), 4);
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

std::uint16_t read_u16(std::istream &in) {
  unsigned char b[2];
  in.read(reinterpret_cast<char *>(b), 2);
  return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
}

void write_u32(std::ostream &out, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>((v >> 8) & 0xff),
                        static_cast<unsigned char>((v >> 16) & 0xff),
                        static_cast<unsigned char>((v >> 24) & 0xff)};
  out.write(reinterpret_cast<char *>(b), 4);
}

void write_u16(std::ostream &out, std::uint16_t v) {
  unsigned char b[2] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>((v >> 8) & 0xff)};
  out.write(reinterpret_cast<char *>(b), 2);
}

}  // namespace

AudioSignal read_wav(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open wav file: " + path);
  char tag[5] = {0};
  in.read(tag, 4);
  if (std::strncmp(tag, "RIFF", 4) != 0) throw DataError(path + ": not a RIFF file");
  read_u32(in);  // riff size
  in.read(tag, 4);
  if (std::strncmp(tag, "WAVE", 4) != 0) throw DataError(path + ": not a WAVE file");

  bool have_fmt = false;
  std::uint16_t channels = 0, bits = 0, format = 0;
  std::uint32_t rate = 0;
  std::vector<std::int16_t> pcm;
  while (in.read(tag, 4)) {
    const std::uint32_t chunk_size = read_u32(in);
    if (std::strncmp(tag, "fmt ", 4) == 0) {
      format = read_u16(in);
      channels = read_u16(in);
      rate = read_u32(in);
      read_u32(in);  // byte rate
      read_u16(in);  // block align
      bits = read_u16(in);
      if (chunk_size > 16) in.ignore(chunk_size - 16);
      have_fmt = true;
    } else if (std::strncmp(tag, "data", 4) == 0) {
      if (!have_fmt) throw DataError(path + ": data chunk before fmt chunk");
      pcm.resize(chunk_size / 2);
      in.read(reinterpret_cast<char *>(pcm.data()),
              static_cast<std::streamsize>(pcm.size() * 2));
      if (!in) throw DataError(path + ": truncated data chunk");
      break;
    } else {
      in.ignore(chunk_size + (chunk_size & 1));
    }
  }
  if (!have_fmt) throw DataError(path + ": missing fmt chunk");
  if (format != 1 || bits != 16) {
    throw DataError(path + ": only 16-bit integer PCM is supported");
  }
  if (channels != 1) throw DataError(path + ": only mono audio is supported");
  if (rate == 0) throw DataError(path + ": invalid sample rate");

  AudioSignal sig;
  sig.sample_rate = static_cast<int>(rate);
  sig.samples.resize(pcm.size());
  for (std::size_t i = 0; i < pcm.size(); ++i) {
    sig.samples[i] = static_cast<double>(pcm[i]) / 32768.0;
  }
  return sig;
}

void write_wav(const std::string &path, const AudioSignal &signal) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot create wav file: " + path);
  const std::uint32_t n = static_cast<std::uint32_t>(signal.samples.size());
  const std::uint32_t data_bytes = n * 2;
  out.write("RIFF", 4);
  write_u32(out, 36 + data_bytes);
  out.write("WAVE", 4);
  out.write("fmt ", 4);
  write_u32(out, 16);
  write_u16(out, 1);  // PCM
  write_u16(out, 1);  // mono
  write_u32(out, static_cast<std::uint32_t>(signal.sample_rate));
  write_u32(out, static_cast<std::uint32_t>(signal.sample_rate) * 2);
  write_u16(out, 2);
  write_u16(out, 16);
  out.write("data", 4);
  write_u32(out, data_bytes);
  for (std::uint32_t i = 0; i < n; ++i) {
    const double v = std::clamp(signal.samples[i], -1.0, 1.0);
    const auto q = static_cast<std::int16_t>(std::lrint(v * 32767.0));
    write_u16(out, static_cast<std::uint16_t>(q));
  }
  if (!out) throw DataError("failed writing wav file: " + path);
}

}  // namespace lidkit
