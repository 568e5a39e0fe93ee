// include/lidkit/wav.h

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

#ifndef LIDKIT_WAV_H_
#define LIDKIT_WAV_H_

#include <string>
#include <vector>

namespace lidkit {

// 16-bit integer PCM rescaled to [-1, 1].
struct AudioSignal {
  std::vector<double> samples;
  int sample_rate = 8000;

  double duration_s() const {
    return static_cast<double>(samples.size()) / sample_rate;
  }
};

// Reads a mono 16-bit PCM WAV file; anything else is rejected.
AudioSignal read_wav(const std::string &path);

// Quantizes samples (clipped to [-1, 1]) to 16-bit PCM.
void write_wav(const std::string &path, const AudioSignal &signal);

}  // namespace lidkit

#endif  // LIDKIT_WAV_H_
