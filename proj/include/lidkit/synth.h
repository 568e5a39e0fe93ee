// include/lidkit/synth.h

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

#ifndef LIDKIT_SYNTH_H_
#define LIDKIT_SYNTH_H_

#include <cstdint>
#include <string>
#include <vector>

#include "lidkit/manifest.h"
#include "lidkit/tensor.h"
#include "lidkit/wav.h"

namespace lidkit {

// Synthetic "languages" are spectral-texture classes: filtered noise excited
// at class-specific resonance frequencies, with a class-specific gain
// cadence alternating which resonance dominates. Any two classes differ by
// at least 200 Hz in their first resonance, so classes are separable by
// spectrum alone, and the texture is stationary across the utterance.
struct SynthLanguageSpec {
  index_t num_classes = 4;
  index_t utts_per_class = 50;
  double min_duration_s = 2.0;
  double max_duration_s = 10.0;
  double noise_floor = 0.01;
  std::uint64_t seed = 1;
  int sample_rate = 8000;
  std::string label_prefix = "lang";

  // Class resonance frequencies (Hz); first entries are >= 200 Hz apart
  // between any two classes.
  static std::vector<double> resonances(index_t cls);
  // Seconds between gain-state transitions for this class.
  static double cadence_s(index_t cls);

  std::string label_name(index_t cls) const;
  void validate() const;
};

// Renders one utterance deterministically from (spec.seed, cls, index).
AudioSignal synthesize_utterance(const SynthLanguageSpec &spec, index_t cls,
                                 index_t index);

// Writes num_classes * utts_per_class WAV files plus a manifest.tsv into
// out_dir; duration tags are the rounded duration, e.g. "3s". Returns the
// manifest records in generation order.
std::vector<ManifestRecord> generate_synthetic(const SynthLanguageSpec &spec,
                                               const std::string &out_dir);

}  // namespace lidkit

#endif  // LIDKIT_SYNTH_H_
