// include/lidkit/features.h

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

#ifndef LIDKIT_FEATURES_H_
#define LIDKIT_FEATURES_H_

#include <string>
#include <vector>

#include "lidkit/tensor.h"
#include "lidkit/wav.h"

namespace lidkit {

// Log mel-filterbank dimensionality; the whole model stack assumes it.
inline constexpr index_t kFeatureDim = 64;

struct FeatureConfig {
  int sample_rate = 8000;
  double frame_ms = 25.0;
  double hop_ms = 10.0;
  double fmin_hz = 20.0;
  double fmax_hz = 0.0;  // 0 selects the Nyquist frequency
  // A frame is speech when its energy is within this range of the loudest
  // frame and above the absolute floor.
  double vad_dynamic_range_db = 30.0;
  double vad_energy_floor = 1e-5;
  double cmn_window_s = 3.0;

  int frame_len_samples() const {
    return static_cast<int>(frame_ms * sample_rate / 1000.0 + 0.5);
  }
  int hop_samples() const {
    return static_cast<int>(hop_ms * sample_rate / 1000.0 + 0.5);
  }
  int fft_size() const;
  double nyquist() const { return sample_rate / 2.0; }
  double mel_high() const { return fmax_hz > 0.0 ? fmax_hz : nyquist(); }
  int cmn_window_frames() const {
    return static_cast<int>(cmn_window_s * 1000.0 / hop_ms + 0.5);
  }
};

// A D x L matrix of per-frame features with utterance metadata.
struct FeatureSequence {
  std::string utterance_id;
  int label = -1;  // index into a label inventory, -1 when unknown
  Tensor features;  // (kFeatureDim, L)
  std::vector<double> frame_times;  // frame-center seconds, may be empty

  index_t num_frames() const { return features.defined() ? features.dim(1) : 0; }
};

// HTK-style mel scale.
double hz_to_mel(double hz);
double mel_to_hz(double mel);

// 64 triangular filters with centers equally spaced on the mel scale
// between fmin and fmax.
class MelFilterbank {
 public:
  explicit MelFilterbank(const FeatureConfig &config);

  // power: fft_size/2 + 1 bins. Returns 64 natural-log energies floored at
  // log(1e-10).
  std::vector<double> apply(const std::vector<double> &power) const;

  double center_hz(index_t band) const { return centers_hz_[static_cast<std::size_t>(band + 1)]; }

 private:
  std::vector<double> centers_hz_;           // 66 mel-spaced edge/center points
  std::vector<index_t> start_bin_;           // first nonzero fft bin per band
  std::vector<std::vector<double>> weights_;  // triangle weights per band
};

// Hamming-windowed frames of frame_ms length every hop_ms. Throws
// EmptyUtteranceError when the signal is shorter than one frame.
std::vector<std::vector<double>> frame_signal(const AudioSignal &signal,
                                              const FeatureConfig &config);

// Per-frame energies (sum of squared raw samples, before windowing), on the
// same frame grid as frame_signal.
std::vector<double> frame_energies(const AudioSignal &signal,
                                   const FeatureConfig &config);

// (kFeatureDim, L) log mel-filterbank energies of the given windowed frames.
Tensor log_mel_filterbank(const std::vector<std::vector<double>> &frames,
                          const FeatureConfig &config);

// Indices of frames kept by the energy VAD rule, in original order.
std::vector<index_t> vad_select(const std::vector<double> &energies,
                                const FeatureConfig &config);

// Per-dimension mean subtraction over a sliding window of up to
// cmn_window_frames. The window is centered and shifts at the edges so it
// always spans min(window, L) frames; utterances shorter than the window
// therefore get their global mean removed.
Tensor sliding_cmn(const Tensor &features, const FeatureConfig &config);

// Full pipeline: frame -> log mel -> energy VAD -> sliding CMN, with
// normalization statistics computed on speech frames only.
FeatureSequence extract(const AudioSignal &signal, const FeatureConfig &config,
                        const std::string &utterance_id);

}  // namespace lidkit

#endif  // LIDKIT_FEATURES_H_
