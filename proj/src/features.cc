// src/features.cc

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

#include "lidkit/features.h"

#include <algorithm>
#include <cmath>

#include "lidkit/errors.h"
#include "lidkit/fft.h"

namespace lidkit {

namespace {
constexpr double kLogFloor = 1e-10;
}

int FeatureConfig::fft_size() const {
  return static_cast<int>(next_pow2(static_cast<std::size_t>(frame_len_samples())));
}

double hz_to_mel(double hz) { return 1127.0 * std::log(1.0 + hz / 700.0); }

double mel_to_hz(double mel) { return 700.0 * (std::exp(mel / 1127.0) - 1.0); }

MelFilterbank::MelFilterbank(const FeatureConfig &config) {
  const double fmax = config.mel_high();
  if (config.fmin_hz < 0.0 || config.fmin_hz >= fmax || fmax > config.nyquist()) {
    throw DataError("mel filterbank: bad frequency range [" +
                    std::to_string(config.fmin_hz) + ", " + std::to_string(fmax) + "]");
  }
  const double mel_lo = hz_to_mel(config.fmin_hz);
  const double mel_hi = hz_to_mel(fmax);
  const index_t bands = kFeatureDim;
  centers_hz_.resize(static_cast<std::size_t>(bands) + 2);
  for (index_t i = 0; i < bands + 2; ++i) {
    const double mel = mel_lo + (mel_hi - mel_lo) * static_cast<double>(i) /
                                    static_cast<double>(bands + 1);
    centers_hz_[static_cast<std::size_t>(i)] = mel_to_hz(mel);
  }
  const int nfft = config.fft_size();
  const double bin_hz = static_cast<double>(config.sample_rate) / nfft;
  start_bin_.resize(static_cast<std::size_t>(bands));
  weights_.resize(static_cast<std::size_t>(bands));
  for (index_t j = 0; j < bands; ++j) {
    const double left = centers_hz_[static_cast<std::size_t>(j)];
    const double center = centers_hz_[static_cast<std::size_t>(j + 1)];
    const double right = centers_hz_[static_cast<std::size_t>(j + 2)];
    std::vector<double> w;
    index_t first = -1;
    for (index_t b = 0; b <= nfft / 2; ++b) {
      const double f = b * bin_hz;
      double v = 0.0;
      if (f > left && f < right) {
        v = f <= center ? (f - left) / (center - left) : (right - f) / (right - center);
      }
      if (v > 0.0) {
        if (first < 0) first = b;
        w.push_back(v);
      } else if (first >= 0) {
        break;
      }
    }
    if (first < 0) {
      // Degenerate band narrower than one fft bin; pin it to the center bin.
      first = static_cast<index_t>(center / bin_hz);
      w.push_back(1.0);
    }
    start_bin_[static_cast<std::size_t>(j)] = first;
    weights_[static_cast<std::size_t>(j)] = std::move(w);
  }
}

std::vector<double> MelFilterbank::apply(const std::vector<double> &power) const {
  std::vector<double> out(static_cast<std::size_t>(kFeatureDim));
  for (std::size_t j = 0; j < out.size(); ++j) {
    double acc = 0.0;
    const std::vector<double> &w = weights_[j];
    const std::size_t b0 = static_cast<std::size_t>(start_bin_[j]);
    for (std::size_t i = 0; i < w.size(); ++i) acc += w[i] * power[b0 + i];
    out[j] = std::log(std::max(acc, kLogFloor));
  }
  return out;
}

std::vector<std::vector<double>> frame_signal(const AudioSignal &signal,
                                              const FeatureConfig &config) {
  const int flen = config.frame_len_samples();
  const int hop = config.hop_samples();
  const auto n = static_cast<index_t>(signal.samples.size());
  if (n < flen) {
    throw EmptyUtteranceError("signal of " + std::to_string(n) +
                              " samples is shorter than one frame (" +
                              std::to_string(flen) + ")");
  }
  const index_t num_frames = 1 + (n - flen) / hop;
  std::vector<double> window(static_cast<std::size_t>(flen));
  for (int i = 0; i < flen; ++i) {
    window[static_cast<std::size_t>(i)] =
        0.54 - 0.46 * std::cos(2.0 * M_PI * i / (flen - 1));
  }
  std::vector<std::vector<double>> frames(static_cast<std::size_t>(num_frames));
  for (index_t t = 0; t < num_frames; ++t) {
    std::vector<double> frame(static_cast<std::size_t>(flen));
    const double *src = signal.samples.data() + t * hop;
    for (int i = 0; i < flen; ++i) {
      frame[static_cast<std::size_t>(i)] = src[i] * window[static_cast<std::size_t>(i)];
    }
    frames[static_cast<std::size_t>(t)] = std::move(frame);
  }
  return frames;
}

std::vector<double> frame_energies(const AudioSignal &signal,
                                   const FeatureConfig &config) {
  const int flen = config.frame_len_samples();
  const int hop = config.hop_samples();
  const auto n = static_cast<index_t>(signal.samples.size());
  if (n < flen) {
    throw EmptyUtteranceError("signal shorter than one frame");
  }
  const index_t num_frames = 1 + (n - flen) / hop;
  std::vector<double> energies(static_cast<std::size_t>(num_frames));
  for (index_t t = 0; t < num_frames; ++t) {
    const double *src = signal.samples.data() + t * hop;
    double acc = 0.0;
    for (int i = 0; i < flen; ++i) acc += src[i] * src[i];
    energies[static_cast<std::size_t>(t)] = acc;
  }
  return energies;
}

Tensor log_mel_filterbank(const std::vector<std::vector<double>> &frames,
                          const FeatureConfig &config) {
  if (frames.empty()) throw EmptyUtteranceError("no frames to analyze");
  const MelFilterbank bank(config);
  const auto nfft = static_cast<std::size_t>(config.fft_size());
  const auto L = static_cast<index_t>(frames.size());
  Tensor out = Tensor::zeros({kFeatureDim, L});
  double *od = out.data();
  for (index_t t = 0; t < L; ++t) {
    const std::vector<double> bands =
        bank.apply(power_spectrum(frames[static_cast<std::size_t>(t)], nfft));
    for (index_t d = 0; d < kFeatureDim; ++d) {
      od[d * L + t] = bands[static_cast<std::size_t>(d)];
    }
  }
  return out;
}

std::vector<index_t> vad_select(const std::vector<double> &energies,
                                const FeatureConfig &config) {
  std::vector<index_t> kept;
  if (energies.empty()) return kept;
  const double max_e = *std::max_element(energies.begin(), energies.end());
  const double rel_floor = max_e * std::pow(10.0, -config.vad_dynamic_range_db / 10.0);
  for (std::size_t t = 0; t < energies.size(); ++t) {
    if (energies[t] >= rel_floor && energies[t] >= config.vad_energy_floor) {
      kept.push_back(static_cast<index_t>(t));
    }
  }
  return kept;
}

Tensor sliding_cmn(const Tensor &features, const FeatureConfig &config) {
  const index_t D = features.dim(0), L = features.dim(1);
  const index_t window = std::max<index_t>(1, config.cmn_window_frames());
  Tensor out = Tensor::zeros({D, L});
  const double *x = features.data();
  double *y = out.data();
  const index_t half = window / 2;
  for (index_t t = 0; t < L; ++t) {
    index_t lo = t - half;
    index_t hi = lo + window;  // exclusive
    if (lo < 0) {
      lo = 0;
      hi = std::min(window, L);
    } else if (hi > L) {
      hi = L;
      lo = std::max<index_t>(0, L - window);
    }
    const double inv = 1.0 / static_cast<double>(hi - lo);
    for (index_t d = 0; d < D; ++d) {
      double mean = 0.0;
      const double *row = x + d * L;
      for (index_t u = lo; u < hi; ++u) mean += row[u];
      mean *= inv;
      y[d * L + t] = row[t] - mean;
    }
  }
  return out;
}

FeatureSequence extract(const AudioSignal &signal, const FeatureConfig &config,
                        const std::string &utterance_id) {
  const std::vector<std::vector<double>> frames = frame_signal(signal, config);
  const std::vector<double> energies = frame_energies(signal, config);
  const Tensor all = log_mel_filterbank(frames, config);
  const std::vector<index_t> kept = vad_select(energies, config);
  if (kept.empty()) {
    throw EmptyUtteranceError(utterance_id + ": no speech frames after VAD");
  }
  const auto L0 = static_cast<index_t>(frames.size());
  const auto L = static_cast<index_t>(kept.size());
  Tensor speech = Tensor::zeros({kFeatureDim, L});
  const double *src = all.data();
  double *dst = speech.data();
  for (index_t d = 0; d < kFeatureDim; ++d) {
    for (index_t i = 0; i < L; ++i) {
      dst[d * L + i] = src[d * L0 + kept[static_cast<std::size_t>(i)]];
    }
  }
  FeatureSequence seq;
  seq.utterance_id = utterance_id;
  seq.features = sliding_cmn(speech, config);
  const double hop_s = config.hop_ms / 1000.0;
  const double center_s = config.frame_ms / 2000.0;
  seq.frame_times.reserve(kept.size());
  for (index_t idx : kept) {
    seq.frame_times.push_back(static_cast<double>(idx) * hop_s + center_s);
  }
  return seq;
}

}  // namespace lidkit
