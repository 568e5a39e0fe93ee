// src/synth.cc

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

#include "lidkit/synth.h"

#include <cmath>
#include <filesystem>

#include "lidkit/errors.h"
#include "lidkit/rng.h"

namespace lidkit {

std::vector<double> SynthLanguageSpec::resonances(index_t cls) {
  // First resonances are 205 Hz apart; the second resonance stays under the
  // 8 kHz Nyquist for up to 16 classes.
  const double f1 = 350.0 + 205.0 * static_cast<double>(cls);
  const double f2 = 1450.0 + 137.0 * static_cast<double>(cls);
  return {f1, f2};
}

double SynthLanguageSpec::cadence_s(index_t cls) {
  return 0.12 + 0.05 * static_cast<double>(cls);
}

std::string SynthLanguageSpec::label_name(index_t cls) const {
  std::string n = std::to_string(cls);
  if (n.size() < 2) n = "0" + n;
  return label_prefix + n;
}

void SynthLanguageSpec::validate() const {
  if (num_classes < 2) throw DataError("synth: need at least 2 classes");
  if (num_classes > 16) {
    throw DataError("synth: at most 16 classes fit under the 8 kHz Nyquist");
  }
  if (utts_per_class < 1) throw DataError("synth: utts_per_class must be positive");
  if (min_duration_s <= 0.3 || max_duration_s < min_duration_s) {
    throw DataError("synth: bad duration range");
  }
  for (index_t a = 0; a < num_classes; ++a) {
    for (index_t b = a + 1; b < num_classes; ++b) {
      const double gap = std::fabs(resonances(a)[0] - resonances(b)[0]);
      if (gap < 200.0) {
        throw DataError("synth: classes " + std::to_string(a) + " and " +
                        std::to_string(b) + " differ by only " + std::to_string(gap) +
                        " Hz");
      }
    }
  }
}

namespace {

// Two-pole resonator y[n] = g x[n] + 2 r cos(w) y[n-1] - r^2 y[n-2].
class Resonator {
 public:
  Resonator(double freq_hz, int sample_rate, double r = 0.96) {
    const double w = 2.0 * M_PI * freq_hz / sample_rate;
    a1_ = 2.0 * r * std::cos(w);
    a2_ = -r * r;
    gain_ = 1.0 - r;
  }
  double step(double x) {
    const double y = gain_ * x + a1_ * y1_ + a2_ * y2_;
    y2_ = y1_;
    y1_ = y;
    return y;
  }

 private:
  double a1_, a2_, gain_;
  double y1_ = 0.0, y2_ = 0.0;
};

}  // namespace

AudioSignal synthesize_utterance(const SynthLanguageSpec &spec, index_t cls,
                                 index_t index) {
  spec.validate();
  if (cls < 0 || cls >= spec.num_classes) {
    throw DataError("synth: class " + std::to_string(cls) + " out of range");
  }
  Rng rng = Rng(spec.seed).fork(static_cast<std::uint64_t>(cls) * 1000003ull +
                                static_cast<std::uint64_t>(index));
  const double duration = rng.uniform(spec.min_duration_s, spec.max_duration_s);
  const auto n = static_cast<index_t>(duration * spec.sample_rate);
  const std::vector<double> freqs = SynthLanguageSpec::resonances(cls);
  Resonator r1(freqs[0], spec.sample_rate);
  Resonator r2(freqs[1], spec.sample_rate);
  const auto state_len =
      static_cast<index_t>(SynthLanguageSpec::cadence_s(cls) * spec.sample_rate);

  AudioSignal sig;
  sig.sample_rate = spec.sample_rate;
  sig.samples.resize(static_cast<std::size_t>(n));
  double peak = 0.0;
  for (index_t i = 0; i < n; ++i) {
    const double white = rng.uniform(-1.0, 1.0);
    const bool state_a = (i / state_len) % 2 == 0;
    const double g1 = state_a ? 1.0 : 0.25;
    const double g2 = state_a ? 0.25 : 1.0;
    const double v = r1.step(white * g1) + r2.step(white * g2) +
                     spec.noise_floor * rng.uniform(-1.0, 1.0);
    sig.samples[static_cast<std::size_t>(i)] = v;
    peak = std::max(peak, std::fabs(v));
  }
  if (peak > 0.0) {
    const double scale = 0.5 / peak;
    for (double &v : sig.samples) v *= scale;
  }
  return sig;
}

std::vector<ManifestRecord> generate_synthetic(const SynthLanguageSpec &spec,
                                               const std::string &out_dir) {
  spec.validate();
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  std::vector<ManifestRecord> records;
  for (index_t cls = 0; cls < spec.num_classes; ++cls) {
    for (index_t i = 0; i < spec.utts_per_class; ++i) {
      const AudioSignal sig = synthesize_utterance(spec, cls, i);
      std::string idx = std::to_string(i);
      while (idx.size() < 4) idx = "0" + idx;
      const std::string name = spec.label_name(cls) + "_" + idx + ".wav";
      const fs::path wav_path = fs::path(out_dir) / name;
      write_wav(wav_path.string(), sig);
      ManifestRecord rec;
      rec.path = wav_path.string();
      rec.label = spec.label_name(cls);
      rec.duration_tag = std::to_string(static_cast<long>(std::lround(sig.duration_s()))) + "s";
      records.push_back(std::move(rec));
    }
  }
  save_manifest((fs::path(out_dir) / "manifest.tsv").string(), records);
  return records;
}

}  // namespace lidkit
