// tests/test_features.cc

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

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <vector>

#include "doctest.h"
#include "lidkit/errors.h"
#include "lidkit/feature_archive.h"
#include "lidkit/features.h"
#include "lidkit/fft.h"
#include "lidkit/rng.h"
#include "lidkit/wav.h"

using namespace lidkit;

namespace {

AudioSignal sine(double freq_hz, double seconds, int rate = 8000, double amp = 1.0) {
  AudioSignal s;
  s.sample_rate = rate;
  const auto n = static_cast<std::size_t>(seconds * rate);
  s.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    s.samples[i] = amp * std::sin(2.0 * M_PI * freq_hz * static_cast<double>(i) / rate);
  }
  return s;
}

std::filesystem::path temp_file(const std::string &name) {
  return std::filesystem::temp_directory_path() / name;
}

}  // namespace

TEST_CASE("fft matches direct dft on a small case") {
  Rng rng(3);
  std::vector<std::complex<double>> a(16);
  for (auto &v : a) v = {rng.uniform(-1, 1), 0.0};
  std::vector<std::complex<double>> dft(16);
  for (std::size_t k = 0; k < 16; ++k) {
    std::complex<double> acc{0, 0};
    for (std::size_t n = 0; n < 16; ++n) {
      const double ang = -2.0 * M_PI * static_cast<double>(k * n) / 16.0;
      acc += a[n] * std::complex<double>(std::cos(ang), std::sin(ang));
    }
    dft[k] = acc;
  }
  fft_radix2(a);
  for (std::size_t k = 0; k < 16; ++k) {
    CHECK(std::abs(a[k] - dft[k]) < 1e-9);
  }
}

TEST_CASE("frame count follows the hop formula") {
  FeatureConfig cfg;
  CHECK(cfg.frame_len_samples() == 200);
  CHECK(cfg.hop_samples() == 80);
  CHECK(cfg.fft_size() == 256);

  AudioSignal one_second = sine(440.0, 1.0);
  auto frames = frame_signal(one_second, cfg);
  CHECK(frames.size() == 98);  // 1 + (8000 - 200) / 80

  AudioSignal exact;
  exact.sample_rate = 8000;
  exact.samples.assign(200, 0.25);
  CHECK(frame_signal(exact, cfg).size() == 1);

  AudioSignal tiny;
  tiny.sample_rate = 8000;
  tiny.samples.assign(199, 0.0);
  CHECK_THROWS_AS(frame_signal(tiny, cfg), EmptyUtteranceError);
}

TEST_CASE("zero signal gives zero frames and log-floor filterbank values") {
  FeatureConfig cfg;
  AudioSignal zero;
  zero.sample_rate = 8000;
  zero.samples.assign(400, 0.0);
  auto frames = frame_signal(zero, cfg);
  for (const auto &f : frames) {
    for (double v : f) CHECK(v == 0.0);
  }
  Tensor fb = log_mel_filterbank(frames, cfg);
  CHECK(fb.dim(0) == 64);
  for (index_t i = 0; i < fb.numel(); ++i) {
    CHECK(fb.data()[i] == doctest::Approx(std::log(1e-10)));
  }
}

TEST_CASE("1 kHz tone peaks in the mel band whose center brackets 1 kHz") {
  FeatureConfig cfg;
  AudioSignal tone = sine(1000.0, 0.5);
  Tensor fb = log_mel_filterbank(frame_signal(tone, cfg), cfg);

  // mel-scale oracle: centers are equally spaced between mel(20) and
  // mel(4000); the expected band is the one with center nearest 1 kHz in mel.
  auto mel = [](double hz) { return 1127.0 * std::log(1.0 + hz / 700.0); };
  const double lo = mel(20.0), hi = mel(4000.0);
  index_t expect = 0;
  double best = 1e30;
  for (index_t j = 0; j < 64; ++j) {
    const double center = lo + (hi - lo) * static_cast<double>(j + 1) / 65.0;
    const double d = std::fabs(center - mel(1000.0));
    if (d < best) {
      best = d;
      expect = j;
    }
  }
  const index_t L = fb.dim(1);
  for (index_t t = 0; t < L; ++t) {
    index_t argmax = 0;
    double mx = -1e30;
    for (index_t d = 0; d < 64; ++d) {
      if (fb.at({d, t}) > mx) {
        mx = fb.at({d, t});
        argmax = d;
      }
    }
    CHECK(argmax == expect);
  }
}

TEST_CASE("white noise frame gives finite above-floor filterbank values") {
  FeatureConfig cfg;
  Rng rng(11);
  AudioSignal noise;
  noise.sample_rate = 8000;
  noise.samples.resize(1600);
  for (auto &v : noise.samples) v = rng.uniform(-0.5, 0.5);
  Tensor fb = log_mel_filterbank(frame_signal(noise, cfg), cfg);
  for (index_t i = 0; i < fb.numel(); ++i) {
    CHECK(std::isfinite(fb.data()[i]));
    CHECK(fb.data()[i] > std::log(1e-10));
  }
}

TEST_CASE("sliding cmn zeroes constants and short utterances") {
  FeatureConfig cfg;
  Tensor constant = Tensor::full({64, 50}, 3.25);
  Tensor out = sliding_cmn(constant, cfg);
  for (index_t i = 0; i < out.numel(); ++i) CHECK(out.data()[i] == doctest::Approx(0.0));

  // shorter than the 3 s window: global mean removed per dimension
  Rng rng(17);
  Tensor feats = Tensor::zeros({64, 120});
  for (index_t i = 0; i < feats.numel(); ++i) feats.data()[i] = rng.uniform(-2, 2);
  Tensor norm = sliding_cmn(feats, cfg);
  for (index_t d = 0; d < 64; ++d) {
    double mean = 0.0;
    for (index_t t = 0; t < 120; ++t) mean += norm.at({d, t});
    CHECK(std::fabs(mean / 120.0) < 1e-10);
  }
}

TEST_CASE("sliding cmn on a ramp matches the direct windowed-mean oracle") {
  FeatureConfig cfg;
  const index_t L = 700;  // longer than the 300-frame window
  Tensor feats = Tensor::zeros({64, L});
  for (index_t d = 0; d < 64; ++d) {
    for (index_t t = 0; t < L; ++t) feats.at({d, t}) = 0.01 * static_cast<double>(t) + d;
  }
  Tensor out = sliding_cmn(feats, cfg);
  const index_t window = 300, half = 150;
  for (index_t t = 0; t < L; t += 37) {
    index_t lo = t - half, hi = lo + window;
    if (lo < 0) {
      lo = 0;
      hi = std::min(window, L);
    } else if (hi > L) {
      hi = L;
      lo = std::max<index_t>(0, L - window);
    }
    for (index_t d = 0; d < 64; d += 13) {
      double mean = 0.0;
      for (index_t u = lo; u < hi; ++u) mean += feats.at({d, u});
      mean /= static_cast<double>(hi - lo);
      CHECK(out.at({d, t}) == doctest::Approx(feats.at({d, t}) - mean).epsilon(1e-10));
    }
  }
}

TEST_CASE("vad keeps a constant tone and rejects silence") {
  FeatureConfig cfg;
  AudioSignal tone = sine(523.0, 1.0);
  auto kept = vad_select(frame_energies(tone, cfg), cfg);
  CHECK(kept.size() == 98);

  AudioSignal zero;
  zero.sample_rate = 8000;
  zero.samples.assign(8000, 0.0);
  auto none = vad_select(frame_energies(zero, cfg), cfg);
  CHECK(none.empty());
  CHECK_THROWS_AS(extract(zero, cfg, "silence"), EmptyUtteranceError);
}

TEST_CASE("vad on half silence / half tone keeps exactly the tone-side frames") {
  FeatureConfig cfg;
  AudioSignal mixed;
  mixed.sample_rate = 8000;
  mixed.samples.assign(8000, 0.0);
  for (std::size_t i = 4000; i < 8000; ++i) {
    mixed.samples[i] = std::sin(2.0 * M_PI * 1000.0 * static_cast<double>(i) / 8000.0);
  }
  const auto energies = frame_energies(mixed, cfg);
  const auto kept = vad_select(energies, cfg);
  // constructed-signal oracle: a frame is tone-side iff its 200-sample span
  // reaches past sample 4000
  std::vector<index_t> expect;
  for (index_t t = 0; t < static_cast<index_t>(energies.size()); ++t) {
    if (t * 80 + 200 > 4000) expect.push_back(t);
  }
  CHECK(kept == expect);
  // order preserved and no duplicates
  for (std::size_t i = 1; i < kept.size(); ++i) CHECK(kept[i] > kept[i - 1]);
}

TEST_CASE("extract pipeline: tone keeps all frames, zero-mean output, deterministic") {
  FeatureConfig cfg;
  AudioSignal tone = sine(880.0, 1.0);
  FeatureSequence seq = extract(tone, cfg, "tone");
  CHECK(seq.features.dim(0) == 64);
  CHECK(seq.num_frames() == 98);
  CHECK(seq.features.all_finite());
  for (index_t d = 0; d < 64; ++d) {
    double mean = 0.0;
    for (index_t t = 0; t < 98; ++t) mean += seq.features.at({d, t});
    CHECK(std::fabs(mean / 98.0) < 1e-10);  // 98 frames < 300-frame window
  }
  FeatureSequence again = extract(tone, cfg, "tone");
  for (index_t i = 0; i < seq.features.numel(); ++i) {
    CHECK(seq.features.data()[i] == again.features.data()[i]);
  }
}

TEST_CASE("wav round trip and format rejection") {
  const auto path = temp_file("lidkit_test_tone.wav");
  AudioSignal tone = sine(440.0, 0.3, 8000, 0.7);
  write_wav(path.string(), tone);
  AudioSignal back = read_wav(path.string());
  CHECK(back.sample_rate == 8000);
  REQUIRE(back.samples.size() == tone.samples.size());
  for (std::size_t i = 0; i < back.samples.size(); i += 97) {
    CHECK(back.samples[i] == doctest::Approx(tone.samples[i]).epsilon(1e-3));
  }
  std::filesystem::remove(path);
  CHECK_THROWS_AS(read_wav("/nonexistent/file.wav"), DataError);
}

TEST_CASE("feature archive round trip is exact at float precision") {
  FeatureConfig cfg;
  std::vector<FeatureSequence> utts;
  for (int i = 0; i < 3; ++i) {
    FeatureSequence u = extract(sine(300.0 + 200.0 * i, 0.5 + 0.2 * i), cfg,
                                "utt" + std::to_string(i));
    u.label = i;
    utts.push_back(std::move(u));
  }
  const auto path = temp_file("lidkit_test_feats.ulfb");
  write_feature_archive(path.string(), utts);
  auto back = read_feature_archive(path.string());
  REQUIRE(back.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(back[i].utterance_id == utts[i].utterance_id);
    CHECK(back[i].label == utts[i].label);
    REQUIRE(back[i].features.shape() == utts[i].features.shape());
    for (index_t j = 0; j < back[i].features.numel(); ++j) {
      const double expect = static_cast<double>(static_cast<float>(utts[i].features.data()[j]));
      CHECK(back[i].features.data()[j] == expect);
    }
  }
  std::filesystem::remove(path);
}

TEST_CASE("vad never reorders and output length bounded (property)") {
  FeatureConfig cfg;
  Rng rng(29);
  for (int rep = 0; rep < 20; ++rep) {
    AudioSignal s;
    s.sample_rate = 8000;
    const auto n = static_cast<std::size_t>(rng.uniform_int(400, 4000));
    s.samples.resize(n);
    for (auto &v : s.samples) {
      v = rng.uniform() < 0.3 ? 0.0 : rng.uniform(-0.8, 0.8);
    }
    const auto energies = frame_energies(s, cfg);
    const auto kept = vad_select(energies, cfg);
    CHECK(kept.size() <= energies.size());
    for (std::size_t i = 1; i < kept.size(); ++i) CHECK(kept[i] > kept[i - 1]);
  }
}
