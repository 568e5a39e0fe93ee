// tests/test_data.cc

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
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "lidkit/errors.h"
#include "lidkit/fft.h"
#include "lidkit/manifest.h"
#include "lidkit/synth.h"

using namespace lidkit;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string &name) {
  const fs::path dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write_lines(const fs::path &path, const std::vector<std::string> &lines) {
  std::ofstream out(path);
  for (const auto &l : lines) out << l << '\n';
}

// Average spectral centroid (Hz) over 256-sample hops.
double spectral_centroid(const AudioSignal &sig) {
  const std::size_t win = 256;
  double num = 0.0, den = 0.0;
  for (std::size_t start = 0; start + win <= sig.samples.size(); start += win) {
    std::vector<double> frame(sig.samples.begin() + static_cast<long>(start),
                              sig.samples.begin() + static_cast<long>(start + win));
    const auto power = power_spectrum(frame, win);
    for (std::size_t k = 0; k < power.size(); ++k) {
      const double f = static_cast<double>(k) * sig.sample_rate / static_cast<double>(win);
      num += f * power[k];
      den += power[k];
    }
  }
  return den > 0.0 ? num / den : 0.0;
}

}  // namespace

TEST_CASE("manifest: load, inventory, and round trip") {
  const auto dir = temp_dir("lidkit_manifest_test");
  const auto path = dir / "m.tsv";
  write_lines(path, {"utt1.wav\teng\t30s", "utt2.wav\tfra\t3s", "utt3.wav\teng\t10s"});
  Manifest m = load_manifest(path.string());
  REQUIRE(m.records.size() == 3);
  CHECK(m.records[0].path == "utt1.wav");
  CHECK(m.records[0].label == "eng");
  CHECK(m.records[0].duration_tag == "30s");
  CHECK(m.labels == std::vector<std::string>{"eng", "fra"});
  CHECK(m.label_index("fra") == 1);
  CHECK(m.label_index("deu") == -1);

  save_manifest((dir / "copy.tsv").string(), m.records);
  Manifest again = load_manifest((dir / "copy.tsv").string());
  REQUIRE(again.records.size() == m.records.size());
  for (std::size_t i = 0; i < m.records.size(); ++i) {
    CHECK(again.records[i].path == m.records[i].path);
    CHECK(again.records[i].label == m.records[i].label);
    CHECK(again.records[i].duration_tag == m.records[i].duration_tag);
  }
  fs::remove_all(dir);
}

TEST_CASE("manifest: empty file is valid and unusable; errors carry line numbers") {
  const auto dir = temp_dir("lidkit_manifest_err");
  write_lines(dir / "empty.tsv", {});
  Manifest empty = load_manifest((dir / "empty.tsv").string());
  CHECK(empty.records.empty());

  write_lines(dir / "bad.tsv", {"utt1.wav\teng\t30s", "missing-fields"});
  CHECK_THROWS_WITH_AS(load_manifest((dir / "bad.tsv").string()),
                       doctest::Contains(":2"), DataError);

  write_lines(dir / "dup.tsv", {"a.wav\teng\t3s", "a.wav\tfra\t3s"});
  CHECK_THROWS_WITH_AS(load_manifest((dir / "dup.tsv").string()),
                       doctest::Contains("a.wav"), DataError);

  write_lines(dir / "unknown.tsv", {"a.wav\tzzz\t3s"});
  std::vector<std::string> closed{"eng", "fra"};
  CHECK_THROWS_WITH_AS(load_manifest((dir / "unknown.tsv").string(), &closed),
                       doctest::Contains("zzz"), DataError);
  fs::remove_all(dir);
}

TEST_CASE("synth spec: resonance separation invariant and bounds") {
  SynthLanguageSpec spec;
  spec.num_classes = 8;
  CHECK_NOTHROW(spec.validate());
  for (index_t a = 0; a < 8; ++a) {
    for (index_t b = a + 1; b < 8; ++b) {
      CHECK(std::fabs(SynthLanguageSpec::resonances(a)[0] -
                      SynthLanguageSpec::resonances(b)[0]) >= 200.0);
    }
  }
  spec.num_classes = 1;
  CHECK_THROWS_AS(spec.validate(), DataError);
}

TEST_CASE("synth: deterministic per seed, counts and manifest as promised") {
  const auto dir = temp_dir("lidkit_synth_test");
  SynthLanguageSpec spec;
  spec.num_classes = 2;
  spec.utts_per_class = 3;
  spec.min_duration_s = 1.0;
  spec.max_duration_s = 2.0;
  spec.seed = 123;
  auto records = generate_synthetic(spec, dir.string());
  CHECK(records.size() == 6);
  Manifest m = load_manifest((dir / "manifest.tsv").string());
  CHECK(m.records.size() == 6);
  CHECK(m.labels == std::vector<std::string>{"lang00", "lang01"});
  for (const auto &rec : records) CHECK(fs::exists(rec.path));

  AudioSignal a = synthesize_utterance(spec, 0, 1);
  AudioSignal b = synthesize_utterance(spec, 0, 1);
  REQUIRE(a.samples.size() == b.samples.size());
  for (std::size_t i = 0; i < a.samples.size(); ++i) {
    CHECK(a.samples[i] == b.samples[i]);
  }
  // and the file on disk equals the regenerated signal after quantization
  AudioSignal from_disk = read_wav(records[1].path);
  REQUIRE(from_disk.samples.size() == a.samples.size());
  for (std::size_t i = 0; i < a.samples.size(); i += 173) {
    CHECK(std::fabs(from_disk.samples[i] - a.samples[i]) < 1.0 / 32768.0);
  }
  fs::remove_all(dir);
}

TEST_CASE("synth classes are separable by a spectral-centroid classifier") {
  SynthLanguageSpec spec;
  spec.num_classes = 2;
  spec.utts_per_class = 20;
  spec.min_duration_s = 1.0;
  spec.max_duration_s = 2.0;
  spec.seed = 7;

  std::vector<std::vector<double>> centroids(2);
  for (index_t cls = 0; cls < 2; ++cls) {
    for (index_t i = 0; i < spec.utts_per_class; ++i) {
      centroids[static_cast<std::size_t>(cls)].push_back(
          spectral_centroid(synthesize_utterance(spec, cls, i)));
    }
  }
  double mean0 = 0.0, mean1 = 0.0;
  for (double c : centroids[0]) mean0 += c;
  for (double c : centroids[1]) mean1 += c;
  mean0 /= static_cast<double>(centroids[0].size());
  mean1 /= static_cast<double>(centroids[1].size());

  int correct = 0, total = 0;
  for (index_t cls = 0; cls < 2; ++cls) {
    for (double c : centroids[static_cast<std::size_t>(cls)]) {
      const index_t pick = std::fabs(c - mean0) <= std::fabs(c - mean1) ? 0 : 1;
      if (pick == cls) ++correct;
      ++total;
    }
  }
  CHECK(static_cast<double>(correct) / total >= 0.95);
}
