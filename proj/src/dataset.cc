// src/dataset.cc

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

#include "lidkit/dataset.h"

#include <map>

#include "lidkit/errors.h"
#include "lidkit/feature_archive.h"
#include "lidkit/wav.h"

namespace lidkit {

Dataset load_dataset(const Manifest &manifest, const FeatureConfig &config,
                     const std::string &archive_path, bool skip_empty) {
  Dataset ds;
  ds.labels = manifest.labels;

  std::map<std::string, FeatureSequence> archived;
  if (!archive_path.empty()) {
    for (FeatureSequence &u : read_feature_archive(archive_path)) {
      archived.emplace(u.utterance_id, std::move(u));
    }
  }

  for (const ManifestRecord &rec : manifest.records) {
    const int label = manifest.label_index(rec.label);
    if (label < 0) {
      throw DataError("manifest label '" + rec.label + "' missing from inventory");
    }
    try {
      FeatureSequence utt;
      if (!archived.empty()) {
        const auto it = archived.find(rec.path);
        if (it == archived.end()) {
          throw DataError("archive has no features for utterance '" + rec.path + "'");
        }
        utt = it->second;
      } else {
        const AudioSignal signal = read_wav(rec.path);
        if (signal.sample_rate != config.sample_rate) {
          throw DataError(rec.path + ": sample rate " +
                          std::to_string(signal.sample_rate) + " does not match " +
                          std::to_string(config.sample_rate) +
                          " (resampling is not supported)");
        }
        utt = extract(signal, config, rec.path);
      }
      utt.label = label;
      ds.utterances.push_back(std::move(utt));
      ds.duration_tags.push_back(rec.duration_tag);
    } catch (const EmptyUtteranceError &) {
      if (!skip_empty) throw;
      ds.skipped.push_back(rec.path);
    }
  }
  return ds;
}

}  // namespace lidkit
