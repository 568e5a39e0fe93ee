// include/lidkit/dataset.h

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

#ifndef LIDKIT_DATASET_H_
#define LIDKIT_DATASET_H_

#include <string>
#include <vector>

#include "lidkit/features.h"
#include "lidkit/manifest.h"

namespace lidkit {

// In-memory dataset: features aligned with labels and duration tags.
struct Dataset {
  std::vector<FeatureSequence> utterances;  // labels resolved to indices
  std::vector<std::string> duration_tags;   // aligned with utterances
  std::vector<std::string> labels;          // inventory backing label indices
  std::vector<std::string> skipped;         // ids dropped as empty after VAD
};

// Materializes a manifest: WAV records are run through the feature pipeline;
// when `archive_path` is nonempty, features are pulled from that archive by
// utterance id instead. With skip_empty, utterances that come out empty
// (no speech frames) are recorded in `skipped` and dropped; otherwise the
// error propagates.
Dataset load_dataset(const Manifest &manifest, const FeatureConfig &config,
                     const std::string &archive_path = "", bool skip_empty = false);

}  // namespace lidkit

#endif  // LIDKIT_DATASET_H_
