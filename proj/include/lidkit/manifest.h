// include/lidkit/manifest.h

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

#ifndef LIDKIT_MANIFEST_H_
#define LIDKIT_MANIFEST_H_

#include <string>
#include <vector>

namespace lidkit {

// One dataset entry: tab-separated "path<TAB>label<TAB>duration-tag" per
// line, UTF-8. The path doubles as the utterance id.
struct ManifestRecord {
  std::string path;
  std::string label;
  std::string duration_tag;
};

struct Manifest {
  std::vector<ManifestRecord> records;
  std::vector<std::string> labels;  // sorted unique inventory

  int label_index(const std::string &label) const;
};

// Parses a manifest. When `expected_labels` is given it becomes the closed
// label set and unknown labels are rejected; otherwise the inventory is the
// sorted set of labels seen. Duplicate utterance ids and malformed lines are
// rejected with the offending line number.
Manifest load_manifest(const std::string &path,
                       const std::vector<std::string> *expected_labels = nullptr);

void save_manifest(const std::string &path, const std::vector<ManifestRecord> &records);

}  // namespace lidkit

#endif  // LIDKIT_MANIFEST_H_
