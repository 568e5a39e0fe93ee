// src/manifest.cc

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

#include "lidkit/manifest.h"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "lidkit/errors.h"

namespace lidkit {

int Manifest::label_index(const std::string &label) const {
  const auto it = std::lower_bound(labels.begin(), labels.end(), label);
  if (it == labels.end() || *it != label) return -1;
  return static_cast<int>(it - labels.begin());
}

Manifest load_manifest(const std::string &path,
                       const std::vector<std::string> *expected_labels) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open manifest: " + path);
  std::set<std::string> known;
  if (expected_labels != nullptr) {
    known.insert(expected_labels->begin(), expected_labels->end());
  }
  Manifest manifest;
  std::set<std::string> seen_ids;
  std::set<std::string> seen_labels;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    ManifestRecord rec;
    if (!std::getline(ss, rec.path, '\t') || !std::getline(ss, rec.label, '\t') ||
        !std::getline(ss, rec.duration_tag, '\t') || rec.path.empty() ||
        rec.label.empty()) {
      throw DataError(path + ":" + std::to_string(line_no) +
                      ": expected 'path<TAB>label<TAB>duration-tag'");
    }
    std::string extra;
    if (std::getline(ss, extra, '\t')) {
      throw DataError(path + ":" + std::to_string(line_no) + ": too many fields");
    }
    if (!seen_ids.insert(rec.path).second) {
      throw DataError(path + ":" + std::to_string(line_no) +
                      ": duplicate utterance id '" + rec.path + "'");
    }
    if (expected_labels != nullptr && known.count(rec.label) == 0) {
      throw DataError(path + ":" + std::to_string(line_no) + ": unknown label '" +
                      rec.label + "'");
    }
    seen_labels.insert(rec.label);
    manifest.records.push_back(std::move(rec));
  }
  if (expected_labels != nullptr) {
    manifest.labels = *expected_labels;
    std::sort(manifest.labels.begin(), manifest.labels.end());
  } else {
    manifest.labels.assign(seen_labels.begin(), seen_labels.end());
  }
  return manifest;
}

void save_manifest(const std::string &path, const std::vector<ManifestRecord> &records) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot create manifest: " + path);
  for (const ManifestRecord &rec : records) {
    out << rec.path << '\t' << rec.label << '\t' << rec.duration_tag << '\n';
  }
  if (!out) throw DataError("failed writing manifest: " + path);
}

}  // namespace lidkit
