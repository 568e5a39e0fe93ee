// include/lidkit/feature_archive.h

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

#ifndef LIDKIT_FEATURE_ARCHIVE_H_
#define LIDKIT_FEATURE_ARCHIVE_H_

#include <string>
#include <vector>

#include "lidkit/features.h"

namespace lidkit {

// Feature archive layout (little-endian):
//   magic "ULFB", version byte 0x01, then per-utterance records:
//   u32 id length, id bytes, i32 label id, u32 D, u32 L, D*L f32 row-major.
// Values are stored as 32-bit floats; reading widens back to doubles, so a
// write/read round trip equals the float-cast of the original features
// bit for bit. Frame times are not stored.
void write_feature_archive(const std::string &path,
                           const std::vector<FeatureSequence> &utterances);

std::vector<FeatureSequence> read_feature_archive(const std::string &path);

}  // namespace lidkit

#endif  // LIDKIT_FEATURE_ARCHIVE_H_
