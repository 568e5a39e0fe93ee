// include/lidkit/errors.h

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

#ifndef LIDKIT_ERRORS_H_
#define LIDKIT_ERRORS_H_

#include <stdexcept>
#include <string>

namespace lidkit {

// Bad input data: malformed files, shape mismatches, unknown labels.
// CLI maps this to exit code 2.
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string &msg) : std::runtime_error(msg) {}
};

// An utterance with no usable frames (too short, or VAD removed everything).
class EmptyUtteranceError : public DataError {
 public:
  explicit EmptyUtteranceError(const std::string &msg) : DataError(msg) {}
};

// Numeric failure: non-finite loss, undefined metric, failed gradient check.
// CLI maps this to exit code 3.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string &msg) : std::runtime_error(msg) {}
};

// Bad command-line usage or configuration. CLI maps this to exit code 1.
class UsageError : public std::runtime_error {
 public:
  explicit UsageError(const std::string &msg) : std::runtime_error(msg) {}
};

}  // namespace lidkit

#endif  // LIDKIT_ERRORS_H_
