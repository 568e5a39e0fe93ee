// include/lidkit/config.h

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

#ifndef LIDKIT_CONFIG_H_
#define LIDKIT_CONFIG_H_

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace lidkit {

// Flat key=value configuration: one pair per line, '#' comments and blank
// lines ignored. Later set() calls (e.g. command-line overrides) win.
class KeyValueConfig {
 public:
  KeyValueConfig() = default;
  static KeyValueConfig load(const std::string &path);

  void set(const std::string &key, const std::string &value);
  bool has(const std::string &key) const { return entries_.count(key) != 0; }

  std::string get_string(const std::string &key, const std::string &fallback) const;
  double get_double(const std::string &key, double fallback) const;
  std::int64_t get_int(const std::string &key, std::int64_t fallback) const;
  // Comma-separated doubles.
  std::vector<double> get_double_list(const std::string &key,
                                      std::vector<double> fallback) const;

  const std::map<std::string, std::string> &entries() const { return entries_; }

  // Sorted "key=value" lines; what the hash commits to and what commands
  // print on startup.
  std::string resolved_text() const;
  // FNV-1a of resolved_text(), hex encoded.
  std::string hash_hex() const;

  // Rejects keys outside `known`, naming the offender.
  void require_known_keys(const std::vector<std::string> &known) const;

 private:
  std::map<std::string, std::string> entries_;
};

}  // namespace lidkit

#endif  // LIDKIT_CONFIG_H_
