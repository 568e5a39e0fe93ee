// src/config.cc

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

#include "lidkit/config.h"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "lidkit/errors.h"

namespace lidkit {

KeyValueConfig KeyValueConfig::load(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config file: " + path);
  KeyValueConfig cfg;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw DataError(path + ":" + std::to_string(line_no) + ": expected key=value");
    }
    cfg.set(line.substr(0, eq), line.substr(eq + 1));
  }
  return cfg;
}

void KeyValueConfig::set(const std::string &key, const std::string &value) {
  entries_[key] = value;
}

std::string KeyValueConfig::get_string(const std::string &key,
                                       const std::string &fallback) const {
  const auto it = entries_.find(key);
  return it == entries_.end() ? fallback : it->second;
}

double KeyValueConfig::get_double(const std::string &key, double fallback) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  try {
    std::size_t pos = 0;
    const double v = std::stod(it->second, &pos);
    if (pos != it->second.size()) throw std::invalid_argument(it->second);
    return v;
  } catch (const std::exception &) {
    throw DataError("config key '" + key + "' has non-numeric value '" + it->second + "'");
  }
}

std::int64_t KeyValueConfig::get_int(const std::string &key, std::int64_t fallback) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  try {
    std::size_t pos = 0;
    const long long v = std::stoll(it->second, &pos);
    if (pos != it->second.size()) throw std::invalid_argument(it->second);
    return v;
  } catch (const std::exception &) {
    throw DataError("config key '" + key + "' has non-integer value '" + it->second + "'");
  }
}

std::vector<double> KeyValueConfig::get_double_list(const std::string &key,
                                                    std::vector<double> fallback) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  std::vector<double> out;
  std::istringstream ss(it->second);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(std::stod(item));
    } catch (const std::exception &) {
      throw DataError("config key '" + key + "' has non-numeric entry '" + item + "'");
    }
  }
  if (out.empty()) {
    throw DataError("config key '" + key + "' has an empty list value");
  }
  return out;
}

std::string KeyValueConfig::resolved_text() const {
  std::ostringstream os;
  for (const auto &[k, v] : entries_) os << k << '=' << v << '\n';
  return os.str();
}

std::string KeyValueConfig::hash_hex() const {
  const std::string text = resolved_text();
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void KeyValueConfig::require_known_keys(const std::vector<std::string> &known) const {
  for (const auto &[k, v] : entries_) {
    if (std::find(known.begin(), known.end(), k) == known.end()) {
      throw UsageError("unknown config key '" + k + "'");
    }
  }
}

}  // namespace lidkit
