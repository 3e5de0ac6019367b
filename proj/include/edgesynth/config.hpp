// Copyright 2026 the edgesynth authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <map>
#include <string>

namespace edgesynth {

// Flat `key = value` settings. Every key ships with a default; parsing a
// key outside the registry raises ConfigError so typos cannot pass
// silently. `#` starts a comment; blank lines are ignored.
class PipelineConfig {
 public:
  // Registry defaults only.
  PipelineConfig();

  // Overwrites the value of a known key; unknown key raises ConfigError.
  void set(const std::string& key, const std::string& value);

  const std::string& get(const std::string& key) const;
  double get_double(const std::string& key) const;
  int get_int(const std::string& key) const;
  uint64_t get_u64(const std::string& key) const;
  bool get_bool(const std::string& key) const;

  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

// Defaults overlaid with the file's assignments.
PipelineConfig load_config(const std::string& path);

}  // namespace edgesynth
