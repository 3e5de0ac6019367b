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

#include "edgesynth/config.hpp"

#include <cstdlib>
#include <fstream>
#include <utility>

#include "edgesynth/errors.hpp"

namespace edgesynth {

namespace {

const std::map<std::string, std::string>& default_values() {
  static const std::map<std::string, std::string> kDefaults = {
      {"seed", "0"},
      {"toygen.count", "12"},
      {"toygen.test_count", "4"},
      {"toygen.size", "64"},
      {"toygen.min_nuclei", "3"},
      {"toygen.max_nuclei", "8"},
      {"toygen.min_radius", "5"},
      {"toygen.max_radius", "12"},
      {"prepare.block", "64"},
      {"canny.sigma", "1.4"},
      {"canny.high_quantile", "0.9"},
      {"canny.low_ratio", "0.4"},
      {"augment.edge_to_roi", "false"},
      {"split.test_fraction", "0.25"},
      {"gan.lambda_l1", "100.0"},
      {"gan.epochs", "25"},
      {"gan.batch_size", "1"},
      {"gan.image_size", "64"},
      {"gan.base_width", "16"},
      {"gan.lr", "0.0002"},
      {"gan.beta1", "0.5"},
      {"seg.input_size", "64"},
      {"seg.depth", "3"},
      {"seg.base_width", "16"},
      {"seg.epochs", "60"},
      {"seg.batch_size", "4"},
      {"seg.lr", "0.001"},
      {"seg.use_class_weights", "true"},
      {"eval.bf_tolerance", "0"},
  };
  return kDefaults;
}

std::string trim(const std::string& s) {
  size_t begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  size_t end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

}  // namespace

PipelineConfig::PipelineConfig() : values_(default_values()) {}

void PipelineConfig::set(const std::string& key, const std::string& value) {
  auto it = values_.find(key);
  if (it == values_.end()) {
    throw ConfigError("unknown config key '" + key + "'");
  }
  it->second = value;
}

const std::string& PipelineConfig::get(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) {
    throw ConfigError("unknown config key '" + key + "'");
  }
  return it->second;
}

double PipelineConfig::get_double(const std::string& key) const {
  const std::string& raw = get(key);
  char* end = nullptr;
  double v = std::strtod(raw.c_str(), &end);
  if (end == raw.c_str() || *end != '\0') {
    throw ConfigError("config key '" + key + "' is not a number: '" + raw +
                      "'");
  }
  return v;
}

int PipelineConfig::get_int(const std::string& key) const {
  const std::string& raw = get(key);
  char* end = nullptr;
  long v = std::strtol(raw.c_str(), &end, 10);
  if (end == raw.c_str() || *end != '\0') {
    throw ConfigError("config key '" + key + "' is not an integer: '" + raw +
                      "'");
  }
  return static_cast<int>(v);
}

uint64_t PipelineConfig::get_u64(const std::string& key) const {
  const std::string& raw = get(key);
  char* end = nullptr;
  unsigned long long v = std::strtoull(raw.c_str(), &end, 10);
  if (end == raw.c_str() || *end != '\0') {
    throw ConfigError("config key '" + key + "' is not an integer: '" + raw +
                      "'");
  }
  return static_cast<uint64_t>(v);
}

bool PipelineConfig::get_bool(const std::string& key) const {
  const std::string& raw = get(key);
  if (raw == "true" || raw == "1") return true;
  if (raw == "false" || raw == "0") return false;
  throw ConfigError("config key '" + key + "' is not a boolean: '" + raw +
                    "'");
}

PipelineConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot open config file " + path);
  }
  PipelineConfig cfg;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::string stripped = trim(line);
    if (stripped.empty()) continue;
    size_t eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(path + ":" + std::to_string(lineno) +
                        ": expected 'key = value'");
    }
    std::string key = trim(stripped.substr(0, eq));
    std::string value = trim(stripped.substr(eq + 1));
    if (key.empty()) {
      throw ConfigError(path + ":" + std::to_string(lineno) + ": empty key");
    }
    try {
      cfg.set(key, value);
    } catch (const ConfigError& e) {
      throw ConfigError(path + ":" + std::to_string(lineno) + ": " +
                        e.what());
    }
  }
  return cfg;
}

}  // namespace edgesynth
