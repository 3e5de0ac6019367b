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

#include "edgesynth/manifest.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <unordered_set>

#include <json.hpp>

#include "edgesynth/errors.hpp"
#include "edgesynth/rng.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace edgesynth {

std::string DatasetManifest::resolve(const std::string& rel) const {
  if (base_dir.empty()) return rel;
  return (fs::path(base_dir) / rel).string();
}

DatasetManifest load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest " + path);
  DatasetManifest m;
  m.base_dir = fs::path(path).parent_path().string();

  std::string line;
  size_t line_no = 0;
  bool meta_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw ConfigError("manifest " + path + " line " +
                        std::to_string(line_no) + ": " + e.what());
    }
    if (!meta_seen) {
      if (!j.contains("meta")) {
        throw ConfigError("manifest " + path + " must start with a meta line");
      }
      const json& meta = j["meta"];
      m.block_size = meta.value("block_size", 0);
      m.seed = meta.value("seed", uint64_t{0});
      m.created_by_version = meta.value("created_by_version", "");
      meta_seen = true;
      continue;
    }
    SampleRecord r;
    try {
      r.id = j.at("id").get<std::string>();
      r.image = j.at("image").get<std::string>();
      r.label = j.at("label").get<std::string>();
      r.fused = j.value("fused", "");
      r.split = j.value("split", "train");
      r.origin = j.value("origin", "real");
    } catch (const json::exception& e) {
      throw ConfigError("manifest " + path + " line " +
                        std::to_string(line_no) + ": " + e.what());
    }
    m.samples.push_back(std::move(r));
  }
  if (!meta_seen) throw ConfigError("manifest " + path + " is empty");
  return m;
}

void save_manifest(const DatasetManifest& m, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write manifest " + path);
  json meta;
  meta["meta"]["block_size"] = m.block_size;
  meta["meta"]["seed"] = m.seed;
  meta["meta"]["created_by_version"] = m.created_by_version;
  out << meta.dump() << "\n";
  for (const auto& r : m.samples) {
    json j;
    j["id"] = r.id;
    j["image"] = r.image;
    j["label"] = r.label;
    if (!r.fused.empty()) j["fused"] = r.fused;
    j["split"] = r.split;
    j["origin"] = r.origin;
    out << j.dump() << "\n";
  }
  if (!out) throw IoError("failed writing manifest " + path);
}

void validate_manifest(const DatasetManifest& m) {
  // Structural rules over the whole manifest first, so a broken structure is
  // diagnosed the same way whether or not the files exist yet.
  std::unordered_set<std::string> ids;
  for (const auto& r : m.samples) {
    if (!ids.insert(r.id).second) {
      throw ConfigError("duplicate manifest id " + r.id);
    }
    if (r.split != "train" && r.split != "test") {
      throw ConfigError("sample " + r.id + " has invalid split " + r.split);
    }
    if (r.origin != "real" && r.origin != "g0" && r.origin != "g1") {
      throw ConfigError("sample " + r.id + " has invalid origin " + r.origin);
    }
    if (r.split == "test" && r.origin != "real") {
      throw ConfigError("sample " + r.id +
                        " is synthetic but assigned to the test split");
    }
  }
  for (const auto& r : m.samples) {
    for (const std::string* p : {&r.image, &r.label, &r.fused}) {
      if (p->empty()) continue;
      if (!fs::exists(m.resolve(*p))) {
        throw IoError("sample " + r.id + " references missing file " + *p);
      }
    }
  }
}

std::pair<std::vector<size_t>, std::vector<size_t>> split_train_test(
    const DatasetManifest& m, double test_fraction, uint64_t seed) {
  if (!(test_fraction > 0.0) || !(test_fraction < 1.0)) {
    throw ConfigError("test fraction must be in (0,1)");
  }
  std::vector<size_t> real_idx;
  std::vector<size_t> train, test;
  for (size_t i = 0; i < m.samples.size(); ++i) {
    if (m.samples[i].origin == "real") real_idx.push_back(i);
    else train.push_back(i);
  }
  const auto n_test = static_cast<size_t>(
      std::llround(test_fraction * static_cast<double>(real_idx.size())));
  if (n_test == 0) {
    throw SplitError("test split is empty after rounding (" +
                     std::to_string(real_idx.size()) + " real samples at " +
                     std::to_string(test_fraction) + ")");
  }

  Rng rng(seed);
  for (size_t i = real_idx.size(); i > 1; --i) {
    const size_t j = static_cast<size_t>(rng.uniform_int(0, int64_t(i) - 1));
    std::swap(real_idx[i - 1], real_idx[j]);
  }
  for (size_t k = 0; k < real_idx.size(); ++k) {
    (k < n_test ? test : train).push_back(real_idx[k]);
  }
  std::sort(train.begin(), train.end());
  std::sort(test.begin(), test.end());
  return {std::move(train), std::move(test)};
}

}  // namespace edgesynth
