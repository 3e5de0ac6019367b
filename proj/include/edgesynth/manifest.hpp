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
#include <string>
#include <utility>
#include <vector>

namespace edgesynth {

// One dataset sample. Paths are stored relative to the manifest file's
// directory; `fused` stays empty until the fuse stage has run.
struct SampleRecord {
  std::string id;
  std::string image;
  std::string label;
  std::string fused;
  std::string split = "train";   // "train" | "test"
  std::string origin = "real";   // "real" | "g0" | "g1"
};

// Line-delimited JSON on disk: a meta line first, then one record per line.
struct DatasetManifest {
  int block_size = 0;
  uint64_t seed = 0;
  std::string created_by_version;
  std::vector<SampleRecord> samples;
  std::string base_dir;  // directory the manifest was loaded from; transient

  // base_dir-joined path for a stored relative path.
  std::string resolve(const std::string& rel) const;
};

DatasetManifest load_manifest(const std::string& path);
void save_manifest(const DatasetManifest& m, const std::string& path);

// ids unique; split/origin values legal; every referenced file exists;
// test split holds only origin==real samples. Throws ConfigError/IoError.
void validate_manifest(const DatasetManifest& m);

// Deterministic shuffled split over origin==real samples: round(fraction *
// real_count) go to test, the rest and every synthetic sample to train.
// Returns (train indices, test indices) into m.samples without mutating m;
// an empty test set raises SplitError.
std::pair<std::vector<size_t>, std::vector<size_t>> split_train_test(
    const DatasetManifest& m, double test_fraction, uint64_t seed);

}  // namespace edgesynth
