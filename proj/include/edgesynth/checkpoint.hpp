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

#include <string>
#include <vector>

#include "edgesynth/tensor.hpp"

namespace edgesynth {

// One named array inside a checkpoint file.
struct CheckpointRecord {
  std::string name;
  Shape shape;
  std::vector<double> data;
};

// Binary layout, all integers unsigned 64-bit little-endian:
//   magic "EDGESYN1" (8 bytes)
//   record count
//   per record: name length, name bytes, rank, extents..., data as f64 LE
//
// Writing is deterministic: records are stored in the order given. Loading
// a file with a wrong magic, a truncated body, or trailing bytes raises
// CheckpointError.
void save_checkpoint(const std::string& path,
                     const std::vector<CheckpointRecord>& records);

std::vector<CheckpointRecord> load_checkpoint(const std::string& path);

}  // namespace edgesynth
