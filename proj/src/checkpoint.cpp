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

#include "edgesynth/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>

#include "edgesynth/errors.hpp"

namespace edgesynth {

namespace {

constexpr char kMagic[8] = {'E', 'D', 'G', 'E', 'S', 'Y', 'N', '1'};

void put_u64(std::ostream& os, uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 8);
}

void put_f64(std::ostream& os, double d) {
  uint64_t v;
  std::memcpy(&v, &d, 8);
  put_u64(os, v);
}

uint64_t get_u64(std::istream& is, const std::string& path) {
  unsigned char b[8];
  if (!is.read(reinterpret_cast<char*>(b), 8)) {
    throw CheckpointError("truncated checkpoint: " + path);
  }
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(b[i]) << (8 * i);
  return v;
}

double get_f64(std::istream& is, const std::string& path) {
  const uint64_t v = get_u64(is, path);
  double d;
  std::memcpy(&d, &v, 8);
  return d;
}

}  // namespace

void save_checkpoint(const std::string& path,
                     const std::vector<CheckpointRecord>& records) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open checkpoint for writing: " + path);
  os.write(kMagic, 8);
  put_u64(os, records.size());
  for (const CheckpointRecord& r : records) {
    put_u64(os, r.name.size());
    os.write(r.name.data(), static_cast<std::streamsize>(r.name.size()));
    put_u64(os, r.shape.size());
    uint64_t n = 1;
    for (int64_t e : r.shape) {
      if (e <= 0) throw CheckpointError("non-positive extent in " + r.name);
      put_u64(os, static_cast<uint64_t>(e));
      n *= static_cast<uint64_t>(e);
    }
    if (r.data.size() != n) {
      throw CheckpointError("record " + r.name + " has " +
                            std::to_string(r.data.size()) +
                            " values but extents imply " + std::to_string(n));
    }
    for (double d : r.data) put_f64(os, d);
  }
  if (!os) throw IoError("failed writing checkpoint: " + path);
}

std::vector<CheckpointRecord> load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open checkpoint: " + path);
  char magic[8];
  if (!is.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0) {
    throw CheckpointError("bad checkpoint magic: " + path);
  }
  const uint64_t count = get_u64(is, path);
  std::vector<CheckpointRecord> records;
  records.reserve(count);
  for (uint64_t i = 0; i < count; ++i) {
    CheckpointRecord r;
    const uint64_t name_len = get_u64(is, path);
    if (name_len > (1u << 20)) {
      throw CheckpointError("implausible name length in " + path);
    }
    r.name.resize(name_len);
    if (name_len > 0 &&
        !is.read(r.name.data(), static_cast<std::streamsize>(name_len))) {
      throw CheckpointError("truncated checkpoint: " + path);
    }
    const uint64_t rank = get_u64(is, path);
    if (rank > 8) throw CheckpointError("implausible rank in " + path);
    uint64_t n = 1;
    for (uint64_t d = 0; d < rank; ++d) {
      const uint64_t e = get_u64(is, path);
      if (e == 0 || e > (1ull << 32)) {
        throw CheckpointError("implausible extent in " + path);
      }
      r.shape.push_back(static_cast<int64_t>(e));
      n *= e;
    }
    r.data.reserve(n);
    for (uint64_t d = 0; d < n; ++d) r.data.push_back(get_f64(is, path));
    records.push_back(std::move(r));
  }
  is.peek();
  if (!is.eof()) throw CheckpointError("trailing bytes in checkpoint: " + path);
  return records;
}

}  // namespace edgesynth
