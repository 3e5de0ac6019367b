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
#include <vector>

#include "edgesynth/errors.hpp"

namespace edgesynth {

// 8-bit raster, row-major, channel-interleaved. channels is 1 (gray) or 3.
struct ImageBuffer {
  int width = 0;
  int height = 0;
  int channels = 1;
  std::vector<uint8_t> pixels;

  ImageBuffer() = default;
  ImageBuffer(int w, int h, int c, uint8_t fill = 0);

  uint8_t at(int y, int x, int c = 0) const {
    return pixels[(static_cast<size_t>(y) * width + x) * channels + c];
  }
  uint8_t& at(int y, int x, int c = 0) {
    return pixels[(static_cast<size_t>(y) * width + x) * channels + c];
  }
  bool same_extents(const ImageBuffer& o) const {
    return width == o.width && height == o.height;
  }
};

struct TileGrid {
  std::string source_id;
  int block = 0;
  int rows = 0;
  int cols = 0;
  std::vector<ImageBuffer> tiles;  // row-major
};

// Binary PGM (P5) / PPM (P6), maxval 255 only. `#` comments in the header
// are accepted on read; writes emit the canonical "P5\n<w> <h>\n255\n" form.
ImageBuffer read_pnm(const std::string& path);
void write_pnm(const ImageBuffer& img, const std::string& path);

// Cuts the image into block x block tiles in row-major order. Extents must
// divide exactly; no silent cropping.
TileGrid tile(const ImageBuffer& image, int block, const std::string& source_id = "");

// Inverse of tile: stitches a grid back into one image.
ImageBuffer assemble(const TileGrid& grid);

enum class ResizeMethod { Nearest, Bilinear };

// Nearest: src = floor(dst * src_extent / new_extent). Bilinear: corner
// aligned sample positions, channels interpolated independently, values
// quantized round-half-up.
ImageBuffer resize(const ImageBuffer& image, int new_w, int new_h,
                   ResizeMethod method);

// BT.601 luma, rounded. A 1-channel input is returned unchanged.
ImageBuffer to_grayscale(const ImageBuffer& image);

// Tile file name convention: "<source_id>_r<r>c<c>".
std::string tile_name(const std::string& source_id, int r, int c);

}  // namespace edgesynth
