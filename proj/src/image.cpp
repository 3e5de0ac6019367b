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

#include "edgesynth/image.hpp"

#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>

namespace edgesynth {

ImageBuffer::ImageBuffer(int w, int h, int c, uint8_t fill)
    : width(w), height(h), channels(c) {
  if (w < 1 || h < 1) throw ShapeError("image extents must be positive");
  if (c != 1 && c != 3) throw ShapeError("image channels must be 1 or 3");
  pixels.assign(static_cast<size_t>(w) * h * c, fill);
}

namespace {

// Reads one whitespace-separated header token, skipping '#' comments.
std::string next_token(std::istream& is) {
  std::string tok;
  int ch;
  while ((ch = is.get()) != EOF) {
    if (ch == '#') {
      while ((ch = is.get()) != EOF && ch != '\n') {
      }
      continue;
    }
    if (std::isspace(ch)) {
      if (!tok.empty()) return tok;
      continue;
    }
    tok.push_back(static_cast<char>(ch));
  }
  return tok;
}

int parse_dim(const std::string& tok, const std::string& path) {
  if (tok.empty()) throw CodecError("truncated header in " + path);
  for (char c : tok) {
    if (!std::isdigit(static_cast<unsigned char>(c))) {
      throw CodecError("malformed header token '" + tok + "' in " + path);
    }
  }
  long v = 0;
  try {
    v = std::stol(tok);
  } catch (const std::exception&) {
    throw CodecError("malformed header token '" + tok + "' in " + path);
  }
  if (v < 1 || v > 1 << 20) {
    throw CodecError("implausible extent " + tok + " in " + path);
  }
  return static_cast<int>(v);
}

}  // namespace

ImageBuffer read_pnm(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open image: " + path);
  char m0 = 0, m1 = 0;
  is.get(m0);
  is.get(m1);
  int channels;
  if (m0 == 'P' && m1 == '5') {
    channels = 1;
  } else if (m0 == 'P' && m1 == '6') {
    channels = 3;
  } else {
    throw CodecError("not a binary PGM/PPM file: " + path);
  }
  const int w = parse_dim(next_token(is), path);
  const int h = parse_dim(next_token(is), path);
  const std::string maxval = next_token(is);
  if (maxval.empty()) throw CodecError("truncated header in " + path);
  if (maxval != "255") {
    throw UnsupportedFormat("maxval " + maxval + " unsupported (need 255): " +
                            path);
  }
  // The single whitespace byte after maxval was consumed by next_token.
  ImageBuffer img(w, h, channels);
  if (!is.read(reinterpret_cast<char*>(img.pixels.data()),
               static_cast<std::streamsize>(img.pixels.size()))) {
    throw CodecError("truncated pixel payload in " + path);
  }
  return img;
}

void write_pnm(const ImageBuffer& img, const std::string& path) {
  if (img.channels != 1 && img.channels != 3) {
    throw UnsupportedFormat("cannot encode " + std::to_string(img.channels) +
                            "-channel image");
  }
  if (img.pixels.size() !=
      static_cast<size_t>(img.width) * img.height * img.channels) {
    throw ShapeError("image pixel buffer does not match extents");
  }
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open image for writing: " + path);
  os << (img.channels == 1 ? "P5" : "P6") << "\n"
     << img.width << " " << img.height << "\n255\n";
  os.write(reinterpret_cast<const char*>(img.pixels.data()),
           static_cast<std::streamsize>(img.pixels.size()));
  if (!os) throw IoError("failed writing image: " + path);
}

TileGrid tile(const ImageBuffer& image, int block, const std::string& source_id) {
  if (block < 1) throw ConfigError("tile block must be positive");
  if (image.width % block != 0 || image.height % block != 0) {
    throw NonDivisibleError("image " + std::to_string(image.width) + "x" +
                            std::to_string(image.height) +
                            " not divisible by block " + std::to_string(block));
  }
  TileGrid grid;
  grid.source_id = source_id;
  grid.block = block;
  grid.rows = image.height / block;
  grid.cols = image.width / block;
  grid.tiles.reserve(static_cast<size_t>(grid.rows) * grid.cols);
  for (int r = 0; r < grid.rows; ++r) {
    for (int c = 0; c < grid.cols; ++c) {
      ImageBuffer t(block, block, image.channels);
      const size_t row_bytes = static_cast<size_t>(block) * image.channels;
      for (int y = 0; y < block; ++y) {
        const uint8_t* src = &image.pixels[((static_cast<size_t>(r) * block + y) *
                                                image.width +
                                            static_cast<size_t>(c) * block) *
                                           image.channels];
        std::memcpy(&t.pixels[static_cast<size_t>(y) * row_bytes], src,
                    row_bytes);
      }
      grid.tiles.push_back(std::move(t));
    }
  }
  return grid;
}

ImageBuffer assemble(const TileGrid& grid) {
  if (grid.tiles.empty() ||
      grid.tiles.size() != static_cast<size_t>(grid.rows) * grid.cols) {
    throw ShapeError("tile grid is inconsistent");
  }
  const int block = grid.block;
  const int channels = grid.tiles[0].channels;
  for (const ImageBuffer& t : grid.tiles) {
    if (t.width != block || t.height != block || t.channels != channels) {
      throw ShapeError("tile extents disagree with grid block size");
    }
  }
  ImageBuffer out(grid.cols * block, grid.rows * block, channels);
  const size_t row_bytes = static_cast<size_t>(block) * channels;
  for (int r = 0; r < grid.rows; ++r) {
    for (int c = 0; c < grid.cols; ++c) {
      const ImageBuffer& t = grid.tiles[static_cast<size_t>(r) * grid.cols + c];
      for (int y = 0; y < block; ++y) {
        uint8_t* dst = &out.pixels[((static_cast<size_t>(r) * block + y) *
                                        out.width +
                                    static_cast<size_t>(c) * block) *
                                   channels];
        std::memcpy(dst, &t.pixels[static_cast<size_t>(y) * row_bytes],
                    row_bytes);
      }
    }
  }
  return out;
}

ImageBuffer resize(const ImageBuffer& image, int new_w, int new_h,
                   ResizeMethod method) {
  if (new_w < 1 || new_h < 1) throw ShapeError("resize extents must be >= 1");
  ImageBuffer out(new_w, new_h, image.channels);
  if (method == ResizeMethod::Nearest) {
    const double sx = static_cast<double>(image.width) / new_w;
    const double sy = static_cast<double>(image.height) / new_h;
    for (int y = 0; y < new_h; ++y) {
      const int iy = std::min(image.height - 1,
                              static_cast<int>(std::floor(y * sy)));
      for (int x = 0; x < new_w; ++x) {
        const int ix = std::min(image.width - 1,
                                static_cast<int>(std::floor(x * sx)));
        for (int c = 0; c < image.channels; ++c) {
          out.at(y, x, c) = image.at(iy, ix, c);
        }
      }
    }
    return out;
  }
  // Corner-aligned bilinear: destination corners sample source corners.
  const double sx = new_w > 1
                        ? static_cast<double>(image.width - 1) / (new_w - 1)
                        : 0.0;
  const double sy = new_h > 1
                        ? static_cast<double>(image.height - 1) / (new_h - 1)
                        : 0.0;
  for (int y = 0; y < new_h; ++y) {
    const double fy = y * sy;
    const int y0 = static_cast<int>(std::floor(fy));
    const int y1 = std::min(y0 + 1, image.height - 1);
    const double wy = fy - y0;
    for (int x = 0; x < new_w; ++x) {
      const double fx = x * sx;
      const int x0 = static_cast<int>(std::floor(fx));
      const int x1 = std::min(x0 + 1, image.width - 1);
      const double wx = fx - x0;
      for (int c = 0; c < image.channels; ++c) {
        const double v00 = image.at(y0, x0, c), v01 = image.at(y0, x1, c);
        const double v10 = image.at(y1, x0, c), v11 = image.at(y1, x1, c);
        const double top = v00 + (v01 - v00) * wx;
        const double bot = v10 + (v11 - v10) * wx;
        const double v = top + (bot - top) * wy;
        out.at(y, x, c) = static_cast<uint8_t>(std::floor(v + 0.5));
      }
    }
  }
  return out;
}

ImageBuffer to_grayscale(const ImageBuffer& image) {
  if (image.channels == 1) return image;
  ImageBuffer out(image.width, image.height, 1);
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) {
      const double luma = 0.299 * image.at(y, x, 0) +
                          0.587 * image.at(y, x, 1) +
                          0.114 * image.at(y, x, 2);
      out.at(y, x) = static_cast<uint8_t>(std::lround(luma));
    }
  }
  return out;
}

std::string tile_name(const std::string& source_id, int r, int c) {
  return source_id + "_r" + std::to_string(r) + "c" + std::to_string(c);
}

}  // namespace edgesynth
