#include "crsynth/report/image_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace crsynth::report {

Image Image::blank(int64_t h, int64_t w, uint8_t value) {
  Image img;
  img.height = h;
  img.width = w;
  img.rgb.assign(static_cast<size_t>(3 * h * w), value);
  return img;
}

namespace {
uint8_t to_byte(double v) { return static_cast<uint8_t>(std::clamp(v, 0.0, 1.0) * 255.0 + 0.5); }
}  // namespace

Image from_optical(const Tensor& chw) {
  if (chw.rank() != 3 || chw.shape()[0] != 3) throw ShapeError("from_optical: expected (3,H,W)");
  int64_t h = chw.shape()[1], w = chw.shape()[2];
  Image img = Image::blank(h, w);
  for (int64_t y = 0; y < h; ++y) {
    for (int64_t x = 0; x < w; ++x) {
      for (int64_t c = 0; c < 3; ++c) {
        img.rgb[static_cast<size_t>(3 * (y * w + x) + c)] = to_byte(chw.at({c, y, x}));
      }
    }
  }
  return img;
}

Image from_sar_db(const Tensor& chw) {
  if (chw.rank() != 3 || chw.shape()[0] < 1) throw ShapeError("from_sar_db: expected (C,H,W)");
  int64_t h = chw.shape()[1], w = chw.shape()[2];
  Image img = Image::blank(h, w);
  for (int64_t y = 0; y < h; ++y) {
    for (int64_t x = 0; x < w; ++x) {
      uint8_t g = to_byte((chw.at({0, y, x}) + 25.0) / 25.0);
      for (int64_t c = 0; c < 3; ++c) img.rgb[static_cast<size_t>(3 * (y * w + x) + c)] = g;
    }
  }
  return img;
}

Image compose_row(const std::vector<Image>& cells, int64_t gutter) {
  if (cells.empty()) throw ShapeError("compose_row: no cells");
  int64_t h = 0, w = 0;
  for (const auto& c : cells) {
    h = std::max(h, c.height);
    w += c.width;
  }
  w += gutter * static_cast<int64_t>(cells.size() - 1);
  Image out = Image::blank(h, w);
  int64_t x0 = 0;
  for (const auto& c : cells) {
    for (int64_t y = 0; y < c.height; ++y) {
      for (int64_t x = 0; x < c.width; ++x) {
        for (int64_t k = 0; k < 3; ++k) {
          out.rgb[static_cast<size_t>(3 * (y * w + x0 + x) + k)] = c.rgb[static_cast<size_t>(3 * (y * c.width + x) + k)];
        }
      }
    }
    x0 += c.width + gutter;
  }
  return out;
}

Image compose_column(const std::vector<Image>& rows, int64_t gutter) {
  if (rows.empty()) throw ShapeError("compose_column: no rows");
  int64_t h = 0, w = 0;
  for (const auto& r : rows) {
    w = std::max(w, r.width);
    h += r.height;
  }
  h += gutter * static_cast<int64_t>(rows.size() - 1);
  Image out = Image::blank(h, w);
  int64_t y0 = 0;
  for (const auto& r : rows) {
    for (int64_t y = 0; y < r.height; ++y) {
      for (int64_t x = 0; x < r.width; ++x) {
        for (int64_t k = 0; k < 3; ++k) {
          out.rgb[static_cast<size_t>(3 * ((y0 + y) * w + x) + k)] = r.rgb[static_cast<size_t>(3 * (y * r.width + x) + k)];
        }
      }
    }
    y0 += r.height + gutter;
  }
  return out;
}

namespace {

uint32_t crc32_table_entry(uint32_t n) {
  uint32_t c = n;
  for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
  return c;
}

uint32_t crc32(const uint8_t* data, size_t n, uint32_t crc = 0xFFFFFFFFu) {
  static uint32_t table[256];
  static bool init = false;
  if (!init) {
    for (uint32_t i = 0; i < 256; ++i) table[i] = crc32_table_entry(i);
    init = true;
  }
  for (size_t i = 0; i < n; ++i) crc = table[(crc ^ data[i]) & 0xFF] ^ (crc >> 8);
  return crc;
}

uint32_t adler32(const uint8_t* data, size_t n) {
  uint32_t a = 1, b = 0;
  for (size_t i = 0; i < n; ++i) {
    a = (a + data[i]) % 65521;
    b = (b + a) % 65521;
  }
  return (b << 16) | a;
}

void push_u32(std::vector<uint8_t>& v, uint32_t x) {
  v.push_back(static_cast<uint8_t>(x >> 24));
  v.push_back(static_cast<uint8_t>(x >> 16));
  v.push_back(static_cast<uint8_t>(x >> 8));
  v.push_back(static_cast<uint8_t>(x));
}

void push_chunk(std::vector<uint8_t>& out, const char type[4], const std::vector<uint8_t>& data) {
  push_u32(out, static_cast<uint32_t>(data.size()));
  size_t start = out.size();
  out.insert(out.end(), type, type + 4);
  out.insert(out.end(), data.begin(), data.end());
  uint32_t crc = crc32(out.data() + start, out.size() - start) ^ 0xFFFFFFFFu;
  push_u32(out, crc);
}

}  // namespace

void write_png(const std::string& path, const Image& image) {
  const int64_t h = image.height, w = image.width;
  // filter byte 0 per scanline + raw RGB rows
  std::vector<uint8_t> raw;
  raw.reserve(static_cast<size_t>(h * (1 + 3 * w)));
  for (int64_t y = 0; y < h; ++y) {
    raw.push_back(0);
    const uint8_t* row = image.rgb.data() + 3 * y * w;
    raw.insert(raw.end(), row, row + 3 * w);
  }

  // zlib stream with stored deflate blocks
  std::vector<uint8_t> z;
  z.push_back(0x78);
  z.push_back(0x01);
  size_t pos = 0;
  while (pos < raw.size()) {
    size_t len = std::min<size_t>(65535, raw.size() - pos);
    bool final = pos + len == raw.size();
    z.push_back(final ? 1 : 0);
    z.push_back(static_cast<uint8_t>(len & 0xFF));
    z.push_back(static_cast<uint8_t>(len >> 8));
    z.push_back(static_cast<uint8_t>(~len & 0xFF));
    z.push_back(static_cast<uint8_t>((~len >> 8) & 0xFF));
    z.insert(z.end(), raw.begin() + static_cast<std::ptrdiff_t>(pos), raw.begin() + static_cast<std::ptrdiff_t>(pos + len));
    pos += len;
  }
  push_u32(z, adler32(raw.data(), raw.size()));

  std::vector<uint8_t> png = {137, 80, 78, 71, 13, 10, 26, 10};
  std::vector<uint8_t> ihdr;
  push_u32(ihdr, static_cast<uint32_t>(w));
  push_u32(ihdr, static_cast<uint32_t>(h));
  ihdr.push_back(8);  // bit depth
  ihdr.push_back(2);  // truecolor
  ihdr.push_back(0);
  ihdr.push_back(0);
  ihdr.push_back(0);
  push_chunk(png, "IHDR", ihdr);
  push_chunk(png, "IDAT", z);
  push_chunk(png, "IEND", {});

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("write_png: cannot open " + path);
  out.write(reinterpret_cast<const char*>(png.data()), static_cast<std::streamsize>(png.size()));
}

}  // namespace crsynth::report
