/*
 * Copyright 2026 The D3 Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#include "d3/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <sstream>

#include "d3/error.hpp"

namespace d3 {
namespace {

std::string lower_ext(const std::filesystem::path& p) {
  std::string e = p.extension().string();
  std::transform(e.begin(), e.end(), e.begin(), [](unsigned char c) { return std::tolower(c); });
  return e;
}

std::uint8_t quantize(double v) {
  v = std::isfinite(v) ? std::clamp(v, 0.0, 1.0) : 0.0;
  return static_cast<std::uint8_t>(std::lround(v * 255.0));
}

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};
using File = std::unique_ptr<std::FILE, FileCloser>;

ImageTensor read_png(const std::filesystem::path& path) {
  File f(std::fopen(path.c_str(), "rb"));
  if (!f) throw IoError("cannot open " + path.string());
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("libpng initialisation failed");
  }
  ImageTensor img;
  std::vector<png_byte> buffer;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw FormatError("corrupt PNG " + path.string());
  }
  png_init_io(png, f.get());
  png_read_info(png, info);
  png_set_strip_16(png);
  png_set_strip_alpha(png);
  png_set_palette_to_rgb(png);
  png_set_expand_gray_1_2_4_to_8(png);
  png_read_update_info(png, info);
  const int w = static_cast<int>(png_get_image_width(png, info));
  const int h = static_cast<int>(png_get_image_height(png, info));
  const int c = png_get_channels(png, info);
  if (c != 1 && c != 3) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw FormatError("unsupported PNG channel count in " + path.string());
  }
  const std::size_t row_bytes = png_get_rowbytes(png, info);
  buffer.resize(row_bytes * static_cast<std::size_t>(h));
  std::vector<png_bytep> rows(static_cast<std::size_t>(h));
  for (int y = 0; y < h; ++y) rows[static_cast<std::size_t>(y)] = buffer.data() + y * row_bytes;
  png_read_image(png, rows.data());
  png_destroy_read_struct(&png, &info, nullptr);
  img = ImageTensor(h, w, c);
  for (int y = 0; y < h; ++y) {
    for (int i = 0; i < w * c; ++i) {
      img.data[static_cast<std::size_t>(y) * w * c + i] = rows[static_cast<std::size_t>(y)][i] / 255.0;
    }
  }
  return img;
}

void write_png(const ImageTensor& img, const std::filesystem::path& path) {
  File f(std::fopen(path.c_str(), "wb"));
  if (!f) throw IoError("cannot write " + path.string());
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw IoError("libpng initialisation failed");
  }
  std::vector<png_byte> buffer(img.size());
  for (std::size_t i = 0; i < img.size(); ++i) buffer[i] = quantize(img.data[i]);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("PNG encoding failed for " + path.string());
  }
  png_init_io(png, f.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(img.width), static_cast<png_uint_32>(img.height),
               8, img.channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  const std::size_t stride = static_cast<std::size_t>(img.width) * img.channels;
  for (int y = 0; y < img.height; ++y) png_write_row(png, buffer.data() + y * stride);
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

// Binary netpbm: P5 (gray) or P6 (RGB), maxval <= 255.
ImageTensor read_pnm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  auto token = [&]() {
    std::string t;
    char ch;
    while (in.get(ch)) {
      if (ch == '#') {
        std::string skip;
        std::getline(in, skip);
      } else if (!std::isspace(static_cast<unsigned char>(ch))) {
        t.push_back(ch);
        break;
      }
    }
    while (in.get(ch) && !std::isspace(static_cast<unsigned char>(ch))) t.push_back(ch);
    return t;
  };
  const std::string magic = token();
  if (magic != "P5" && magic != "P6") throw FormatError("unsupported netpbm type in " + path.string());
  int w = 0, h = 0, maxval = 0;
  try {
    w = std::stoi(token());
    h = std::stoi(token());
    maxval = std::stoi(token());
  } catch (const std::exception&) {
    throw FormatError("bad netpbm header in " + path.string());
  }
  if (w <= 0 || h <= 0 || maxval <= 0 || maxval > 255) {
    throw FormatError("unsupported netpbm geometry in " + path.string());
  }
  const int c = magic == "P6" ? 3 : 1;
  ImageTensor img(h, w, c);
  std::vector<unsigned char> raw(img.size());
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (in.gcount() != static_cast<std::streamsize>(raw.size())) {
    throw FormatError("truncated netpbm payload in " + path.string());
  }
  for (std::size_t i = 0; i < raw.size(); ++i) img.data[i] = raw[i] / static_cast<double>(maxval);
  return img;
}

void write_pnm(const ImageTensor& img, const std::filesystem::path& path, bool rgb) {
  if ((img.channels == 3) != rgb) {
    throw DimensionError(path.string() + ": extension does not match channel count");
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << (rgb ? "P6" : "P5") << '\n' << img.width << ' ' << img.height << "\n255\n";
  std::vector<unsigned char> raw(img.size());
  for (std::size_t i = 0; i < raw.size(); ++i) raw[i] = quantize(img.data[i]);
  out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace

ImageTensor read_image(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw IoError("missing image " + path.string());
  const std::string ext = lower_ext(path);
  if (ext == ".png") return read_png(path);
  if (ext == ".ppm" || ext == ".pgm" || ext == ".pnm") return read_pnm(path);
  throw FormatError("unsupported image format " + path.string());
}

void write_image(const ImageTensor& img, const std::filesystem::path& path) {
  img.validate();
  const std::string ext = lower_ext(path);
  if (ext == ".png") return write_png(img, path);
  if (ext == ".ppm") return write_pnm(img, path, true);
  if (ext == ".pgm") return write_pnm(img, path, false);
  throw FormatError("unsupported output format " + path.string());
}

std::vector<std::filesystem::path> list_images(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw IoError("not a directory: " + dir.string());
  std::vector<std::filesystem::path> out;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    const std::string ext = lower_ext(e.path());
    if (ext == ".png" || ext == ".ppm" || ext == ".pgm" || ext == ".pnm") out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace d3
