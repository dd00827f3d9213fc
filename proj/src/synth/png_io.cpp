#include "vid2ode/png_io.hpp"

#include <png.h>

#include <cmath>
#include <cstdio>
#include <memory>

#include "vid2ode/util.hpp"

namespace vid2ode::synth {

namespace {
struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;
}  // namespace

void write_png(const std::string& path, const Frame& frame) {
  FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw Error("cannot open for writing: " + path);
  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw Error("png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw Error("png_create_info_struct failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error("libpng failure writing " + path);
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, frame.w, frame.h, 8, PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  std::vector<png_byte> row(static_cast<std::size_t>(frame.w) * 3);
  for (int r = 0; r < frame.h; ++r) {
    for (int c = 0; c < frame.w; ++c) {
      for (int ch = 0; ch < 3; ++ch) {
        float v = frame.at(r, c, ch);
        v = v < 0.f ? 0.f : (v > 1.f ? 1.f : v);
        row[static_cast<std::size_t>(c) * 3 + ch] =
            static_cast<png_byte>(std::lround(v * 255.0f));
      }
    }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

Frame read_png(const std::string& path) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw Error("cannot open: " + path);
  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw Error("png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw Error("png_create_info_struct failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error("libpng failure reading " + path);
  }
  png_init_io(png, fp.get());
  png_read_info(png, info);
  // Normalize any input (palette, gray, 16-bit, alpha) to 8-bit RGB.
  png_set_expand(png);
  png_set_strip_16(png);
  png_set_strip_alpha(png);
  png_set_gray_to_rgb(png);
  png_read_update_info(png, info);
  int w = static_cast<int>(png_get_image_width(png, info));
  int h = static_cast<int>(png_get_image_height(png, info));
  Frame frame(h, w);
  std::vector<png_byte> row(static_cast<std::size_t>(w) * 3);
  for (int r = 0; r < h; ++r) {
    png_read_row(png, row.data(), nullptr);
    for (int c = 0; c < w; ++c)
      for (int ch = 0; ch < 3; ++ch)
        frame.at(r, c, ch) =
            static_cast<float>(row[static_cast<std::size_t>(c) * 3 + ch]) / 255.0f;
  }
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return frame;
}

}  // namespace vid2ode::synth
