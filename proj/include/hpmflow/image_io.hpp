#pragma once

#include <png.h>

#include <cctype>
#include <cmath>
#include <csetjmp>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "hpmflow/errors.hpp"
#include "hpmflow/scalar_field.hpp"

namespace hpmflow {

// 8-bit grayscale image in normalized intensities. Unlike ScalarField there
// is no minimum size; tiny fixtures are legitimate images.
struct Image {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<double> intensities;  // [0,1], row-major

  double at(std::size_t x, std::size_t y) const {
    return intensities[y * width + x];
  }
  double& at(std::size_t x, std::size_t y) { return intensities[y * width + x]; }
};

inline ScalarField to_field(const Image& img, double spacing = 1.0) {
  return ScalarField(img.width, img.height, spacing, img.intensities);
}

inline Image to_image(const ScalarField& f) {
  Image img;
  img.width = f.width();
  img.height = f.height();
  img.intensities.resize(f.size());
  for (std::size_t p = 0; p < f.size(); ++p) {
    double v = f.values()[p];
    img.intensities[p] = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
  }
  return img;
}

namespace detail {

inline std::uint8_t quantize(double v) {
  double c = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
  return static_cast<std::uint8_t>(std::lround(c * 255.0));
}

// Reads one PGM header token, skipping whitespace and # comments.
inline std::string pgm_token(std::istream& in, const std::string& path) {
  std::string tok;
  int c;
  while ((c = in.get()) != EOF) {
    if (c == '#') {
      while ((c = in.get()) != EOF && c != '\n') {
      }
      continue;
    }
    if (!std::isspace(c)) {
      tok.push_back(static_cast<char>(c));
      break;
    }
  }
  while ((c = in.get()) != EOF && !std::isspace(c) && c != '#')
    tok.push_back(static_cast<char>(c));
  if (c != EOF) in.unget();  // leave the terminator for the caller
  if (tok.empty()) throw io_error("corrupt header in " + path);
  return tok;
}

inline std::size_t pgm_number(std::istream& in, const std::string& path) {
  const std::string tok = pgm_token(in, path);
  for (char ch : tok)
    if (!std::isdigit(static_cast<unsigned char>(ch)))
      throw io_error("corrupt header in " + path + ": expected number, got '" +
                     tok + "'");
  return static_cast<std::size_t>(std::stoull(tok));
}

inline bool has_png_signature(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open " + path);
  unsigned char sig[8] = {0};
  in.read(reinterpret_cast<char*>(sig), 8);
  return in.gcount() == 8 && png_sig_cmp(sig, 0, 8) == 0;
}

struct png_file_guard {
  std::FILE* fp = nullptr;
  ~png_file_guard() {
    if (fp) std::fclose(fp);
  }
};

}  // namespace detail

inline Image load_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open " + path);
  const std::string magic = detail::pgm_token(in, path);
  if (magic != "P2" && magic != "P5")
    throw io_error("unsupported format in " + path + ": magic '" + magic +
                   "' (need P2 or P5 grayscale, or PNG)");
  const std::size_t w = detail::pgm_number(in, path);
  const std::size_t h = detail::pgm_number(in, path);
  const std::size_t maxval = detail::pgm_number(in, path);
  if (w == 0 || h == 0) throw io_error("corrupt header in " + path + ": zero size");
  if (maxval == 0 || maxval > 255)
    throw io_error("unsupported format in " + path + ": maxval " +
                   std::to_string(maxval) + " (8-bit only)");
  Image img;
  img.width = w;
  img.height = h;
  img.intensities.resize(w * h);
  const double scale = static_cast<double>(maxval);
  if (magic == "P5") {
    int sep = in.get();  // single whitespace byte after maxval
    if (sep == EOF || !std::isspace(sep))
      throw io_error("corrupt header in " + path);
    std::vector<std::uint8_t> raw(w * h);
    in.read(reinterpret_cast<char*>(raw.data()),
            static_cast<std::streamsize>(raw.size()));
    if (static_cast<std::size_t>(in.gcount()) != raw.size())
      throw io_error("truncated pixel data in " + path);
    for (std::size_t p = 0; p < raw.size(); ++p)
      img.intensities[p] = raw[p] / scale;
  } else {
    for (std::size_t p = 0; p < w * h; ++p) {
      const std::size_t v = detail::pgm_number(in, path);
      if (v > maxval)
        throw io_error("pixel value " + std::to_string(v) + " above maxval in " +
                       path);
      img.intensities[p] = static_cast<double>(v) / scale;
    }
  }
  return img;
}

inline void save_pgm_p5(const Image& img, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error("cannot open " + path + " for writing");
  out << "P5\n" << img.width << ' ' << img.height << "\n255\n";
  std::vector<std::uint8_t> raw(img.width * img.height);
  for (std::size_t p = 0; p < raw.size(); ++p)
    raw[p] = detail::quantize(img.intensities[p]);
  out.write(reinterpret_cast<const char*>(raw.data()),
            static_cast<std::streamsize>(raw.size()));
  if (!out) throw io_error("write failed for " + path);
}

inline Image load_png(const std::string& path) {
  detail::png_file_guard f;
  f.fp = std::fopen(path.c_str(), "rb");
  if (!f.fp) throw io_error("cannot open " + path);
  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw io_error("png reader allocation failed for " + path);
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw io_error("png reader allocation failed for " + path);
  }
  std::vector<png_bytep> rows;
  std::vector<std::uint8_t> raw;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw io_error("corrupt PNG data in " + path);
  }
  png_init_io(png, f.fp);
  png_read_info(png, info);

  const png_byte color = png_get_color_type(png, info);
  if (png_get_bit_depth(png, info) == 16) png_set_strip_16(png);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && png_get_bit_depth(png, info) < 8)
    png_set_expand_gray_1_2_4_to_8(png);
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  if (color == PNG_COLOR_TYPE_RGB || color == PNG_COLOR_TYPE_RGB_ALPHA ||
      color == PNG_COLOR_TYPE_PALETTE)
    png_set_rgb_to_gray_fixed(png, 1, 29900, 58700);  // luma, blue implied
  png_read_update_info(png, info);

  const std::size_t w = png_get_image_width(png, info);
  const std::size_t h = png_get_image_height(png, info);
  if (png_get_channels(png, info) != 1 || png_get_bit_depth(png, info) != 8) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw io_error("unsupported format in " + path +
                   ": could not reduce PNG to 8-bit grayscale");
  }
  raw.resize(w * h);
  rows.resize(h);
  for (std::size_t y = 0; y < h; ++y) rows[y] = raw.data() + y * w;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  Image img;
  img.width = w;
  img.height = h;
  img.intensities.resize(w * h);
  for (std::size_t p = 0; p < raw.size(); ++p)
    img.intensities[p] = raw[p] / 255.0;
  return img;
}

inline void save_png(const Image& img, const std::string& path) {
  detail::png_file_guard f;
  f.fp = std::fopen(path.c_str(), "wb");
  if (!f.fp) throw io_error("cannot open " + path + " for writing");
  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw io_error("png writer allocation failed for " + path);
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw io_error("png writer allocation failed for " + path);
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw io_error("PNG write failed for " + path);
  }
  png_init_io(png, f.fp);
  png_set_IHDR(png, info, static_cast<png_uint_32>(img.width),
               static_cast<png_uint_32>(img.height), 8, PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  std::vector<std::uint8_t> raw(img.width * img.height);
  for (std::size_t p = 0; p < raw.size(); ++p)
    raw[p] = detail::quantize(img.intensities[p]);
  std::vector<png_bytep> rows(img.height);
  for (std::size_t y = 0; y < img.height; ++y)
    rows[y] = raw.data() + y * img.width;
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

// Format is detected from content (PNG signature vs PGM magic), not the
// file name.
inline Image load_image(const std::string& path) {
  if (detail::has_png_signature(path)) return load_png(path);
  return load_pgm(path);
}

// Format is chosen by extension: .png writes PNG, anything else raw PGM (P5).
inline void save_image(const Image& img, const std::string& path) {
  if (img.width == 0 || img.height == 0)
    throw io_error("save_image: empty image");
  const bool png = path.size() >= 4 &&
                   path.compare(path.size() - 4, 4, ".png") == 0;
  if (png)
    save_png(img, path);
  else
    save_pgm_p5(img, path);
}

}  // namespace hpmflow
