#include "peakray/image_io.hpp"

#include <png.h>

#include <fstream>
#include <iterator>
#include <sstream>
#include <stdexcept>
#include <string>

namespace peakray {

std::vector<std::uint8_t> encode_ppm(const FrameBuffer& frame) {
  const std::string header = "P6\n" + std::to_string(frame.width) + " " + std::to_string(frame.height) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.reserve(out.size() + static_cast<std::size_t>(frame.width) * frame.height * 3);
  for (std::size_t i = 0; i < frame.pixels.size(); i += 4) {
    out.insert(out.end(), frame.pixels.begin() + static_cast<std::ptrdiff_t>(i),
               frame.pixels.begin() + static_cast<std::ptrdiff_t>(i + 3));
  }
  return out;
}

namespace {

void png_append(png_structp png, png_bytep data, png_size_t length) {
  auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
  out->insert(out->end(), data, data + length);
}

void png_flush_noop(png_structp) {}

}  // namespace

std::vector<std::uint8_t> encode_png(const FrameBuffer& frame) {
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw std::runtime_error("png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw std::runtime_error("png_create_info_struct failed");
  }
  std::vector<std::uint8_t> out;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error("PNG encoding failed");
  }
  png_set_write_fn(png, &out, png_append, png_flush_noop);
  png_set_compression_level(png, 6);
  png_set_IHDR(png, info, static_cast<png_uint_32>(frame.width), static_cast<png_uint_32>(frame.height), 8,
               PNG_COLOR_TYPE_RGBA, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < frame.height; ++y) png_write_row(png, frame.pixel(0, y));
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return out;
}

void write_image(const FrameBuffer& frame, const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  std::vector<std::uint8_t> bytes;
  if (ext == ".png") {
    bytes = encode_png(frame);
  } else if (ext == ".ppm") {
    bytes = encode_ppm(frame);
  } else {
    throw std::invalid_argument("unsupported image extension '" + ext + "' (use .ppm or .png)");
  }
  std::ofstream out(path, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

FrameBuffer read_ppm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string magic;
  int w = 0, h = 0, maxval = 0;
  in >> magic >> w >> h >> maxval;
  in.get();
  if (magic != "P6" || w < 1 || h < 1 || maxval != 255) throw std::runtime_error("not an 8-bit P6 file: " + path.string());
  FrameBuffer frame(w, h);
  for (std::size_t i = 0; i < frame.pixels.size(); i += 4) {
    char rgb[3];
    if (!in.read(rgb, 3)) throw std::runtime_error("truncated P6 file: " + path.string());
    for (int c = 0; c < 3; ++c) frame.pixels[i + c] = static_cast<std::uint8_t>(rgb[c]);
    frame.pixels[i + 3] = 255;
  }
  return frame;
}

}  // namespace peakray
