#include "e2x/io.hpp"

#include <png.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <fstream>
#include <memory>
#include <sstream>

namespace e2x {

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::size_t start = 0;
    for (;;) {
      const std::size_t comma = line.find(',', start);
      fields.push_back(line.substr(start, comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    rows.push_back(std::move(fields));
  }
  return rows;
}

int parse_int(const std::string& field) {
  int v = 0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || ptr != field.data() + field.size()) {
    throw Error(ErrorCode::kParseError, "not an integer: '" + field + "'");
  }
  return v;
}

double parse_double(const std::string& field) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || ptr != field.data() + field.size() || !std::isfinite(v)) {
    throw Error(ErrorCode::kParseError, "not a finite number: '" + field + "'");
  }
  return v;
}

std::string format_sig9(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIoError, "cannot open " + path);
  out << text;
  if (!out) throw Error(ErrorCode::kIoError, "write failed: " + path);
}

std::string importance_vector_to_csv(const ImportanceVector& v) {
  std::string out = "segment,phi\n";
  for (std::size_t i = 0; i < v.phi.size(); ++i) {
    out += std::to_string(i) + "," + format_sig9(v.phi[i]) + "\n";
  }
  out += "phi0," + format_sig9(v.phi0) + "\n";
  return out;
}

ImportanceVector importance_vector_from_csv(const std::string& text) {
  const auto rows = parse_csv(text);
  if (rows.empty() || rows.front() != std::vector<std::string>{"segment", "phi"}) {
    throw Error(ErrorCode::kParseError, "importance CSV needs header segment,phi");
  }
  ImportanceVector v;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].size() != 2) throw Error(ErrorCode::kParseError, "importance CSV row width");
    if (rows[i][0] == "phi0") {
      v.phi0 = parse_double(rows[i][1]);
      continue;
    }
    if (parse_int(rows[i][0]) != static_cast<int>(v.phi.size())) {
      throw Error(ErrorCode::kParseError, "segments must be listed in order 0..M-1");
    }
    v.phi.push_back(parse_double(rows[i][1]));
  }
  if (v.phi.empty()) throw Error(ErrorCode::kParseError, "importance CSV has no segments");
  return v;
}

std::string importance_map_to_csv(const ImportanceMap& map) {
  std::string out = "row,col,value\n";
  for (int r = 0; r < map.height(); ++r) {
    for (int c = 0; c < map.width(); ++c) {
      double sum = 0.0;
      for (int ch = 0; ch < map.channels(); ++ch) sum += map.at(r, c, ch);
      out += std::to_string(r) + "," + std::to_string(c) + "," + format_sig9(sum) + "\n";
    }
  }
  return out;
}

ImportanceMap importance_map_from_csv(const std::string& text) {
  const auto rows = parse_csv(text);
  if (rows.empty() || rows.front() != std::vector<std::string>{"row", "col", "value"}) {
    throw Error(ErrorCode::kParseError, "map CSV needs header row,col,value");
  }
  int h = 0, w = 0;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].size() != 3) throw Error(ErrorCode::kParseError, "map CSV row width");
    h = std::max(h, parse_int(rows[i][0]) + 1);
    w = std::max(w, parse_int(rows[i][1]) + 1);
  }
  if (rows.size() - 1 != static_cast<std::size_t>(h) * w || h == 0) {
    throw Error(ErrorCode::kParseError, "map CSV does not cover the raster");
  }
  ImportanceMap map(Shape{h, w, 1});
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const int r = parse_int(rows[i][0]), c = parse_int(rows[i][1]);
    if (r < 0 || c < 0) throw Error(ErrorCode::kParseError, "negative coordinate");
    map.at(r, c) = parse_double(rows[i][2]);
  }
  return map;
}

// ------------------------------------------------------------------- PNG

namespace {

void png_write_to_vector(png_structp png, png_bytep data, png_size_t length) {
  auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
  out->insert(out->end(), data, data + length);
}

void png_flush_noop(png_structp) {}

// libpng reports errors by longjmp. All C++ objects these helpers touch are
// owned by the caller, so the jump never skips a destructor.
bool encode_rows(png_structp png, png_infop info, const RgbaImage& image,
                 std::vector<std::uint8_t>* out) {
  if (setjmp(png_jmpbuf(png))) return false;
  png_set_write_fn(png, out, png_write_to_vector, png_flush_noop);
  png_set_compression_level(png, 6);
  png_set_filter(png, 0, PNG_FILTER_NONE);
  png_set_IHDR(png, info, image.width(), image.height(), 8, PNG_COLOR_TYPE_RGBA,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  const std::uint8_t* base = image.bytes().data();
  for (int r = 0; r < image.height(); ++r) {
    png_write_row(png, const_cast<png_bytep>(base + static_cast<std::size_t>(r) * image.width() * 4));
  }
  png_write_end(png, nullptr);
  return true;
}

bool read_header(png_structp png, png_infop info, FILE* file, int* width, int* height) {
  if (setjmp(png_jmpbuf(png))) return false;
  png_init_io(png, file);
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);
  const int bit_depth = png_get_bit_depth(png, info);
  const int color_type = png_get_color_type(png, info);
  if (bit_depth == 16) png_set_strip_16(png);
  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  const bool has_trns = png_get_valid(png, info, PNG_INFO_tRNS) != 0;
  if (has_trns) png_set_tRNS_to_alpha(png);
  if (color_type == PNG_COLOR_TYPE_GRAY || color_type == PNG_COLOR_TYPE_GRAY_ALPHA) {
    png_set_gray_to_rgb(png);
  }
  if (!(color_type & PNG_COLOR_MASK_ALPHA) && !has_trns) {
    png_set_add_alpha(png, 0xFF, PNG_FILLER_AFTER);
  }
  png_read_update_info(png, info);
  *width = static_cast<int>(png_get_image_width(png, info));
  *height = static_cast<int>(png_get_image_height(png, info));
  return png_get_rowbytes(png, info) == static_cast<std::size_t>(*width) * 4;
}

bool read_rows(png_structp png, std::vector<png_bytep>* rows) {
  if (setjmp(png_jmpbuf(png))) return false;
  png_read_image(png, rows->data());
  png_read_end(png, nullptr);
  return true;
}

}  // namespace

std::vector<std::uint8_t> encode_png(const RgbaImage& image) {
  if (image.height() <= 0 || image.width() <= 0) {
    throw Error(ErrorCode::kShapeMismatch, "cannot encode an empty image");
  }
  std::vector<std::uint8_t> out;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw Error(ErrorCode::kIoError, "png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  const bool ok = info != nullptr && encode_rows(png, info, image, &out);
  png_destroy_write_struct(&png, &info);
  if (!ok) throw Error(ErrorCode::kIoError, "PNG encoding failed");
  return out;
}

void write_png(const std::string& path, const RgbaImage& image) {
  const auto bytes = encode_png(image);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIoError, "cannot open " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::kIoError, "write failed: " + path);
}

RgbaImage read_png(const std::string& path) {
  std::unique_ptr<FILE, int (*)(FILE*)> file(std::fopen(path.c_str(), "rb"), &std::fclose);
  if (!file) throw Error(ErrorCode::kIoError, "cannot open " + path);
  png_byte sig[8];
  if (std::fread(sig, 1, 8, file.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
    throw Error(ErrorCode::kParseError, path + " is not a PNG file");
  }
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw Error(ErrorCode::kIoError, "png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  int w = 0, h = 0;
  std::vector<std::uint8_t> buf;
  std::vector<png_bytep> rows;
  bool ok = info != nullptr && read_header(png, info, file.get(), &w, &h);
  if (ok) {
    buf.resize(static_cast<std::size_t>(w) * h * 4);
    rows.resize(h);
    for (int r = 0; r < h; ++r) rows[r] = buf.data() + static_cast<std::size_t>(r) * w * 4;
    ok = read_rows(png, &rows);
  }
  png_destroy_read_struct(&png, &info, nullptr);
  if (!ok) throw Error(ErrorCode::kParseError, "malformed PNG: " + path);
  RgbaImage out(h, w);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const std::uint8_t* p = rows[r] + c * 4;
      out.set(r, c, p[0], p[1], p[2], p[3]);
    }
  }
  return out;
}

Image Preprocessing::to_model(const RgbaImage& rgba) const {
  const int channels = static_cast<int>(channel_mean.size());
  if (channels != 1 && channels != 3) {
    throw Error(ErrorCode::kInvalidArgument, "channel_mean must have 1 or 3 entries");
  }
  Image out(Shape{rgba.height(), rgba.width(), channels});
  for (int r = 0; r < rgba.height(); ++r) {
    for (int c = 0; c < rgba.width(); ++c) {
      if (channels == 3) {
        for (int ch = 0; ch < 3; ++ch) out.at(r, c, ch) = rgba.at(r, c, ch) / 255.0 - channel_mean[ch];
      } else {
        const double gray = (rgba.at(r, c, 0) + rgba.at(r, c, 1) + rgba.at(r, c, 2)) / (3.0 * 255.0);
        out.at(r, c, 0) = gray - channel_mean[0];
      }
    }
  }
  return out;
}

RgbaImage Preprocessing::to_display(const Image& image) const {
  if (static_cast<int>(channel_mean.size()) != image.channels()) {
    throw Error(ErrorCode::kShapeMismatch, "channel_mean does not match image channels");
  }
  RgbaImage out(image.height(), image.width());
  auto to_byte = [](double v) {
    return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
  };
  for (int r = 0; r < image.height(); ++r) {
    for (int c = 0; c < image.width(); ++c) {
      std::uint8_t rgb[3];
      for (int ch = 0; ch < 3; ++ch) {
        const int src = image.channels() == 3 ? ch : 0;
        rgb[ch] = to_byte(image.at(r, c, src) + channel_mean[src]);
      }
      out.set(r, c, rgb[0], rgb[1], rgb[2], 255);
    }
  }
  return out;
}

}  // namespace e2x
