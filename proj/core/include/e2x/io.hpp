#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "e2x/types.hpp"

namespace e2x {

// ------------------------------------------------------------------- CSV

/// Splits on newlines and commas; no quoting. Blank lines are dropped.
std::vector<std::vector<std::string>> parse_csv(const std::string& text);
int parse_int(const std::string& field);
double parse_double(const std::string& field);

/// "%.9g": nine significant digits, the precision of every CSV we emit.
std::string format_sig9(double v);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

/// `segment,phi` rows, then a final `phi0,<value>` row.
std::string importance_vector_to_csv(const ImportanceVector& v);
ImportanceVector importance_vector_from_csv(const std::string& text);

/// `row,col,value` rows; multi-channel maps are summed over channels first.
std::string importance_map_to_csv(const ImportanceMap& map);
ImportanceMap importance_map_from_csv(const std::string& text);

// ------------------------------------------------------------------- PNG

/// 8-bit RGBA raster, row-major.
class RgbaImage {
 public:
  RgbaImage() = default;
  RgbaImage(int height, int width)
      : height_(height), width_(width), pixels_(static_cast<std::size_t>(height) * width * 4, 0) {}

  int height() const { return height_; }
  int width() const { return width_; }
  const std::vector<std::uint8_t>& bytes() const { return pixels_; }
  std::uint8_t at(int r, int c, int ch) const { return pixels_[index(r, c) + ch]; }
  void set(int r, int c, std::uint8_t red, std::uint8_t green, std::uint8_t blue,
           std::uint8_t alpha) {
    const std::size_t i = index(r, c);
    pixels_[i] = red;
    pixels_[i + 1] = green;
    pixels_[i + 2] = blue;
    pixels_[i + 3] = alpha;
  }
  friend bool operator==(const RgbaImage&, const RgbaImage&) = default;

 private:
  std::size_t index(int r, int c) const { return (static_cast<std::size_t>(r) * width_ + c) * 4; }

  int height_ = 0;
  int width_ = 0;
  std::vector<std::uint8_t> pixels_;
};

/// Encodes with fixed zlib settings and no time chunk, so identical rasters
/// produce identical files.
std::vector<std::uint8_t> encode_png(const RgbaImage& image);
void write_png(const std::string& path, const RgbaImage& image);
/// Any 8-bit PNG, expanded to RGBA.
RgbaImage read_png(const std::string& path);

/// Maps 8-bit RGB to the model domain: x = v / 255 - mean[channel].
struct Preprocessing {
  std::vector<double> channel_mean{0.5, 0.5, 0.5};

  Image to_model(const RgbaImage& rgba) const;
  /// Inverse of to_model, clamped to [0, 255]; used as the overlay backdrop.
  RgbaImage to_display(const Image& image) const;
};

}  // namespace e2x
