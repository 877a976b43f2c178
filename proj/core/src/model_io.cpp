#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "e2x/model.hpp"

// Layout: "E2XM" | u32 version (LE) | f32 blob (LE).
// The blob opens with an architecture header of small integers stored as f32:
//   linear   : 1, H, W, C, weights[H*W*C], bias
//   tiny cnn : 2, H, W, C, filters, classes, parameters...
//   detector : 3, H, W, C, filters, classes, grid, S, (w_0, h_0) ... (w_S-1, h_S-1), parameters...

namespace e2x {
namespace {

constexpr std::uint32_t kVersion = 1;
constexpr char kMagic[4] = {'E', '2', 'X', 'M'};

enum Kind : int { kLinear = 1, kTinyCnn = 2, kDetector = 3 };

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(std::span<const std::uint8_t> in, std::size_t pos) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(in[pos + i]) << (8 * i);
  return v;
}

void put_f32(std::vector<std::uint8_t>& out, double v) {
  put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
}

int as_int(double v) {
  if (v != std::round(v) || v < 0 || v > 1e7) {
    throw Error(ErrorCode::kParseError, "model header field is not a small integer");
  }
  return static_cast<int>(v);
}

}  // namespace

std::vector<std::uint8_t> serialize_model(const PredictionModel& model) {
  std::vector<double> blob;
  if (const auto* lin = dynamic_cast<const LinearModel*>(&model)) {
    const Shape& s = lin->input_shape();
    blob = {kLinear, double(s.height), double(s.width), double(s.channels)};
    blob.insert(blob.end(), lin->weights().begin(), lin->weights().end());
    blob.push_back(lin->bias());
  } else if (const auto* cnn = dynamic_cast<const TinyCNN*>(&model)) {
    const auto& c = cnn->config();
    blob = {kTinyCnn, double(c.input.height), double(c.input.width), double(c.input.channels),
            double(c.filters), double(c.classes)};
    const auto p = cnn->parameters();
    blob.insert(blob.end(), p.begin(), p.end());
  } else if (const auto* det = dynamic_cast<const ToyDetector*>(&model)) {
    const auto& c = det->config();
    blob = {kDetector, double(c.input.height), double(c.input.width), double(c.input.channels),
            double(c.filters), double(c.classes), double(c.grid), double(c.anchor_shapes.size())};
    for (const auto& [w, h] : c.anchor_shapes) {
      blob.push_back(w);
      blob.push_back(h);
    }
    const auto p = det->parameters();
    blob.insert(blob.end(), p.begin(), p.end());
  } else {
    throw Error(ErrorCode::kInvalidArgument, "model type has no file representation");
  }
  std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
  put_u32(out, kVersion);
  for (double v : blob) put_f32(out, v);
  return out;
}

std::unique_ptr<PredictionModel> deserialize_model(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 8 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw Error(ErrorCode::kParseError, "missing E2XM magic");
  }
  if (get_u32(bytes, 4) != kVersion) {
    throw Error(ErrorCode::kParseError, "unsupported model file version");
  }
  if ((bytes.size() - 8) % 4 != 0) throw Error(ErrorCode::kParseError, "truncated f32 blob");
  std::vector<double> blob;
  for (std::size_t pos = 8; pos < bytes.size(); pos += 4) {
    blob.push_back(std::bit_cast<float>(get_u32(bytes, pos)));
  }
  auto need = [&](std::size_t n) {
    if (blob.size() < n) throw Error(ErrorCode::kParseError, "model header truncated");
  };
  need(4);
  const Shape shape{as_int(blob[1]), as_int(blob[2]), as_int(blob[3])};
  switch (as_int(blob[0])) {
    case kLinear: {
      if (blob.size() != 4 + shape.size() + 1) {
        throw Error(ErrorCode::kParseError, "linear model blob length");
      }
      std::vector<double> w(blob.begin() + 4, blob.end() - 1);
      return std::make_unique<LinearModel>(shape, std::move(w), blob.back());
    }
    case kTinyCnn: {
      need(6);
      TinyCnnConfig config;
      config.input = shape;
      config.filters = as_int(blob[4]);
      config.classes = as_int(blob[5]);
      return std::make_unique<TinyCNN>(config, std::span<const double>(blob).subspan(6));
    }
    case kDetector: {
      need(8);
      ToyDetectorConfig config;
      config.input = shape;
      config.filters = as_int(blob[4]);
      config.classes = as_int(blob[5]);
      config.grid = as_int(blob[6]);
      const std::size_t shapes = as_int(blob[7]);
      need(8 + 2 * shapes);
      config.anchor_shapes.clear();
      for (std::size_t i = 0; i < shapes; ++i) {
        config.anchor_shapes.emplace_back(blob[8 + 2 * i], blob[9 + 2 * i]);
      }
      return std::make_unique<ToyDetector>(
          config, std::span<const double>(blob).subspan(8 + 2 * shapes));
    }
    default:
      throw Error(ErrorCode::kParseError, "unknown model kind");
  }
}

void save_model(const std::string& path, const PredictionModel& model) {
  const auto bytes = serialize_model(model);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIoError, "cannot open " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::kIoError, "write failed: " + path);
}

std::unique_ptr<PredictionModel> load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return deserialize_model(bytes);
}

}  // namespace e2x
