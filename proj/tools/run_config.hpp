#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "e2x/attribution.hpp"
#include "e2x/render.hpp"

namespace e2x::cli {

struct Thresholds {
  double conf = 0.5;
  double iou = 0.5;
  double low = 0.01;
  double min_iou = 0.1;
};

struct NamedMethod {
  std::string name;
  MethodConfig config;
};

struct BenchmarkSection {
  MethodConfig reference;
  std::vector<NamedMethod> candidates;
  int detections = 10;
  std::vector<std::uint64_t> seeds;
};

/// The JSON run file. Relative paths are resolved against the directory the
/// file lives in.
struct RunConfig {
  std::string model;
  std::vector<std::string> images;
  std::string groundtruth;
  std::string detections;
  std::string output_dir = ".";
  std::optional<std::uint64_t> seed;
  int workers = 1;
  MethodConfig method;
  RenderParams render;
  Thresholds thresholds;
  std::optional<BenchmarkSection> benchmark;
};

/// Parses and schema-checks a run file. Unknown keys, wrong types and
/// out-of-range values throw InvalidArgument before anything is computed.
RunConfig parse_run_config(const std::string& json_text, const std::string& base_dir = "");
RunConfig load_run_config(const std::string& path);

/// Human-readable summary of the accepted keys, printed on usage errors.
std::string run_config_schema();

}  // namespace e2x::cli
