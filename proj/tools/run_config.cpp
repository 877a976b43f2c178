#include "run_config.hpp"

#include <filesystem>
#include <initializer_list>

#include "e2x/io.hpp"
#include "json.hpp"

namespace e2x::cli {
namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& what) {
  throw Error(ErrorCode::kInvalidArgument, "config: " + what);
}

void allow_keys(const json& obj, const std::string& where,
                std::initializer_list<std::string_view> keys) {
  if (!obj.is_object()) fail(where + " must be an object");
  for (const auto& item : obj.items()) {
    bool known = false;
    for (auto k : keys) known = known || item.key() == k;
    if (!known) fail("unknown key '" + item.key() + "' in " + where);
  }
}

std::string get_string(const json& obj, const char* key, const std::string& where) {
  const auto& v = obj.at(key);
  if (!v.is_string()) fail(where + "." + key + " must be a string");
  return v.get<std::string>();
}

double get_number(const json& obj, const char* key, const std::string& where) {
  const auto& v = obj.at(key);
  if (!v.is_number()) fail(where + "." + key + " must be a number");
  return v.get<double>();
}

std::int64_t get_int(const json& obj, const char* key, const std::string& where) {
  const auto& v = obj.at(key);
  if (!v.is_number_integer()) fail(where + "." + key + " must be an integer");
  return v.get<std::int64_t>();
}

int get_positive(const json& obj, const char* key, const std::string& where) {
  const auto v = get_int(obj, key, where);
  if (v < 1 || v > 1'000'000'000) fail(where + "." + key + " must be a positive integer");
  return static_cast<int>(v);
}

std::uint64_t get_seed(const json& obj, const char* key, const std::string& where) {
  const auto& v = obj.at(key);
  if (!v.is_number_unsigned()) fail(where + "." + key + " must be a non-negative integer");
  return v.get<std::uint64_t>();
}

std::pair<int, int> get_pair(const json& obj, const char* key, const std::string& where) {
  const auto& v = obj.at(key);
  if (!v.is_array() || v.size() != 2 || !v[0].is_number_integer() || !v[1].is_number_integer() ||
      v[0].get<int>() < 1 || v[1].get<int>() < 1) {
    fail(where + "." + key + " must be [positive int, positive int]");
  }
  return {v[0].get<int>(), v[1].get<int>()};
}

std::string resolve(const std::string& path, const std::string& base) {
  if (path.empty() || base.empty() || std::filesystem::path(path).is_absolute()) return path;
  return (std::filesystem::path(base) / path).lexically_normal().string();
}

// Keys of a method object; `extra` adds "name" for benchmark candidates.
MethodConfig parse_method_object(const json& obj, const std::string& where, bool named) {
  if (named) {
    allow_keys(obj, where,
               {"name", "method", "k", "segments", "segmentation", "grid", "compactness",
                "kernel_width", "ridge_lambda", "lime_kernel", "lime_sampling", "window",
                "stride", "fill", "seed"});
  } else {
    allow_keys(obj, where,
               {"method", "k", "segments", "segmentation", "grid", "compactness", "kernel_width",
                "ridge_lambda", "lime_kernel", "lime_sampling", "window", "stride", "fill",
                "seed"});
  }
  MethodConfig m;
  if (obj.contains("method")) m.method = parse_method(get_string(obj, "method", where));
  if (obj.contains("k")) m.num_samples = get_positive(obj, "k", where);
  if (obj.contains("segments")) m.segmentation.slic.num_segments = get_positive(obj, "segments", where);
  if (obj.contains("segmentation")) {
    const auto kind = get_string(obj, "segmentation", where);
    if (kind == "slic") {
      m.segmentation.kind = SegmentationSpec::Kind::kSlic;
    } else if (kind == "grid") {
      m.segmentation.kind = SegmentationSpec::Kind::kGrid;
    } else {
      fail(where + ".segmentation must be \"slic\" or \"grid\"");
    }
  }
  if (obj.contains("grid")) {
    std::tie(m.segmentation.rows, m.segmentation.cols) = get_pair(obj, "grid", where);
  }
  if (obj.contains("compactness")) {
    m.segmentation.slic.compactness = get_number(obj, "compactness", where);
    if (!(m.segmentation.slic.compactness > 0)) fail(where + ".compactness must be positive");
  }
  if (obj.contains("kernel_width")) {
    m.kernel_width = get_number(obj, "kernel_width", where);
    if (!(m.kernel_width > 0)) fail(where + ".kernel_width must be positive");
  }
  if (obj.contains("ridge_lambda")) {
    m.ridge_lambda = get_number(obj, "ridge_lambda", where);
    if (!(m.ridge_lambda >= 0)) fail(where + ".ridge_lambda must be >= 0");
  }
  if (obj.contains("lime_kernel")) {
    const auto k = get_string(obj, "lime_kernel", where);
    if (k == "exponential") {
      m.lime_kernel = LimeKernel::kExponential;
    } else if (k == "shapley") {
      m.lime_kernel = LimeKernel::kShapley;
    } else {
      fail(where + ".lime_kernel must be \"exponential\" or \"shapley\"");
    }
  }
  if (obj.contains("lime_sampling")) {
    const auto s = get_string(obj, "lime_sampling", where);
    if (s == "uniform") {
      m.lime_sampling = LimeSampling::kUniform;
    } else if (s == "enumerate") {
      m.lime_sampling = LimeSampling::kEnumerate;
    } else {
      fail(where + ".lime_sampling must be \"uniform\" or \"enumerate\"");
    }
  }
  if (obj.contains("window")) {
    std::tie(m.pda.window_height, m.pda.window_width) = get_pair(obj, "window", where);
  }
  if (obj.contains("stride")) m.pda.stride = get_positive(obj, "stride", where);
  if (obj.contains("fill")) {
    const auto f = get_string(obj, "fill", where);
    if (f == "mean") {
      m.pda.fill = PdaFill::kMean;
    } else if (f == "reference") {
      m.pda.fill = PdaFill::kReference;
    } else {
      fail(where + ".fill must be \"mean\" or \"reference\"");
    }
  }
  if (obj.contains("seed")) m.seed = get_seed(obj, "seed", where);
  return m;
}

}  // namespace

RunConfig parse_run_config(const std::string& json_text, const std::string& base_dir) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kParseError, std::string("config is not valid JSON: ") + e.what());
  }
  allow_keys(doc, "config",
             {"model", "image", "images", "groundtruth", "detections", "output_dir", "seed",
              "workers", "method", "render", "thresholds", "benchmark"});
  RunConfig cfg;
  if (doc.contains("model")) cfg.model = resolve(get_string(doc, "model", "config"), base_dir);
  if (doc.contains("image") && doc.contains("images")) fail("give either image or images");
  if (doc.contains("image")) cfg.images.push_back(resolve(get_string(doc, "image", "config"), base_dir));
  if (doc.contains("images")) {
    const auto& arr = doc.at("images");
    if (!arr.is_array()) fail("images must be an array of strings");
    for (const auto& p : arr) {
      if (!p.is_string()) fail("images must be an array of strings");
      cfg.images.push_back(resolve(p.get<std::string>(), base_dir));
    }
  }
  if (doc.contains("groundtruth")) {
    cfg.groundtruth = resolve(get_string(doc, "groundtruth", "config"), base_dir);
  }
  if (doc.contains("detections")) {
    cfg.detections = resolve(get_string(doc, "detections", "config"), base_dir);
  }
  if (doc.contains("output_dir")) {
    cfg.output_dir = resolve(get_string(doc, "output_dir", "config"), base_dir);
  }
  if (doc.contains("seed")) cfg.seed = get_seed(doc, "seed", "config");
  if (doc.contains("workers")) cfg.workers = get_positive(doc, "workers", "config");
  if (doc.contains("method")) cfg.method = parse_method_object(doc.at("method"), "method", false);
  if (doc.contains("render")) {
    const auto& r = doc.at("render");
    allow_keys(r, "render", {"alpha", "gamma"});
    if (r.contains("alpha")) cfg.render.alpha = get_number(r, "alpha", "render");
    if (r.contains("gamma")) cfg.render.gamma = get_number(r, "gamma", "render");
    validate(cfg.render);
  }
  if (doc.contains("thresholds")) {
    const auto& t = doc.at("thresholds");
    allow_keys(t, "thresholds", {"conf", "iou", "low", "min_iou"});
    if (t.contains("conf")) cfg.thresholds.conf = get_number(t, "conf", "thresholds");
    if (t.contains("iou")) cfg.thresholds.iou = get_number(t, "iou", "thresholds");
    if (t.contains("low")) cfg.thresholds.low = get_number(t, "low", "thresholds");
    if (t.contains("min_iou")) cfg.thresholds.min_iou = get_number(t, "min_iou", "thresholds");
  }
  if (doc.contains("benchmark")) {
    const auto& b = doc.at("benchmark");
    allow_keys(b, "benchmark", {"reference", "candidates", "detections", "seeds"});
    BenchmarkSection sec;
    if (!b.contains("reference")) fail("benchmark.reference is required");
    sec.reference = parse_method_object(b.at("reference"), "benchmark.reference", false);
    if (!b.contains("candidates") || !b.at("candidates").is_array() || b.at("candidates").empty()) {
      fail("benchmark.candidates must be a non-empty array");
    }
    for (const auto& c : b.at("candidates")) {
      NamedMethod nm;
      nm.config = parse_method_object(c, "benchmark.candidates[]", true);
      nm.name = c.contains("name") ? get_string(c, "name", "benchmark.candidates[]")
                                   : std::string(method_name(nm.config.method));
      sec.candidates.push_back(std::move(nm));
    }
    if (b.contains("detections")) sec.detections = get_positive(b, "detections", "benchmark");
    if (b.contains("seeds")) {
      const auto& s = b.at("seeds");
      if (!s.is_array()) fail("benchmark.seeds must be an array");
      for (const auto& v : s) {
        if (!v.is_number_unsigned()) fail("benchmark.seeds must hold non-negative integers");
        sec.seeds.push_back(v.get<std::uint64_t>());
      }
    }
    cfg.benchmark = std::move(sec);
  }
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  const auto base = std::filesystem::path(path).parent_path().string();
  return parse_run_config(read_text_file(path), base);
}

std::string run_config_schema() {
  return R"(Run config (JSON object; every key optional, relative paths resolve
against the config file's directory):
  model        string   E2XM model fixture
  image        string   input PNG (or "images": [string, ...])
  groundtruth  string   CSV image_id,class_id,xmin,ymin,xmax,ymax
  detections   string   CSV image_id,class_id,conf,xmin,ymin,xmax,ymax[,output_index]
  output_dir   string
  seed         uint     overridden by E2X_SEED, which is overridden by --seed
  workers      int >= 1
  method       {method: shapley|lime|ig|ig-seg|e2x|pda, k, segments,
                segmentation: slic|grid, grid: [rows, cols], compactness,
                kernel_width, ridge_lambda, lime_kernel: exponential|shapley,
                lime_sampling: uniform|enumerate, window: [h, w], stride,
                fill: mean|reference, seed}
  render       {alpha in [0,1], gamma > 0}
  thresholds   {conf, iou, low, min_iou}
  benchmark    {reference: method, candidates: [method + name], detections, seeds}
)";
}

}  // namespace e2x::cli
