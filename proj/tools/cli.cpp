#include "cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <ostream>
#include <memory>
#include <optional>

#include "CLI11.hpp"
#include "e2x/detection.hpp"
#include "e2x/evaluation.hpp"
#include "e2x/io.hpp"
#include "e2x/render.hpp"
#include "run_config.hpp"
#include "selftest.hpp"

namespace e2x::cli {
namespace {

namespace fs = std::filesystem;

// Flag values that may override the run config; unset means "keep config".
struct Overrides {
  std::string config_path;
  std::string model, groundtruth, detections, output_dir;
  std::vector<std::string> images;
  std::optional<std::string> method, segmentation, fill;
  std::optional<int> k, segments, grid_rows, grid_cols, window, stride, workers;
  std::optional<std::uint64_t> seed;
  std::optional<double> alpha, gamma, conf_thr, iou_thr, low_thr, min_iou;
};

void add_common(CLI::App* app, Overrides& o) {
  app->add_option("--config", o.config_path, "JSON run config");
  app->add_option("--model", o.model, "E2XM model fixture");
  app->add_option("--workers", o.workers, "worker threads")->check(CLI::PositiveNumber);
  app->add_option("--out-dir", o.output_dir, "output directory");
}

void add_method(CLI::App* app, Overrides& o) {
  app->add_option("--method", o.method, "shapley|lime|ig|ig-seg|e2x|pda");
  app->add_option("--k", o.k, "samples / steps")->check(CLI::PositiveNumber);
  app->add_option("--segments", o.segments, "SLIC segment count")->check(CLI::PositiveNumber);
  app->add_option("--segmentation", o.segmentation, "slic|grid");
  app->add_option("--grid-rows", o.grid_rows)->check(CLI::PositiveNumber);
  app->add_option("--grid-cols", o.grid_cols)->check(CLI::PositiveNumber);
  app->add_option("--window", o.window, "PDA square window size")->check(CLI::PositiveNumber);
  app->add_option("--stride", o.stride, "PDA stride")->check(CLI::PositiveNumber);
  app->add_option("--fill", o.fill, "PDA fill: mean|reference");
  app->add_option("--seed", o.seed, "seed (beats E2X_SEED and the config)");
}

void add_render(CLI::App* app, Overrides& o) {
  app->add_option("--alpha", o.alpha, "overlay opacity in [0, 1]");
  app->add_option("--gamma", o.gamma, "overlay emphasis exponent");
}

std::optional<std::uint64_t> env_seed() {
  const char* v = std::getenv("E2X_SEED");
  if (!v || !*v) return std::nullopt;
  const int s = parse_int(v);
  if (s < 0) throw Error(ErrorCode::kInvalidArgument, "E2X_SEED must be a non-negative integer");
  return static_cast<std::uint64_t>(s);
}

RunConfig resolve_config(const Overrides& o) {
  RunConfig cfg = o.config_path.empty() ? RunConfig{} : load_run_config(o.config_path);
  if (!o.model.empty()) cfg.model = o.model;
  if (!o.images.empty()) cfg.images = o.images;
  if (!o.groundtruth.empty()) cfg.groundtruth = o.groundtruth;
  if (!o.detections.empty()) cfg.detections = o.detections;
  if (!o.output_dir.empty()) cfg.output_dir = o.output_dir;
  if (o.workers) cfg.workers = *o.workers;

  MethodConfig& m = cfg.method;
  if (o.method) m.method = parse_method(*o.method);
  if (o.k) m.num_samples = *o.k;
  if (o.segments) m.segmentation.slic.num_segments = *o.segments;
  if (o.segmentation) {
    if (*o.segmentation == "slic") {
      m.segmentation.kind = SegmentationSpec::Kind::kSlic;
    } else if (*o.segmentation == "grid") {
      m.segmentation.kind = SegmentationSpec::Kind::kGrid;
    } else {
      throw Error(ErrorCode::kInvalidArgument, "--segmentation must be slic or grid");
    }
  }
  if (o.grid_rows) m.segmentation.rows = *o.grid_rows;
  if (o.grid_cols) m.segmentation.cols = *o.grid_cols;
  if (o.window) m.pda.window_height = m.pda.window_width = *o.window;
  if (o.stride) m.pda.stride = *o.stride;
  if (o.fill) {
    if (*o.fill == "mean") {
      m.pda.fill = PdaFill::kMean;
    } else if (*o.fill == "reference") {
      m.pda.fill = PdaFill::kReference;
    } else {
      throw Error(ErrorCode::kInvalidArgument, "--fill must be mean or reference");
    }
  }
  m.workers = cfg.workers;

  if (o.seed) {
    cfg.seed = o.seed;
  } else if (auto s = env_seed()) {
    cfg.seed = s;
  }
  if (cfg.seed) m.seed = *cfg.seed;

  if (o.alpha) cfg.render.alpha = *o.alpha;
  if (o.gamma) cfg.render.gamma = *o.gamma;
  validate(cfg.render);
  if (o.conf_thr) cfg.thresholds.conf = *o.conf_thr;
  if (o.iou_thr) cfg.thresholds.iou = *o.iou_thr;
  if (o.low_thr) cfg.thresholds.low = *o.low_thr;
  if (o.min_iou) cfg.thresholds.min_iou = *o.min_iou;
  return cfg;
}

void require(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorCode::kInvalidArgument, what);
}

std::string image_id_of(const std::string& path) { return fs::path(path).stem().string(); }

Image load_image(const std::string& path) { return Preprocessing{}.to_model(read_png(path)); }

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::kIoError, "cannot create " + dir + ": " + ec.message());
}

std::string join(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

// The overlay is always rendered from values parsed back out of an
// attribution CSV, so `render` reproduces `explain`'s PNG byte for byte.
RgbaImage overlay_from_csv(const Image& image, const std::string& csv,
                           const std::optional<Segmentation>& seg, const RenderParams& params) {
  ImportanceMap pixels;
  if (csv.rfind("segment,phi", 0) == 0) {
    require(seg.has_value(), "a per-segment attribution CSV needs --segmentation");
    const auto v = importance_vector_from_csv(csv);
    validate(v, seg->num_segments());
    validate(*seg, image);
    pixels = broadcast(v, *seg);
  } else {
    pixels = collapse_channels(importance_map_from_csv(csv));
    if (pixels.shape().height != image.shape().height ||
        pixels.shape().width != image.shape().width) {
      throw Error(ErrorCode::kShapeMismatch, "attribution map does not match the image size");
    }
  }
  return render_overlay(Preprocessing{}.to_display(image), normalize_map(pixels).map, params);
}

struct Target {
  OutputSelector selector;
  std::optional<Detection> detection;
};

Target pick_target(const PredictionModel& model, const Image& image, const RunConfig& cfg,
                   std::optional<std::size_t> output_index, std::optional<std::size_t> det_row) {
  const auto* detector = dynamic_cast<const ToyDetector*>(&model);
  if (det_row) {
    require(!cfg.detections.empty(), "--detection needs a detections CSV");
    const auto dets = detections_from_csv(read_text_file(cfg.detections));
    require(*det_row < dets.size(), "--detection row out of range");
    const Detection& d = dets[*det_row];
    require(d.output_index.has_value(), "that detection row has no output_index to explain");
    return {OutputSelector{*d.output_index}, d};
  }
  if (output_index) {
    require(*output_index < model.output_dim(), "--output-index out of range");
    if (detector) {
      const std::size_t a = *output_index / detector->num_classes();
      const auto& box = detector->anchor(a);
      Detection d{Box{box.xmin, box.ymin, box.xmax, box.ymax},
                  static_cast<int>(*output_index % detector->num_classes()),
                  model.output(image, OutputSelector{*output_index}), *output_index, ""};
      return {OutputSelector{*output_index}, d};
    }
    return {OutputSelector{*output_index}, std::nullopt};
  }
  if (detector) {
    const auto top = top_detections(*detector, image, 1);
    return {OutputSelector{*top.front().output_index}, top.front()};
  }
  const auto out = model.forward(image);
  std::size_t best = 0;
  for (std::size_t i = 1; i < out.size(); ++i) {
    if (out[i] > out[best]) best = i;
  }
  return {OutputSelector{best}, std::nullopt};
}

int cmd_explain(const Overrides& o, std::optional<std::size_t> output_index,
                std::optional<std::size_t> det_row, const std::string& prefix, std::ostream& out) {
  const RunConfig cfg = resolve_config(o);
  require(!cfg.model.empty(), "explain needs a model (--model or config.model)");
  require(cfg.images.size() == 1, "explain needs exactly one image");
  const auto model = load_model(cfg.model);
  const Image image = load_image(cfg.images.front());
  const Target target = pick_target(*model, image, cfg, output_index, det_row);

  const Explanation e =
      target.detection ? explain_detection(*model, image, *target.detection, cfg.method)
                       : explain(*model, image, target.selector, cfg.method);
  ensure_dir(cfg.output_dir);
  const std::string csv = e.vector ? importance_vector_to_csv(*e.vector)
                                   : importance_map_to_csv(e.pixels);
  const std::string csv_path = join(cfg.output_dir, prefix + ".csv");
  const std::string png_path = join(cfg.output_dir, prefix + ".png");
  write_text_file(csv_path, csv);
  if (e.segmentation) {
    write_text_file(join(cfg.output_dir, prefix + "_segments.csv"),
                    segmentation_to_csv(*e.segmentation));
  }
  write_png(png_path, overlay_from_csv(image, csv, e.segmentation, cfg.render));
  out << "method " << method_name(e.method) << ", output " << target.selector.index;
  if (e.vector) out << ", " << e.vector->phi.size() << " segments";
  out << "\nwrote " << csv_path << " and " << png_path << "\n";
  return 0;
}

int cmd_render(const Overrides& o, const std::string& attribution, const std::string& seg_path,
               const std::string& out_path, std::ostream& out) {
  const RunConfig cfg = resolve_config(o);
  require(cfg.images.size() == 1, "render needs exactly one image");
  const Image image = load_image(cfg.images.front());
  std::optional<Segmentation> seg;
  if (!seg_path.empty()) seg = segmentation_from_csv(read_text_file(seg_path));
  write_png(out_path, overlay_from_csv(image, read_text_file(attribution), seg, cfg.render));
  out << "wrote " << out_path << "\n";
  return 0;
}

int cmd_find_failures(const Overrides& o, const std::string& report_path, std::ostream& out,
                      std::ostream& err) {
  const RunConfig cfg = resolve_config(o);
  require(!cfg.groundtruth.empty(), "find-failures needs a groundtruth CSV");
  const auto gts = groundtruth_from_csv(read_text_file(cfg.groundtruth));
  std::vector<Detection> dets;
  if (!cfg.detections.empty()) {
    dets = detections_from_csv(read_text_file(cfg.detections));
  } else {
    require(!cfg.model.empty() && !cfg.images.empty(),
            "find-failures needs a detections CSV or a detector model plus images");
    const auto model = load_model(cfg.model);
    const auto* detector = dynamic_cast<const ToyDetector*>(model.get());
    require(detector != nullptr, "the model is not a detector");
    for (const auto& path : cfg.images) {
      auto more = decode_detections(*detector, load_image(path), image_id_of(path));
      dets.insert(dets.end(), more.begin(), more.end());
    }
  }
  const auto& t = cfg.thresholds;
  const auto cls = classify_detections(dets, gts, t.conf, t.iou);
  const auto fns = find_fn_candidates(dets, gts, cls.unmatched_gts, t.low, t.min_iou);

  auto box = [](const Box& b) {
    return format_sig9(b.xmin) + "," + format_sig9(b.ymin) + "," + format_sig9(b.xmax) + "," +
           format_sig9(b.ymax);
  };
  auto det_fields = [&](std::size_t d) {
    const Detection& x = dets[d];
    return std::to_string(d) + "," + format_sig9(x.confidence) + "," +
           (x.output_index ? std::to_string(*x.output_index) : "") + "," + box(x.box);
  };
  std::string csv =
      "kind,image_id,class_id,gt_index,detection_index,conf,output_index,xmin,ymin,xmax,ymax,iou\n";
  for (std::size_t i = 0; i < cls.true_positives.size(); ++i) {
    const std::size_t d = cls.true_positives[i], g = cls.matched_gt[i];
    csv += "tp," + dets[d].image_id + "," + std::to_string(dets[d].class_id) + "," +
           std::to_string(g) + "," + det_fields(d) + "," + format_sig9(iou(dets[d].box, gts[g].box)) +
           "\n";
  }
  for (std::size_t d : cls.false_positives) {
    csv += "fp," + dets[d].image_id + "," + std::to_string(dets[d].class_id) + ",," +
           det_fields(d) + ",\n";
  }
  std::size_t recovered = 0;
  for (const auto& fn : fns) {
    const GroundTruth& g = gts[fn.gt_index];
    csv += "fn," + g.image_id + "," + std::to_string(g.class_id) + "," +
           std::to_string(fn.gt_index) + ",";
    if (fn.detection) {
      ++recovered;
      csv += det_fields(*fn.detection) + "," + format_sig9(fn.iou) + "\n";
    } else {
      csv += ",,," + box(g.box) + ",\n";
    }
  }
  if (report_path.empty()) {
    out << csv;
  } else {
    if (auto dir = fs::path(report_path).parent_path(); !dir.empty()) ensure_dir(dir.string());
    write_text_file(report_path, csv);
  }
  err << cls.true_positives.size() << " TP, " << cls.false_positives.size() << " FP, "
            << fns.size() << " FN (" << recovered << " with a low-threshold candidate)\n";
  return 0;
}

int cmd_benchmark(const Overrides& o, std::optional<int> detections, std::ostream& out) {
  RunConfig cfg = resolve_config(o);
  require(cfg.benchmark.has_value(), "benchmark needs a config with a benchmark section");
  require(!cfg.model.empty() && !cfg.images.empty(), "benchmark needs a model and images");
  const auto model = load_model(cfg.model);
  const auto* detector = dynamic_cast<const ToyDetector*>(model.get());
  require(detector != nullptr, "benchmark needs a detector model");
  const BenchmarkSection& b = *cfg.benchmark;
  const int per_image = detections.value_or(b.detections);

  std::vector<Image> images;
  for (const auto& path : cfg.images) images.push_back(load_image(path));
  EvalConfig ec;
  ec.reference = b.reference;
  ec.reference.workers = 1;
  for (const auto& c : b.candidates) {
    Candidate cand{c.name, c.config};
    cand.config.workers = 1;
    if (cfg.seed && c.config.seed == 0) cand.config.seed = *cfg.seed;
    ec.candidates.push_back(std::move(cand));
  }
  for (std::size_t i = 0; i < images.size(); ++i) {
    const auto top = top_detections(*detector, images[i], static_cast<std::size_t>(per_image));
    for (std::size_t k = 0; k < top.size(); ++k) {
      ec.cases.push_back(EvalCase{image_id_of(cfg.images[i]) + "#" + std::to_string(k), &images[i],
                                  top[k]});
    }
  }
  ec.seeds = b.seeds;
  ec.workers = cfg.workers;
  const EvalResult result = compare_to_reference(*model, ec);
  const auto speed = benchmark_speed(*model, ec);
  ensure_dir(cfg.output_dir);
  write_text_file(join(cfg.output_dir, "benchmark.csv"), eval_entries_to_csv(result));
  const std::string summary = eval_summary_to_json(result, speed);
  write_text_file(join(cfg.output_dir, "benchmark.json"), summary);
  out << summary;
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"e2x: feature attribution for image models and detectors"};
  app.require_subcommand(1);
  Overrides o;

  auto* explain_cmd = app.add_subcommand("explain", "explain one output and write CSV + PNG");
  std::string image;
  std::optional<std::size_t> output_index, det_row;
  std::string prefix = "attribution";
  add_common(explain_cmd, o);
  add_method(explain_cmd, o);
  add_render(explain_cmd, o);
  explain_cmd->add_option("--image", image, "input PNG");
  explain_cmd->add_option("--detections", o.detections, "detections CSV");
  explain_cmd->add_option("--detection", det_row, "row of the detections CSV to explain");
  explain_cmd->add_option("--output-index", output_index, "model output to explain");
  explain_cmd->add_option("--name", prefix, "output file prefix");

  auto* render_cmd = app.add_subcommand("render", "re-render an attribution CSV as an overlay");
  std::string attribution, seg_path, render_out;
  add_render(render_cmd, o);
  render_cmd->add_option("--config", o.config_path, "JSON run config");
  render_cmd->add_option("--image", image, "input PNG");
  render_cmd->add_option("--attribution", attribution, "attribution CSV")->required();
  render_cmd->add_option("--segmentation", seg_path, "segmentation CSV (per-segment input)");
  render_cmd->add_option("--out", render_out, "output PNG")->required();

  auto* ff_cmd = app.add_subcommand("find-failures", "classify detections and list FN candidates");
  std::vector<std::string> ff_images;
  std::string report_path;
  add_common(ff_cmd, o);
  ff_cmd->add_option("--image", ff_images, "input PNG(s); image_id is the file stem");
  ff_cmd->add_option("--groundtruth", o.groundtruth, "groundtruth CSV");
  ff_cmd->add_option("--detections", o.detections, "detections CSV");
  ff_cmd->add_option("--conf-thr", o.conf_thr, "confidence threshold");
  ff_cmd->add_option("--iou-thr", o.iou_thr, "matching IoU threshold");
  ff_cmd->add_option("--low-thr", o.low_thr, "lowered threshold for FN candidates");
  ff_cmd->add_option("--min-iou", o.min_iou, "minimum IoU for FN candidates");
  ff_cmd->add_option("--report", report_path, "report CSV (stdout if omitted)");

  auto* bench_cmd = app.add_subcommand("benchmark", "correlation against a reference plus cost");
  std::vector<std::string> bench_images;
  std::optional<int> bench_dets;
  add_common(bench_cmd, o);
  bench_cmd->add_option("--image", bench_images, "input PNG(s)");
  bench_cmd->add_option("--detections-per-image", bench_dets)->check(CLI::PositiveNumber);
  bench_cmd->add_option("--seed", o.seed, "seed for candidates without their own");

  auto* self_cmd = app.add_subcommand("selftest", "run the oracle checks");
  std::string fixture_model;
  self_cmd->add_option("--model", fixture_model, "also gradient-check this model fixture");

  std::vector<std::string> argv;
  for (auto it = args.rbegin(); it != args.rend(); ++it) argv.push_back(*it);
  try {
    app.parse(argv);
  } catch (const CLI::CallForHelp& e) {
    app.exit(e, out, err);
    out << "\n" << run_config_schema();
    return 0;
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    err << "\n" << run_config_schema();
    return 1;
  }

  try {
    if (explain_cmd->parsed()) {
      if (!image.empty()) o.images = {image};
      return cmd_explain(o, output_index, det_row, prefix, out);
    }
    if (render_cmd->parsed()) {
      if (!image.empty()) o.images = {image};
      return cmd_render(o, attribution, seg_path, render_out, out);
    }
    if (ff_cmd->parsed()) {
      o.images = ff_images;
      return cmd_find_failures(o, report_path, out, err);
    }
    if (bench_cmd->parsed()) {
      o.images = bench_images;
      return cmd_benchmark(o, bench_dets, out);
    }
    return run_selftest(out, fixture_model) ? 0 : 2;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    if (e.code() == ErrorCode::kInvalidArgument) err << "\n" << run_config_schema();
    return is_validation_error(e.code()) ? 1 : 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace e2x::cli
