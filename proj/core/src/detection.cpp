#include "e2x/detection.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <tuple>

#include "e2x/io.hpp"

namespace e2x {

void validate(const Box& box, const std::optional<Shape>& bounds) {
  const bool finite = std::isfinite(box.xmin) && std::isfinite(box.ymin) &&
                      std::isfinite(box.xmax) && std::isfinite(box.ymax);
  if (!finite || !(box.xmin < box.xmax) || !(box.ymin < box.ymax)) {
    throw Error(ErrorCode::kInvalidArgument, "box needs xmin < xmax and ymin < ymax");
  }
  if (bounds && (box.xmin < 0 || box.ymin < 0 || box.xmax > bounds->width ||
                 box.ymax > bounds->height)) {
    throw Error(ErrorCode::kInvalidArgument, "box outside image bounds");
  }
}

double iou(const Box& a, const Box& b) {
  const double iw = std::min(a.xmax, b.xmax) - std::max(a.xmin, b.xmin);
  const double ih = std::min(a.ymax, b.ymax) - std::max(a.ymin, b.ymin);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  return inter / (a.area() + b.area() - inter);
}

namespace {

constexpr std::size_t kNoIndex = static_cast<std::size_t>(-1);

std::size_t index_or_max(const Detection& d) { return d.output_index.value_or(kNoIndex); }

}  // namespace

Classification classify_detections(const std::vector<Detection>& dets,
                                   const std::vector<GroundTruth>& gts, double conf_thr,
                                   double iou_thr) {
  if (!(conf_thr > 0.0 && conf_thr < 1.0) || !(iou_thr > 0.0 && iou_thr < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "thresholds must lie in (0, 1)");
  }
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < dets.size(); ++i) {
    if (dets[i].confidence >= conf_thr) order.push_back(i);
  }
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (dets[a].confidence != dets[b].confidence) return dets[a].confidence > dets[b].confidence;
    return index_or_max(dets[a]) < index_or_max(dets[b]);
  });
  std::vector<char> taken(gts.size(), 0);
  Classification out;
  for (std::size_t d : order) {
    std::size_t best = kNoIndex;
    double best_iou = 0.0;
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (taken[g] || gts[g].class_id != dets[d].class_id || gts[g].image_id != dets[d].image_id) {
        continue;
      }
      const double o = iou(dets[d].box, gts[g].box);
      if (o >= iou_thr && (best == kNoIndex || o > best_iou)) {
        best = g;
        best_iou = o;
      }
    }
    if (best == kNoIndex) {
      out.false_positives.push_back(d);
    } else {
      taken[best] = 1;
      out.true_positives.push_back(d);
      out.matched_gt.push_back(best);
    }
  }
  for (std::size_t g = 0; g < gts.size(); ++g) {
    if (!taken[g]) out.unmatched_gts.push_back(g);
  }
  return out;
}

std::vector<FnCandidate> find_fn_candidates(const std::vector<Detection>& all_dets,
                                            const std::vector<GroundTruth>& gts,
                                            const std::vector<std::size_t>& unmatched_gts,
                                            double low_thr, double min_iou) {
  auto key = [](const Detection& d, double o) {
    // Larger is better; negated index so the lowest output index wins.
    return std::make_tuple(o, d.confidence, -static_cast<double>(index_or_max(d)), -d.box.xmin,
                           -d.box.ymin, -d.box.xmax, -d.box.ymax);
  };
  std::vector<FnCandidate> out;
  for (std::size_t g : unmatched_gts) {
    if (g >= gts.size()) throw Error(ErrorCode::kInvalidArgument, "groundtruth index out of range");
    FnCandidate cand{g, std::nullopt, 0.0};
    for (std::size_t d = 0; d < all_dets.size(); ++d) {
      const auto& det = all_dets[d];
      if (det.class_id != gts[g].class_id || det.image_id != gts[g].image_id ||
          det.confidence < low_thr) {
        continue;
      }
      const double o = iou(det.box, gts[g].box);
      if (o < min_iou) continue;
      if (!cand.detection || key(det, o) > key(all_dets[*cand.detection], cand.iou)) {
        cand.detection = d;
        cand.iou = o;
      }
    }
    out.push_back(cand);
  }
  return out;
}

std::vector<Detection> decode_detections(const ToyDetector& detector, const Image& image,
                                         const std::string& image_id) {
  const auto out = detector.forward(image);
  std::vector<Detection> dets;
  for (std::size_t a = 0; a < detector.num_anchors(); ++a) {
    const auto& anchor = detector.anchor(a);
    for (int c = 1; c < detector.num_classes(); ++c) {
      const std::size_t idx = detector.output_index(a, c);
      dets.push_back(Detection{Box{anchor.xmin, anchor.ymin, anchor.xmax, anchor.ymax}, c,
                               out[idx], idx, image_id});
    }
  }
  return dets;
}

std::vector<Detection> top_detections(const ToyDetector& detector, const Image& image,
                                      std::size_t count) {
  const auto all = decode_detections(detector, image);
  std::vector<Detection> best;
  const int fg = detector.num_classes() - 1;
  for (std::size_t a = 0; a < detector.num_anchors(); ++a) {
    const Detection* pick = nullptr;
    for (int c = 0; c < fg; ++c) {
      const Detection& d = all[a * fg + c];
      if (!pick || d.confidence > pick->confidence) pick = &d;
    }
    best.push_back(*pick);
  }
  std::stable_sort(best.begin(), best.end(), [](const Detection& a, const Detection& b) {
    if (a.confidence != b.confidence) return a.confidence > b.confidence;
    return a.output_index < b.output_index;
  });
  if (best.size() > count) best.resize(count);
  return best;
}

PixelRegion analysis_region(const Box& box, const Shape& shape) {
  const double cx = 0.5 * (box.xmin + box.xmax), cy = 0.5 * (box.ymin + box.ymax);
  const double w = box.xmax - box.xmin, h = box.ymax - box.ymin;
  PixelRegion r{static_cast<int>(std::floor(cy - h)), static_cast<int>(std::floor(cx - w)),
                static_cast<int>(std::ceil(cy + h)), static_cast<int>(std::ceil(cx + w))};
  r.row0 = std::clamp(r.row0, 0, shape.height);
  r.row1 = std::clamp(r.row1, 0, shape.height);
  r.col0 = std::clamp(r.col0, 0, shape.width);
  r.col1 = std::clamp(r.col1, 0, shape.width);
  return r;
}

Explanation explain_detection(const PredictionModel& model, const Image& image,
                              const Detection& det, const MethodConfig& config) {
  if (!det.output_index) {
    throw Error(ErrorCode::kInvalidArgument, "detection carries no output index to explain");
  }
  if (*det.output_index >= model.output_dim()) {
    throw Error(ErrorCode::kInvalidArgument, "detection output index out of range for model");
  }
  std::optional<PixelRegion> region;
  if (config.method == Method::kPda) region = analysis_region(det.box, image.shape());
  return explain(model, image, OutputSelector{*det.output_index}, config, region);
}

namespace {

bool is_header(const std::vector<std::string>& row) {
  return !row.empty() && row.front() == "image_id";
}

Box parse_box(const std::vector<std::string>& row, std::size_t first) {
  Box b{parse_double(row[first]), parse_double(row[first + 1]), parse_double(row[first + 2]),
        parse_double(row[first + 3])};
  validate(b);
  return b;
}

std::string box_fields(const Box& b) {
  return format_sig9(b.xmin) + "," + format_sig9(b.ymin) + "," + format_sig9(b.xmax) + "," +
         format_sig9(b.ymax);
}

}  // namespace

std::vector<Detection> detections_from_csv(const std::string& text) {
  std::vector<Detection> out;
  for (const auto& row : parse_csv(text)) {
    if (is_header(row)) continue;
    if (row.size() != 7 && row.size() != 8) {
      throw Error(ErrorCode::kParseError, "detection rows need 7 or 8 fields");
    }
    Detection d;
    d.image_id = row[0];
    d.class_id = parse_int(row[1]);
    d.confidence = parse_double(row[2]);
    if (d.confidence < 0.0 || d.confidence > 1.0) {
      throw Error(ErrorCode::kParseError, "confidence outside [0, 1]");
    }
    d.box = parse_box(row, 3);
    if (row.size() == 8 && !row[7].empty()) {
      const int idx = parse_int(row[7]);
      if (idx < 0) throw Error(ErrorCode::kParseError, "negative output index");
      d.output_index = static_cast<std::size_t>(idx);
    }
    out.push_back(std::move(d));
  }
  return out;
}

std::string detections_to_csv(const std::vector<Detection>& dets) {
  std::string out = "image_id,class_id,conf,xmin,ymin,xmax,ymax,output_index\n";
  for (const auto& d : dets) {
    out += d.image_id + "," + std::to_string(d.class_id) + "," + format_sig9(d.confidence) + "," +
           box_fields(d.box) + "," +
           (d.output_index ? std::to_string(*d.output_index) : std::string()) + "\n";
  }
  return out;
}

std::vector<GroundTruth> groundtruth_from_csv(const std::string& text) {
  std::vector<GroundTruth> out;
  for (const auto& row : parse_csv(text)) {
    if (is_header(row)) continue;
    if (row.size() != 6) throw Error(ErrorCode::kParseError, "groundtruth rows need 6 fields");
    out.push_back(GroundTruth{parse_box(row, 2), parse_int(row[1]), row[0]});
  }
  return out;
}

std::string groundtruth_to_csv(const std::vector<GroundTruth>& gts) {
  std::string out = "image_id,class_id,xmin,ymin,xmax,ymax\n";
  for (const auto& g : gts) {
    out += g.image_id + "," + std::to_string(g.class_id) + "," + box_fields(g.box) + "\n";
  }
  return out;
}

}  // namespace e2x
