#pragma once

#include <optional>
#include <string>
#include <vector>

#include "e2x/attribution.hpp"
#include "e2x/model.hpp"

namespace e2x {

struct Box {
  double xmin = 0, ymin = 0, xmax = 0, ymax = 0;

  double area() const { return (xmax - xmin) * (ymax - ymin); }
  friend bool operator==(const Box&, const Box&) = default;
};

/// Throws InvalidArgument unless xmin < xmax, ymin < ymax and, when a shape
/// is given, the box lies inside it.
void validate(const Box& box, const std::optional<Shape>& bounds = std::nullopt);

struct Detection {
  Box box;
  int class_id = 0;
  double confidence = 0.0;
  // Scalar output of the detector this detection reads from; nullopt for
  // detections ingested without one (they can be matched but not explained).
  std::optional<std::size_t> output_index;
  std::string image_id;
};

struct GroundTruth {
  Box box;
  int class_id = 0;
  std::string image_id;
};

/// Jaccard overlap; 0 for disjoint boxes.
double iou(const Box& a, const Box& b);

struct Classification {
  std::vector<std::size_t> true_positives;   // indices into the detection list
  std::vector<std::size_t> false_positives;
  std::vector<std::size_t> matched_gt;       // parallel to true_positives
  std::vector<std::size_t> unmatched_gts;    // indices into the groundtruth list
};

/// Greedy matching in descending confidence (ties: lower output index, then
/// input position). Detections below conf_thr are ignored.
Classification classify_detections(const std::vector<Detection>& dets,
                                   const std::vector<GroundTruth>& gts, double conf_thr,
                                   double iou_thr);

inline constexpr double kDefaultLowThreshold = 0.01;
inline constexpr double kDefaultMinIou = 0.1;

struct FnCandidate {
  std::size_t gt_index = 0;
  std::optional<std::size_t> detection;  // nullopt: unexplainable miss
  double iou = 0.0;
};

/// For each listed GT, the same-class detection with confidence >= low_thr
/// and IoU >= min_iou maximizing IoU, then confidence, then lowest output
/// index. Independent of the order of `all_dets`.
std::vector<FnCandidate> find_fn_candidates(const std::vector<Detection>& all_dets,
                                            const std::vector<GroundTruth>& gts,
                                            const std::vector<std::size_t>& unmatched_gts,
                                            double low_thr = kDefaultLowThreshold,
                                            double min_iou = kDefaultMinIou);

/// All anchor x foreground-class outputs of the detector as detections.
std::vector<Detection> decode_detections(const ToyDetector& detector, const Image& image,
                                         const std::string& image_id = "");

/// Highest-confidence foreground class per anchor, sorted by descending
/// confidence (ties by output index), truncated to `count`.
std::vector<Detection> top_detections(const ToyDetector& detector, const Image& image,
                                      std::size_t count);

/// The box scaled by 2 around its centre (4x area), clipped to the image.
PixelRegion analysis_region(const Box& box, const Shape& shape);

/// Explains the confidence scalar of `det`. PDA runs inside
/// analysis_region(det.box) unless `config` already restricts it.
Explanation explain_detection(const PredictionModel& model, const Image& image,
                              const Detection& det, const MethodConfig& config);

// `image_id,class_id,conf,xmin,ymin,xmax,ymax[,output_index]`
std::vector<Detection> detections_from_csv(const std::string& text);
std::string detections_to_csv(const std::vector<Detection>& dets);
// `image_id,class_id,xmin,ymin,xmax,ymax`
std::vector<GroundTruth> groundtruth_from_csv(const std::string& text);
std::string groundtruth_to_csv(const std::vector<GroundTruth>& gts);

}  // namespace e2x
