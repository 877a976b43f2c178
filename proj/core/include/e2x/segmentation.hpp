#pragma once

#include <string>
#include <vector>

#include "e2x/types.hpp"

namespace e2x {

struct SlicParams {
  int num_segments = 200;
  double compactness = 10.0;
  int max_iters = 10;
  bool enforce_connectivity = true;
};

/// SLIC superpixels on the raw channel values of `image`.
///
/// Distance D = sqrt(d_color^2 + (d_xy / S)^2 * m^2), S = sqrt(HW / M),
/// m = compactness. Exactly M seeds sit in evenly spaced rows (no randomness), so the
/// result is a pure function of the inputs. The returned segmentation has
/// 1 <= M' <= num_segments labels.
Segmentation slic_segment(const Image& image, const SlicParams& params);

/// rows x cols rectangular tiling; cell boundaries at floor(i * H / rows) so
/// the remainder lands in the last row / column.
Segmentation grid_segment(const Image& image, int rows, int cols);
Segmentation grid_segment(int height, int width, int rows, int cols);

struct SegmentBox {
  int row_min, col_min, row_max, col_max;  // inclusive
};

struct SegmentStats {
  std::vector<std::size_t> counts;
  std::vector<SegmentBox> boxes;
};

SegmentStats segment_stats(const Segmentation& seg);

/// True when every label forms a single 4-connected component.
bool is_four_connected(const Segmentation& seg);

/// Debug exports: `row,col,label` CSV and a PNG with one colour per label.
std::string segmentation_to_csv(const Segmentation& seg);
Segmentation segmentation_from_csv(const std::string& text);
void write_segmentation_png(const std::string& path, const Segmentation& seg);

}  // namespace e2x
