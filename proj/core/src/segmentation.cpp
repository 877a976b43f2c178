#include "e2x/segmentation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "e2x/io.hpp"
#include "e2x/rng.hpp"

namespace e2x {
namespace {

struct Center {
  double y = 0.0;
  double x = 0.0;
  std::vector<double> color;
};

// Seeds in ny rows as close to square cells as the request allows; the
// first M mod ny rows take one extra seed so exactly M seeds are placed.
// Wide layouts win ties so M = 2 splits left/right.
std::vector<int> seed_rows(int h, int w, int m) {
  int ny = static_cast<int>(std::lround(std::sqrt(static_cast<double>(m) * h / w)));
  ny = std::clamp(ny, 1, std::min(h, m));
  // A row may not hold more seeds than the image is wide.
  while (static_cast<long long>(ny) * w < m) ++ny;
  std::vector<int> per_row(ny, m / ny);
  for (int i = 0; i < m % ny; ++i) ++per_row[i];
  return per_row;
}

std::vector<std::int32_t> compact_labels(const std::vector<std::int32_t>& labels, int* count) {
  std::vector<std::int32_t> remap;
  std::vector<std::int32_t> out(labels.size());
  std::int32_t next = 0;
  for (std::size_t p = 0; p < labels.size(); ++p) {
    const std::int32_t l = labels[p];
    if (static_cast<std::size_t>(l) >= remap.size()) remap.resize(l + 1, -1);
    if (remap[l] < 0) remap[l] = next++;
    out[p] = remap[l];
  }
  *count = next;
  return out;
}

// 4-connected components; returns component id per pixel.
std::vector<int> label_components(int h, int w, const std::vector<std::int32_t>& labels,
                                  std::vector<std::size_t>& sizes) {
  std::vector<int> comp(labels.size(), -1);
  std::vector<std::size_t> stack;
  sizes.clear();
  for (std::size_t start = 0; start < labels.size(); ++start) {
    if (comp[start] >= 0) continue;
    const int id = static_cast<int>(sizes.size());
    sizes.push_back(0);
    comp[start] = id;
    stack.push_back(start);
    while (!stack.empty()) {
      const std::size_t p = stack.back();
      stack.pop_back();
      ++sizes[id];
      const int r = static_cast<int>(p / w), c = static_cast<int>(p % w);
      const int nr[4] = {r - 1, r + 1, r, r};
      const int nc[4] = {c, c, c - 1, c + 1};
      for (int k = 0; k < 4; ++k) {
        if (nr[k] < 0 || nr[k] >= h || nc[k] < 0 || nc[k] >= w) continue;
        const std::size_t q = static_cast<std::size_t>(nr[k]) * w + nc[k];
        if (comp[q] < 0 && labels[q] == labels[p]) {
          comp[q] = id;
          stack.push_back(q);
        }
      }
    }
  }
  return comp;
}

// Keeps the largest component of each label when it has at least
// `min_size` pixels; every other component is merged into the largest
// adjacent segment, smallest components first.
std::vector<std::int32_t> enforce_connectivity(int h, int w, const std::vector<std::int32_t>& labels,
                                               std::size_t min_size) {
  std::vector<std::size_t> sizes;
  const auto comp = label_components(h, w, labels, sizes);
  const std::size_t n = sizes.size();
  std::vector<std::int32_t> comp_label(n);
  for (std::size_t p = 0; p < labels.size(); ++p) comp_label[comp[p]] = labels[p];

  const std::int32_t max_label = *std::max_element(labels.begin(), labels.end());
  std::vector<int> best(max_label + 1, -1);
  for (std::size_t c = 0; c < n; ++c) {
    int& b = best[comp_label[c]];
    if (b < 0 || sizes[c] > sizes[b]) b = static_cast<int>(c);
  }
  std::vector<char> keep(n, 0);
  bool any = false;
  for (int b : best) {
    if (b >= 0 && sizes[b] >= min_size) {
      keep[b] = 1;
      any = true;
    }
  }
  if (!any) {
    keep[std::max_element(sizes.begin(), sizes.end()) - sizes.begin()] = 1;
  }

  std::vector<std::vector<int>> adj(n);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const int a = comp[static_cast<std::size_t>(r) * w + c];
      if (c + 1 < w) {
        const int b = comp[static_cast<std::size_t>(r) * w + c + 1];
        if (a != b) {
          adj[a].push_back(b);
          adj[b].push_back(a);
        }
      }
      if (r + 1 < h) {
        const int b = comp[static_cast<std::size_t>(r + 1) * w + c];
        if (a != b) {
          adj[a].push_back(b);
          adj[b].push_back(a);
        }
      }
    }
  }
  for (auto& v : adj) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  }

  std::vector<int> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  std::vector<std::vector<int>> members(n);
  for (std::size_t c = 0; c < n; ++c) members[c] = {static_cast<int>(c)};
  std::vector<std::size_t> set_size = sizes;

  std::vector<int> order;
  for (std::size_t c = 0; c < n; ++c) {
    if (!keep[c]) order.push_back(static_cast<int>(c));
  }
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return sizes[a] < sizes[b]; });
  for (int c : order) {
    const int root = find(c);
    if (keep[root]) continue;
    int target = -1;
    for (int m : members[root]) {
      for (int nb : adj[m]) {
        const int rn = find(nb);
        if (rn == root) continue;
        if (target < 0 || set_size[rn] > set_size[target] ||
            (set_size[rn] == set_size[target] && rn < target)) {
          target = rn;
        }
      }
    }
    if (target < 0) continue;
    parent[root] = target;
    set_size[target] += set_size[root];
    members[target].insert(members[target].end(), members[root].begin(), members[root].end());
    members[root].clear();
  }

  std::vector<std::int32_t> out(labels.size());
  for (std::size_t p = 0; p < labels.size(); ++p) out[p] = comp_label[find(comp[p])];
  return out;
}

}  // namespace

Segmentation slic_segment(const Image& image, const SlicParams& params) {
  validate(image);
  const int h = image.height(), w = image.width(), channels = image.channels();
  const std::size_t pixels = image.pixels();
  if (params.num_segments < 1 || !(params.compactness > 0.0) || params.max_iters < 1) {
    throw Error(ErrorCode::kInvalidArgument, "SLIC needs num_segments >= 1, compactness > 0, max_iters >= 1");
  }
  if (static_cast<std::size_t>(params.num_segments) > pixels) {
    throw Error(ErrorCode::kTooManySegments, "more segments requested than pixels");
  }
  const int m = params.num_segments;
  const double s = std::sqrt(static_cast<double>(pixels) / m);
  const double spatial = (params.compactness * params.compactness) / (s * s);
  const std::vector<int> per_row = seed_rows(h, w, m);
  const int ny = static_cast<int>(per_row.size());
  std::vector<int> row_start(ny + 1, 0);
  for (int i = 0; i < ny; ++i) row_start[i + 1] = row_start[i] + per_row[i];
  const double step_y = static_cast<double>(h) / ny;
  const int radius_y = static_cast<int>(std::ceil(std::max(step_y, s)));
  const int radius_x = static_cast<int>(std::ceil(std::max(static_cast<double>(w) / per_row.back(), s)));
  auto x = image.values();

  std::vector<Center> centers;
  centers.reserve(static_cast<std::size_t>(m));
  for (int i = 0; i < ny; ++i) {
    for (int j = 0; j < per_row[i]; ++j) {
      Center c;
      c.y = (i + 0.5) * step_y;
      c.x = (j + 0.5) * w / per_row[i];
      const std::size_t p = static_cast<std::size_t>(c.y) * w + static_cast<std::size_t>(c.x);
      c.color.assign(x.begin() + p * channels, x.begin() + (p + 1) * channels);
      centers.push_back(std::move(c));
    }
  }

  std::vector<std::int32_t> labels(pixels);
  for (int r = 0; r < h; ++r) {
    const int i = std::min(ny - 1, r * ny / h);
    for (int c = 0; c < w; ++c) {
      const int j = std::min(per_row[i] - 1, c * per_row[i] / w);
      labels[static_cast<std::size_t>(r) * w + c] = row_start[i] + j;
    }
  }

  std::vector<double> dist(pixels);
  for (int iter = 0; iter < params.max_iters; ++iter) {
    std::fill(dist.begin(), dist.end(), std::numeric_limits<double>::infinity());
    std::vector<std::int32_t> next = labels;
    for (std::size_t k = 0; k < centers.size(); ++k) {
      const Center& ck = centers[k];
      const int r0 = std::max(0, static_cast<int>(std::floor(ck.y)) - radius_y);
      const int r1 = std::min(h, static_cast<int>(std::floor(ck.y)) + radius_y + 1);
      const int c0 = std::max(0, static_cast<int>(std::floor(ck.x)) - radius_x);
      const int c1 = std::min(w, static_cast<int>(std::floor(ck.x)) + radius_x + 1);
      for (int r = r0; r < r1; ++r) {
        for (int c = c0; c < c1; ++c) {
          const std::size_t p = static_cast<std::size_t>(r) * w + c;
          double dc = 0.0;
          for (int ch = 0; ch < channels; ++ch) {
            const double d = x[p * channels + ch] - ck.color[ch];
            dc += d * d;
          }
          const double dy = (r + 0.5) - ck.y, dx = (c + 0.5) - ck.x;
          const double d2 = dc + (dy * dy + dx * dx) * spatial;
          if (d2 < dist[p]) {
            dist[p] = d2;
            next[p] = static_cast<std::int32_t>(k);
          }
        }
      }
    }
    const bool changed = next != labels;
    labels = std::move(next);

    std::vector<double> sum_y(centers.size(), 0.0), sum_x(centers.size(), 0.0);
    std::vector<double> sum_color(centers.size() * channels, 0.0);
    std::vector<std::size_t> count(centers.size(), 0);
    for (int r = 0; r < h; ++r) {
      for (int c = 0; c < w; ++c) {
        const std::size_t p = static_cast<std::size_t>(r) * w + c;
        const std::size_t k = labels[p];
        sum_y[k] += r + 0.5;
        sum_x[k] += c + 0.5;
        for (int ch = 0; ch < channels; ++ch) sum_color[k * channels + ch] += x[p * channels + ch];
        ++count[k];
      }
    }
    for (std::size_t k = 0; k < centers.size(); ++k) {
      if (count[k] == 0) continue;
      const double inv = 1.0 / static_cast<double>(count[k]);
      centers[k].y = sum_y[k] * inv;
      centers[k].x = sum_x[k] * inv;
      for (int ch = 0; ch < channels; ++ch) centers[k].color[ch] = sum_color[k * channels + ch] * inv;
    }
    if (!changed) break;
  }

  if (params.enforce_connectivity) {
    const std::size_t min_size = pixels / static_cast<std::size_t>(m) / 4;
    labels = enforce_connectivity(h, w, labels, min_size);
  }
  int count = 0;
  auto compact = compact_labels(labels, &count);
  return Segmentation(h, w, std::move(compact), count);
}

Segmentation grid_segment(int height, int width, int rows, int cols) {
  if (rows < 1 || cols < 1) throw Error(ErrorCode::kInvalidArgument, "grid needs rows, cols >= 1");
  if (rows > height || cols > width) {
    throw Error(ErrorCode::kTooManySegments, "grid finer than the image");
  }
  std::vector<std::int32_t> labels(static_cast<std::size_t>(height) * width);
  for (int r = 0; r < height; ++r) {
    // Cell i spans [floor(i*H/rows), floor((i+1)*H/rows)).
    const int i = std::min(rows - 1, static_cast<int>((static_cast<long>(r + 1) * rows - 1) / height));
    for (int c = 0; c < width; ++c) {
      const int j = std::min(cols - 1, static_cast<int>((static_cast<long>(c + 1) * cols - 1) / width));
      labels[static_cast<std::size_t>(r) * width + c] = i * cols + j;
    }
  }
  return Segmentation(height, width, std::move(labels), rows * cols);
}

Segmentation grid_segment(const Image& image, int rows, int cols) {
  return grid_segment(image.height(), image.width(), rows, cols);
}

SegmentStats segment_stats(const Segmentation& seg) {
  SegmentStats stats;
  const int m = seg.num_segments();
  stats.counts.assign(m, 0);
  stats.boxes.assign(m, SegmentBox{seg.height(), seg.width(), -1, -1});
  for (int r = 0; r < seg.height(); ++r) {
    for (int c = 0; c < seg.width(); ++c) {
      const int l = seg.label(r, c);
      ++stats.counts[l];
      auto& b = stats.boxes[l];
      b.row_min = std::min(b.row_min, r);
      b.col_min = std::min(b.col_min, c);
      b.row_max = std::max(b.row_max, r);
      b.col_max = std::max(b.col_max, c);
    }
  }
  return stats;
}

bool is_four_connected(const Segmentation& seg) {
  std::vector<std::int32_t> labels(seg.labels().begin(), seg.labels().end());
  std::vector<std::size_t> sizes;
  label_components(seg.height(), seg.width(), labels, sizes);
  return sizes.size() == static_cast<std::size_t>(seg.num_segments());
}

std::string segmentation_to_csv(const Segmentation& seg) {
  std::ostringstream out;
  out << "row,col,label\n";
  for (int r = 0; r < seg.height(); ++r) {
    for (int c = 0; c < seg.width(); ++c) out << r << ',' << c << ',' << seg.label(r, c) << '\n';
  }
  return out.str();
}

Segmentation segmentation_from_csv(const std::string& text) {
  const auto rows = parse_csv(text);
  if (rows.empty() || rows.front() != std::vector<std::string>{"row", "col", "label"}) {
    throw Error(ErrorCode::kParseError, "segmentation CSV needs header row,col,label");
  }
  struct Entry {
    int r, c;
    std::int32_t l;
  };
  std::vector<Entry> entries;
  int h = 0, w = 0;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].size() != 3) throw Error(ErrorCode::kParseError, "segmentation CSV row width");
    Entry e{parse_int(rows[i][0]), parse_int(rows[i][1]), parse_int(rows[i][2])};
    if (e.r < 0 || e.c < 0) throw Error(ErrorCode::kParseError, "negative coordinate");
    h = std::max(h, e.r + 1);
    w = std::max(w, e.c + 1);
    entries.push_back(e);
  }
  if (entries.size() != static_cast<std::size_t>(h) * w) {
    throw Error(ErrorCode::kParseError, "segmentation CSV does not cover the raster");
  }
  std::vector<std::int32_t> labels(entries.size(), -1);
  for (const auto& e : entries) labels[static_cast<std::size_t>(e.r) * w + e.c] = e.l;
  return Segmentation::from_labels(h, w, std::move(labels));
}

void write_segmentation_png(const std::string& path, const Segmentation& seg) {
  RgbaImage out(seg.height(), seg.width());
  for (int r = 0; r < seg.height(); ++r) {
    for (int c = 0; c < seg.width(); ++c) {
      // Hash labels to well-separated colours.
      const std::uint64_t hsh = CounterRng::mix64(static_cast<std::uint64_t>(seg.label(r, c)));
      out.set(r, c, static_cast<std::uint8_t>(hsh), static_cast<std::uint8_t>(hsh >> 8),
              static_cast<std::uint8_t>(hsh >> 16), 255);
    }
  }
  write_png(path, out);
}

}  // namespace e2x
