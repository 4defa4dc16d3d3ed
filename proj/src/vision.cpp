#include "deform/vision.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

namespace deform::vision {
namespace {

// Ring order P2..P9 starting north, clockwise (image rows grow downward).
constexpr std::array<int, 8> kRingCol = {0, 1, 1, 1, 0, -1, -1, -1};
constexpr std::array<int, 8> kRingRow = {-1, -1, 0, 1, 1, 1, 0, -1};

double perpendicular_distance(const PixelIndex& p, const PixelIndex& a, const PixelIndex& b) {
  const double dx = b.col - a.col;
  const double dy = b.row - a.row;
  const double len = std::hypot(dx, dy);
  if (len == 0.0) return std::hypot(p.col - a.col, p.row - a.row);
  return std::abs(dy * (p.col - a.col) - dx * (p.row - a.row)) / len;
}

void simplify_open(const std::vector<PixelIndex>& c, std::size_t first, std::size_t last, double eps,
                   std::vector<std::size_t>& keep) {
  // Iterative to avoid deep recursion on long contours.
  std::vector<std::pair<std::size_t, std::size_t>> stack{{first, last}};
  while (!stack.empty()) {
    auto [a, b] = stack.back();
    stack.pop_back();
    if (b <= a + 1) continue;
    double best = -1.0;
    std::size_t at = a;
    for (std::size_t i = a + 1; i < b; ++i) {
      const double d = perpendicular_distance(c[i], c[a], c[b % c.size()]);
      if (d > best) {
        best = d;
        at = i;
      }
    }
    if (best > eps) {
      keep.push_back(at);
      stack.emplace_back(a, at);
      stack.emplace_back(at, b);
    }
  }
}

}  // namespace

std::size_t BinaryImage::count() const {
  return static_cast<std::size_t>(std::count_if(data.begin(), data.end(), [](std::uint8_t v) { return v != 0; }));
}

Box bounding_box(const BinaryImage& img) {
  Box box{img.width, img.height, -1, -1};
  for (int row = 0; row < img.height; ++row) {
    for (int col = 0; col < img.width; ++col) {
      if (!img.data[img.index(col, row)]) continue;
      box.col0 = std::min(box.col0, col);
      box.col1 = std::max(box.col1, col);
      box.row0 = std::min(box.row0, row);
      box.row1 = std::max(box.row1, row);
    }
  }
  if (box.col1 < 0) return Box{};
  return box;
}

BinaryImage crop(const BinaryImage& img, const Box& box, int pad) {
  BinaryImage out(box.col1 - box.col0 + 1 + 2 * pad, box.row1 - box.row0 + 1 + 2 * pad);
  for (int row = box.row0; row <= box.row1; ++row) {
    for (int col = box.col0; col <= box.col1; ++col) {
      out.set(col - box.col0 + pad, row - box.row0 + pad, img.get(col, row));
    }
  }
  return out;
}

int crossing_number(const BinaryImage& img, int col, int row) {
  int transitions = 0;
  for (int k = 0; k < 8; ++k) {
    const int n = (k + 1) % 8;
    if (!img.get(col + kRingCol[k], row + kRingRow[k]) && img.get(col + kRingCol[n], row + kRingRow[n])) {
      ++transitions;
    }
  }
  return transitions;
}

int neighbour_count(const BinaryImage& img, int col, int row) {
  int n = 0;
  for (int k = 0; k < 8; ++k) n += img.get(col + kRingCol[k], row + kRingRow[k]) ? 1 : 0;
  return n;
}

void thin(BinaryImage& img) {
  std::vector<std::size_t> doomed;
  bool changed = true;
  while (changed) {
    changed = false;
    for (int pass = 0; pass < 2; ++pass) {
      doomed.clear();
      for (int row = 0; row < img.height; ++row) {
        for (int col = 0; col < img.width; ++col) {
          if (!img.data[img.index(col, row)]) continue;
          const int b = neighbour_count(img, col, row);
          if (b < 2 || b > 6) continue;
          if (crossing_number(img, col, row) != 1) continue;
          const bool p2 = img.get(col, row - 1);
          const bool p4 = img.get(col + 1, row);
          const bool p6 = img.get(col, row + 1);
          const bool p8 = img.get(col - 1, row);
          if (pass == 0) {
            if (p2 && p4 && p6) continue;
            if (p4 && p6 && p8) continue;
          } else {
            if (p2 && p4 && p8) continue;
            if (p2 && p6 && p8) continue;
          }
          doomed.push_back(img.index(col, row));
        }
      }
      for (std::size_t i : doomed) img.data[i] = 0;
      changed = changed || !doomed.empty();
    }
  }
}

std::vector<int> label_components(const BinaryImage& img, int& count) {
  std::vector<int> labels(img.data.size(), 0);
  std::vector<std::size_t> stack;
  count = 0;
  for (std::size_t seed = 0; seed < img.data.size(); ++seed) {
    if (!img.data[seed] || labels[seed]) continue;
    ++count;
    labels[seed] = count;
    stack.push_back(seed);
    while (!stack.empty()) {
      const std::size_t i = stack.back();
      stack.pop_back();
      const int col = static_cast<int>(i % img.width);
      const int row = static_cast<int>(i / img.width);
      for (int k = 0; k < 8; ++k) {
        const int c = col + kRingCol[k];
        const int r = row + kRingRow[k];
        if (!img.inside(c, r)) continue;
        const std::size_t j = img.index(c, r);
        if (img.data[j] && !labels[j]) {
          labels[j] = count;
          stack.push_back(j);
        }
      }
    }
  }
  return labels;
}

int count_holes(const BinaryImage& img) {
  std::vector<std::uint8_t> seen(img.data.size(), 0);
  std::vector<std::size_t> stack;
  int holes = 0;
  constexpr std::array<int, 4> dc = {1, -1, 0, 0};
  constexpr std::array<int, 4> dr = {0, 0, 1, -1};
  for (std::size_t seed = 0; seed < img.data.size(); ++seed) {
    if (img.data[seed] || seen[seed]) continue;
    bool touches_border = false;
    seen[seed] = 1;
    stack.push_back(seed);
    while (!stack.empty()) {
      const std::size_t i = stack.back();
      stack.pop_back();
      const int col = static_cast<int>(i % img.width);
      const int row = static_cast<int>(i / img.width);
      if (col == 0 || row == 0 || col == img.width - 1 || row == img.height - 1) touches_border = true;
      for (int k = 0; k < 4; ++k) {
        const int c = col + dc[k];
        const int r = row + dr[k];
        if (!img.inside(c, r)) continue;
        const std::size_t j = img.index(c, r);
        if (!img.data[j] && !seen[j]) {
          seen[j] = 1;
          stack.push_back(j);
        }
      }
    }
    if (!touches_border) ++holes;
  }
  return holes;
}

std::vector<PixelIndex> trace_boundary(const BinaryImage& img, PixelIndex start) {
  auto direction_of = [](int dc, int dr) {
    for (int k = 0; k < 8; ++k) {
      if (kRingCol[k] == dc && kRingRow[k] == dr) return k;
    }
    return 0;
  };
  // Moore-neighbour following. `start` is raster-first, so its west neighbour is background.
  auto advance = [&](PixelIndex current, int backtrack, PixelIndex& next, int& next_backtrack) {
    for (int k = 1; k <= 8; ++k) {
      const int d = (backtrack + k) % 8;
      const PixelIndex cand{current.col + kRingCol[d], current.row + kRingRow[d]};
      if (img.get(cand.col, cand.row)) {
        const int prev = (d + 7) % 8;
        const PixelIndex bt{current.col + kRingCol[prev], current.row + kRingRow[prev]};
        next = cand;
        next_backtrack = direction_of(bt.col - cand.col, bt.row - cand.row);
        return true;
      }
    }
    return false;
  };

  std::vector<PixelIndex> contour{start};
  PixelIndex current = start;
  int backtrack = 6;
  PixelIndex next;
  int next_backtrack = 0;
  if (!advance(current, backtrack, next, next_backtrack)) return contour;
  const PixelIndex second = next;
  const std::size_t limit = img.data.size() * 4 + 8;
  for (std::size_t guard = 0; guard < limit; ++guard) {
    current = next;
    backtrack = next_backtrack;
    advance(current, backtrack, next, next_backtrack);
    if (current == start && next == second) break;
    contour.push_back(current);
  }
  return contour;
}

double closed_length(const std::vector<PixelIndex>& c) {
  double total = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i) {
    const PixelIndex& a = c[i];
    const PixelIndex& b = c[(i + 1) % c.size()];
    total += std::hypot(static_cast<double>(b.col - a.col), static_cast<double>(b.row - a.row));
  }
  return total;
}

std::vector<std::size_t> simplify_closed(const std::vector<PixelIndex>& c, double epsilon) {
  if (c.size() < 3) {
    std::vector<std::size_t> all(c.size());
    std::iota(all.begin(), all.end(), 0);
    return all;
  }
  // Anchor at index 0 and the contour point farthest from it.
  std::size_t far = 0;
  double best = -1.0;
  for (std::size_t i = 1; i < c.size(); ++i) {
    const double d = std::hypot(static_cast<double>(c[i].col - c[0].col), static_cast<double>(c[i].row - c[0].row));
    if (d > best) {
      best = d;
      far = i;
    }
  }
  std::vector<std::size_t> keep{0, far};
  simplify_open(c, 0, far, epsilon, keep);
  simplify_open(c, far, c.size(), epsilon, keep);
  std::sort(keep.begin(), keep.end());
  keep.erase(std::unique(keep.begin(), keep.end()), keep.end());
  return keep;
}

std::vector<Pixel> convex_hull(std::vector<Pixel> pts) {
  std::sort(pts.begin(), pts.end(), [](const Pixel& a, const Pixel& b) { return a.u < b.u || (a.u == b.u && a.v < b.v); });
  pts.erase(std::unique(pts.begin(), pts.end(), [](const Pixel& a, const Pixel& b) { return a.u == b.u && a.v == b.v; }),
            pts.end());
  if (pts.size() < 3) return pts;
  auto cross = [](const Pixel& o, const Pixel& a, const Pixel& b) {
    return (a.u - o.u) * (b.v - o.v) - (a.v - o.v) * (b.u - o.u);
  };
  std::vector<Pixel> hull(2 * pts.size());
  std::size_t k = 0;
  for (const auto& p : pts) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= 0) --k;
    hull[k++] = p;
  }
  for (std::size_t i = pts.size() - 1, lower = k + 1; i-- > 0;) {
    while (k >= lower && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  return hull;
}

double polygon_area(const std::vector<Pixel>& poly) {
  double twice = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Pixel& a = poly[i];
    const Pixel& b = poly[(i + 1) % poly.size()];
    twice += a.u * b.v - b.u * a.v;
  }
  return std::abs(twice) * 0.5;
}

}  // namespace deform::vision
