#pragma once

// Small binary-image toolkit used by the recognizers: thinning, connected
// components, boundary tracing and polygon utilities.

#include <cstdint>
#include <vector>

#include "deform/geometry.hpp"

namespace deform::vision {

struct BinaryImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;  // 0 or 1

  BinaryImage() = default;
  BinaryImage(int w, int h) : width(w), height(h), data(static_cast<std::size_t>(w) * h, 0) {}

  bool inside(int col, int row) const { return col >= 0 && row >= 0 && col < width && row < height; }
  std::uint8_t get(int col, int row) const { return inside(col, row) ? data[index(col, row)] : 0; }
  void set(int col, int row, std::uint8_t v) { data[index(col, row)] = v; }
  std::size_t index(int col, int row) const { return static_cast<std::size_t>(row) * width + col; }
  std::size_t count() const;
};

struct Box {
  int col0 = 0, row0 = 0, col1 = -1, row1 = -1;  // inclusive
  bool empty() const { return col1 < col0; }
};

Box bounding_box(const BinaryImage& img);
/// Copy of `box` grown by `pad` pixels of background on every side.
BinaryImage crop(const BinaryImage& img, const Box& box, int pad);

/// Two-subiteration Zhang-Suen thinning, in place.
void thin(BinaryImage& img);

/// Number of 0 -> 1 transitions around the 8-neighbourhood ring.
int crossing_number(const BinaryImage& img, int col, int row);
int neighbour_count(const BinaryImage& img, int col, int row);

/// 8-connected component labels (0 = background, 1.. in raster order of first pixel).
std::vector<int> label_components(const BinaryImage& img, int& count);

/// Number of background regions (4-connected) that do not touch the image border.
int count_holes(const BinaryImage& img);

/// Outer boundary of the component containing `start` (its raster-first pixel),
/// traced clockwise in image coordinates with Moore-neighbour following.
std::vector<PixelIndex> trace_boundary(const BinaryImage& img, PixelIndex start);

double closed_length(const std::vector<PixelIndex>& contour);

/// Douglas-Peucker on a closed contour; returns indices into `contour`.
std::vector<std::size_t> simplify_closed(const std::vector<PixelIndex>& contour, double epsilon);

std::vector<Pixel> convex_hull(std::vector<Pixel> points);
double polygon_area(const std::vector<Pixel>& polygon);

}  // namespace deform::vision
