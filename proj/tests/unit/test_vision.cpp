#include <gtest/gtest.h>

#include <cmath>

#include "deform/vision.hpp"

using namespace deform;
using namespace deform::vision;

namespace {

BinaryImage rect(int w, int h, int c0, int r0, int c1, int r1) {
  BinaryImage img(w, h);
  for (int r = r0; r <= r1; ++r)
    for (int c = c0; c <= c1; ++c) img.set(c, r, 1);
  return img;
}

}  // namespace

TEST(Thinning, BarBecomesOnePixelLine) {
  BinaryImage img = rect(60, 20, 5, 5, 54, 11);
  thin(img);
  ASSERT_GT(img.count(), 0u);
  int endpoints = 0;
  for (int r = 0; r < img.height; ++r)
    for (int c = 0; c < img.width; ++c) {
      if (!img.get(c, r)) continue;
      EXPECT_LE(neighbour_count(img, c, r), 2);
      endpoints += neighbour_count(img, c, r) == 1;
    }
  EXPECT_EQ(endpoints, 2);
}

TEST(Thinning, RingKeepsItsHole) {
  BinaryImage img = rect(40, 40, 5, 5, 34, 34);
  for (int r = 12; r <= 27; ++r)
    for (int c = 12; c <= 27; ++c) img.set(c, r, 0);
  thin(img);
  EXPECT_EQ(count_holes(img), 1);
}

TEST(CrossingNumber, EndpointLineAndJunction) {
  BinaryImage img(7, 7);
  for (int c = 1; c <= 5; ++c) img.set(c, 3, 1);
  EXPECT_EQ(crossing_number(img, 1, 3), 1);
  EXPECT_EQ(crossing_number(img, 3, 3), 2);
  for (int r = 0; r <= 2; ++r) img.set(3, r, 1);
  EXPECT_EQ(crossing_number(img, 3, 3), 3);
}

TEST(Components, EightConnectivity) {
  BinaryImage img(5, 5);
  img.set(0, 0, 1);
  img.set(1, 1, 1);  // diagonal neighbour: same component
  img.set(4, 4, 1);
  int n = 0;
  const auto labels = label_components(img, n);
  EXPECT_EQ(n, 2);
  EXPECT_EQ(labels[img.index(0, 0)], labels[img.index(1, 1)]);
  EXPECT_NE(labels[img.index(0, 0)], labels[img.index(4, 4)]);
}

TEST(Holes, BorderTouchingBackgroundIsNotAHole) {
  BinaryImage img = rect(10, 10, 0, 0, 9, 9);
  img.set(0, 5, 0);  // notch on the border
  EXPECT_EQ(count_holes(img), 0);
  img.set(5, 5, 0);
  EXPECT_EQ(count_holes(img), 1);
}

TEST(Boundary, RectangleContourLengthAndCorners) {
  const BinaryImage img = rect(40, 30, 10, 5, 29, 14);  // 20 x 10
  const auto contour = trace_boundary(img, {10, 5});
  EXPECT_EQ(contour.size(), 2u * (19 + 9));
  EXPECT_NEAR(closed_length(contour), 2.0 * (19 + 9), 1e-9);
  const auto idx = simplify_closed(contour, 1.0);
  EXPECT_EQ(idx.size(), 4u);
}

TEST(Boundary, SinglePixel) {
  BinaryImage img(3, 3);
  img.set(1, 1, 1);
  const auto contour = trace_boundary(img, {1, 1});
  EXPECT_EQ(contour.size(), 1u);
}

TEST(Hull, SquareWithInteriorPoints) {
  const auto hull = convex_hull({{0, 0}, {2, 0}, {2, 2}, {0, 2}, {1, 1}, {1, 0}});
  EXPECT_EQ(hull.size(), 4u);
  EXPECT_DOUBLE_EQ(std::abs(polygon_area(hull)), 4.0);
}

TEST(Crop, PadsWithBackground) {
  const BinaryImage img = rect(50, 50, 20, 20, 24, 29);
  const Box b = bounding_box(img);
  EXPECT_EQ(b.col0, 20);
  EXPECT_EQ(b.row1, 29);
  const BinaryImage c = crop(img, b, 2);
  EXPECT_EQ(c.width, 5 + 4);
  EXPECT_EQ(c.height, 10 + 4);
  EXPECT_EQ(c.count(), img.count());
  EXPECT_EQ(c.get(0, 0), 0);
}
