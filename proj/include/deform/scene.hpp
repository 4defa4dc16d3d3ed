#pragma once

// Synthetic top-down orthographic camera. The camera looks straight down from
// `camera_height`; depth is the camera distance, so "closest to the camera"
// means "highest z".

#include <cmath>
#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "deform/geometry.hpp"
#include "deform/sim.hpp"

namespace deform::scene {

struct Calibration {
  double scale = 1500.0;  // px per meter; 30 px ~ 2 cm
  double origin_x = 0.0;  // world coordinates of the center of pixel (0, 0)
  double origin_y = 0.0;
  int width = 900;
  int height = 900;
  double camera_height = 0.5;

  /// 900 x 900 px over the 0.6 m table, centered at the world origin.
  static Calibration standard();

  Pixel project(const Vec3& p) const {
    return {(p.x - origin_x) * scale, (origin_y - p.y) * scale};
  }
  Vec3 unproject(const Pixel& px, double z) const {
    return {origin_x + px.u / scale, origin_y - px.v / scale, z};
  }
  bool contains(const PixelIndex& p) const { return p.col >= 0 && p.row >= 0 && p.col < width && p.row < height; }
  PixelIndex nearest_index(const Pixel& p) const {
    return {static_cast<int>(std::lround(p.u)), static_cast<int>(std::lround(p.v))};
  }
};

struct Observation {
  Calibration calib;
  std::vector<std::uint8_t> mask;  // 1 = object
  std::vector<float> depth;        // camera distance in meters; +inf off the mask

  int width() const { return calib.width; }
  int height() const { return calib.height; }
  std::size_t index(int col, int row) const { return static_cast<std::size_t>(row) * calib.width + col; }
  bool on_mask(const PixelIndex& p) const { return calib.contains(p) && mask[index(p.col, p.row)] != 0; }
  float depth_at(const PixelIndex& p) const { return depth[index(p.col, p.row)]; }
  std::size_t mask_area() const;
  bool empty() const { return mask_area() == 0; }
};

struct RenderOptions {
  /// When > 0, every mask-boundary pixel draws n ~ N(0, sigma) and flips if |n| > 1.
  double edge_noise_sigma = 0.0;
  std::uint64_t noise_seed = 0;
};

inline constexpr int kRopeInterpolants = 8;

Observation render(const sim::ObjectState& state, const Calibration& calib, const RenderOptions& options = {});

class OffMask : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// World point seen at `pixel`; z comes from the depth buffer. Throws OffMask.
Vec3 backproject(const PixelIndex& pixel, const Observation& obs);

double mask_iou(const Observation& a, const Observation& b);

/// Binary PGM (P5), maxval 255: object 255, background 0.
void write_mask_pgm(std::ostream& out, const Observation& obs);
/// Binary PGM (P5), maxval 65535: depth linearly scaled over 0-0.5 m, background saturates.
void write_depth_pgm(std::ostream& out, const Observation& obs);
/// 8-bit grayscale raster with a PGM encoder.
struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;
  std::uint8_t& at(int col, int row) { return pixels[static_cast<std::size_t>(row) * width + col]; }
  std::uint8_t at(int col, int row) const { return pixels[static_cast<std::size_t>(row) * width + col]; }
};
void write_pgm(std::ostream& out, const GrayImage& image);
std::string encode_pgm(const GrayImage& image);
GrayImage mask_image(const Observation& obs);

inline constexpr double kDepthPgmRange = 0.5;

}  // namespace deform::scene
