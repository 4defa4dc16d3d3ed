#include "deform/scene.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>

#include "deform/kernels.hpp"
#include "deform/rng.hpp"

namespace deform::scene {
namespace {

constexpr float kInf = std::numeric_limits<float>::infinity();

void draw_disc(Observation& obs, const Pixel& center, double radius_px, double center_depth) {
  const Calibration& c = obs.calib;
  const auto& k = kernels::active();
  const double r2 = radius_px * radius_px;
  const int row_lo = std::max(0, static_cast<int>(std::ceil(center.v - radius_px)));
  const int row_hi = std::min(c.height - 1, static_cast<int>(std::floor(center.v + radius_px)));
  for (int row = row_lo; row <= row_hi; ++row) {
    const double dv = row - center.v;
    const double rem = r2 - dv * dv;
    if (rem < 0.0) continue;
    const double hw = std::sqrt(rem);
    const int c0 = std::max(0, static_cast<int>(std::ceil(center.u - hw)));
    const int c1 = std::min(c.width, static_cast<int>(std::floor(center.u + hw)) + 1);
    if (c0 >= c1) continue;
    kernels::DiscRow disc{static_cast<float>(center.u),
                          static_cast<float>(dv * dv),
                          static_cast<float>(r2),
                          static_cast<float>(1.0 / (c.scale * c.scale)),
                          static_cast<float>(center_depth),
                          c0,
                          c1};
    const std::size_t offset = obs.index(0, row);
    k.disc_row(std::span<float>(obs.depth.data() + offset, c.width),
               std::span<std::uint8_t>(obs.mask.data() + offset, c.width), disc);
  }
}

struct ProjectedVertex {
  Pixel px;
  double depth;
};

void draw_triangle(Observation& obs, const ProjectedVertex& a, const ProjectedVertex& b, const ProjectedVertex& c) {
  const double area = (b.px.u - a.px.u) * (c.px.v - a.px.v) - (b.px.v - a.px.v) * (c.px.u - a.px.u);
  if (std::abs(area) < 1e-9) return;
  const Calibration& cal = obs.calib;
  const int c0 = std::max(0, static_cast<int>(std::ceil(std::min({a.px.u, b.px.u, c.px.u}))));
  const int c1 = std::min(cal.width - 1, static_cast<int>(std::floor(std::max({a.px.u, b.px.u, c.px.u}))));
  const int r0 = std::max(0, static_cast<int>(std::ceil(std::min({a.px.v, b.px.v, c.px.v}))));
  const int r1 = std::min(cal.height - 1, static_cast<int>(std::floor(std::max({a.px.v, b.px.v, c.px.v}))));
  const double inv = 1.0 / area;
  for (int row = r0; row <= r1; ++row) {
    for (int col = c0; col <= c1; ++col) {
      const double w0 = ((b.px.u - col) * (c.px.v - row) - (b.px.v - row) * (c.px.u - col)) * inv;
      const double w1 = ((c.px.u - col) * (a.px.v - row) - (c.px.v - row) * (a.px.u - col)) * inv;
      const double w2 = 1.0 - w0 - w1;
      if (w0 < -1e-9 || w1 < -1e-9 || w2 < -1e-9) continue;
      const float depth = static_cast<float>(w0 * a.depth + w1 * b.depth + w2 * c.depth);
      const std::size_t i = obs.index(col, row);
      if (depth < obs.depth[i]) {
        obs.depth[i] = depth;
        obs.mask[i] = 1;
      }
    }
  }
}

void render_rope(Observation& obs, const sim::ObjectState& state) {
  const Calibration& c = obs.calib;
  const double radius_px = state.topology->contact_radius * c.scale;
  const auto& p = state.positions;
  if (p.size() == 1) {
    draw_disc(obs, c.project(p[0]), radius_px, c.camera_height - p[0].z);
    return;
  }
  for (std::size_t i = 0; i + 1 < p.size(); ++i) {
    const int last = (i + 2 == p.size()) ? kRopeInterpolants : kRopeInterpolants - 1;
    for (int k = 0; k <= last; ++k) {
      const double t = static_cast<double>(k) / kRopeInterpolants;
      const Vec3 q = p[i] + (p[i + 1] - p[i]) * t;
      draw_disc(obs, c.project(q), radius_px, c.camera_height - q.z);
    }
  }
}

void render_cloth(Observation& obs, const sim::ObjectState& state) {
  const Calibration& c = obs.calib;
  const sim::Topology& t = *state.topology;
  std::vector<ProjectedVertex> v(state.size());
  for (std::size_t i = 0; i < state.size(); ++i) {
    v[i] = {c.project(state.positions[i]), c.camera_height - state.positions[i].z};
  }
  for (int r = 0; r + 1 < t.rows; ++r) {
    for (int k = 0; k + 1 < t.cols; ++k) {
      const auto& p00 = v[t.grid_index(r, k)];
      const auto& p01 = v[t.grid_index(r, k + 1)];
      const auto& p10 = v[t.grid_index(r + 1, k)];
      const auto& p11 = v[t.grid_index(r + 1, k + 1)];
      draw_triangle(obs, p00, p01, p11);
      draw_triangle(obs, p00, p11, p10);
    }
  }
}

void apply_edge_noise(Observation& obs, const RenderOptions& options) {
  Rng rng(options.noise_seed);
  const int w = obs.width();
  const int h = obs.height();
  const auto original = obs.mask;
  const auto original_depth = obs.depth;
  auto at = [&](int col, int row) { return original[obs.index(col, row)] != 0; };
  for (int row = 1; row + 1 < h; ++row) {
    for (int col = 1; col + 1 < w; ++col) {
      const bool self = at(col, row);
      const bool boundary = at(col - 1, row) != self || at(col + 1, row) != self || at(col, row - 1) != self ||
                            at(col, row + 1) != self;
      if (!boundary) continue;
      if (std::abs(rng.normal(0.0, options.edge_noise_sigma)) <= 1.0) continue;
      const std::size_t i = obs.index(col, row);
      if (self) {
        obs.mask[i] = 0;
        obs.depth[i] = kInf;
      } else {
        float best = kInf;
        for (auto [dc, dr] : {std::pair{-1, 0}, std::pair{1, 0}, std::pair{0, -1}, std::pair{0, 1}}) {
          best = std::min(best, original_depth[obs.index(col + dc, row + dr)]);
        }
        obs.mask[i] = 1;
        obs.depth[i] = best;
      }
    }
  }
}

}  // namespace

Calibration Calibration::standard() {
  Calibration c;
  c.scale = 1500.0;
  c.width = 900;
  c.height = 900;
  const double half = sim::constants::kWorkspaceHalfExtent;
  c.origin_x = -half + 0.5 / c.scale;
  c.origin_y = half - 0.5 / c.scale;
  c.camera_height = 0.5;
  return c;
}

std::size_t Observation::mask_area() const { return kernels::active().count_nonzero(mask); }

Observation render(const sim::ObjectState& state, const Calibration& calib, const RenderOptions& options) {
  Observation obs;
  obs.calib = calib;
  const std::size_t n = static_cast<std::size_t>(calib.width) * calib.height;
  obs.mask.assign(n, 0);
  obs.depth.assign(n, kInf);
  if (state.kind() == sim::ObjectKind::Rope) {
    render_rope(obs, state);
  } else {
    render_cloth(obs, state);
  }
  if (options.edge_noise_sigma > 0.0) apply_edge_noise(obs, options);
  return obs;
}

Vec3 backproject(const PixelIndex& pixel, const Observation& obs) {
  if (!obs.calib.contains(pixel)) throw OffMask("pixel outside the image");
  if (!obs.on_mask(pixel)) {
    throw OffMask("no depth at pixel (" + std::to_string(pixel.col) + ", " + std::to_string(pixel.row) + ")");
  }
  const double z = obs.calib.camera_height - obs.depth_at(pixel);
  return obs.calib.unproject(to_pixel(pixel), z);
}

double mask_iou(const Observation& a, const Observation& b) {
  if (a.mask.size() != b.mask.size()) throw std::invalid_argument("mask_iou: resolution mismatch");
  const auto& k = kernels::active();
  const std::size_t uni = k.count_either(a.mask, b.mask);
  if (uni == 0) return 1.0;
  return static_cast<double>(k.count_both(a.mask, b.mask)) / static_cast<double>(uni);
}

void write_pgm(std::ostream& out, const GrayImage& image) {
  out << "P5\n" << image.width << ' ' << image.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(image.pixels.data()), static_cast<std::streamsize>(image.pixels.size()));
}

std::string encode_pgm(const GrayImage& image) {
  std::ostringstream out;
  write_pgm(out, image);
  return out.str();
}

GrayImage mask_image(const Observation& obs) {
  GrayImage img{obs.width(), obs.height(), std::vector<std::uint8_t>(obs.mask.size())};
  std::transform(obs.mask.begin(), obs.mask.end(), img.pixels.begin(),
                 [](std::uint8_t m) { return static_cast<std::uint8_t>(m ? 255 : 0); });
  return img;
}

void write_mask_pgm(std::ostream& out, const Observation& obs) { write_pgm(out, mask_image(obs)); }

void write_depth_pgm(std::ostream& out, const Observation& obs) {
  out << "P5\n" << obs.width() << ' ' << obs.height() << "\n65535\n";
  std::string row;
  row.reserve(obs.depth.size() * 2);
  for (float d : obs.depth) {
    const double clamped = std::clamp(static_cast<double>(d), 0.0, kDepthPgmRange);
    const auto v = static_cast<std::uint16_t>(std::lround(clamped / kDepthPgmRange * 65535.0));
    row.push_back(static_cast<char>(v >> 8));
    row.push_back(static_cast<char>(v & 0xff));
  }
  out.write(row.data(), static_cast<std::streamsize>(row.size()));
}

}  // namespace deform::scene
