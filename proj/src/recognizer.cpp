#include "deform/recognizer.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "deform/vision.hpp"

namespace deform::recognizer {
namespace {

using vision::BinaryImage;

constexpr std::array<int, 8> kDc = {0, 1, 1, 1, 0, -1, -1, -1};
constexpr std::array<int, 8> kDr = {-1, -1, 0, 1, 1, 1, 0, -1};
constexpr double kSqrt2 = 1.4142135623730951;

BinaryImage mask_of(const scene::Observation& obs) {
  BinaryImage img(obs.width(), obs.height());
  img.data = obs.mask;
  return img;
}

bool is_endpoint(const BinaryImage& img, int col, int row) {
  return img.get(col, row) && vision::crossing_number(img, col, row) == 1;
}

bool is_branch(const BinaryImage& img, int col, int row) {
  return img.get(col, row) && vision::crossing_number(img, col, row) >= 3;
}

// Walk from an endpoint; if a branch pixel is reached within `limit` pixels, erase the walked spur.
bool prune_spur_from(BinaryImage& img, PixelIndex end, int limit) {
  std::vector<PixelIndex> path{end};
  PixelIndex cur = end;
  while (static_cast<int>(path.size()) <= limit) {
    PixelIndex next{-1, -1};
    // Orthogonal steps first so the walk hugs the skeleton.
    for (int pass = 0; pass < 2 && next.col < 0; ++pass) {
      for (int k = pass; k < 8; k += 2) {
        const PixelIndex cand{cur.col + kDc[k], cur.row + kDr[k]};
        if (!img.get(cand.col, cand.row)) continue;
        if (std::find(path.begin(), path.end(), cand) != path.end()) continue;
        next = cand;
        break;
      }
    }
    if (next.col < 0) return false;  // isolated fragment, not a spur
    if (is_branch(img, next.col, next.row)) {
      for (const auto& p : path) img.set(p.col, p.row, 0);
      return true;
    }
    path.push_back(next);
    cur = next;
  }
  return false;
}

void prune_spurs(BinaryImage& img, int limit) {
  for (int round = 0; round < 4; ++round) {
    bool changed = false;
    for (int row = 0; row < img.height; ++row) {
      for (int col = 0; col < img.width; ++col) {
        if (is_endpoint(img, col, row)) changed = prune_spur_from(img, {col, row}, limit) || changed;
      }
    }
    if (!changed) break;
  }
}

int drop_small_components(BinaryImage& img, int min_pixels) {
  int count = 0;
  const auto labels = vision::label_components(img, count);
  std::vector<int> sizes(count + 1, 0);
  for (int l : labels) ++sizes[l];
  int kept = 0;
  for (int l = 1; l <= count; ++l) kept += sizes[l] >= min_pixels ? 1 : 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] && sizes[labels[i]] < min_pixels) img.data[i] = 0;
  }
  return kept;
}

double skeleton_length(const BinaryImage& img) {
  double total = 0.0;
  for (int row = 0; row < img.height; ++row) {
    for (int col = 0; col < img.width; ++col) {
      if (!img.get(col, row)) continue;
      if (img.get(col + 1, row)) total += 1.0;
      if (img.get(col, row + 1)) total += 1.0;
      // Diagonal links only where no orthogonal detour exists.
      if (img.get(col + 1, row + 1) && !img.get(col + 1, row) && !img.get(col, row + 1)) total += kSqrt2;
      if (img.get(col - 1, row + 1) && !img.get(col - 1, row) && !img.get(col, row + 1)) total += kSqrt2;
    }
  }
  return total;
}

int count_branch_clusters(const BinaryImage& img) {
  BinaryImage branches(img.width, img.height);
  for (int row = 0; row < img.height; ++row) {
    for (int col = 0; col < img.width; ++col) {
      if (is_branch(img, col, row)) branches.set(col, row, 1);
    }
  }
  int count = 0;
  vision::label_components(branches, count);
  return count;
}

std::size_t raster_index(const PixelIndex& p, int width) {
  return static_cast<std::size_t>(p.row) * width + p.col;
}

double turn_angle(const PixelIndex& prev, const PixelIndex& at, const PixelIndex& next) {
  const double ax = at.col - prev.col, ay = at.row - prev.row;
  const double bx = next.col - at.col, by = next.row - at.row;
  const double na = std::hypot(ax, ay), nb = std::hypot(bx, by);
  if (na == 0.0 || nb == 0.0) return 0.0;
  const double c = std::clamp((ax * bx + ay * by) / (na * nb), -1.0, 1.0);
  return std::acos(c) * 180.0 / kPi;
}

Representation failed(sim::ObjectKind kind, const std::string& assumption, Diagnostics diag) {
  Representation rep;
  rep.kind = kind;
  rep.status = Status::ExtractionFailed;
  rep.violated_assumption = assumption;
  rep.diagnostics = std::move(diag);
  return rep;
}

void draw_ring(scene::GrayImage& img, const PixelIndex& c, int radius, std::uint8_t value) {
  for (int row = c.row - radius - 1; row <= c.row + radius + 1; ++row) {
    for (int col = c.col - radius - 1; col <= c.col + radius + 1; ++col) {
      if (col < 0 || row < 0 || col >= img.width || row >= img.height) continue;
      const double d = std::hypot(static_cast<double>(col - c.col), static_cast<double>(row - c.row));
      if (std::abs(d - radius) < 0.5) img.at(col, row) = value;
    }
  }
}

void draw_line(scene::GrayImage& img, PixelIndex a, const PixelIndex& b, std::uint8_t value) {
  const int dx = std::abs(b.col - a.col), sx = a.col < b.col ? 1 : -1;
  const int dy = -std::abs(b.row - a.row), sy = a.row < b.row ? 1 : -1;
  int err = dx + dy;
  while (true) {
    if (a.col >= 0 && a.row >= 0 && a.col < img.width && a.row < img.height) img.at(a.col, a.row) = value;
    if (a == b) break;
    const int e2 = 2 * err;
    if (e2 >= dy) {
      err += dy;
      a.col += sx;
    }
    if (e2 <= dx) {
      err += dx;
      a.row += sy;
    }
  }
}

}  // namespace

std::string to_string(Status status) { return status == Status::Extracted ? "extracted" : "extraction_failed"; }

const std::vector<Assumption>& rope_assumptions() {
  static const std::vector<Assumption> list = {
      {"single_component", "the skeleton forms exactly one connected piece",
       "lift and release gathers scattered segments into one visible strand"},
      {"no_loop", "the skeleton encloses no background region",
       "lifting the highest point pulls crossing segments apart"},
      {"no_branches", "no skeleton pixel joins three or more arms (no visible crossings)",
       "lifting the highest point separates overlapping segments"},
      {"two_endpoints", "exactly two skeleton endpoints are visible",
       "lifting and translating drapes the rope so both ends lie exposed"},
      {"path_length", "the traced path covers 60-140% of the nominal rope length",
       "lifting unfolds stacked halves so the full length becomes visible"},
  };
  return list;
}

const std::vector<Assumption>& cloth_assumptions() {
  static const std::vector<Assumption> list = {
      {"area_ratio", "mask area is at least 85% of its convex hull (near-planar sheet)",
       "aerial release lets drag spread the sheet flat"},
      {"contour_length", "outer contour length is 70-130% of the nominal perimeter",
       "aerial release unfolds layered regions so the full border shows"},
      {"corner_count", "the simplified outline has 4 +/- 1 corners",
       "aerial release restores a quadrilateral outline"},
  };
  return list;
}

RopeSkeletonOrm::RopeSkeletonOrm(RopeParams params) : params_(params) {}
const std::vector<Assumption>& RopeSkeletonOrm::assumptions() const { return rope_assumptions(); }

Representation RopeSkeletonOrm::recognize(const scene::Observation& obs) const {
  const BinaryImage full = mask_of(obs);
  const vision::Box box = vision::bounding_box(full);
  if (box.empty()) throw EmptyMask();
  constexpr int pad = 2;
  BinaryImage skel = vision::crop(full, box, pad);

  Diagnostics diag;
  diag.mask_area_px = static_cast<double>(skel.count());
  vision::thin(skel);
  prune_spurs(skel, params_.spur_length_px);
  diag.skeleton_components = drop_small_components(skel, params_.spur_length_px);
  diag.loop = vision::count_holes(skel) > 0;
  diag.branch_count = count_branch_clusters(skel);

  std::vector<PixelIndex> ends;
  for (int row = 0; row < skel.height; ++row) {
    for (int col = 0; col < skel.width; ++col) {
      if (is_endpoint(skel, col, row)) ends.push_back({col + box.col0 - pad, row + box.row0 - pad});
    }
  }
  diag.endpoint_count = static_cast<int>(ends.size());
  diag.path_length_px = skeleton_length(skel);
  if (ends.size() == 2) diag.keypoint_separation_px = pixel_distance(to_pixel(ends[0]), to_pixel(ends[1]));

  const auto kind = sim::ObjectKind::Rope;
  if (diag.skeleton_components != 1) return failed(kind, "single_component", diag);
  if (diag.loop) return failed(kind, "no_loop", diag);
  if (diag.branch_count > 0) return failed(kind, "no_branches", diag);
  if (diag.endpoint_count != 2) return failed(kind, "two_endpoints", diag);
  const double lo = params_.min_length_fraction * params_.nominal_length_px;
  const double hi = params_.max_length_fraction * params_.nominal_length_px;
  if (diag.path_length_px < lo || diag.path_length_px > hi) return failed(kind, "path_length", diag);

  Representation rep;
  rep.kind = kind;
  rep.status = Status::Extracted;
  rep.keypoints = ends;
  rep.diagnostics = std::move(diag);
  return rep;
}

ClothCornerOrm::ClothCornerOrm(ClothParams params) : params_(params) {}
const std::vector<Assumption>& ClothCornerOrm::assumptions() const { return cloth_assumptions(); }

Representation ClothCornerOrm::recognize(const scene::Observation& obs) const {
  const BinaryImage full = mask_of(obs);
  const vision::Box box = vision::bounding_box(full);
  if (box.empty()) throw EmptyMask();
  constexpr int pad = 1;
  BinaryImage img = vision::crop(full, box, pad);

  // Keep only the largest component (lowest label on ties).
  int count = 0;
  const auto labels = vision::label_components(img, count);
  std::vector<std::size_t> sizes(count + 1, 0);
  for (int l : labels) ++sizes[l];
  int largest = 1;
  for (int l = 2; l <= count; ++l) {
    if (sizes[l] > sizes[largest]) largest = l;
  }
  PixelIndex first{-1, -1};
  for (std::size_t i = 0; i < labels.size(); ++i) {
    img.data[i] = labels[i] == largest ? 1 : 0;
    if (img.data[i] && first.col < 0) first = {static_cast<int>(i % img.width), static_cast<int>(i / img.width)};
  }

  Diagnostics diag;
  diag.mask_area_px = static_cast<double>(sizes[largest]);
  const auto contour = vision::trace_boundary(img, first);
  diag.contour_length_px = vision::closed_length(contour);

  std::vector<Pixel> pts;
  pts.reserve(contour.size());
  for (const auto& p : contour) pts.push_back(to_pixel(p));
  const auto hull = vision::convex_hull(pts);
  double hull_perimeter = 0.0;
  for (std::size_t i = 0; i < hull.size(); ++i) hull_perimeter += pixel_distance(hull[i], hull[(i + 1) % hull.size()]);
  // Pixel-square area enclosed by a hull through pixel centers.
  const double hull_area = vision::polygon_area(hull) + hull_perimeter / 2.0 + 1.0;
  diag.area_ratio = std::min(1.0, diag.mask_area_px / hull_area);

  // Outline polygon, then drop shallow vertices until every survivor is a corner.
  const double eps = std::max(3.0, params_.simplify_fraction * diag.contour_length_px);
  std::vector<PixelIndex> poly;
  for (std::size_t i : vision::simplify_closed(contour, eps)) poly.push_back(contour[i]);
  auto turn_at = [&](std::size_t i) {
    const std::size_t n = poly.size();
    return turn_angle(poly[(i + n - 1) % n], poly[i], poly[(i + 1) % n]);
  };
  while (poly.size() > 3) {
    std::size_t weakest = 0;
    double weakest_turn = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < poly.size(); ++i) {
      const double t = turn_at(i);
      if (t < weakest_turn) {
        weakest_turn = t;
        weakest = i;
      }
    }
    if (weakest_turn >= params_.min_corner_turn_deg) break;
    poly.erase(poly.begin() + static_cast<std::ptrdiff_t>(weakest));
  }
  diag.corner_count = static_cast<int>(poly.size());

  const auto kind = sim::ObjectKind::Cloth;
  if (diag.area_ratio < params_.min_area_ratio) return failed(kind, "area_ratio", diag);
  const double lo = params_.min_length_fraction * params_.nominal_perimeter_px;
  const double hi = params_.max_length_fraction * params_.nominal_perimeter_px;
  if (diag.contour_length_px < lo || diag.contour_length_px > hi) return failed(kind, "contour_length", diag);
  if (std::abs(diag.corner_count - params_.expected_corners) > params_.corner_slack) {
    return failed(kind, "corner_count", diag);
  }

  // Longest edge between consecutive corners; near-ties go to the lowest pixel index.
  const std::size_t n = poly.size();
  std::size_t best = 0;
  double best_len = -1.0;
  std::size_t best_key = std::numeric_limits<std::size_t>::max();
  for (std::size_t i = 0; i < n; ++i) {
    const double len = pixel_distance(to_pixel(poly[i]), to_pixel(poly[(i + 1) % n]));
    const std::size_t key = std::min(raster_index(poly[i], img.width), raster_index(poly[(i + 1) % n], img.width));
    if (len > best_len + 1.0 || (std::abs(len - best_len) <= 1.0 && key < best_key)) {
      best = i;
      best_len = std::max(len, best_len);
      best_key = key;
    }
  }
  const std::size_t a = best, b = (best + 1) % n;
  auto to_full = [&](const PixelIndex& p) { return PixelIndex{p.col + box.col0 - pad, p.row + box.row0 - pad}; };

  Representation rep;
  rep.kind = kind;
  rep.status = Status::Extracted;
  rep.keypoints = {to_full(poly[a]), to_full(poly[b])};
  rep.guideline = rep.keypoints;
  diag.keypoint_separation_px = best_len;
  diag.keypoint_angles_deg = {180.0 - turn_at(a), 180.0 - turn_at(b)};
  rep.diagnostics = std::move(diag);
  return rep;
}

std::unique_ptr<Orm> make_orm(const std::string& id) {
  if (id == "rope_skeleton") return std::make_unique<RopeSkeletonOrm>();
  if (id == "cloth_corners") return std::make_unique<ClothCornerOrm>();
  return nullptr;
}

std::unique_ptr<Orm> default_orm(sim::ObjectKind kind) {
  return make_orm(kind == sim::ObjectKind::Rope ? "rope_skeleton" : "cloth_corners");
}

scene::GrayImage render_overlay(const scene::Observation& obs, const Representation& rep) {
  scene::GrayImage img{obs.width(), obs.height(), std::vector<std::uint8_t>(obs.mask.size())};
  for (std::size_t i = 0; i < obs.mask.size(); ++i) img.pixels[i] = obs.mask[i] ? kBaseObject : 0;
  if (!rep.extracted()) {
    const int rows = std::min(kBannerRows, img.height);
    std::fill(img.pixels.begin(), img.pixels.begin() + static_cast<std::ptrdiff_t>(rows) * img.width, kBannerValue);
    return img;
  }
  for (std::size_t i = 0; i + 1 < rep.guideline.size(); ++i) {
    draw_line(img, rep.guideline[i], rep.guideline[i + 1], kGuidelineValue);
  }
  for (const auto& k : rep.keypoints) draw_ring(img, k, kMarkerRadiusPx, kMarkerValue);
  return img;
}

}  // namespace deform::recognizer
