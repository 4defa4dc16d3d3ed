#pragma once

// Object recognition: keypoint extraction with explicit, named assumptions.
// A failed extraction names exactly one violated assumption; a successful one
// can still be geometrically wrong, which is what the decision policy must catch.

#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "deform/geometry.hpp"
#include "deform/scene.hpp"
#include "deform/sim.hpp"

namespace deform::recognizer {

enum class Status { Extracted, ExtractionFailed };

struct Diagnostics {
  // rope skeleton
  int skeleton_components = 0;
  int endpoint_count = 0;
  int branch_count = 0;
  bool loop = false;
  double path_length_px = 0.0;
  // cloth contour
  int corner_count = 0;
  double area_ratio = 0.0;
  double contour_length_px = 0.0;
  // shared
  double mask_area_px = 0.0;
  double keypoint_separation_px = 0.0;
  std::vector<double> keypoint_angles_deg;  // cloth: interior polygon angle at each keypoint
};

struct Representation {
  sim::ObjectKind kind = sim::ObjectKind::Rope;
  Status status = Status::ExtractionFailed;
  std::string violated_assumption;  // empty iff extracted
  std::vector<PixelIndex> keypoints;
  std::vector<PixelIndex> guideline;  // cloth: the edge between the two corners
  Diagnostics diagnostics;

  bool extracted() const { return status == Status::Extracted; }
};

struct Assumption {
  std::string name;
  std::string description;
  /// Which exploration mechanism is expected to restore this assumption.
  std::string remedy;
};

class EmptyMask : public std::runtime_error {
 public:
  EmptyMask() : std::runtime_error("observation mask is empty") {}
};

/// One recognizer contract for every object model, so alternates can be swapped in.
class Orm {
 public:
  virtual ~Orm() = default;
  virtual std::string id() const = 0;
  virtual sim::ObjectKind kind() const = 0;
  virtual const std::vector<Assumption>& assumptions() const = 0;
  /// Throws EmptyMask when there are no object pixels.
  virtual Representation recognize(const scene::Observation& obs) const = 0;
};

struct RopeParams {
  double nominal_length_px = 750.0;
  double min_length_fraction = 0.6;
  double max_length_fraction = 1.4;
  /// Skeleton side branches shorter than this are pruned; skeleton fragments this small are ignored.
  int spur_length_px = 12;
};

struct ClothParams {
  double nominal_perimeter_px = 1800.0;
  int expected_corners = 4;
  int corner_slack = 1;
  double min_area_ratio = 0.85;
  double min_length_fraction = 0.70;
  double max_length_fraction = 1.30;
  /// Douglas-Peucker tolerance as a fraction of contour length, floored at 3 px.
  double simplify_fraction = 0.01;
  /// Polygon vertices turning less than this are not corners.
  double min_corner_turn_deg = 30.0;
};

class RopeSkeletonOrm final : public Orm {
 public:
  explicit RopeSkeletonOrm(RopeParams params = {});
  std::string id() const override { return "rope_skeleton"; }
  sim::ObjectKind kind() const override { return sim::ObjectKind::Rope; }
  const std::vector<Assumption>& assumptions() const override;
  Representation recognize(const scene::Observation& obs) const override;
  const RopeParams& params() const { return params_; }

 private:
  RopeParams params_;
};

class ClothCornerOrm final : public Orm {
 public:
  explicit ClothCornerOrm(ClothParams params = {});
  std::string id() const override { return "cloth_corners"; }
  sim::ObjectKind kind() const override { return sim::ObjectKind::Cloth; }
  const std::vector<Assumption>& assumptions() const override;
  Representation recognize(const scene::Observation& obs) const override;
  const ClothParams& params() const { return params_; }

 private:
  ClothParams params_;
};

const std::vector<Assumption>& rope_assumptions();
const std::vector<Assumption>& cloth_assumptions();

/// Built-in recognizer by id ("rope_skeleton" / "cloth_corners"); nullptr if unknown.
std::unique_ptr<Orm> make_orm(const std::string& id);
std::unique_ptr<Orm> default_orm(sim::ObjectKind kind);

inline constexpr int kMarkerRadiusPx = 8;
inline constexpr int kBannerRows = 40;
inline constexpr std::uint8_t kBaseObject = 200;
inline constexpr std::uint8_t kMarkerValue = 255;
inline constexpr std::uint8_t kGuidelineValue = 96;
inline constexpr std::uint8_t kBannerValue = 128;

/// Mask image with keypoint rings and the cloth guideline; a failed
/// representation gets a banner across the top rows instead.
scene::GrayImage render_overlay(const scene::Observation& obs, const Representation& rep);

std::string to_string(Status status);

}  // namespace deform::recognizer
