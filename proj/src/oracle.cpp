#include "deform/oracle.hpp"

namespace deform::oracle {

GroundTruth ground_truth_of(const sim::ObjectState& state, const scene::Calibration& calib, double epsilon_px) {
  GroundTruth gt;
  gt.kind = state.kind();
  gt.epsilon_px = epsilon_px;
  if (state.kind() == sim::ObjectKind::Rope) {
    gt.keypoints = {calib.project(state.positions.front()), calib.project(state.positions.back())};
  } else {
    for (int i : state.topology->corner_indices()) gt.keypoints.push_back(calib.project(state.positions[i]));
  }
  return gt;
}

bool is_valid(const recognizer::Representation& rep, const GroundTruth& gt) {
  if (!rep.extracted() || rep.keypoints.size() != 2 || rep.kind != gt.kind) return false;
  const Pixel a = to_pixel(rep.keypoints[0]);
  const Pixel b = to_pixel(rep.keypoints[1]);
  const double eps = gt.epsilon_px;
  auto pair_ok = [&](const Pixel& p, const Pixel& q) {
    return pixel_distance(a, p) < eps && pixel_distance(b, q) < eps;
  };

  if (gt.kind == sim::ObjectKind::Rope) {
    const Pixel& g0 = gt.keypoints[0];
    const Pixel& g1 = gt.keypoints[1];
    const double straight = pixel_distance(a, g0) + pixel_distance(b, g1);
    const double crossed = pixel_distance(a, g1) + pixel_distance(b, g0);
    return straight <= crossed ? pair_ok(g0, g1) : pair_ok(g1, g0);
  }

  const std::size_t n = gt.keypoints.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Pixel& p = gt.keypoints[i];
    const Pixel& q = gt.keypoints[(i + 1) % n];
    if (pair_ok(p, q) || pair_ok(q, p)) return true;
  }
  return false;
}

bool is_recognizable(const sim::ObjectState& state, const recognizer::Orm& orm, const scene::Calibration& calib,
                     double epsilon_px) {
  const scene::Observation obs = scene::render(state, calib);
  if (obs.empty()) return false;
  return is_valid(orm.recognize(obs), ground_truth_of(state, calib, epsilon_px));
}

}  // namespace deform::oracle
