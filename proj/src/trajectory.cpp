#include "vidtraj/trajectory.hpp"

#include "vidtraj/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace vidtraj {

Trajectory::Trajectory(std::vector<TrajectorySample> samples) : samples_(std::move(samples)) {
  if (samples_.empty()) fail(Errc::empty_sequence, "trajectory needs at least one sample");
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    if (samples_[i].position.frame != Frame::world)
      fail(Errc::frame_mismatch, "trajectory samples must be in the world frame");
    if (i > 0 && !(samples_[i].timestamp > samples_[i - 1].timestamp))
      fail(Errc::non_monotonic_timestamps, "trajectory timestamps must strictly increase");
  }
}

GroundTrack::GroundTrack(std::vector<GroundPoint> points) : points_(std::move(points)) {
  for (std::size_t i = 1; i < points_.size(); ++i)
    if (!(points_[i].timestamp > points_[i - 1].timestamp))
      fail(Errc::non_monotonic_timestamps, "ground track timestamps must strictly increase");
}

Point3 to_world(const Point3& p_camera, const RigidTransform& cam) {
  if (cam.source != Frame::camera || cam.target != Frame::world)
    fail(Errc::frame_mismatch, "to_world: camera pose must map camera -> world");
  return transform_point(cam, p_camera);
}

Trajectory build_trajectory(std::span<const FilteredPosition> filtered,
                            std::span<const RigidTransform> cams) {
  if (filtered.size() != cams.size())
    fail(Errc::length_mismatch, "filtered positions and camera poses differ in length");
  std::vector<TrajectorySample> samples;
  samples.reserve(filtered.size());
  for (std::size_t i = 0; i < filtered.size(); ++i)
    samples.push_back({filtered[i].timestamp, to_world(filtered[i].position, cams[i])});
  return Trajectory(std::move(samples));
}

GroundTrack project_ground(const Trajectory& t) {
  std::vector<GroundPoint> pts;
  pts.reserve(t.size());
  for (const auto& s : t.samples()) pts.push_back({s.timestamp, s.position.xyz.x(), s.position.xyz.y()});
  return GroundTrack(std::move(pts));
}

double path_length(const GroundTrack& g) {
  if (g.size() < 2) fail(Errc::too_few_points, "path length needs at least two points");
  const auto pts = g.points();
  double len = 0.0;
  for (std::size_t i = 1; i < pts.size(); ++i) len += (pts[i].xy() - pts[i - 1].xy()).norm();
  return len;
}

double final_goal_error(const GroundTrack& g, const Eigen::Vector2d& goal) {
  if (g.empty()) fail(Errc::empty_sequence, "final goal error of an empty track");
  return (g.back().xy() - goal).norm();
}

double distance_to_polyline(const Eigen::Vector2d& p, const GroundTrack& reference) {
  const auto ref = reference.points();
  if (ref.empty()) fail(Errc::empty_sequence, "empty reference polyline");
  if (ref.size() == 1) return (p - ref[0].xy()).norm();
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < ref.size(); ++i) {
    const Eigen::Vector2d a = ref[i - 1].xy();
    const Eigen::Vector2d ab = ref[i].xy() - a;
    const double len2 = ab.squaredNorm();
    const double s = len2 > 0.0 ? std::clamp((p - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
    best = std::min(best, (p - (a + s * ab)).norm());
  }
  return best;
}

TrackingError tracking_error(const GroundTrack& estimated, const GroundTrack& reference) {
  if (estimated.empty() || reference.empty())
    fail(Errc::empty_sequence, "tracking error needs non-empty tracks");
  double sum2 = 0.0;
  TrackingError e;
  for (const auto& p : estimated.points()) {
    const double d = distance_to_polyline(p.xy(), reference);
    sum2 += d * d;
    e.max = std::max(e.max, d);
  }
  e.rmse = std::sqrt(sum2 / static_cast<double>(estimated.size()));
  return e;
}

bool judge_success(const NavMetrics& m, double threshold) {
  if (!(threshold > 0.0)) fail(Errc::invalid_argument, "success threshold must be positive");
  return m.final_goal_error < threshold;
}

GroundTrack resample_arc_length(const GroundTrack& g, double spacing) {
  if (!(spacing > 0.0)) fail(Errc::invalid_argument, "resample spacing must be positive");
  if (g.size() < 2) fail(Errc::too_few_points, "resampling needs at least two points");
  const auto pts = g.points();

  std::vector<double> cum(pts.size(), 0.0);
  for (std::size_t i = 1; i < pts.size(); ++i)
    cum[i] = cum[i - 1] + (pts[i].xy() - pts[i - 1].xy()).norm();
  const double total = cum.back();
  if (!(total > 0.0)) return GroundTrack({pts.front(), pts.back()});

  std::vector<GroundPoint> out;
  out.push_back(pts.front());
  std::size_t seg = 1;
  const auto steps = static_cast<std::size_t>(std::floor(total / spacing));
  for (std::size_t k = 1; k <= steps; ++k) {
    const double s = static_cast<double>(k) * spacing;
    // Skip a sample that would land on (or within round-off of) the endpoint.
    if (total - s < 1e-9 * std::max(1.0, total)) break;
    while (cum[seg] < s) ++seg;
    const double span = cum[seg] - cum[seg - 1];
    const double f = span > 0.0 ? (s - cum[seg - 1]) / span : 0.0;
    const GroundPoint& a = pts[seg - 1];
    const GroundPoint& b = pts[seg];
    out.push_back({a.timestamp + f * (b.timestamp - a.timestamp), a.x + f * (b.x - a.x),
                   a.y + f * (b.y - a.y)});
  }
  out.push_back(pts.back());
  // Interpolated stamps can collide with neighbours on degenerate segments.
  std::vector<GroundPoint> strict;
  for (const auto& p : out)
    if (strict.empty() || p.timestamp > strict.back().timestamp) strict.push_back(p);
  if (strict.back().timestamp != pts.back().timestamp) strict.back() = pts.back();
  return GroundTrack(std::move(strict));
}

}  // namespace vidtraj
