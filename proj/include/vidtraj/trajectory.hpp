#pragma once

// World-frame trajectory assembly, ground-plane projection and the
// navigation metrics reported per trial.

#include "vidtraj/filter.hpp"
#include "vidtraj/geometry.hpp"

#include <Eigen/Core>

#include <span>
#include <vector>

namespace vidtraj {

struct TrajectorySample {
  double timestamp = 0.0;
  Point3 position;  // world frame
};

/// Non-empty, strictly increasing timestamps, world-frame positions.
class Trajectory {
 public:
  explicit Trajectory(std::vector<TrajectorySample> samples);

  std::span<const TrajectorySample> samples() const { return samples_; }
  std::size_t size() const { return samples_.size(); }

 private:
  std::vector<TrajectorySample> samples_;
};

struct GroundPoint {
  double timestamp = 0.0;
  double x = 0.0;
  double y = 0.0;

  Eigen::Vector2d xy() const { return {x, y}; }
};

/// Strictly increasing timestamps. May be empty.
class GroundTrack {
 public:
  GroundTrack() = default;
  explicit GroundTrack(std::vector<GroundPoint> points);

  std::span<const GroundPoint> points() const { return points_; }
  std::size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }
  const GroundPoint& front() const { return points_.front(); }
  const GroundPoint& back() const { return points_.back(); }

 private:
  std::vector<GroundPoint> points_;
};

struct NavMetrics {
  double path_length = 0.0;
  double final_goal_error = 0.0;
  double tracking_rmse = 0.0;
  double tracking_max = 0.0;
  bool success = false;
};

/// p_w = R_wc p_c + t_wc. `cam` must map camera -> world.
Point3 to_world(const Point3& p_camera, const RigidTransform& cam);

Trajectory build_trajectory(std::span<const FilteredPosition> filtered,
                            std::span<const RigidTransform> cams);

GroundTrack project_ground(const Trajectory& t);

double path_length(const GroundTrack& g);

double final_goal_error(const GroundTrack& g, const Eigen::Vector2d& goal);

struct TrackingError {
  double rmse = 0.0;
  double max = 0.0;
};

/// Distance from every estimated point to the reference polyline.
TrackingError tracking_error(const GroundTrack& estimated, const GroundTrack& reference);

/// Distance from a point to the polyline through `reference`.
double distance_to_polyline(const Eigen::Vector2d& p, const GroundTrack& reference);

bool judge_success(const NavMetrics& m, double threshold);

/// Points spaced `spacing` apart in arc length along the polyline, first and
/// last points preserved. Timestamps are interpolated along the arc.
GroundTrack resample_arc_length(const GroundTrack& g, double spacing);

}  // namespace vidtraj
