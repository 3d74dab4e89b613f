#pragma once

// Synthetic scenes: ground-truth robot motion for the three reference tasks,
// rendered through a static elevated camera into detection and camera-pose
// streams, plus kinematic executors that drive along an extracted track.

#include "vidtraj/config.hpp"
#include "vidtraj/io.hpp"
#include "vidtraj/pnp.hpp"
#include "vidtraj/trajectory.hpp"

#include <Eigen/Core>

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace vidtraj {

enum class ExecutorKind { differential_drive, quadruped_proxy, identity };

std::string_view to_string(ExecutorKind k);
ExecutorKind parse_executor(std::string_view name);

struct Obstacle {
  Eigen::Vector2d center;
  double radius = 0.0;
};

struct Scenario {
  std::string name;
  Eigen::Vector2d start;
  Eigen::Vector2d goal;
  std::vector<Obstacle> obstacles;
  RigidTransform camera_pose;  // camera -> world, static over the run
  double robot_width = 0.0;
  double robot_height = 0.0;
  double speed = 0.0;                     // nominal, m/s
  std::vector<Eigen::Vector2d> waypoints; // start ... goal
  double blend_radius = 0.3;              // m
  double duration = 0.0;                  // s, whole frames at the frame rate
  ExecutorKind executor = ExecutorKind::differential_drive;

  RobotModel robot_model() const { return {robot_width, robot_height}; }
};

/// Throws invalid_argument when start == goal or an obstacle radius is not positive.
void validate(const Scenario& s);

/// ugv_red, ugv_blue, quadruped.
std::vector<Scenario> builtin_scenarios(const SceneParams& scene = {}, double frame_rate = 30.0);
Scenario find_scenario(std::string_view name, const SceneParams& scene = {}, double frame_rate = 30.0);

/// Blended waypoint path: straight segments joined by circular arcs.
class WaypointPath {
 public:
  WaypointPath(const std::vector<Eigen::Vector2d>& waypoints, double blend_radius);

  double length() const { return length_; }
  Eigen::Vector2d at(double s) const;

 private:
  struct Piece {
    bool arc = false;
    Eigen::Vector2d a, b;  // line endpoints
    Eigen::Vector2d center;
    double radius = 0.0, start_angle = 0.0, direction = 1.0;
    double length = 0.0;
  };
  std::vector<Piece> pieces_;
  double length_ = 0.0;
};

/// Camera-frame pose of the robot's face: a camera-facing rectangle centred
/// robot_height / 2 above the ground position.
RigidTransform face_pose(const Scenario& s, const Eigen::Vector2d& ground_xy);

struct SimulationOutput {
  GroundTrack truth;
  std::vector<DetectionRecord> detections;
  std::vector<CameraPoseRecord> poses;
};

/// Samples the truth at the configured frame rate and renders it. Throws
/// robot_outside_frustum when any truth frame leaves the image.
SimulationOutput simulate(const Scenario& s, const NoiseSpec& noise, const PipelineConfig& config);

/// Drives along `track` with pure pursuit and returns the path sampled at
/// the executor rate. The identity executor returns the track unchanged.
GroundTrack execute(const GroundTrack& track, ExecutorKind kind, const ExecutorParams& params);

struct TrialResult {
  std::string scenario;
  std::uint64_t seed = 0;
  std::optional<NavMetrics> metrics;  // empty when the trial failed
  std::optional<Trajectory> trajectory;
  GroundTrack truth;
  GroundTrack extracted;
  GroundTrack executed;
  std::string error;

  bool success() const { return metrics && metrics->success; }
};

/// One end-to-end trial. Module errors are caught and reported in `error`.
TrialResult run_pipeline(const Scenario& s, const NoiseSpec& noise, const PipelineConfig& config);

}  // namespace vidtraj
