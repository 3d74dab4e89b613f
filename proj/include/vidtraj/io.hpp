#pragma once

// Text formats for detections, camera poses, trajectories and metrics.
//
//   detections : frame_index timestamp cx cy w h confidence
//                frame_index timestamp none            (no detection)
//   poses      : timestamp tx ty tz qx qy qz qw
//   trajectory : timestamp x y z
//   ground     : timestamp x y
//   metrics    : key = value
//
// Blank lines and lines starting with '#' are ignored. Numbers are written
// in shortest round-trip form, so write -> read is exact.

#include "vidtraj/config.hpp"
#include "vidtraj/geometry.hpp"
#include "vidtraj/pnp.hpp"
#include "vidtraj/trajectory.hpp"

#include <Eigen/Geometry>

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace vidtraj {

struct DetectionRecord {
  std::int64_t frame_index = 0;
  double timestamp = 0.0;
  BoundingBox bbox;
  double confidence = 0.0;
  bool present = false;
};

struct CameraPoseRecord {
  double timestamp = 0.0;
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();
  Eigen::Quaterniond rotation = Eigen::Quaterniond::Identity();
};

struct StampedPose {
  double timestamp = 0.0;
  RigidTransform camera_to_world;
};

struct PoseIngestOptions {
  bool invert = false;  // file stores world -> camera
  double metric_scale = 1.0;
  std::string axes = "x,y,z";

  static PoseIngestOptions from(const PipelineConfig& c) {
    return {c.invert_poses, c.metric_scale, c.pose_axes};
  }
};

struct FrameObservation {
  std::int64_t frame_index = 0;
  double timestamp = 0.0;
  std::optional<BoundingBox> bbox;
  RigidTransform camera_pose;  // camera -> world
};

struct Association {
  std::vector<FrameObservation> observations;
  std::size_t dropped = 0;  // detections without a pose partner
};

std::string format_double(double v);

/// Gaps in frame numbering are filled with absent records whose timestamps
/// are linearly interpolated.
std::vector<DetectionRecord> read_detections(std::istream& in, std::string_view source = "<detections>");
void write_detections(std::ostream& out, std::span<const DetectionRecord> records);

std::vector<CameraPoseRecord> read_camera_pose_records(std::istream& in,
                                                       std::string_view source = "<poses>");
void write_camera_poses(std::ostream& out, std::span<const CameraPoseRecord> records);

/// Records converted to camera -> world transforms per `options`.
std::vector<StampedPose> read_camera_poses(std::istream& in, const PoseIngestOptions& options,
                                           std::string_view source = "<poses>");
StampedPose to_stamped_pose(const CameraPoseRecord& r, const PoseIngestOptions& options);
CameraPoseRecord to_record(double timestamp, const RigidTransform& camera_to_world);

/// Nearest-timestamp pairing within 0.5 / frame_rate; each pose is used at
/// most once.
Association associate(std::span<const DetectionRecord> dets, std::span<const StampedPose> poses,
                      double frame_rate);

void write_trajectory(std::ostream& out, const Trajectory& t);
Trajectory read_trajectory(std::istream& in, std::string_view source = "<trajectory>");

void write_ground_track(std::ostream& out, const GroundTrack& g);
GroundTrack read_ground_track(std::istream& in, std::string_view source = "<ground track>");

void write_metrics(std::ostream& out, const NavMetrics& m);
NavMetrics read_metrics(std::istream& in, std::string_view source = "<metrics>");

/// Opens `path` for reading; io_failure if it cannot be opened.
std::string read_file(const std::string& path);

}  // namespace vidtraj
