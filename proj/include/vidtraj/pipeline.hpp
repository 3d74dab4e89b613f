#pragma once

// Observation stream -> world trajectory: per-frame PnP, Kalman filtering in
// the camera frame, camera-to-world transform and ground projection.

#include "vidtraj/filter.hpp"
#include "vidtraj/io.hpp"
#include "vidtraj/pnp.hpp"
#include "vidtraj/trajectory.hpp"

#include <span>
#include <vector>

namespace vidtraj {

struct ExtractionResult {
  std::vector<Measurement> measurements;  // raw PnP positions, camera frame
  std::vector<FilteredPosition> filtered;
  Trajectory trajectory;
  GroundTrack ground;
  std::size_t pnp_failures = 0;  // present detections PnP could not solve
};

/// Frames whose box yields no valid pose are treated like missed detections.
ExtractionResult extract_trajectory(std::span<const FrameObservation> observations,
                                    const CameraIntrinsics& k, const RobotModel& model,
                                    const FilterParams& filter);

/// Path length and final error of `executed` (what the robot actually drove),
/// tracking error of `extracted` against `reference`.
NavMetrics evaluate(const GroundTrack& extracted, const GroundTrack& executed,
                    const GroundTrack& reference, const Eigen::Vector2d& goal, double success_threshold);

}  // namespace vidtraj
