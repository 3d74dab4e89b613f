#include "vidtraj/pipeline.hpp"

#include "vidtraj/error.hpp"

namespace vidtraj {

namespace {

struct Filtered {
  std::vector<Measurement> measurements;
  std::vector<FilteredPosition> filtered;
  std::size_t failures = 0;
};

Filtered measure_and_filter(std::span<const FrameObservation> observations, const CameraIntrinsics& k,
                            const RobotModel& model, const FilterParams& filter) {
  if (observations.empty()) fail(Errc::empty_sequence, "no observations to extract from");
  Filtered f;
  f.measurements.reserve(observations.size());
  for (const auto& o : observations) {
    Measurement m{o.timestamp, Eigen::Vector3d::Zero(), false};
    if (o.bbox) {
      try {
        m.z = estimate_robot_position(k, model, *o.bbox).xyz;
        m.valid = true;
      } catch (const Error& e) {
        if (e.code() != Errc::degenerate_configuration && e.code() != Errc::no_valid_pose &&
            e.code() != Errc::invalid_argument)
          throw;
        ++f.failures;
      }
    }
    f.measurements.push_back(m);
  }
  f.filtered = run_filter(f.measurements, filter);
  return f;
}

}  // namespace

ExtractionResult extract_trajectory(std::span<const FrameObservation> observations,
                                    const CameraIntrinsics& k, const RobotModel& model,
                                    const FilterParams& filter) {
  Filtered f = measure_and_filter(observations, k, model, filter);
  std::vector<RigidTransform> cams;
  cams.reserve(observations.size());
  for (const auto& o : observations) cams.push_back(o.camera_pose);
  Trajectory traj = build_trajectory(f.filtered, cams);
  GroundTrack ground = project_ground(traj);
  return {std::move(f.measurements), std::move(f.filtered), std::move(traj), std::move(ground), f.failures};
}

NavMetrics evaluate(const GroundTrack& extracted, const GroundTrack& executed,
                    const GroundTrack& reference, const Eigen::Vector2d& goal, double success_threshold) {
  NavMetrics m;
  m.path_length = executed.size() >= 2 ? path_length(executed) : 0.0;
  m.final_goal_error = final_goal_error(executed, goal);
  const TrackingError te = tracking_error(extracted, reference);
  m.tracking_rmse = te.rmse;
  m.tracking_max = te.max;
  m.success = judge_success(m, success_threshold);
  return m;
}

}  // namespace vidtraj
