#include "vidtraj/error.hpp"

namespace vidtraj {

std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::invalid_argument: return "InvalidArgument";
    case Errc::frame_mismatch: return "FrameMismatch";
    case Errc::point_behind_camera: return "PointBehindCamera";
    case Errc::degenerate_configuration: return "DegenerateConfiguration";
    case Errc::no_valid_pose: return "NoValidPose";
    case Errc::diverged_refinement: return "DivergedRefinement";
    case Errc::non_positive_dt: return "NonPositiveDt";
    case Errc::singular_innovation: return "SingularInnovation";
    case Errc::empty_sequence: return "EmptySequence";
    case Errc::non_monotonic_timestamps: return "NonMonotonicTimestamps";
    case Errc::length_mismatch: return "LengthMismatch";
    case Errc::too_few_points: return "TooFewPoints";
    case Errc::parse_error: return "ParseError";
    case Errc::non_monotonic_frames: return "NonMonotonicFrames";
    case Errc::denormalized_quaternion: return "DenormalizedQuaternion";
    case Errc::no_overlap: return "NoOverlap";
    case Errc::robot_outside_frustum: return "RobotOutsideFrustum";
    case Errc::unknown_scenario: return "UnknownScenario";
    case Errc::io_failure: return "IoFailure";
  }
  return "Unknown";
}

}  // namespace vidtraj
