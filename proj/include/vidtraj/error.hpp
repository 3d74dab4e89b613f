#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace vidtraj {

enum class Errc {
  invalid_argument,
  frame_mismatch,
  point_behind_camera,
  degenerate_configuration,
  no_valid_pose,
  diverged_refinement,
  non_positive_dt,
  singular_innovation,
  empty_sequence,
  non_monotonic_timestamps,
  length_mismatch,
  too_few_points,
  parse_error,
  non_monotonic_frames,
  denormalized_quaternion,
  no_overlap,
  robot_outside_frustum,
  unknown_scenario,
  io_failure,
};

std::string_view to_string(Errc code);

/// Library-wide exception. The code identifies the failure class; the message
/// carries context (file, line, offending value).
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) { throw Error(code, what); }

}  // namespace vidtraj
