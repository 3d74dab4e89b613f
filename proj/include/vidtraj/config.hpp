#pragma once

// Pipeline configuration. Every tunable numeric parameter of the extraction
// pipeline, the simulator and the executor lives here; the file format is
// `dotted.key = value`, one per line, `#` starts a comment.

#include "vidtraj/filter.hpp"
#include "vidtraj/geometry.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace vidtraj {

struct NoiseSpec {
  double pixel_sigma = 1.0;    // px, per box edge
  double dropout_prob = 0.05;  // probability a detection is missing
  double pose_sigma_t = 0.01;  // m, per axis
  double pose_sigma_r = 0.005; // rad, per axis
  std::uint64_t seed = 0;

  static NoiseSpec none() { return {0.0, 0.0, 0.0, 0.0, 0}; }
};

void validate(const NoiseSpec& n);

struct ExecutorParams {
  double lookahead = 0.2;          // m
  double max_speed = 0.5;          // m/s
  double max_turn_rate = 3.0;      // rad/s
  double stop_gain = 2.0;          // 1/s, speed = gain * distance near the end
  double stop_tolerance = 1e-4;    // m
  double rate_hz = 100.0;
  double resample_spacing = 0.05;  // m
  double gait_amplitude = 0.02;    // m, quadruped lateral sway
  double gait_frequency = 1.5;     // Hz
};

struct SceneParams {
  double camera_height = 1.5;       // m
  double camera_pitch_deg = -25.0;  // negative looks down
};

struct PipelineConfig {
  CameraIntrinsics intrinsics{500.0, 500.0, 320.0, 240.0};
  int image_width = 640;
  int image_height = 480;
  double robot_width = 0.30;
  double robot_height = 0.25;
  FilterParams filter;
  double success_threshold = 0.25;
  bool invert_poses = false;
  double metric_scale = 1.0;
  std::string pose_axes = "x,y,z";
  double frame_rate = 30.0;
  ExecutorParams executor;
  SceneParams scene;
  NoiseSpec noise;
};

/// Throws invalid_argument when a physical quantity is out of range.
void validate(const PipelineConfig& c);

struct ConfigKey {
  std::string key;
  std::string description;
};

/// Every key honored by read_config and apply_override, in file order.
std::vector<ConfigKey> config_keys();

/// Starts from defaults; unknown keys and malformed values are parse errors.
PipelineConfig read_config(std::istream& in, std::string_view source = "<config>");
PipelineConfig read_config_file(const std::string& path);

/// Applies one `key=value` assignment.
void apply_override(PipelineConfig& c, std::string_view assignment);

void write_config(std::ostream& out, const PipelineConfig& c);

/// Signed axis permutation, e.g. "x,-z,y": world x = in x, world y = -in z,
/// world z = in y. Must describe a proper rotation.
Rotation parse_axes(std::string_view spec);

}  // namespace vidtraj
