#include "vidtraj/config.hpp"

#include "text.hpp"
#include "vidtraj/error.hpp"
#include "vidtraj/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <ostream>
#include <set>
#include <sstream>

namespace vidtraj {

namespace {

double parse_number(std::string_view key, std::string_view v) {
  double out = 0.0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size() || !std::isfinite(out))
    fail(Errc::parse_error, std::string(key) + ": malformed number '" + std::string(v) + "'");
  return out;
}

std::uint64_t parse_unsigned(std::string_view key, std::string_view v) {
  std::uint64_t out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size())
    fail(Errc::parse_error, std::string(key) + ": malformed integer '" + std::string(v) + "'");
  return out;
}

bool parse_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  fail(Errc::parse_error, std::string(key) + ": expected true or false");
}

struct Entry {
  const char* key;
  const char* description;
  std::function<void(PipelineConfig&, std::string_view)> set;
  std::function<std::string(const PipelineConfig&)> get;
};

template <typename Member>
Entry number_entry(const char* key, const char* desc, Member member) {
  return {key, desc,
          [key, member](PipelineConfig& c, std::string_view v) { std::invoke(member, c) = parse_number(key, v); },
          [member](const PipelineConfig& c) {
            return format_double(std::invoke(member, c));
          }};
}

Entry intrinsic_entry(const char* key, const char* desc, int which) {
  return {key, desc,
          [key, which](PipelineConfig& c, std::string_view v) {
            const double x = parse_number(key, v);
            const CameraIntrinsics& k = c.intrinsics;
            double f[4] = {k.fx(), k.fy(), k.cx(), k.cy()};
            f[which] = x;
            c.intrinsics = CameraIntrinsics(f[0], f[1], f[2], f[3]);
          },
          [which](const PipelineConfig& c) {
            const CameraIntrinsics& k = c.intrinsics;
            const double f[4] = {k.fx(), k.fy(), k.cx(), k.cy()};
            return format_double(f[which]);
          }};
}

const std::vector<Entry>& registry() {
  static const std::vector<Entry> entries = [] {
    std::vector<Entry> e;
    e.push_back(intrinsic_entry("camera.fx", "focal length x (px)", 0));
    e.push_back(intrinsic_entry("camera.fy", "focal length y (px)", 1));
    e.push_back(intrinsic_entry("camera.cx", "principal point x (px)", 2));
    e.push_back(intrinsic_entry("camera.cy", "principal point y (px)", 3));
    e.push_back({"camera.image_width", "image width (px)",
                 [](PipelineConfig& c, std::string_view v) {
                   c.image_width = static_cast<int>(parse_unsigned("camera.image_width", v));
                 },
                 [](const PipelineConfig& c) { return std::to_string(c.image_width); }});
    e.push_back({"camera.image_height", "image height (px)",
                 [](PipelineConfig& c, std::string_view v) {
                   c.image_height = static_cast<int>(parse_unsigned("camera.image_height", v));
                 },
                 [](const PipelineConfig& c) { return std::to_string(c.image_height); }});
    e.push_back(number_entry("robot.width", "robot face width (m)", &PipelineConfig::robot_width));
    e.push_back(number_entry("robot.height", "robot face height (m)", &PipelineConfig::robot_height));
    e.push_back(number_entry("filter.sigma_a", "process acceleration noise (m/s^2)",
                             [](auto& c) -> auto& { return c.filter.sigma_a; }));
    e.push_back(number_entry("filter.sigma_z", "measurement noise std per axis (m)",
                             [](auto& c) -> auto& { return c.filter.sigma_z; }));
    e.push_back(number_entry("filter.p0_pos", "initial position variance (m^2)",
                             [](auto& c) -> auto& { return c.filter.p0_pos; }));
    e.push_back(number_entry("filter.p0_vel", "initial velocity variance (m^2/s^2)",
                             [](auto& c) -> auto& { return c.filter.p0_vel; }));
    e.push_back(number_entry("eval.success_threshold", "final goal error below which a trial succeeds (m)",
                             &PipelineConfig::success_threshold));
    e.push_back({"poses.invert", "pose file stores world->camera instead of camera->world",
                 [](PipelineConfig& c, std::string_view v) { c.invert_poses = parse_bool("poses.invert", v); },
                 [](const PipelineConfig& c) { return std::string(c.invert_poses ? "true" : "false"); }});
    e.push_back(number_entry("poses.metric_scale", "scale applied to pose translations",
                             &PipelineConfig::metric_scale));
    e.push_back({"poses.axes", "signed axis permutation into the world frame, e.g. x,-z,y",
                 [](PipelineConfig& c, std::string_view v) {
                   parse_axes(v);
                   c.pose_axes = std::string(v);
                 },
                 [](const PipelineConfig& c) { return c.pose_axes; }});
    e.push_back(number_entry("video.frame_rate", "frame rate of the observation streams (Hz)",
                             &PipelineConfig::frame_rate));
    e.push_back(number_entry("executor.lookahead", "pure-pursuit lookahead (m)",
                             [](auto& c) -> auto& { return c.executor.lookahead; }));
    e.push_back(number_entry("executor.max_speed", "executor cruise speed (m/s)",
                             [](auto& c) -> auto& { return c.executor.max_speed; }));
    e.push_back(number_entry("executor.max_turn_rate", "executor turn-rate limit (rad/s)",
                             [](auto& c) -> auto& { return c.executor.max_turn_rate; }));
    e.push_back(number_entry("executor.stop_gain", "speed gain on remaining distance near the goal (1/s)",
                             [](auto& c) -> auto& { return c.executor.stop_gain; }));
    e.push_back(number_entry("executor.stop_tolerance", "distance at which the executor stops (m)",
                             [](auto& c) -> auto& { return c.executor.stop_tolerance; }));
    e.push_back(number_entry("executor.rate_hz", "executor integration and output rate (Hz)",
                             [](auto& c) -> auto& { return c.executor.rate_hz; }));
    e.push_back(number_entry("executor.resample_spacing", "arc-length spacing of the reference path (m)",
                             [](auto& c) -> auto& { return c.executor.resample_spacing; }));
    e.push_back(number_entry("executor.gait_amplitude", "quadruped lateral sway amplitude (m)",
                             [](auto& c) -> auto& { return c.executor.gait_amplitude; }));
    e.push_back(number_entry("executor.gait_frequency", "quadruped sway frequency (Hz)",
                             [](auto& c) -> auto& { return c.executor.gait_frequency; }));
    e.push_back(number_entry("scene.camera_height", "simulated camera height above ground (m)",
                             [](auto& c) -> auto& { return c.scene.camera_height; }));
    e.push_back(number_entry("scene.camera_pitch_deg", "simulated camera pitch, negative looks down (deg)",
                             [](auto& c) -> auto& { return c.scene.camera_pitch_deg; }));
    e.push_back(number_entry("noise.pixel_sigma", "simulated box-edge noise std (px)",
                             [](auto& c) -> auto& { return c.noise.pixel_sigma; }));
    e.push_back(number_entry("noise.dropout_prob", "simulated detection dropout probability",
                             [](auto& c) -> auto& { return c.noise.dropout_prob; }));
    e.push_back(number_entry("noise.pose_sigma_t", "simulated camera translation noise std (m)",
                             [](auto& c) -> auto& { return c.noise.pose_sigma_t; }));
    e.push_back(number_entry("noise.pose_sigma_r", "simulated camera rotation noise std (rad)",
                             [](auto& c) -> auto& { return c.noise.pose_sigma_r; }));
    e.push_back({"noise.seed", "simulator random seed",
                 [](PipelineConfig& c, std::string_view v) { c.noise.seed = parse_unsigned("noise.seed", v); },
                 [](const PipelineConfig& c) { return std::to_string(c.noise.seed); }});
    return e;
  }();
  return entries;
}

void set_key(PipelineConfig& c, std::string_view key, std::string_view value) {
  for (const auto& e : registry()) {
    if (key == e.key) {
      try {
        e.set(c, value);
      } catch (const Error& err) {
        fail(Errc::parse_error, err.what());
      }
      return;
    }
  }
  fail(Errc::parse_error, "unknown config key '" + std::string(key) + "'");
}

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

void validate(const NoiseSpec& n) {
  for (double s : {n.pixel_sigma, n.pose_sigma_t, n.pose_sigma_r})
    if (!(s >= 0.0) || !std::isfinite(s)) fail(Errc::invalid_argument, "noise sigmas must be >= 0");
  if (!(n.dropout_prob >= 0.0 && n.dropout_prob <= 1.0))
    fail(Errc::invalid_argument, "dropout probability must lie in [0, 1]");
}

void validate(const PipelineConfig& c) {
  if (c.image_width <= 0 || c.image_height <= 0) fail(Errc::invalid_argument, "image size must be positive");
  for (double v : {c.robot_width, c.robot_height, c.success_threshold, c.metric_scale, c.frame_rate,
                   c.executor.lookahead, c.executor.max_speed, c.executor.max_turn_rate,
                   c.executor.stop_gain, c.executor.stop_tolerance, c.executor.rate_hz,
                   c.executor.resample_spacing, c.scene.camera_height})
    if (!(v > 0.0) || !std::isfinite(v)) fail(Errc::invalid_argument, "physical quantities must be positive");
  if (!(c.executor.gait_amplitude >= 0.0) || !(c.executor.gait_frequency >= 0.0))
    fail(Errc::invalid_argument, "gait parameters must be non-negative");
  if (!(c.scene.camera_pitch_deg < 0.0 && c.scene.camera_pitch_deg > -90.0))
    fail(Errc::invalid_argument, "camera pitch must point below the horizon");
  validate(c.filter);
  validate(c.noise);
  parse_axes(c.pose_axes);
}

std::vector<ConfigKey> config_keys() {
  std::vector<ConfigKey> out;
  for (const auto& e : registry()) out.push_back({e.key, e.description});
  return out;
}

PipelineConfig read_config(std::istream& in, std::string_view source) {
  PipelineConfig c;
  std::string line;
  std::size_t line_no = 0;
  std::set<std::string, std::less<>> seen;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view body = line;
    if (const auto hash = body.find('#'); hash != std::string_view::npos) body = body.substr(0, hash);
    body = trim(body);
    if (body.empty()) continue;
    const auto where = std::string(source) + ":" + std::to_string(line_no) + ": ";
    const auto eq = body.find('=');
    if (eq == std::string_view::npos) fail(Errc::parse_error, where + "expected 'key = value'");
    const auto key = trim(body.substr(0, eq));
    const auto value = trim(body.substr(eq + 1));
    if (!seen.emplace(key).second) fail(Errc::parse_error, where + "duplicate key '" + std::string(key) + "'");
    try {
      set_key(c, key, value);
    } catch (const Error& e) {
      fail(Errc::parse_error, where + e.what());
    }
  }
  try {
    validate(c);
  } catch (const Error& e) {
    fail(Errc::parse_error, std::string(source) + ": " + e.what());
  }
  return c;
}

PipelineConfig read_config_file(const std::string& path) {
  std::istringstream in(read_file(path));
  return read_config(in, path);
}

void apply_override(PipelineConfig& c, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos)
    fail(Errc::parse_error, "override '" + std::string(assignment) + "' is not key=value");
  set_key(c, trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

void write_config(std::ostream& out, const PipelineConfig& c) {
  for (const auto& e : registry()) out << e.key << " = " << e.get(c) << '\n';
  if (!out) fail(Errc::io_failure, "write to output sink failed");
}

Rotation parse_axes(std::string_view spec) {
  Eigen::Matrix3d m = Eigen::Matrix3d::Zero();
  int row = 0;
  std::string_view rest = spec;
  while (true) {
    const auto comma = rest.find(',');
    std::string_view item = trim(rest.substr(0, comma));
    if (row >= 3 || item.empty()) fail(Errc::invalid_argument, "bad axis spec '" + std::string(spec) + "'");
    double sign = 1.0;
    if (item.front() == '-' || item.front() == '+') {
      sign = item.front() == '-' ? -1.0 : 1.0;
      item.remove_prefix(1);
    }
    int col = -1;
    if (item == "x") col = 0;
    if (item == "y") col = 1;
    if (item == "z") col = 2;
    if (col < 0) fail(Errc::invalid_argument, "bad axis spec '" + std::string(spec) + "'");
    m(row++, col) = sign;
    if (comma == std::string_view::npos) break;
    rest = rest.substr(comma + 1);
  }
  if (row != 3) fail(Errc::invalid_argument, "axis spec needs three entries");
  return Rotation::from_matrix(m);
}

}  // namespace vidtraj
