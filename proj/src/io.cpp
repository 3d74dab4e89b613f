#include "vidtraj/io.hpp"

#include "text.hpp"
#include "vidtraj/error.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

namespace vidtraj {

std::string format_double(double v) {
  std::array<char, 64> buf{};
  const auto [p, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  if (ec != std::errc()) fail(Errc::io_failure, "number formatting failed");
  return std::string(buf.data(), p);
}

namespace {

void check_stream(std::ostream& out) {
  if (!out) fail(Errc::io_failure, "write to output sink failed");
}

}  // namespace

std::vector<DetectionRecord> read_detections(std::istream& in, std::string_view source) {
  text::LineReader reader(in, source);
  std::vector<DetectionRecord> out;
  std::vector<std::string_view> tok;
  while (reader.next(tok)) {
    DetectionRecord r;
    if (tok.size() == 3 && tok[2] == "none") {
      r.present = false;
    } else if (tok.size() == 7) {
      r.present = true;
      r.bbox = {reader.number(tok[2]), reader.number(tok[3]), reader.number(tok[4]),
                reader.number(tok[5])};
      r.confidence = reader.number(tok[6]);
      if (!(r.bbox.w > 0.0) || !(r.bbox.h > 0.0)) reader.error("box width and height must be positive");
      if (r.confidence < 0.0 || r.confidence > 1.0) reader.error("confidence outside [0, 1]");
    } else {
      reader.error("expected 7 fields or 'frame timestamp none'");
    }
    r.frame_index = reader.integer(tok[0]);
    r.timestamp = reader.number(tok[1]);
    if (!out.empty()) {
      const DetectionRecord prev = out.back();
      if (r.frame_index <= prev.frame_index)
        fail(Errc::non_monotonic_frames, std::string(source) + ":" + std::to_string(reader.line_no()) +
                                             ": frame indices must strictly increase");
      if (!(r.timestamp > prev.timestamp))
        fail(Errc::non_monotonic_timestamps, std::string(source) + ":" +
                                                 std::to_string(reader.line_no()) +
                                                 ": timestamps must strictly increase");
      const std::int64_t gap = r.frame_index - prev.frame_index;
      for (std::int64_t g = 1; g < gap; ++g) {
        DetectionRecord missing;
        missing.frame_index = prev.frame_index + g;
        missing.timestamp = prev.timestamp + (r.timestamp - prev.timestamp) *
                                                  static_cast<double>(g) / static_cast<double>(gap);
        out.push_back(missing);
      }
    }
    out.push_back(r);
  }
  return out;
}

void write_detections(std::ostream& out, std::span<const DetectionRecord> records) {
  for (const auto& r : records) {
    out << r.frame_index << ' ' << format_double(r.timestamp);
    if (r.present)
      out << ' ' << format_double(r.bbox.u) << ' ' << format_double(r.bbox.v) << ' '
          << format_double(r.bbox.w) << ' ' << format_double(r.bbox.h) << ' '
          << format_double(r.confidence);
    else
      out << " none";
    out << '\n';
  }
  check_stream(out);
}

std::vector<CameraPoseRecord> read_camera_pose_records(std::istream& in, std::string_view source) {
  text::LineReader reader(in, source);
  std::vector<CameraPoseRecord> out;
  std::vector<std::string_view> tok;
  while (reader.next(tok)) {
    if (tok.size() != 8) reader.error("expected 8 fields: timestamp tx ty tz qx qy qz qw");
    CameraPoseRecord r;
    r.timestamp = reader.number(tok[0]);
    r.translation = {reader.number(tok[1]), reader.number(tok[2]), reader.number(tok[3])};
    // Eigen's constructor order is (w, x, y, z).
    r.rotation = Eigen::Quaterniond(reader.number(tok[7]), reader.number(tok[4]),
                                    reader.number(tok[5]), reader.number(tok[6]));
    if (std::abs(r.rotation.norm() - 1.0) > 1e-3)
      fail(Errc::denormalized_quaternion,
           std::string(source) + ":" + std::to_string(reader.line_no()) + ": quaternion norm " +
               format_double(r.rotation.norm()));
    if (!out.empty() && !(r.timestamp > out.back().timestamp))
      fail(Errc::non_monotonic_timestamps, std::string(source) + ":" +
                                               std::to_string(reader.line_no()) +
                                               ": timestamps must strictly increase");
    out.push_back(r);
  }
  return out;
}

void write_camera_poses(std::ostream& out, std::span<const CameraPoseRecord> records) {
  for (const auto& r : records) {
    out << format_double(r.timestamp) << ' ' << format_double(r.translation.x()) << ' '
        << format_double(r.translation.y()) << ' ' << format_double(r.translation.z()) << ' '
        << format_double(r.rotation.x()) << ' ' << format_double(r.rotation.y()) << ' '
        << format_double(r.rotation.z()) << ' ' << format_double(r.rotation.w()) << '\n';
  }
  check_stream(out);
}

StampedPose to_stamped_pose(const CameraPoseRecord& r, const PoseIngestOptions& options) {
  if (!(options.metric_scale > 0.0)) fail(Errc::invalid_argument, "metric scale must be positive");
  RigidTransform t{Rotation::from_quaternion(r.rotation), r.translation * options.metric_scale,
                   Frame::camera, Frame::world};
  if (options.invert) {
    t.source = Frame::world;
    t.target = Frame::camera;
    t = invert(t);
  }
  const Rotation axes = parse_axes(options.axes);
  t.rotation = axes * t.rotation;
  t.translation = axes * t.translation;
  return {r.timestamp, t};
}

CameraPoseRecord to_record(double timestamp, const RigidTransform& camera_to_world) {
  return {timestamp, camera_to_world.translation, camera_to_world.rotation.quaternion()};
}

std::vector<StampedPose> read_camera_poses(std::istream& in, const PoseIngestOptions& options,
                                           std::string_view source) {
  std::vector<StampedPose> out;
  for (const auto& r : read_camera_pose_records(in, source)) out.push_back(to_stamped_pose(r, options));
  return out;
}

Association associate(std::span<const DetectionRecord> dets, std::span<const StampedPose> poses,
                      double frame_rate) {
  if (dets.empty() || poses.empty()) fail(Errc::empty_sequence, "associate needs both streams");
  if (!(frame_rate > 0.0)) fail(Errc::invalid_argument, "frame rate must be positive");
  for (std::size_t i = 1; i < poses.size(); ++i)
    if (!(poses[i].timestamp > poses[i - 1].timestamp))
      fail(Errc::non_monotonic_timestamps, "pose timestamps must strictly increase");

  const double tol = 0.5 / frame_rate;
  std::vector<bool> used(poses.size(), false);
  Association out;
  for (const auto& d : dets) {
    const auto it = std::lower_bound(poses.begin(), poses.end(), d.timestamp,
                                     [](const StampedPose& p, double t) { return p.timestamp < t; });
    std::size_t best = poses.size();
    double best_dt = tol;
    const auto consider = [&](std::size_t i) {
      const double dt = std::abs(poses[i].timestamp - d.timestamp);
      if (dt <= best_dt && (best == poses.size() || dt < best_dt)) {
        best = i;
        best_dt = dt;
      }
    };
    const auto idx = static_cast<std::size_t>(it - poses.begin());
    if (idx > 0) consider(idx - 1);
    if (idx < poses.size()) consider(idx);
    if (best == poses.size() || used[best]) {
      ++out.dropped;
      continue;
    }
    used[best] = true;
    FrameObservation o;
    o.frame_index = d.frame_index;
    o.timestamp = d.timestamp;
    if (d.present) o.bbox = d.bbox;
    o.camera_pose = poses[best].camera_to_world;
    out.observations.push_back(o);
  }
  if (out.observations.empty()) fail(Errc::no_overlap, "no detection has a pose within tolerance");
  return out;
}

void write_trajectory(std::ostream& out, const Trajectory& t) {
  for (const auto& s : t.samples())
    out << format_double(s.timestamp) << ' ' << format_double(s.position.xyz.x()) << ' '
        << format_double(s.position.xyz.y()) << ' ' << format_double(s.position.xyz.z()) << '\n';
  check_stream(out);
}

Trajectory read_trajectory(std::istream& in, std::string_view source) {
  text::LineReader reader(in, source);
  std::vector<TrajectorySample> samples;
  std::vector<std::string_view> tok;
  while (reader.next(tok)) {
    if (tok.size() != 4) reader.error("expected 4 fields: timestamp x y z");
    samples.push_back({reader.number(tok[0]),
                       {{reader.number(tok[1]), reader.number(tok[2]), reader.number(tok[3])}, Frame::world}});
  }
  if (samples.empty()) fail(Errc::parse_error, std::string(source) + ": empty trajectory");
  try {
    return Trajectory(std::move(samples));
  } catch (const Error& e) {
    fail(Errc::parse_error, std::string(source) + ": " + e.what());
  }
}

void write_ground_track(std::ostream& out, const GroundTrack& g) {
  for (const auto& p : g.points())
    out << format_double(p.timestamp) << ' ' << format_double(p.x) << ' ' << format_double(p.y) << '\n';
  check_stream(out);
}

GroundTrack read_ground_track(std::istream& in, std::string_view source) {
  text::LineReader reader(in, source);
  std::vector<GroundPoint> pts;
  std::vector<std::string_view> tok;
  while (reader.next(tok)) {
    if (tok.size() != 3) reader.error("expected 3 fields: timestamp x y");
    pts.push_back({reader.number(tok[0]), reader.number(tok[1]), reader.number(tok[2])});
  }
  try {
    return GroundTrack(std::move(pts));
  } catch (const Error& e) {
    fail(Errc::parse_error, std::string(source) + ": " + e.what());
  }
}

void write_metrics(std::ostream& out, const NavMetrics& m) {
  out << "path_length_m = " << format_double(m.path_length) << '\n'
      << "final_goal_error_m = " << format_double(m.final_goal_error) << '\n'
      << "tracking_rmse_m = " << format_double(m.tracking_rmse) << '\n'
      << "tracking_max_m = " << format_double(m.tracking_max) << '\n'
      << "success = " << (m.success ? "true" : "false") << '\n';
  check_stream(out);
}

NavMetrics read_metrics(std::istream& in, std::string_view source) {
  text::LineReader reader(in, source);
  std::map<std::string, std::string, std::less<>> kv;
  std::vector<std::string_view> tok;
  while (reader.next(tok)) {
    if (tok.size() != 3 || tok[1] != "=") reader.error("expected 'key = value'");
    if (!kv.emplace(std::string(tok[0]), std::string(tok[2])).second)
      reader.error("duplicate key '" + std::string(tok[0]) + "'");
  }
  const auto get = [&](std::string_view key) -> const std::string& {
    const auto it = kv.find(key);
    if (it == kv.end()) fail(Errc::parse_error, std::string(source) + ": missing key " + std::string(key));
    return it->second;
  };
  NavMetrics m;
  m.path_length = reader.number(get("path_length_m"));
  m.final_goal_error = reader.number(get("final_goal_error_m"));
  m.tracking_rmse = reader.number(get("tracking_rmse_m"));
  m.tracking_max = reader.number(get("tracking_max_m"));
  const std::string& s = get("success");
  if (s != "true" && s != "false") fail(Errc::parse_error, std::string(source) + ": success must be true/false");
  m.success = s == "true";
  if (kv.size() != 5) fail(Errc::parse_error, std::string(source) + ": unexpected metric keys");
  return m;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::io_failure, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace vidtraj
