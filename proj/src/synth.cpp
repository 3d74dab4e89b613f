#include "vidtraj/synth.hpp"

#include "vidtraj/error.hpp"
#include "vidtraj/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <limits>
#include <random>

namespace vidtraj {

namespace {

using Eigen::Vector2d;
using Eigen::Vector3d;

constexpr double kPi = std::numbers::pi;

double cross2(const Vector2d& a, const Vector2d& b) { return a.x() * b.y() - a.y() * b.x(); }

Vector2d left_normal(const Vector2d& d) { return {-d.y(), d.x()}; }

// Elevated camera looking along azimuth `az` at `center`, pitched down so
// the optical axis meets the ground there.
RigidTransform look_at_ground(const Vector2d& center, double az, const SceneParams& scene) {
  const double p = scene.camera_pitch_deg * kPi / 180.0;
  const double standoff = scene.camera_height / std::tan(-p);
  const Vector3d z(std::cos(p) * std::cos(az), std::cos(p) * std::sin(az), std::sin(p));
  const Vector3d x(std::sin(az), -std::cos(az), 0.0);
  const Vector3d y = z.cross(x);
  Eigen::Matrix3d r;
  r.col(0) = x;
  r.col(1) = y;
  r.col(2) = z;
  const Vector3d c(center.x() - standoff * std::cos(az), center.y() - standoff * std::sin(az),
                   scene.camera_height);
  return {Rotation::from_matrix(r), c, Frame::camera, Frame::world};
}

Vector2d bbox_center(const std::vector<Vector2d>& pts) {
  Vector2d lo = pts.front(), hi = pts.front();
  for (const auto& p : pts) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  return 0.5 * (lo + hi);
}

Scenario make_scenario(std::string name, std::vector<Vector2d> waypoints, std::vector<Obstacle> obstacles,
                       double width, double height, double speed, double az, ExecutorKind executor,
                       const SceneParams& scene, double frame_rate) {
  Scenario s;
  s.name = std::move(name);
  s.start = waypoints.front();
  s.goal = waypoints.back();
  s.obstacles = std::move(obstacles);
  s.camera_pose = look_at_ground(bbox_center(waypoints), az, scene);
  s.robot_width = width;
  s.robot_height = height;
  s.speed = speed;
  s.waypoints = std::move(waypoints);
  s.executor = executor;
  // Whole number of frames so the last frame lands on the goal.
  const double length = WaypointPath(s.waypoints, s.blend_radius).length();
  s.duration = std::ceil(length * frame_rate / speed) / frame_rate;
  return s;
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

// Per-trial random stream; the scenario name keeps equal seeds on different
// scenarios independent.
std::mt19937_64 make_rng(std::uint64_t seed, std::string_view scenario) {
  const std::uint64_t h = fnv1a(scenario);
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(h), static_cast<std::uint32_t>(h >> 32)};
  return std::mt19937_64(seq);
}

}  // namespace

std::string_view to_string(ExecutorKind k) {
  switch (k) {
    case ExecutorKind::differential_drive: return "differential_drive";
    case ExecutorKind::quadruped_proxy: return "quadruped_proxy";
    case ExecutorKind::identity: return "identity";
  }
  return "unknown";
}

ExecutorKind parse_executor(std::string_view name) {
  for (auto k : {ExecutorKind::differential_drive, ExecutorKind::quadruped_proxy, ExecutorKind::identity})
    if (to_string(k) == name) return k;
  fail(Errc::invalid_argument, "unknown executor '" + std::string(name) + "'");
}

void validate(const Scenario& s) {
  if (!s.start.allFinite() || !s.goal.allFinite()) fail(Errc::invalid_argument, "scenario endpoints must be finite");
  if (s.start == s.goal) fail(Errc::invalid_argument, "scenario " + s.name + ": start equals goal");
  for (const auto& o : s.obstacles)
    if (!(o.radius > 0.0)) fail(Errc::invalid_argument, "scenario " + s.name + ": obstacle radius must be > 0");
  if (!(s.robot_width > 0.0) || !(s.robot_height > 0.0))
    fail(Errc::invalid_argument, "scenario " + s.name + ": robot dimensions must be > 0");
  if (!(s.speed > 0.0) || !(s.duration > 0.0))
    fail(Errc::invalid_argument, "scenario " + s.name + ": speed and duration must be > 0");
  if (s.waypoints.size() < 2 || s.waypoints.front() != s.start || s.waypoints.back() != s.goal)
    fail(Errc::invalid_argument, "scenario " + s.name + ": waypoints must run from start to goal");
}

std::vector<Scenario> builtin_scenarios(const SceneParams& scene, double frame_rate) {
  if (!(frame_rate > 0.0)) fail(Errc::invalid_argument, "frame rate must be > 0");
  if (!(scene.camera_height > 0.0) || !(scene.camera_pitch_deg < 0.0) || !(scene.camera_pitch_deg > -90.0))
    fail(Errc::invalid_argument, "camera must be above the ground and pitched down");
  std::vector<Scenario> out;
  // Both ground robots share the start; the camera watches from the +x side.
  out.push_back(make_scenario("ugv_red", {{0.0, 1.9}, {0.3, 0.6}, {0.9, -0.8}}, {}, 0.30, 0.25, 0.3, kPi,
                              ExecutorKind::differential_drive, scene, frame_rate));
  out.push_back(make_scenario("ugv_blue", {{0.0, 1.9}, {-0.6, 0.6}, {-0.8, -0.8}}, {}, 0.30, 0.25, 0.3, kPi,
                              ExecutorKind::differential_drive, scene, frame_rate));
  // The quadruped arcs over the middle obstacle; the camera sits to the south.
  out.push_back(make_scenario("quadruped", {{-1.1, -2.5}, {-0.2, -2.0}, {0.9, -2.6}},
                              {{{-1.3, -3.4}, 0.2}, {{-0.2, -2.5}, 0.2}, {{1.1, -3.2}, 0.2}}, 0.50, 0.35, 0.25,
                              kPi / 2.0, ExecutorKind::quadruped_proxy, scene, frame_rate));
  return out;
}

Scenario find_scenario(std::string_view name, const SceneParams& scene, double frame_rate) {
  for (auto& s : builtin_scenarios(scene, frame_rate))
    if (s.name == name) return s;
  fail(Errc::unknown_scenario, "unknown scenario '" + std::string(name) + "'");
}

WaypointPath::WaypointPath(const std::vector<Vector2d>& w, double blend_radius) {
  if (w.size() < 2) fail(Errc::too_few_points, "a path needs at least two waypoints");
  if (!(blend_radius >= 0.0)) fail(Errc::invalid_argument, "blend radius must be >= 0");
  for (std::size_t i = 0; i + 1 < w.size(); ++i)
    if ((w[i + 1] - w[i]).norm() < 1e-12) fail(Errc::invalid_argument, "repeated waypoint");

  Vector2d cursor = w.front();
  auto add_line = [&](const Vector2d& to) {
    Piece p;
    p.a = cursor;
    p.b = to;
    p.length = (to - cursor).norm();
    if (p.length > 0.0) pieces_.push_back(p);
    cursor = to;
  };

  for (std::size_t i = 1; i + 1 < w.size(); ++i) {
    const Vector2d d1 = (w[i] - w[i - 1]).normalized();
    const Vector2d d2 = (w[i + 1] - w[i]).normalized();
    const double turn = std::atan2(cross2(d1, d2), d1.dot(d2));
    if (std::abs(turn) < 1e-12 || blend_radius == 0.0) {
      add_line(w[i]);
      continue;
    }
    const double tangent = blend_radius * std::tan(std::abs(turn) / 2.0);
    // Each arc may use at most half of the adjacent legs.
    if (tangent > 0.5 * (w[i] - w[i - 1]).norm() || tangent > 0.5 * (w[i + 1] - w[i]).norm())
      fail(Errc::invalid_argument, "blend radius too large for waypoint spacing");
    const Vector2d t1 = w[i] - tangent * d1;
    const Vector2d t2 = w[i] + tangent * d2;
    add_line(t1);
    Piece arc;
    arc.arc = true;
    arc.direction = turn > 0.0 ? 1.0 : -1.0;
    arc.radius = blend_radius;
    arc.center = t1 + arc.direction * blend_radius * left_normal(d1);
    const Vector2d r0 = t1 - arc.center;
    arc.start_angle = std::atan2(r0.y(), r0.x());
    arc.length = blend_radius * std::abs(turn);
    arc.a = t1;
    arc.b = t2;
    pieces_.push_back(arc);
    cursor = t2;
  }
  add_line(w.back());
  for (const auto& p : pieces_) length_ += p.length;
}

Vector2d WaypointPath::at(double s) const {
  s = std::clamp(s, 0.0, length_);
  for (const auto& p : pieces_) {
    if (s <= p.length || &p == &pieces_.back()) {
      const double u = std::min(s, p.length);
      if (!p.arc) return p.a + (p.b - p.a) * (u / p.length);
      const double ang = p.start_angle + p.direction * u / p.radius;
      return p.center + p.radius * Vector2d(std::cos(ang), std::sin(ang));
    }
    s -= p.length;
  }
  return pieces_.back().b;
}

RigidTransform face_pose(const Scenario& s, const Vector2d& ground_xy) {
  const Vector3d center_world(ground_xy.x(), ground_xy.y(), s.robot_height / 2.0);
  const RigidTransform world_to_camera = invert(s.camera_pose);
  const Vector3d center_camera = transform_point(world_to_camera, {center_world, Frame::world}).xyz;
  return {Rotation(), center_camera, Frame::robot, Frame::camera};
}

SimulationOutput simulate(const Scenario& s, const NoiseSpec& noise, const PipelineConfig& config) {
  validate(s);
  validate(noise);
  validate(config);
  const double fps = config.frame_rate;
  const auto intervals = static_cast<std::int64_t>(std::llround(s.duration * fps));
  if (intervals < 1) fail(Errc::invalid_argument, "scenario shorter than one frame");
  const WaypointPath path(s.waypoints, s.blend_radius);
  const RobotModel model = s.robot_model();
  const CameraIntrinsics& k = config.intrinsics;

  std::mt19937_64 rng = make_rng(noise.seed, s.name);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);

  SimulationOutput out;
  std::vector<GroundPoint> truth;
  truth.reserve(intervals + 1);
  for (std::int64_t i = 0; i <= intervals; ++i) {
    const double t = static_cast<double>(i) / fps;
    const double arc = path.length() * static_cast<double>(i) / static_cast<double>(intervals);
    const Vector2d xy = path.at(arc);
    truth.push_back({t, xy.x(), xy.y()});

    const RigidTransform face = face_pose(s, xy);
    double umin = 0, umax = 0, vmin = 0, vmax = 0;
    bool first = true;
    for (const auto& corner : model.points()) {
      const Vector3d pc = transform_point(face, corner).xyz;
      const Pixel px = pc.z() > kMinDepth ? project(k, pc) : Pixel{-1.0, -1.0};
      if (pc.z() <= kMinDepth || px.u < 0.0 || px.u > config.image_width || px.v < 0.0 ||
          px.v > config.image_height)
        fail(Errc::robot_outside_frustum, "scenario " + s.name + ": robot leaves the image at t=" +
                                              format_double(t));
      umin = first ? px.u : std::min(umin, px.u);
      umax = first ? px.u : std::max(umax, px.u);
      vmin = first ? px.v : std::min(vmin, px.v);
      vmax = first ? px.v : std::max(vmax, px.v);
      first = false;
    }

    // Fixed draw order per frame keeps the stream aligned across noise levels.
    const double drop = uniform(rng);
    double e[4];
    for (double& x : e) x = normal(rng);
    const double confidence = 0.7 + 0.3 * uniform(rng);
    Vector3d nr, nt;
    for (int j = 0; j < 3; ++j) nr[j] = normal(rng);
    for (int j = 0; j < 3; ++j) nt[j] = normal(rng);

    DetectionRecord d;
    d.frame_index = i;
    d.timestamp = t;
    d.present = drop >= noise.dropout_prob;
    if (d.present) {
      const double x0 = umin + noise.pixel_sigma * e[0], x1 = umax + noise.pixel_sigma * e[1];
      const double y0 = vmin + noise.pixel_sigma * e[2], y1 = vmax + noise.pixel_sigma * e[3];
      d.bbox = {0.5 * (x0 + x1), 0.5 * (y0 + y1), x1 - x0, y1 - y0};
      d.confidence = confidence;
      if (!(d.bbox.w > 0.0) || !(d.bbox.h > 0.0)) d.present = false;
    }
    if (!d.present) {
      d.bbox = {};
      d.confidence = 0.0;
    }
    out.detections.push_back(d);

    RigidTransform cam = s.camera_pose;
    cam.rotation = cam.rotation * Rotation::exp(noise.pose_sigma_r * nr);
    cam.translation += noise.pose_sigma_t * nt;
    out.poses.push_back(to_record(t, cam));
  }
  out.truth = GroundTrack(std::move(truth));
  return out;
}

namespace {

struct Polyline {
  std::vector<Vector2d> pts;
  std::vector<double> s;  // cumulative arc length

  explicit Polyline(const GroundTrack& g) {
    for (const auto& p : g.points()) {
      if (!pts.empty() && (p.xy() - pts.back()).norm() < 1e-12) continue;
      pts.push_back(p.xy());
      s.push_back(s.empty() ? 0.0 : s.back() + (pts.back() - pts[pts.size() - 2]).norm());
    }
  }

  double length() const { return s.back(); }

  Vector2d at(double arc) const {
    if (pts.size() == 1 || arc <= 0.0) return pts.front();
    if (arc >= length()) return pts.back();
    const auto it = std::upper_bound(s.begin(), s.end(), arc);
    const std::size_t i = static_cast<std::size_t>(it - s.begin()) - 1;
    const double u = (arc - s[i]) / (s[i + 1] - s[i]);
    return pts[i] + u * (pts[i + 1] - pts[i]);
  }

  // Closest arc position among segments [from, to).
  std::pair<double, std::size_t> project(const Vector2d& p, std::size_t from, std::size_t to) const {
    double best_d = std::numeric_limits<double>::infinity(), best_s = s[from];
    std::size_t best_i = from;
    to = std::min(to, pts.size() - 1);
    for (std::size_t i = from; i < to; ++i) {
      const Vector2d ab = pts[i + 1] - pts[i];
      const double u = std::clamp((p - pts[i]).dot(ab) / ab.squaredNorm(), 0.0, 1.0);
      const double d = (pts[i] + u * ab - p).squaredNorm();
      if (d < best_d) {
        best_d = d;
        best_s = s[i] + u * (s[i + 1] - s[i]);
        best_i = i;
      }
    }
    return {best_s, best_i};
  }
};

double wrap_angle(double a) { return std::atan2(std::sin(a), std::cos(a)); }

}  // namespace

GroundTrack execute(const GroundTrack& track, ExecutorKind kind, const ExecutorParams& params) {
  if (track.size() < 2) fail(Errc::too_few_points, "execution needs a track of at least two points");
  if (kind == ExecutorKind::identity) return track;
  if (!(params.rate_hz > 0.0) || !(params.lookahead > 0.0) || !(params.max_speed > 0.0) ||
      !(params.resample_spacing > 0.0))
    fail(Errc::invalid_argument, "executor parameters must be > 0");

  const Polyline path(resample_arc_length(track, params.resample_spacing));
  const double dt = 1.0 / params.rate_hz;
  const double t0 = track.front().timestamp;
  const Vector2d goal = path.pts.back();

  std::vector<GroundPoint> out;
  Vector2d pos = path.pts.front();
  double heading = 0.0;
  if (path.pts.size() > 1) {
    const Vector2d d = path.pts[1] - path.pts[0];
    heading = std::atan2(d.y(), d.x());
  }
  out.push_back({t0, pos.x(), pos.y()});
  if (path.pts.size() == 1) return GroundTrack(std::move(out));

  const double window = 2.0 * params.lookahead + 2.0 * params.resample_spacing;
  const double time_cap = 2.0 * path.length() / params.max_speed + 30.0;
  std::size_t seg = 0;
  double v = 0.0;
  for (std::int64_t step = 1;; ++step) {
    const double t = static_cast<double>(step) * dt;
    // Progress only moves forward, within a window ahead of the last match.
    std::size_t seg_end = seg;
    while (seg_end + 1 < path.pts.size() && path.s[seg_end] < path.s[seg] + window) ++seg_end;
    const auto [s_near, seg_near] = path.project(pos, seg, std::max(seg_end, seg + 1));
    seg = seg_near;

    const double d_end = (goal - pos).norm();
    const bool near_end = s_near + params.lookahead >= path.length();
    if ((near_end && d_end < params.stop_tolerance) || t > time_cap) break;

    const Vector2d target = path.at(s_near + params.lookahead);
    const Vector2d to_target = target - pos;
    const double ld = std::max(to_target.norm(), 1e-9);
    const double alpha = wrap_angle(std::atan2(to_target.y(), to_target.x()) - heading);
    double omega;
    if (std::abs(alpha) > kPi / 2.0) {
      v = 0.0;
      omega = std::copysign(params.max_turn_rate, alpha);
    } else {
      v = std::min(params.max_speed, params.stop_gain * d_end);
      omega = std::clamp(2.0 * v * std::sin(alpha) / ld, -params.max_turn_rate, params.max_turn_rate);
    }
    // Exact unicycle step.
    if (std::abs(omega) > 1e-12) {
      pos.x() += v / omega * (std::sin(heading + omega * dt) - std::sin(heading));
      pos.y() -= v / omega * (std::cos(heading + omega * dt) - std::cos(heading));
    } else {
      pos += v * dt * Vector2d(std::cos(heading), std::sin(heading));
    }
    heading = wrap_angle(heading + omega * dt);

    Vector2d reported = pos;
    if (kind == ExecutorKind::quadruped_proxy) {
      const double sway = params.gait_amplitude * std::sin(2.0 * kPi * params.gait_frequency * t) *
                          (v / params.max_speed);
      reported += sway * Vector2d(-std::sin(heading), std::cos(heading));
    }
    out.push_back({t0 + t, reported.x(), reported.y()});
  }
  return GroundTrack(std::move(out));
}

TrialResult run_pipeline(const Scenario& s, const NoiseSpec& noise, const PipelineConfig& config) {
  TrialResult r;
  r.scenario = s.name;
  r.seed = noise.seed;
  try {
    SimulationOutput sim = simulate(s, noise, config);
    r.truth = sim.truth;
    std::vector<StampedPose> poses;
    poses.reserve(sim.poses.size());
    for (const auto& p : sim.poses) poses.push_back(to_stamped_pose(p, PoseIngestOptions{}));
    const Association a = associate(sim.detections, poses, config.frame_rate);
    ExtractionResult ex = extract_trajectory(a.observations, config.intrinsics, s.robot_model(), config.filter);
    r.executed = execute(ex.ground, s.executor, config.executor);
    r.metrics = evaluate(ex.ground, r.executed, sim.truth, s.goal, config.success_threshold);
    r.extracted = std::move(ex.ground);
    r.trajectory = std::move(ex.trajectory);
  } catch (const Error& e) {
    r.metrics.reset();
    r.error = std::string(to_string(e.code())) + ": " + e.what();
  }
  return r;
}

}  // namespace vidtraj
