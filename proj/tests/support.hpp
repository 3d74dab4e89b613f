#pragma once

// Random generators and independent reference computations for the tests.
// Oracles here use plain formulas, never the library's own helpers.

#include "vidtraj/geometry.hpp"
#include "vidtraj/trajectory.hpp"

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

namespace testing {

using Eigen::Matrix3d;
using Eigen::Vector2d;
using Eigen::Vector3d;

class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  double normal() { return std::normal_distribution<double>(0.0, 1.0)(rng_); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
  bool coin(double p = 0.5) { return uniform(0.0, 1.0) < p; }

  Vector3d unit_vector() {
    Vector3d v;
    do v = Vector3d(normal(), normal(), normal());
    while (v.norm() < 1e-6);
    return v.normalized();
  }

  // Uniform over SO(3) via a normalized Gaussian quaternion.
  Matrix3d rotation() {
    Eigen::Quaterniond q(normal(), normal(), normal(), normal());
    q.normalize();
    return q.toRotationMatrix();
  }

  // In-plane spin, then a tilt about an axis in the camera x-y plane; the
  // plane normal ends up within max_tilt of the optical axis.
  Matrix3d tilted_rotation(double max_tilt) {
    const double spin = uniform(-std::numbers::pi, std::numbers::pi);
    const double tilt = uniform(0.0, max_tilt);
    const double az = uniform(-std::numbers::pi, std::numbers::pi);
    const Vector3d axis(std::cos(az), std::sin(az), 0.0);
    return Eigen::AngleAxisd(tilt, axis).toRotationMatrix() *
           Eigen::AngleAxisd(spin, Vector3d::UnitZ()).toRotationMatrix();
  }

  vidtraj::RigidTransform transform(vidtraj::Frame src = vidtraj::Frame::world,
                                    vidtraj::Frame dst = vidtraj::Frame::world) {
    return {vidtraj::Rotation::from_matrix(rotation()),
            Vector3d(uniform(-5, 5), uniform(-5, 5), uniform(-5, 5)), src, dst};
  }

  std::mt19937_64& engine() { return rng_; }

 private:
  std::mt19937_64 rng_;
};

// Rodrigues' formula written out, independent of the library's exp map.
inline Matrix3d rodrigues(const Vector3d& w) {
  const double th = w.norm();
  if (th < 1e-15) return Matrix3d::Identity();
  const Vector3d k = w / th;
  Matrix3d K;
  K << 0, -k.z(), k.y(), k.z(), 0, -k.x(), -k.y(), k.x(), 0;
  return Matrix3d::Identity() + std::sin(th) * K + (1 - std::cos(th)) * K * K;
}

inline double rotation_angle(const Matrix3d& a, const Matrix3d& b) {
  const double c = std::clamp(((a.transpose() * b).trace() - 1.0) / 2.0, -1.0, 1.0);
  return std::acos(c);
}

// u = fx x/z + cx, v = fy y/z + cy for the point R p + t.
inline Vector2d pinhole(double fx, double fy, double cx, double cy, const Matrix3d& R, const Vector3d& t,
                        const Vector3d& p) {
  const Vector3d q = R * p + t;
  return {fx * q.x() / q.z() + cx, fy * q.y() / q.z() + cy};
}

// Brute-force distance to a polyline by dense sampling of every segment.
inline double sampled_polyline_distance(const Vector2d& p, const std::vector<Vector2d>& line, int samples = 2000) {
  double best = (p - line.front()).norm();
  for (std::size_t i = 0; i + 1 < line.size(); ++i)
    for (int k = 0; k <= samples; ++k) {
      const double u = static_cast<double>(k) / samples;
      best = std::min(best, (p - (line[i] + u * (line[i + 1] - line[i]))).norm());
    }
  return best;
}

inline double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

inline vidtraj::GroundTrack track_of(const std::vector<Vector2d>& pts, double dt = 0.1) {
  std::vector<vidtraj::GroundPoint> g;
  for (std::size_t i = 0; i < pts.size(); ++i) g.push_back({static_cast<double>(i) * dt, pts[i].x(), pts[i].y()});
  return vidtraj::GroundTrack(std::move(g));
}

}  // namespace testing
