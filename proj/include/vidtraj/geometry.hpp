#pragma once

// SE(3) pose algebra and the pinhole camera model.
//
// Conventions: camera frame is z forward, x right, y down. A RigidTransform
// carries its source and target frames; applying it maps source-frame points
// into the target frame. Composition and application check those tags.

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <string_view>

namespace vidtraj {

enum class Frame { world, camera, robot };

std::string_view to_string(Frame f);

/// Proper orthonormal 3x3 matrix. Construction from an arbitrary matrix
/// validates RᵀR = I and det(R) = 1 to 1e-9.
class Rotation {
 public:
  Rotation() : m_(Eigen::Matrix3d::Identity()) {}

  static Rotation from_matrix(const Eigen::Matrix3d& m);
  /// Exponential map of an axis-angle vector (radians).
  static Rotation exp(const Eigen::Vector3d& omega);
  /// Normalizes q before conversion.
  static Rotation from_quaternion(const Eigen::Quaterniond& q);

  const Eigen::Matrix3d& matrix() const { return m_; }
  Eigen::Vector3d log() const;
  Eigen::Quaterniond quaternion() const;
  Rotation transpose() const { return Rotation(m_.transpose(), Unchecked{}); }

  Eigen::Vector3d operator*(const Eigen::Vector3d& v) const { return m_ * v; }
  Rotation operator*(const Rotation& o) const { return Rotation(m_ * o.m_, Unchecked{}); }

 private:
  struct Unchecked {};
  Rotation(const Eigen::Matrix3d& m, Unchecked) : m_(m) {}

  Eigen::Matrix3d m_;
};

/// Geodesic angle between two rotations (radians).
double angle_between(const Rotation& a, const Rotation& b);

struct RigidTransform {
  Rotation rotation;
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();
  Frame source = Frame::world;
  Frame target = Frame::world;

  static RigidTransform identity(Frame source = Frame::world, Frame target = Frame::world) {
    return {Rotation(), Eigen::Vector3d::Zero(), source, target};
  }
};

/// Applies b then a. Requires a.source == b.target.
RigidTransform compose(const RigidTransform& a, const RigidTransform& b);
RigidTransform invert(const RigidTransform& t);

struct Point3 {
  Eigen::Vector3d xyz = Eigen::Vector3d::Zero();
  Frame frame = Frame::world;
};

Point3 transform_point(const RigidTransform& t, const Point3& p);

class CameraIntrinsics {
 public:
  CameraIntrinsics(double fx, double fy, double cx, double cy);

  double fx() const { return fx_; }
  double fy() const { return fy_; }
  double cx() const { return cx_; }
  double cy() const { return cy_; }

  /// Pixel -> normalized image plane coordinates.
  Eigen::Vector2d normalize(double u, double v) const {
    return {(u - cx_) / fx_, (v - cy_) / fy_};
  }

 private:
  double fx_, fy_, cx_, cy_;
};

struct Pixel {
  double u = 0.0;
  double v = 0.0;
};

/// Depth below which a transformed point counts as behind the camera.
inline constexpr double kMinDepth = 1e-9;

/// Pinhole projection of a point through `pose` (point frame -> camera).
/// Throws point_behind_camera when the camera-frame depth is <= kMinDepth.
Pixel project(const CameraIntrinsics& k, const RigidTransform& pose, const Point3& p);

/// Projection of a point already expressed in the camera frame.
Pixel project(const CameraIntrinsics& k, const Eigen::Vector3d& p_camera);

Eigen::Matrix3d skew(const Eigen::Vector3d& v);

}  // namespace vidtraj
