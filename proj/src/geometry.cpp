#include "vidtraj/geometry.hpp"

#include "vidtraj/error.hpp"

#include <cmath>
#include <sstream>

namespace vidtraj {

std::string_view to_string(Frame f) {
  switch (f) {
    case Frame::world: return "world";
    case Frame::camera: return "camera";
    case Frame::robot: return "robot";
  }
  return "?";
}

namespace {

constexpr double kOrthoTol = 1e-9;

std::string frame_pair(Frame a, Frame b) {
  std::ostringstream os;
  os << to_string(a) << " vs " << to_string(b);
  return os.str();
}

}  // namespace

Rotation Rotation::from_matrix(const Eigen::Matrix3d& m) {
  if (!m.allFinite()) fail(Errc::invalid_argument, "rotation has non-finite entries");
  const double ortho = (m.transpose() * m - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
  if (ortho > kOrthoTol) fail(Errc::invalid_argument, "rotation is not orthonormal");
  if (std::abs(m.determinant() - 1.0) > kOrthoTol)
    fail(Errc::invalid_argument, "rotation is not proper (det != 1)");
  return Rotation(m, Unchecked{});
}

Rotation Rotation::exp(const Eigen::Vector3d& omega) {
  const double angle = omega.norm();
  if (angle < 1e-300) return Rotation();
  return Rotation(Eigen::AngleAxisd(angle, omega / angle).toRotationMatrix(), Unchecked{});
}

Rotation Rotation::from_quaternion(const Eigen::Quaterniond& q) {
  return Rotation(q.normalized().toRotationMatrix(), Unchecked{});
}

Eigen::Vector3d Rotation::log() const {
  const Eigen::AngleAxisd aa(m_);
  return aa.angle() * aa.axis();
}

Eigen::Quaterniond Rotation::quaternion() const {
  Eigen::Quaterniond q(m_);
  q.normalize();
  // Canonical hemisphere so that file output is unique.
  if (q.w() < 0.0) q.coeffs() *= -1.0;
  return q;
}

double angle_between(const Rotation& a, const Rotation& b) {
  const Eigen::Matrix3d d = a.matrix().transpose() * b.matrix();
  // atan2 form stays accurate near zero where acos((tr-1)/2) loses digits.
  const Eigen::Vector3d axis(d(2, 1) - d(1, 2), d(0, 2) - d(2, 0), d(1, 0) - d(0, 1));
  return std::atan2(0.5 * axis.norm(), 0.5 * (d.trace() - 1.0));
}

RigidTransform compose(const RigidTransform& a, const RigidTransform& b) {
  if (a.source != b.target)
    fail(Errc::frame_mismatch, "compose: " + frame_pair(a.source, b.target));
  return {a.rotation * b.rotation, a.rotation * b.translation + a.translation, b.source, a.target};
}

RigidTransform invert(const RigidTransform& t) {
  const Rotation rt = t.rotation.transpose();
  return {rt, -(rt * t.translation), t.target, t.source};
}

Point3 transform_point(const RigidTransform& t, const Point3& p) {
  if (p.frame != t.source)
    fail(Errc::frame_mismatch, "transform_point: " + frame_pair(p.frame, t.source));
  return {t.rotation * p.xyz + t.translation, t.target};
}

CameraIntrinsics::CameraIntrinsics(double fx, double fy, double cx, double cy)
    : fx_(fx), fy_(fy), cx_(cx), cy_(cy) {
  if (!(fx > 0.0) || !(fy > 0.0) || !std::isfinite(fx) || !std::isfinite(fy))
    fail(Errc::invalid_argument, "focal lengths must be positive and finite");
  if (!std::isfinite(cx) || !std::isfinite(cy))
    fail(Errc::invalid_argument, "principal point must be finite");
}

Pixel project(const CameraIntrinsics& k, const Eigen::Vector3d& p) {
  if (!(p.z() > kMinDepth)) fail(Errc::point_behind_camera, "point has non-positive depth");
  return {k.fx() * (p.x() / p.z()) + k.cx(), k.fy() * (p.y() / p.z()) + k.cy()};
}

Pixel project(const CameraIntrinsics& k, const RigidTransform& pose, const Point3& p) {
  if (pose.target != Frame::camera)
    fail(Errc::frame_mismatch, "project: pose must map into the camera frame");
  return project(k, transform_point(pose, p).xyz);
}

Eigen::Matrix3d skew(const Eigen::Vector3d& v) {
  Eigen::Matrix3d s;
  s << 0.0, -v.z(), v.y(), v.z(), 0.0, -v.x(), -v.y(), v.x(), 0.0;
  return s;
}

}  // namespace vidtraj
