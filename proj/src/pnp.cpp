#include "vidtraj/pnp.hpp"

#include "vidtraj/error.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <optional>

namespace vidtraj {

void validate(const BoundingBox& b) {
  if (!std::isfinite(b.u) || !std::isfinite(b.v) || !std::isfinite(b.w) || !std::isfinite(b.h))
    fail(Errc::invalid_argument, "bounding box has non-finite fields");
  if (!(b.w > 0.0) || !(b.h > 0.0))
    fail(Errc::invalid_argument, "bounding box must have positive width and height");
}

RobotModel::RobotModel(double width, double height) : width_(width), height_(height) {
  if (!(width > 0.0) || !(height > 0.0) || !std::isfinite(width) || !std::isfinite(height))
    fail(Errc::invalid_argument, "robot model dimensions must be positive");
  const double hw = 0.5 * width;
  const double hh = 0.5 * height;
  points_ = {Point3{{-hw, -hh, 0.0}, Frame::robot}, Point3{{hw, -hh, 0.0}, Frame::robot},
             Point3{{hw, hh, 0.0}, Frame::robot}, Point3{{-hw, hh, 0.0}, Frame::robot}};
}

std::array<Pixel, 4> bbox_to_image_points(const BoundingBox& b) {
  validate(b);
  const double hw = 0.5 * b.w;
  const double hh = 0.5 * b.h;
  return {Pixel{b.u - hw, b.v - hh}, Pixel{b.u + hw, b.v - hh}, Pixel{b.u + hw, b.v + hh},
          Pixel{b.u - hw, b.v + hh}};
}

namespace {

using Points2 = std::vector<Eigen::Vector2d>;

// Similarity that moves the centroid to the origin and the mean distance to sqrt(2).
Eigen::Matrix3d hartley(const Points2& pts) {
  Eigen::Vector2d c = Eigen::Vector2d::Zero();
  for (const auto& p : pts) c += p;
  c /= static_cast<double>(pts.size());
  double mean = 0.0;
  for (const auto& p : pts) mean += (p - c).norm();
  mean /= static_cast<double>(pts.size());
  if (!(mean > 1e-300)) fail(Errc::degenerate_configuration, "all points coincide");
  const double s = std::sqrt(2.0) / mean;
  Eigen::Matrix3d t;
  t << s, 0.0, -s * c.x(), 0.0, s, -s * c.y(), 0.0, 0.0, 1.0;
  return t;
}

// DLT homography mapping `from` onto `to`, normalized so H(2,2) = 1.
Eigen::Matrix3d estimate_homography(const Points2& from, const Points2& to) {
  const Eigen::Matrix3d tf = hartley(from);
  const Eigen::Matrix3d tt = hartley(to);
  const auto n = static_cast<Eigen::Index>(from.size());
  // Pad to at least 9 rows so the full V is always available.
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(std::max<Eigen::Index>(2 * n, 9), 9);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Vector3d p = tf * from[i].homogeneous();
    const Eigen::Vector3d q = tt * to[i].homogeneous();
    const double x = p.x(), y = p.y(), u = q.x(), v = q.y();
    a.row(2 * i) << x, y, 1.0, 0.0, 0.0, 0.0, -u * x, -u * y, -u;
    a.row(2 * i + 1) << 0.0, 0.0, 0.0, x, y, 1.0, -v * x, -v * y, -v;
  }
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
  const Eigen::VectorXd& s = svd.singularValues();
  // A second (near-)null direction means the correspondences do not pin down H.
  if (s(7) <= 1e-9 * s(0)) fail(Errc::degenerate_configuration, "homography is rank deficient");
  const Eigen::VectorXd h = svd.matrixV().col(8);
  Eigen::Matrix3d hn;
  hn << h(0), h(1), h(2), h(3), h(4), h(5), h(6), h(7), h(8);
  Eigen::Matrix3d hm = tt.inverse() * hn * tf;
  const double det = hm.determinant();
  const double scale = hm.norm();
  if (!(std::abs(det) > 1e-12 * scale * scale * scale) || std::abs(hm(2, 2)) < 1e-12 * scale)
    fail(Errc::degenerate_configuration, "homography is singular");
  return hm / hm(2, 2);
}

// Rotation whose third column is the unit vector along a.
Eigen::Matrix3d rotation_z_onto(const Eigen::Vector3d& a_in) {
  const Eigen::Vector3d a = a_in.normalized();
  Eigen::Matrix3d r;
  if (std::abs(1.0 + a.z()) < 1e-12) {
    r = Eigen::Vector3d(1.0, 1.0, -1.0).asDiagonal();
    return r;
  }
  const double d = 1.0 / (1.0 + a.z());
  // Rows of the rotation taking a onto z; transposed on return.
  r << 1.0 - a.x() * a.x() * d, -a.x() * a.y() * d, -a.x(),  //
      -a.x() * a.y() * d, 1.0 - a.y() * a.y() * d, -a.y(),  //
      a.x(), a.y(), 1.0 - (a.x() * a.x() + a.y() * a.y()) * d;
  return r.transpose();
}

Eigen::Matrix3d nearest_rotation(const Eigen::Matrix3d& m) {
  const Eigen::JacobiSVD<Eigen::Matrix3d> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d r = svd.matrixU() * svd.matrixV().transpose();
  if (r.determinant() < 0.0) {
    Eigen::Matrix3d u = svd.matrixU();
    u.col(2) *= -1.0;
    r = u * svd.matrixV().transpose();
  }
  return r;
}

// The two rotations consistent with the homography's first-order behaviour
// at the model origin: J is the 2x2 Jacobian there, v the image of the origin.
std::array<Eigen::Matrix3d, 2> ippe_rotations(const Eigen::Matrix2d& jac, const Eigen::Vector2d& v) {
  const Eigen::Matrix3d rv = rotation_z_onto(Eigen::Vector3d(v.x(), v.y(), 1.0));
  Eigen::Matrix2d b;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) b(i, j) = rv(i, j) - v(i) * rv(2, j);
  const Eigen::Matrix2d a = b.inverse() * jac;

  const Eigen::Matrix2d aat = a * a.transpose();
  const double tr = aat(0, 0) + aat(1, 1);
  const double disc = std::sqrt((aat(0, 0) - aat(1, 1)) * (aat(0, 0) - aat(1, 1)) + 4.0 * aat(0, 1) * aat(0, 1));
  const double gamma = std::sqrt(0.5 * (tr + disc));
  if (!(gamma > 0.0)) fail(Errc::degenerate_configuration, "homography Jacobian vanishes");

  const Eigen::Matrix2d r22 = a / gamma;
  const double b0 = std::sqrt(std::max(0.0, 1.0 - r22.col(0).squaredNorm()));
  double b1 = std::sqrt(std::max(0.0, 1.0 - r22.col(1).squaredNorm()));
  if (-r22.col(0).dot(r22.col(1)) < 0.0) b1 = -b1;

  std::array<Eigen::Matrix3d, 2> out;
  for (int branch = 0; branch < 2; ++branch) {
    const double sign = branch == 0 ? 1.0 : -1.0;
    const Eigen::Vector3d c0(r22(0, 0), r22(1, 0), sign * b0);
    const Eigen::Vector3d c1(r22(0, 1), r22(1, 1), sign * b1);
    Eigen::Matrix3d local;
    local.col(0) = c0;
    local.col(1) = c1;
    local.col(2) = c0.cross(c1);
    out[branch] = nearest_rotation(rv * local);
  }
  return out;
}

// Least-squares translation for a fixed rotation from normalized image points.
Eigen::Vector3d ippe_translation(const Eigen::Matrix3d& r, const Points2& model_xy,
                                 const Points2& normalized) {
  const auto n = static_cast<Eigen::Index>(model_xy.size());
  Eigen::MatrixXd m(2 * n, 3);
  Eigen::VectorXd rhs(2 * n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Vector3d q = r.leftCols<2>() * model_xy[i];
    const double x = normalized[i].x(), y = normalized[i].y();
    m.row(2 * i) << 1.0, 0.0, -x;
    m.row(2 * i + 1) << 0.0, 1.0, -y;
    rhs(2 * i) = x * q.z() - q.x();
    rhs(2 * i + 1) = y * q.z() - q.y();
  }
  return m.colPivHouseholderQr().solve(rhs);
}

void check_sizes(const RobotModel& model, std::span<const Pixel> points) {
  if (points.size() != model.points().size())
    fail(Errc::length_mismatch, "image point count differs from model point count");
}

}  // namespace

Eigen::VectorXd reprojection_residuals(const CameraIntrinsics& k, const RobotModel& model,
                                       std::span<const Pixel> points, const RigidTransform& pose) {
  check_sizes(model, points);
  const auto mp = model.points();
  Eigen::VectorXd r(2 * static_cast<Eigen::Index>(mp.size()));
  for (std::size_t i = 0; i < mp.size(); ++i) {
    const Pixel p = project(k, pose, mp[i]);
    r(2 * i) = points[i].u - p.u;
    r(2 * i + 1) = points[i].v - p.v;
  }
  return r;
}

double reprojection_rmse(const CameraIntrinsics& k, const RobotModel& model,
                         std::span<const Pixel> points, const RigidTransform& pose) {
  const Eigen::VectorXd r = reprojection_residuals(k, model, points, pose);
  return std::sqrt(r.squaredNorm() / static_cast<double>(points.size()));
}

Eigen::MatrixXd reprojection_jacobian(const CameraIntrinsics& k, const RobotModel& model,
                                      const RigidTransform& pose) {
  const auto mp = model.points();
  Eigen::MatrixXd jac(2 * static_cast<Eigen::Index>(mp.size()), 6);
  for (std::size_t i = 0; i < mp.size(); ++i) {
    const Eigen::Vector3d rp = pose.rotation * mp[i].xyz;
    const Eigen::Vector3d q = rp + pose.translation;
    if (!(q.z() > kMinDepth)) fail(Errc::point_behind_camera, "jacobian at point behind camera");
    const double iz = 1.0 / q.z();
    Eigen::Matrix<double, 2, 3> dpi;
    dpi << k.fx() * iz, 0.0, -k.fx() * q.x() * iz * iz,  //
        0.0, k.fy() * iz, -k.fy() * q.y() * iz * iz;
    // d(exp(w) R p)/dw at 0 is -[R p]x; residual is observed minus projected.
    jac.block<2, 3>(2 * i, 0) = dpi * skew(rp);
    jac.block<2, 3>(2 * i, 3) = -dpi;
  }
  return jac;
}

RigidTransform apply_increment(const RigidTransform& pose, const Vector6d& delta) {
  RigidTransform out = pose;
  out.rotation = Rotation::exp(delta.head<3>()) * pose.rotation;
  out.translation = pose.translation + delta.tail<3>();
  return out;
}

std::vector<PnpSolution> solve_ippe(const CameraIntrinsics& k, const RobotModel& model,
                                    std::span<const Pixel> points) {
  check_sizes(model, points);
  const auto mp = model.points();

  Eigen::Vector2d centroid = Eigen::Vector2d::Zero();
  for (const auto& p : mp) centroid += p.xyz.head<2>();
  centroid /= static_cast<double>(mp.size());

  Points2 model_xy, normalized;
  for (std::size_t i = 0; i < mp.size(); ++i) {
    model_xy.push_back(mp[i].xyz.head<2>() - centroid);
    if (!std::isfinite(points[i].u) || !std::isfinite(points[i].v))
      fail(Errc::invalid_argument, "image point is not finite");
    normalized.push_back(k.normalize(points[i].u, points[i].v));
  }

  const Eigen::Matrix3d h = estimate_homography(model_xy, normalized);
  Eigen::Matrix2d jac;
  jac << h(0, 0) - h(2, 0) * h(0, 2), h(0, 1) - h(2, 1) * h(0, 2),  //
      h(1, 0) - h(2, 0) * h(1, 2), h(1, 1) - h(2, 1) * h(1, 2);
  const Eigen::Vector2d v(h(0, 2), h(1, 2));

  std::vector<PnpSolution> out;
  for (const Eigen::Matrix3d& r : ippe_rotations(jac, v)) {
    const Eigen::Vector3d tc = ippe_translation(r, model_xy, normalized);
    RigidTransform pose{Rotation::from_matrix(r), Eigen::Vector3d::Zero(), Frame::robot,
                        Frame::camera};
    // Undo the centroid shift: R (P - c) + tc = R P + (tc - R c).
    pose.translation = tc - r.leftCols<2>() * centroid;
    if (!(pose.translation.z() > 0.0) || !pose.translation.allFinite()) continue;
    try {
      out.push_back({pose, reprojection_rmse(k, model, points, pose)});
    } catch (const Error& e) {
      if (e.code() != Errc::point_behind_camera) throw;
    }
  }
  if (out.empty()) fail(Errc::no_valid_pose, "no IPPE branch places the model in front of the camera");
  std::stable_sort(out.begin(), out.end(), [](const PnpSolution& a, const PnpSolution& b) {
    return a.reprojection_rmse < b.reprojection_rmse;
  });
  return out;
}

PnpSolution refine_pose(const CameraIntrinsics& k, const RobotModel& model,
                        std::span<const Pixel> points, const PnpSolution& init,
                        const RefineOptions& options) {
  if (!(init.pose.translation.z() > 0.0))
    fail(Errc::invalid_argument, "refinement needs an initial pose in front of the camera");

  RigidTransform pose = init.pose;
  Eigen::VectorXd r = reprojection_residuals(k, model, points, pose);
  double cost = r.squaredNorm();
  if (!std::isfinite(cost)) fail(Errc::diverged_refinement, "non-finite initial cost");

  double lambda = options.initial_damping;
  bool accepted_any = false;
  for (int iter = 0; iter < options.max_iterations; ++iter) {
    const Eigen::MatrixXd jac = reprojection_jacobian(k, model, pose);
    const Vector6d grad = jac.transpose() * r;
    if (grad.norm() < options.gradient_tolerance) break;
    const Eigen::Matrix<double, 6, 6> normal = jac.transpose() * jac;

    bool stepped = false;
    while (lambda <= options.max_damping) {
      Eigen::Matrix<double, 6, 6> damped = normal;
      damped.diagonal() += lambda * normal.diagonal();
      const Vector6d delta = damped.ldlt().solve(-grad);
      const RigidTransform candidate = apply_increment(pose, delta);
      std::optional<Eigen::VectorXd> rc;
      try {
        rc = reprojection_residuals(k, model, points, candidate);
      } catch (const Error& e) {
        if (e.code() != Errc::point_behind_camera) throw;
      }
      if (rc && rc->squaredNorm() < cost) {
        pose = candidate;
        r = *rc;
        cost = rc->squaredNorm();
        lambda = std::max(lambda / 10.0, 1e-12);
        stepped = true;
        break;
      }
      lambda *= 10.0;
    }
    if (!stepped) {
      // Exhausted damping schedule. At a genuine minimum the gradient is at
      // round-off level; anything larger means the start point was bad.
      if (!accepted_any && grad.norm() > 1e-6 * std::max(1.0, cost))
        fail(Errc::diverged_refinement, "reprojection error did not decrease at any damping level");
      break;
    }
    accepted_any = true;
  }
  return {pose, std::sqrt(cost / static_cast<double>(points.size()))};
}

PnpSolution estimate_robot_pose(const CameraIntrinsics& k, const RobotModel& model,
                                const BoundingBox& b) {
  const auto corners = bbox_to_image_points(b);
  const auto candidates = solve_ippe(k, model, corners);
  try {
    return refine_pose(k, model, corners, candidates.front());
  } catch (const Error& e) {
    if (e.code() != Errc::diverged_refinement) throw;
    return candidates.front();
  }
}

Point3 estimate_robot_position(const CameraIntrinsics& k, const RobotModel& model,
                               const BoundingBox& b) {
  return {estimate_robot_pose(k, model, b).pose.translation, Frame::camera};
}

}  // namespace vidtraj
