#pragma once

// Planar PnP: robot pose in the camera frame from the four corners of a
// detection box, using the infinitesimal plane-based (IPPE) analytic
// solution followed by Levenberg-Marquardt refinement of the reprojection
// error.

#include "vidtraj/geometry.hpp"

#include <array>
#include <span>
#include <vector>

namespace vidtraj {

/// Detector output: box center (u, v) and extent (w, h), all in pixels.
struct BoundingBox {
  double u = 0.0;
  double v = 0.0;
  double w = 0.0;
  double h = 0.0;
};

/// Throws invalid_argument unless w > 0, h > 0 and all fields are finite.
void validate(const BoundingBox& b);

/// Planar rectangle standing in for the robot's visible face. Corners live in
/// the robot frame at z = 0, ordered TL, TR, BR, BL with x right and y down.
class RobotModel {
 public:
  RobotModel(double width, double height);

  double width() const { return width_; }
  double height() const { return height_; }
  std::span<const Point3> points() const { return points_; }

 private:
  double width_;
  double height_;
  std::array<Point3, 4> points_;
};

struct PnpSolution {
  RigidTransform pose;  // robot -> camera
  double reprojection_rmse = 0.0;
};

/// Corners TL, TR, BR, BL of the box.
std::array<Pixel, 4> bbox_to_image_points(const BoundingBox& b);

/// Analytic planar pose candidates (at most two), each with positive depth,
/// sorted by reprojection RMSE. Equal RMSE keeps the first IPPE branch first.
/// Throws degenerate_configuration for rank-deficient homographies and
/// no_valid_pose when neither branch lies in front of the camera.
std::vector<PnpSolution> solve_ippe(const CameraIntrinsics& k, const RobotModel& model,
                                    std::span<const Pixel> points);

struct RefineOptions {
  int max_iterations = 50;
  double gradient_tolerance = 1e-10;
  double initial_damping = 1e-3;
  double max_damping = 1e12;
};

/// LM minimization of the summed squared reprojection error starting at
/// `init`. The returned RMSE never exceeds the input RMSE. Throws
/// diverged_refinement when no damping level reduces the cost while the
/// gradient is still significant.
PnpSolution refine_pose(const CameraIntrinsics& k, const RobotModel& model,
                        std::span<const Pixel> points, const PnpSolution& init,
                        const RefineOptions& options = {});

/// Full bbox -> IPPE -> refinement chain; returns the best solution.
PnpSolution estimate_robot_pose(const CameraIntrinsics& k, const RobotModel& model,
                                const BoundingBox& b);

/// Robot position in the camera frame: the translation of the best pose.
Point3 estimate_robot_position(const CameraIntrinsics& k, const RobotModel& model,
                               const BoundingBox& b);

// Residual machinery, exposed for derivative checks.

using Vector6d = Eigen::Matrix<double, 6, 1>;

/// Stacked (observed - projected) pixel residuals, 2 per model point.
Eigen::VectorXd reprojection_residuals(const CameraIntrinsics& k, const RobotModel& model,
                                       std::span<const Pixel> points, const RigidTransform& pose);

double reprojection_rmse(const CameraIntrinsics& k, const RobotModel& model,
                         std::span<const Pixel> points, const RigidTransform& pose);

/// Jacobian of reprojection_residuals with respect to the increment
/// (omega, dt) of apply_increment, evaluated at zero.
Eigen::MatrixXd reprojection_jacobian(const CameraIntrinsics& k, const RobotModel& model,
                                      const RigidTransform& pose);

/// R <- exp(omega) R, t <- t + dt, with delta = (omega, dt).
RigidTransform apply_increment(const RigidTransform& pose, const Vector6d& delta);

}  // namespace vidtraj
