#pragma once

// Constant-velocity Kalman filter over robot positions in the camera frame.
// State is (position, velocity); only position is measured. Both models are
// linear, so this is the exact linear filter.

#include "vidtraj/geometry.hpp"

#include <Eigen/Core>

#include <span>
#include <vector>

namespace vidtraj {

using Vector6d = Eigen::Matrix<double, 6, 1>;
using Matrix6d = Eigen::Matrix<double, 6, 6>;

struct FilterState {
  Vector6d x = Vector6d::Zero();
  Matrix6d P = Matrix6d::Identity();

  Eigen::Vector3d position() const { return x.head<3>(); }
  Eigen::Vector3d velocity() const { return x.tail<3>(); }
};

struct FilterParams {
  double sigma_a = 0.5;    // white-noise acceleration density, m/s^2
  double sigma_z = 0.05;   // per-axis measurement std, m
  double p0_pos = 0.0025;  // initial position variance, m^2
  double p0_vel = 1.0;     // initial velocity variance, m^2/s^2
};

void validate(const FilterParams& p);

struct Measurement {
  double timestamp = 0.0;
  Eigen::Vector3d z = Eigen::Vector3d::Zero();
  bool valid = true;
};

struct FilteredPosition {
  double timestamp = 0.0;
  Point3 position;        // camera frame
  bool measured = false;  // false for prediction-only steps
};

/// Discretized white-noise-acceleration covariance for step dt.
Matrix6d process_noise(double dt, const FilterParams& p);

FilterState initial_state(const Eigen::Vector3d& z, const FilterParams& p);

FilterState predict(const FilterState& s, double dt, const FilterParams& p);
FilterState update(const FilterState& s, const Eigen::Vector3d& z, const FilterParams& p);

/// Innovation z - Hx and its covariance HPHᵀ + R for the given prior.
struct Innovation {
  Eigen::Vector3d y;
  Eigen::Matrix3d S;
  double nis() const;
};
Innovation innovation(const FilterState& s, const Eigen::Vector3d& z, const FilterParams& p);

/// Filters a measurement sequence. The first valid measurement seeds the
/// state with zero velocity; frames before it repeat the seed position.
/// Invalid measurements become prediction-only steps. Output length equals
/// input length.
std::vector<FilteredPosition> run_filter(std::span<const Measurement> ms, const FilterParams& p);

}  // namespace vidtraj
