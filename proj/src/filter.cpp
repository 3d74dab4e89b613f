#include "vidtraj/filter.hpp"

#include "vidtraj/error.hpp"

#include <Eigen/Dense>

#include <cmath>

namespace vidtraj {

void validate(const FilterParams& p) {
  for (double v : {p.sigma_a, p.sigma_z, p.p0_pos, p.p0_vel})
    if (!(v > 0.0) || !std::isfinite(v))
      fail(Errc::invalid_argument, "filter parameters must be strictly positive");
}

namespace {

Matrix6d symmetrized(const Matrix6d& m) { return 0.5 * (m + m.transpose()); }

Eigen::Matrix<double, 3, 6> measurement_matrix() {
  Eigen::Matrix<double, 3, 6> h = Eigen::Matrix<double, 3, 6>::Zero();
  h.leftCols<3>().setIdentity();
  return h;
}

}  // namespace

Matrix6d process_noise(double dt, const FilterParams& p) {
  const double q = p.sigma_a * p.sigma_a;
  const double dt2 = dt * dt;
  Matrix6d m = Matrix6d::Zero();
  m.topLeftCorner<3, 3>().diagonal().setConstant(q * dt2 * dt2 / 4.0);
  m.topRightCorner<3, 3>().diagonal().setConstant(q * dt2 * dt / 2.0);
  m.bottomLeftCorner<3, 3>().diagonal().setConstant(q * dt2 * dt / 2.0);
  m.bottomRightCorner<3, 3>().diagonal().setConstant(q * dt2);
  return m;
}

FilterState initial_state(const Eigen::Vector3d& z, const FilterParams& p) {
  FilterState s;
  s.x.head<3>() = z;
  s.x.tail<3>().setZero();
  s.P.setZero();
  s.P.topLeftCorner<3, 3>().diagonal().setConstant(p.p0_pos);
  s.P.bottomRightCorner<3, 3>().diagonal().setConstant(p.p0_vel);
  return s;
}

FilterState predict(const FilterState& s, double dt, const FilterParams& p) {
  if (!(dt > 0.0) || !std::isfinite(dt)) fail(Errc::non_positive_dt, "predict needs dt > 0");
  Matrix6d f = Matrix6d::Identity();
  f.topRightCorner<3, 3>().diagonal().setConstant(dt);
  FilterState out;
  out.x = f * s.x;
  out.P = symmetrized(f * s.P * f.transpose() + process_noise(dt, p));
  return out;
}

double Innovation::nis() const { return y.dot(S.ldlt().solve(y)); }

Innovation innovation(const FilterState& s, const Eigen::Vector3d& z, const FilterParams& p) {
  const auto h = measurement_matrix();
  Innovation inn;
  inn.y = z - h * s.x;
  inn.S = h * s.P * h.transpose();
  inn.S.diagonal().array() += p.sigma_z * p.sigma_z;
  return inn;
}

FilterState update(const FilterState& s, const Eigen::Vector3d& z, const FilterParams& p) {
  const auto h = measurement_matrix();
  const Innovation inn = innovation(s, z, p);
  const Eigen::LLT<Eigen::Matrix3d> llt(inn.S);
  if (llt.info() != Eigen::Success || !inn.S.allFinite())
    fail(Errc::singular_innovation, "innovation covariance is not positive definite");
  // K = P Hᵀ S⁻¹
  const Eigen::Matrix<double, 6, 3> gain = llt.solve(h * s.P).transpose();

  const Eigen::Matrix3d r = Eigen::Matrix3d::Identity() * (p.sigma_z * p.sigma_z);
  const Matrix6d ikh = Matrix6d::Identity() - gain * h;
  FilterState out;
  out.x = s.x + gain * inn.y;
  // Joseph form keeps P positive semidefinite under round-off.
  out.P = symmetrized(ikh * s.P * ikh.transpose() + gain * r * gain.transpose());
  return out;
}

std::vector<FilteredPosition> run_filter(std::span<const Measurement> ms, const FilterParams& p) {
  validate(p);
  if (ms.empty()) fail(Errc::empty_sequence, "no measurements to filter");
  for (std::size_t i = 1; i < ms.size(); ++i)
    if (!(ms[i].timestamp > ms[i - 1].timestamp))
      fail(Errc::non_monotonic_timestamps, "measurement timestamps must strictly increase");

  std::size_t first = 0;
  while (first < ms.size() && !ms[first].valid) ++first;
  if (first == ms.size()) fail(Errc::empty_sequence, "no valid measurement in sequence");

  std::vector<FilteredPosition> out;
  out.reserve(ms.size());
  for (std::size_t i = 0; i < first; ++i)
    out.push_back({ms[i].timestamp, {ms[first].z, Frame::camera}, false});

  FilterState s = initial_state(ms[first].z, p);
  out.push_back({ms[first].timestamp, {s.position(), Frame::camera}, true});
  for (std::size_t i = first + 1; i < ms.size(); ++i) {
    s = predict(s, ms[i].timestamp - ms[i - 1].timestamp, p);
    if (ms[i].valid) s = update(s, ms[i].z, p);
    out.push_back({ms[i].timestamp, {s.position(), Frame::camera}, ms[i].valid});
  }
  return out;
}

}  // namespace vidtraj
