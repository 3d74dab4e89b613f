#include "support.hpp"

#include "vidtraj/error.hpp"
#include "vidtraj/geometry.hpp"

#include <doctest.h>

using namespace vidtraj;
using testing::Gen;
using Eigen::Matrix3d;
using Eigen::Vector3d;

namespace {

RigidTransform yaw(double angle, const Vector3d& t = Vector3d::Zero()) {
  return {Rotation::exp(Vector3d(0, 0, angle)), t};
}

double max_abs(const Matrix3d& m) { return m.cwiseAbs().maxCoeff(); }

void check_rotation_invariants(const Rotation& r) {
  CHECK(max_abs(r.matrix().transpose() * r.matrix() - Matrix3d::Identity()) < 1e-9);
  CHECK(r.matrix().determinant() > 0.0);
}

template <typename F>
Errc error_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return Errc::invalid_argument;
}

}  // namespace

TEST_CASE("compose with identity leaves a transform unchanged") {
  Gen g(1);
  const RigidTransform t = g.transform();
  const RigidTransform r = compose(RigidTransform::identity(), t);
  CHECK(max_abs(r.rotation.matrix() - t.rotation.matrix()) == 0.0);
  CHECK((r.translation - t.translation).norm() == 0.0);
}

TEST_CASE("compose with the inverse gives identity") {
  Gen g(2);
  for (int i = 0; i < 100; ++i) {
    const RigidTransform t = g.transform();
    const RigidTransform r = compose(t, invert(t));
    CHECK(max_abs(r.rotation.matrix() - Matrix3d::Identity()) < 1e-9);
    CHECK(r.translation.norm() < 1e-9);
  }
}

TEST_CASE("composing two translations adds them") {
  const RigidTransform a{Rotation(), Vector3d(1, 0, 0)};
  const RigidTransform b{Rotation(), Vector3d(0, 2, 0)};
  CHECK((compose(a, b).translation - Vector3d(1, 2, 0)).norm() == 0.0);
}

TEST_CASE("compose follows (Ra Rb, Ra tb + ta)") {
  Gen g(3);
  const RigidTransform a = g.transform(), b = g.transform();
  const RigidTransform c = compose(a, b);
  const Matrix3d ra = a.rotation.matrix(), rb = b.rotation.matrix();
  CHECK(max_abs(c.rotation.matrix() - ra * rb) < 1e-14);
  CHECK((c.translation - (ra * b.translation + a.translation)).norm() < 1e-12);
}

TEST_CASE("compose checks frame tags") {
  const auto cam_to_world = RigidTransform::identity(Frame::camera, Frame::world);
  const auto robot_to_camera = RigidTransform::identity(Frame::robot, Frame::camera);
  const RigidTransform r = compose(cam_to_world, robot_to_camera);
  CHECK(r.source == Frame::robot);
  CHECK(r.target == Frame::world);
  CHECK(error_of([&] { compose(robot_to_camera, cam_to_world); }) == Errc::frame_mismatch);
}

TEST_CASE("invert") {
  SUBCASE("identity") {
    const RigidTransform r = invert(RigidTransform::identity());
    CHECK(max_abs(r.rotation.matrix() - Matrix3d::Identity()) == 0.0);
    CHECK(r.translation.norm() == 0.0);
  }
  SUBCASE("pure translation negates") {
    const RigidTransform r = invert({Rotation(), Vector3d(1, 2, 3)});
    CHECK((r.translation - Vector3d(-1, -2, -3)).norm() == 0.0);
  }
  SUBCASE("yaw plus translation round-trips") {
    const RigidTransform t = yaw(std::numbers::pi / 2, Vector3d(0.5, -1, 2));
    const RigidTransform r = compose(t, invert(t));
    CHECK(max_abs(r.rotation.matrix() - Matrix3d::Identity()) < 1e-9);
    CHECK(r.translation.norm() < 1e-9);
  }
  SUBCASE("swaps frame tags") {
    const RigidTransform r = invert(RigidTransform::identity(Frame::camera, Frame::world));
    CHECK(r.source == Frame::world);
    CHECK(r.target == Frame::camera);
  }
}

TEST_CASE("invert is an involution") {
  Gen g(4);
  for (int i = 0; i < 200; ++i) {
    const RigidTransform t = g.transform();
    const RigidTransform r = invert(invert(t));
    CHECK(max_abs(r.rotation.matrix() - t.rotation.matrix()) < 1e-12);
    CHECK((r.translation - t.translation).norm() < 1e-12);
  }
}

TEST_CASE("project") {
  SUBCASE("optical axis hits the principal point") {
    const Pixel p = project(CameraIntrinsics(1, 1, 0, 0), RigidTransform::identity(Frame::camera, Frame::camera),
                            Point3{Vector3d(0, 0, 1), Frame::camera});
    CHECK(p.u == 0.0);
    CHECK(p.v == 0.0);
  }
  SUBCASE("hand-evaluated pixel") {
    const Pixel p = project(CameraIntrinsics(500, 500, 320, 240),
                            RigidTransform::identity(Frame::robot, Frame::camera), Point3{Vector3d(1, 0, 2), Frame::robot});
    CHECK(p.u == doctest::Approx(570.0).epsilon(1e-15));
    CHECK(p.v == doctest::Approx(240.0).epsilon(1e-15));
  }
  SUBCASE("point behind the camera") {
    const CameraIntrinsics k(500, 500, 320, 240);
    CHECK(error_of([&] {
            project(k, RigidTransform::identity(Frame::camera, Frame::camera), Point3{Vector3d(0, 0, -1), Frame::camera});
          }) == Errc::point_behind_camera);
    CHECK(error_of([&] { project(k, Vector3d(0, 0, kMinDepth)); }) == Errc::point_behind_camera);
  }
  SUBCASE("pose must land in the camera frame") {
    const CameraIntrinsics k(500, 500, 320, 240);
    CHECK(error_of([&] { project(k, RigidTransform::identity(), Point3{Vector3d(0, 0, 1)}); }) ==
          Errc::frame_mismatch);
  }
}

TEST_CASE("project matches the pinhole formula on random points") {
  Gen g(5);
  for (int i = 0; i < 500; ++i) {
    const double fx = g.uniform(100, 2000), fy = g.uniform(100, 2000), cx = g.uniform(0, 1000), cy = g.uniform(0, 1000);
    const Matrix3d R = g.rotation();
    const Vector3d p(g.uniform(-1, 1), g.uniform(-1, 1), g.uniform(-1, 1));
    Vector3d t(g.uniform(-1, 1), g.uniform(-1, 1), 0);
    t.z() = 3.0 + g.uniform(0, 5);  // keeps R p + t in front
    const Pixel px = project(CameraIntrinsics(fx, fy, cx, cy), RigidTransform{Rotation::from_matrix(R), t, Frame::robot, Frame::camera},
                             Point3{p, Frame::robot});
    const Eigen::Vector2d ref = testing::pinhole(fx, fy, cx, cy, R, t, p);
    CHECK(std::abs(px.u - ref.x()) < 1e-9);
    CHECK(std::abs(px.v - ref.y()) < 1e-9);
  }
}

TEST_CASE("doubling the intrinsics doubles pixel coordinates") {
  Gen g(6);
  for (int i = 0; i < 200; ++i) {
    const double fx = g.uniform(100, 1000), fy = g.uniform(100, 1000), cx = g.uniform(0, 500), cy = g.uniform(0, 500);
    const Vector3d p(g.uniform(-2, 2), g.uniform(-2, 2), g.uniform(0.5, 10));
    const Pixel a = project(CameraIntrinsics(fx, fy, cx, cy), p);
    const Pixel b = project(CameraIntrinsics(2 * fx, 2 * fy, 2 * cx, 2 * cy), p);
    CHECK(std::abs(b.u - 2 * a.u) < 1e-9 * std::max(1.0, std::abs(a.u)));
    CHECK(std::abs(b.v - 2 * a.v) < 1e-9 * std::max(1.0, std::abs(a.v)));
  }
}

TEST_CASE("transform_point") {
  SUBCASE("identity") {
    const Point3 p = transform_point(RigidTransform::identity(), Point3{Vector3d(1, 2, 3)});
    CHECK((p.xyz - Vector3d(1, 2, 3)).norm() == 0.0);
  }
  SUBCASE("translation of the origin") {
    const Point3 p = transform_point({Rotation(), Vector3d(1, 2, 3)}, Point3{});
    CHECK((p.xyz - Vector3d(1, 2, 3)).norm() == 0.0);
  }
  SUBCASE("quarter turn about z") {
    const Point3 p = transform_point(yaw(std::numbers::pi / 2), Point3{Vector3d(1, 0, 0)});
    CHECK((p.xyz - Vector3d(0, 1, 0)).norm() < 1e-12);
  }
  SUBCASE("retags the frame and rejects a foreign point") {
    const auto cam_to_world = RigidTransform::identity(Frame::camera, Frame::world);
    CHECK(transform_point(cam_to_world, Point3{Vector3d::Zero(), Frame::camera}).frame == Frame::world);
    CHECK(error_of([&] { transform_point(cam_to_world, Point3{Vector3d::Zero(), Frame::robot}); }) ==
          Errc::frame_mismatch);
  }
}

TEST_CASE("transform_point distributes over compose") {
  Gen g(7);
  for (int i = 0; i < 500; ++i) {
    const RigidTransform a = g.transform(), b = g.transform();
    const Point3 p{Vector3d(g.uniform(-5, 5), g.uniform(-5, 5), g.uniform(-5, 5))};
    const Point3 lhs = transform_point(compose(a, b), p);
    const Point3 rhs = transform_point(a, transform_point(b, p));
    CHECK((lhs.xyz - rhs.xyz).norm() < 1e-12);
  }
}

TEST_CASE("every produced rotation keeps the invariants") {
  Gen g(8);
  for (int i = 0; i < 300; ++i) {
    const Vector3d w = g.unit_vector() * g.uniform(0, 3.1);
    const Rotation e = Rotation::exp(w);
    check_rotation_invariants(e);
    CHECK(max_abs(e.matrix() - testing::rodrigues(w)) < 1e-12);
    const Rotation q = Rotation::from_quaternion(Eigen::Quaterniond(g.normal(), g.normal(), g.normal(), g.normal()));
    check_rotation_invariants(q);
    check_rotation_invariants(e * q);
    check_rotation_invariants(e.transpose());
    RigidTransform t = g.transform();
    for (int k = 0; k < 20; ++k) t = compose(t, g.transform());
    check_rotation_invariants(t.rotation);
    check_rotation_invariants(invert(t).rotation);
  }
}

TEST_CASE("rotation construction and conversions") {
  SUBCASE("non-orthonormal and improper matrices are rejected") {
    Matrix3d m = Matrix3d::Identity();
    m(0, 1) = 1e-6;
    CHECK(error_of([&] { Rotation::from_matrix(m); }) == Errc::invalid_argument);
    CHECK(error_of([&] { Rotation::from_matrix(-Matrix3d::Identity()); }) == Errc::invalid_argument);
  }
  SUBCASE("log inverts exp") {
    Gen g(9);
    for (int i = 0; i < 200; ++i) {
      const Vector3d w = g.unit_vector() * g.uniform(1e-6, 3.0);
      CHECK((Rotation::exp(w).log() - w).norm() < 1e-9);
    }
  }
  SUBCASE("quaternion round trip, canonical sign") {
    Gen g(10);
    for (int i = 0; i < 200; ++i) {
      const Rotation r = Rotation::from_matrix(g.rotation());
      const Eigen::Quaterniond q = r.quaternion();
      CHECK(q.w() >= 0.0);
      CHECK(max_abs(Rotation::from_quaternion(q).matrix() - r.matrix()) < 1e-12);
    }
  }
  SUBCASE("angle_between agrees with the trace formula") {
    Gen g(11);
    for (int i = 0; i < 200; ++i) {
      const Matrix3d a = g.rotation(), b = g.rotation();
      CHECK(angle_between(Rotation::from_matrix(a), Rotation::from_matrix(b)) ==
            doctest::Approx(testing::rotation_angle(a, b)).epsilon(1e-7));
    }
    const Rotation r = Rotation::exp(Vector3d(1e-9, 0, 0));
    CHECK(angle_between(Rotation(), r) == doctest::Approx(1e-9).epsilon(1e-6));
  }
}

TEST_CASE("intrinsics reject non-positive focal lengths") {
  CHECK(error_of([] { CameraIntrinsics(0, 500, 320, 240); }) == Errc::invalid_argument);
  CHECK(error_of([] { CameraIntrinsics(500, -1, 320, 240); }) == Errc::invalid_argument);
  const CameraIntrinsics k(500, 400, 320, 240);
  const Eigen::Vector2d n = k.normalize(570, 280);
  CHECK(n.x() == doctest::Approx(0.5));
  CHECK(n.y() == doctest::Approx(0.1));
}
