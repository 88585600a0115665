#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <random>

#include "hiervo/geometry.hpp"

using namespace hiervo;

namespace {

Intrinsics test_k() { return Intrinsics(100.0, 110.0, 63.5, 47.5, 128, 96); }

std::mt19937_64 rng(42);

Twist random_twist(double trans_range, double rot_range) {
  std::uniform_real_distribution<double> ut(-trans_range, trans_range);
  std::uniform_real_distribution<double> ur(-rot_range, rot_range);
  return Twist(Eigen::Vector3d(ut(rng), ut(rng), ut(rng)),
               Eigen::Vector3d(ur(rng), ur(rng), ur(rng)));
}

}  // namespace

TEST_CASE("backproject principal point lies on the optical axis") {
  const Intrinsics k = test_k();
  const Eigen::Vector3d p = backproject(k.cx, k.cy, 5.0, k);
  CHECK(p.isApprox(Eigen::Vector3d(0, 0, 5), 1e-12));
}

TEST_CASE("backproject one focal length right of center") {
  const Intrinsics k = test_k();
  const Eigen::Vector3d p = backproject(k.cx + k.fx, k.cy, 2.0, k);
  CHECK(p.isApprox(Eigen::Vector3d(2, 0, 2), 1e-12));
}

TEST_CASE("backproject rejects non-positive depth") {
  CHECK_THROWS_AS(backproject(10, 10, 0.0, test_k()), std::invalid_argument);
  CHECK_THROWS_AS(backproject(10, 10, -1.0, test_k()), std::invalid_argument);
}

TEST_CASE("project inverts backproject") {
  const Intrinsics k = test_k();
  const Projection pr = project(Eigen::Vector3d(0, 0, 5), k);
  CHECK(pr.in_front);
  CHECK(pr.u == doctest::Approx(k.cx).epsilon(1e-12));
  CHECK(pr.v == doctest::Approx(k.cy).epsilon(1e-12));
  CHECK(pr.depth == doctest::Approx(5.0));

  const Projection pr2 = project(Eigen::Vector3d(2, 0, 2), k);
  CHECK(pr2.u == doctest::Approx(k.cx + k.fx).epsilon(1e-12));
  CHECK(pr2.depth == doctest::Approx(2.0));
}

TEST_CASE("project flags points behind the camera") {
  CHECK_FALSE(project(Eigen::Vector3d(0, 0, -1), test_k()).in_front);
  CHECK_FALSE(project(Eigen::Vector3d(0, 0, 0), test_k()).in_front);
}

TEST_CASE("project/backproject round-trip on random pixels") {
  const Intrinsics k = test_k();
  std::uniform_real_distribution<double> uu(0.0, k.width - 1.0);
  std::uniform_real_distribution<double> uv(0.0, k.height - 1.0);
  std::uniform_real_distribution<double> ud(0.1, 80.0);
  for (int i = 0; i < 100; ++i) {
    const double u = uu(rng), v = uv(rng), d = ud(rng);
    const Projection pr = project(backproject(u, v, d, k), k);
    CHECK(pr.in_front);
    CHECK(pr.u == doctest::Approx(u).epsilon(1e-9));
    CHECK(pr.v == doctest::Approx(v).epsilon(1e-9));
    CHECK(pr.depth == doctest::Approx(d).epsilon(1e-9));
  }
}

TEST_CASE("compose with identity and with the inverse") {
  const Pose t = exp_twist(random_twist(1.0, 0.5));
  const Pose ti = compose(t, Pose::identity());
  CHECK((ti.matrix() - t.matrix()).norm() < 1e-12);
  const Pose id = compose(invert(t), t);
  CHECK((id.matrix() - Eigen::Matrix4d::Identity()).norm() < 1e-9);
}

TEST_CASE("compose of pure translations adds them") {
  const Pose a = exp_twist(Twist(Eigen::Vector3d(1, 0, 0), Eigen::Vector3d::Zero()));
  const Pose b = exp_twist(Twist(Eigen::Vector3d(0, 2, 0), Eigen::Vector3d::Zero()));
  const Pose c = compose(a, b);
  CHECK(c.translation().isApprox(Eigen::Vector3d(1, 2, 0), 1e-12));
  CHECK(c.rotation().isApprox(Eigen::Matrix3d::Identity(), 1e-12));
}

TEST_CASE("compose is associative") {
  for (int i = 0; i < 50; ++i) {
    const Pose a = exp_twist(random_twist(1.0, 1.0));
    const Pose b = exp_twist(random_twist(1.0, 1.0));
    const Pose c = exp_twist(random_twist(1.0, 1.0));
    const Pose lhs = compose(compose(a, b), c);
    const Pose rhs = compose(a, compose(b, c));
    CHECK((lhs.matrix() - rhs.matrix()).norm() < 1e-9);
  }
}

TEST_CASE("rotations stay orthonormal over long composition chains") {
  Pose t = Pose::identity();
  for (int i = 0; i < 1000; ++i) t = compose(t, exp_twist(random_twist(0.1, 0.2)));
  const Eigen::Matrix3d r = t.rotation();
  CHECK((r.transpose() * r - Eigen::Matrix3d::Identity()).norm() < 1e-9);
  CHECK(r.determinant() == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("invert of a pure translation negates it") {
  const Pose t = exp_twist(Twist(Eigen::Vector3d(0.3, -0.2, 0.7), Eigen::Vector3d::Zero()));
  CHECK(invert(t).translation().isApprox(Eigen::Vector3d(-0.3, 0.2, -0.7), 1e-12));
  const Pose id = invert(Pose::identity());
  CHECK((id.matrix() - Eigen::Matrix4d::Identity()).norm() == 0.0);
}

TEST_CASE("invert round-trips against the 4x4 matrix inverse") {
  for (int i = 0; i < 50; ++i) {
    const Pose t = exp_twist(random_twist(2.0, 1.5));
    const Eigen::Matrix4d direct = invert(t).matrix();
    const Eigen::Matrix4d oracle = t.matrix().inverse();
    CHECK((direct - oracle).norm() < 1e-9);
  }
}

TEST_CASE("exp of zero twist is the identity") {
  const Pose t = exp_twist(Twist());
  CHECK((t.matrix() - Eigen::Matrix4d::Identity()).norm() == 0.0);
}

TEST_CASE("exp of a quarter-turn yaw matches Rodrigues by hand") {
  const Pose t = exp_twist(Twist(Eigen::Vector3d::Zero(), Eigen::Vector3d(0, 0, M_PI / 2)));
  Eigen::Matrix3d expected;
  expected << 0, -1, 0, 1, 0, 0, 0, 0, 1;
  CHECK((t.rotation() - expected).norm() < 1e-12);
}

TEST_CASE("log(exp(xi)) = xi for random small twists") {
  for (int i = 0; i < 100; ++i) {
    const Twist xi = random_twist(1.0, 1.2);
    const Twist back = log_pose(exp_twist(xi));
    CHECK((back.xi - xi.xi).norm() < 1e-8);
  }
}

TEST_CASE("log throws near a half-turn rotation") {
  const Pose t = exp_twist(Twist(Eigen::Vector3d::Zero(), Eigen::Vector3d(M_PI - 1e-9, 0, 0)));
  CHECK_THROWS_AS(log_pose(t), std::domain_error);
}

TEST_CASE("log handles angles approaching pi") {
  const Eigen::Vector3d phi = (M_PI - 1e-3) * Eigen::Vector3d(1, 2, -1).normalized();
  const Eigen::Vector3d back = so3::log(so3::exp(phi));
  CHECK((back - phi).norm() < 1e-8);
}

TEST_CASE("pose_to_tq of the identity") {
  const auto [t, q] = pose_to_tq(Pose::identity());
  CHECK(t.norm() == 0.0);
  CHECK(q.w == doctest::Approx(1.0));
  CHECK(Eigen::Vector3d(q.x, q.y, q.z).norm() == doctest::Approx(0.0));
}

TEST_CASE("pose_to_tq hemisphere convention on a half-turn about z") {
  Eigen::Matrix3d r;
  r << -1, 0, 0, 0, -1, 0, 0, 0, 1;
  const auto [t, q] = pose_to_tq(Pose(r, Eigen::Vector3d(1, 2, 3)));
  CHECK(t.isApprox(Eigen::Vector3d(1, 2, 3)));
  CHECK(q.w == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(q.z == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("quaternion round-trips the rotation matrix") {
  for (int i = 0; i < 100; ++i) {
    const Pose t = exp_twist(random_twist(0.0, 1.5));
    const auto [tv, q] = pose_to_tq(t);
    CHECK(q.w >= 0.0);
    CHECK(Eigen::Vector4d(q.w, q.x, q.y, q.z).norm() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK((q.to_rotation() - t.rotation()).norm() < 1e-9);
  }
}

TEST_CASE("left Jacobian matches the dexp finite difference") {
  // exp(phi + h e_i) ~ exp((Jl h e_i)^) exp(phi)
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::Vector3d phi = random_twist(0, 1.5).phi();
    const Eigen::Matrix3d jl = so3::left_jacobian(phi);
    const double h = 1e-7;
    for (int i = 0; i < 3; ++i) {
      const Eigen::Matrix3d rp = so3::exp(phi + h * Eigen::Vector3d::Unit(i));
      const Eigen::Matrix3d rm = so3::exp(phi - h * Eigen::Vector3d::Unit(i));
      const Eigen::Matrix3d fd = (rp - rm) / (2 * h);
      const Eigen::Matrix3d analytic = hat(jl.col(i)) * so3::exp(phi);
      CHECK((fd - analytic).norm() < 1e-6);
    }
  }
}

TEST_CASE("left Jacobian directional derivative matches finite differences") {
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::Vector3d phi = random_twist(0, 1.5).phi();
    const auto djl = so3::left_jacobian_deriv(phi);
    const double h = 1e-6;
    for (int i = 0; i < 3; ++i) {
      const Eigen::Matrix3d jp = so3::left_jacobian(phi + h * Eigen::Vector3d::Unit(i));
      const Eigen::Matrix3d jm = so3::left_jacobian(phi - h * Eigen::Vector3d::Unit(i));
      const Eigen::Matrix3d fd = (jp - jm) / (2 * h);
      CHECK((fd - djl[i]).norm() < 1e-7);
    }
  }
}

TEST_CASE("left Jacobian derivative handles tiny angles") {
  const auto djl = so3::left_jacobian_deriv(Eigen::Vector3d(1e-9, -2e-9, 0));
  const double h = 1e-6;
  for (int i = 0; i < 3; ++i) {
    const Eigen::Matrix3d jp = so3::left_jacobian(h * Eigen::Vector3d::Unit(i));
    const Eigen::Matrix3d jm = so3::left_jacobian(-h * Eigen::Vector3d::Unit(i));
    const Eigen::Matrix3d fd = (jp - jm) / (2 * h);
    CHECK((fd - djl[i]).norm() < 1e-7);
  }
}

TEST_CASE("intrinsics invariants are enforced") {
  CHECK_THROWS_AS(Intrinsics(0, 1, 1, 1, 4, 4), std::invalid_argument);
  CHECK_THROWS_AS(Intrinsics(1, 1, 5, 1, 4, 4), std::invalid_argument);
  CHECK_NOTHROW(Intrinsics(1, 1, 1.5, 1.5, 4, 4));
}
