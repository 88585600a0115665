#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <array>

namespace hiervo {

/// Pinhole camera with pixel-center-at-integer convention.
struct Intrinsics {
  double fx = 0, fy = 0, cx = 0, cy = 0;
  int width = 0, height = 0;

  Intrinsics() = default;
  Intrinsics(double fx_, double fy_, double cx_, double cy_, int w, int h);

  /// Intrinsics after one 2x box downsample of the image.
  Intrinsics half() const;
};

/// Minimum projected z before a point counts as behind the camera.
inline constexpr double kEpsZ = 1e-6;

/// 6-vector tangent parameterization: translational part rho (m) first,
/// rotational part phi (rad) second.
struct Twist {
  Eigen::Matrix<double, 6, 1> xi = Eigen::Matrix<double, 6, 1>::Zero();

  Twist() = default;
  explicit Twist(const Eigen::Matrix<double, 6, 1>& v) : xi(v) {}
  Twist(const Eigen::Vector3d& rho, const Eigen::Vector3d& phi) {
    xi.head<3>() = rho;
    xi.tail<3>() = phi;
  }
  Eigen::Vector3d rho() const { return xi.head<3>(); }
  Eigen::Vector3d phi() const { return xi.tail<3>(); }
  double norm() const { return xi.norm(); }
};

/// Unit quaternion with the w >= 0 hemisphere convention.
struct Quat {
  double w = 1, x = 0, y = 0, z = 0;

  Eigen::Vector4d coeffs() const { return {w, x, y, z}; }
  Eigen::Matrix3d to_rotation() const;
  static Quat from_rotation(const Eigen::Matrix3d& r);
};

/// Rigid SE(3) transform. Rotation drift from long composition chains is
/// bounded by re-orthonormalizing every 32 compositions.
class Pose {
 public:
  Pose() : rotation_(Eigen::Matrix3d::Identity()), translation_(Eigen::Vector3d::Zero()) {}
  Pose(const Eigen::Matrix3d& rotation, const Eigen::Vector3d& translation);

  static Pose identity() { return {}; }

  const Eigen::Matrix3d& rotation() const { return rotation_; }
  const Eigen::Vector3d& translation() const { return translation_; }

  Eigen::Vector3d apply(const Eigen::Vector3d& p) const { return rotation_ * p + translation_; }
  Eigen::Matrix4d matrix() const;

  friend Pose compose(const Pose& a, const Pose& b);
  friend Pose invert(const Pose& t);

 private:
  Eigen::Matrix3d rotation_;
  Eigen::Vector3d translation_;
  int age_ = 0;  // compositions since last re-orthonormalization
};

/// Applies b then a: result(p) = a(b(p)).
Pose compose(const Pose& a, const Pose& b);
Pose invert(const Pose& t);

Pose exp_twist(const Twist& xi);
/// Inverse of exp_twist. Throws std::domain_error when the rotation angle
/// is within 1e-6 of pi (the log is ambiguous there).
Twist log_pose(const Pose& t);

/// Translation + hemisphere-fixed unit quaternion of a pose.
std::pair<Eigen::Vector3d, Quat> pose_to_tq(const Pose& t);

Eigen::Matrix3d hat(const Eigen::Vector3d& v);

/// Nearest rotation matrix (SVD projection onto SO(3)).
Eigen::Matrix3d orthonormalized(const Eigen::Matrix3d& r);

namespace so3 {
Eigen::Matrix3d exp(const Eigen::Vector3d& phi);
Eigen::Vector3d log(const Eigen::Matrix3d& r);
/// Left Jacobian J_l(phi) with exp(phi + d) ~ exp((J_l d)^) exp(phi).
Eigen::Matrix3d left_jacobian(const Eigen::Vector3d& phi);
Eigen::Matrix3d left_jacobian_inv(const Eigen::Vector3d& phi);
/// Directional derivatives dJ_l/dphi_i, i = 0..2.
std::array<Eigen::Matrix3d, 3> left_jacobian_deriv(const Eigen::Vector3d& phi);
}  // namespace so3

/// Pinhole back-projection: depth * K^-1 [u, v, 1]^T.
/// Throws std::invalid_argument for non-positive depth.
Eigen::Vector3d backproject(double u, double v, double depth, const Intrinsics& k);

struct Projection {
  double u = 0, v = 0;
  double depth = 0;       // the camera-frame z of the input point
  bool in_front = false;  // z > kEpsZ
};

/// Pinhole projection; `in_front` is false when the point sits behind the
/// camera (callers treat the pixel as invalid rather than aborting).
Projection project(const Eigen::Vector3d& p, const Intrinsics& k);

}  // namespace hiervo
