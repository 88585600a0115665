#include "hiervo/geometry.hpp"

#include <Eigen/SVD>
#include <cmath>
#include <stdexcept>

namespace hiervo {

namespace {

constexpr int kReorthonormalizeEvery = 32;
constexpr double kSmallAngle = 1e-4;

}  // namespace

Eigen::Matrix3d orthonormalized(const Eigen::Matrix3d& r) {
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(r, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d u = svd.matrixU();
  Eigen::Matrix3d v = svd.matrixV();
  Eigen::Matrix3d d = Eigen::Matrix3d::Identity();
  d(2, 2) = (u * v.transpose()).determinant() > 0 ? 1.0 : -1.0;
  return u * d * v.transpose();
}

Intrinsics::Intrinsics(double fx_, double fy_, double cx_, double cy_, int w, int h)
    : fx(fx_), fy(fy_), cx(cx_), cy(cy_), width(w), height(h) {
  if (!(fx > 0 && fy > 0)) throw std::invalid_argument("Intrinsics: focal lengths must be positive");
  if (!(cx > 0 && cx < width && cy > 0 && cy < height)) {
    throw std::invalid_argument("Intrinsics: principal point outside image");
  }
}

Intrinsics Intrinsics::half() const {
  // New pixel i covers old pixels 2i and 2i+1, center at old coordinate 2i + 0.5.
  return Intrinsics(fx / 2, fy / 2, (cx - 0.5) / 2, (cy - 0.5) / 2, width / 2, height / 2);
}

Eigen::Matrix3d Quat::to_rotation() const {
  return Eigen::Quaterniond(w, x, y, z).normalized().toRotationMatrix();
}

Quat Quat::from_rotation(const Eigen::Matrix3d& r) {
  Eigen::Quaterniond q(r);
  q.normalize();
  Quat out{q.w(), q.x(), q.y(), q.z()};
  bool flip = out.w < 0;
  if (out.w == 0) {
    // 180-degree rotations: make the first nonzero vector component positive.
    if (out.x != 0)
      flip = out.x < 0;
    else if (out.y != 0)
      flip = out.y < 0;
    else
      flip = out.z < 0;
  }
  if (flip) {
    out.w = -out.w;
    out.x = -out.x;
    out.y = -out.y;
    out.z = -out.z;
  }
  return out;
}

Pose::Pose(const Eigen::Matrix3d& rotation, const Eigen::Vector3d& translation)
    : rotation_(rotation), translation_(translation) {
  if ((rotation.transpose() * rotation - Eigen::Matrix3d::Identity()).norm() > 1e-6 ||
      rotation.determinant() < 0) {
    throw std::invalid_argument("Pose: rotation is not orthonormal");
  }
}

Eigen::Matrix4d Pose::matrix() const {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.topLeftCorner<3, 3>() = rotation_;
  m.topRightCorner<3, 1>() = translation_;
  return m;
}

Pose compose(const Pose& a, const Pose& b) {
  Pose out;
  out.rotation_ = a.rotation_ * b.rotation_;
  out.translation_ = a.rotation_ * b.translation_ + a.translation_;
  out.age_ = a.age_ + b.age_ + 1;
  if (out.age_ >= kReorthonormalizeEvery) {
    out.rotation_ = orthonormalized(out.rotation_);
    out.age_ = 0;
  }
  return out;
}

Pose invert(const Pose& t) {
  Pose out;
  out.rotation_ = t.rotation_.transpose();
  out.translation_ = -(out.rotation_ * t.translation_);
  out.age_ = t.age_;
  return out;
}

Eigen::Matrix3d hat(const Eigen::Vector3d& v) {
  Eigen::Matrix3d m;
  m << 0, -v.z(), v.y(), v.z(), 0, -v.x(), -v.y(), v.x(), 0;
  return m;
}

namespace so3 {

Eigen::Matrix3d exp(const Eigen::Vector3d& phi) {
  const double theta = phi.norm();
  const Eigen::Matrix3d k = hat(phi);
  double a, b;  // sin(t)/t, (1-cos(t))/t^2
  if (theta < kSmallAngle) {
    const double t2 = theta * theta;
    a = 1.0 - t2 / 6.0 + t2 * t2 / 120.0;
    b = 0.5 - t2 / 24.0 + t2 * t2 / 720.0;
  } else {
    a = std::sin(theta) / theta;
    b = (1.0 - std::cos(theta)) / (theta * theta);
  }
  return Eigen::Matrix3d::Identity() + a * k + b * k * k;
}

Eigen::Vector3d log(const Eigen::Matrix3d& r) {
  const double cos_theta = std::clamp((r.trace() - 1.0) / 2.0, -1.0, 1.0);
  const double theta = std::acos(cos_theta);
  if (theta > M_PI - 1e-6) {
    throw std::domain_error("so3::log: rotation angle at pi is ambiguous");
  }
  const Eigen::Vector3d w(r(2, 1) - r(1, 2), r(0, 2) - r(2, 0), r(1, 0) - r(0, 1));
  if (theta < kSmallAngle) {
    // w = 2 sin(theta) * axis; sin(theta)/theta ~ 1 here.
    return 0.5 * (1.0 + theta * theta / 6.0) * w;
  }
  if (theta > 2.8) {
    // Near pi the antisymmetric part loses precision; recover the axis
    // from the symmetric part instead.
    const double c = cos_theta;
    Eigen::Vector3d axis;
    for (int i = 0; i < 3; ++i) axis[i] = std::sqrt(std::max(0.0, (r(i, i) - c) / (1.0 - c)));
    int anchor = 0;
    if (axis[1] > axis[anchor]) anchor = 1;
    if (axis[2] > axis[anchor]) anchor = 2;
    for (int i = 0; i < 3; ++i) {
      if (i == anchor) continue;
      const double s = (r(anchor, i) + r(i, anchor)) / (2.0 * (1.0 - c));
      axis[i] = s / axis[anchor];
    }
    axis.normalize();
    if (w.dot(axis) < 0) axis = -axis;
    return theta * axis;
  }
  return theta / (2.0 * std::sin(theta)) * w;
}

Eigen::Matrix3d left_jacobian(const Eigen::Vector3d& phi) {
  const double theta = phi.norm();
  const Eigen::Matrix3d k = hat(phi);
  double a, b;  // (1-cos t)/t^2, (t-sin t)/t^3
  if (theta < kSmallAngle) {
    const double t2 = theta * theta;
    a = 0.5 - t2 / 24.0 + t2 * t2 / 720.0;
    b = 1.0 / 6.0 - t2 / 120.0 + t2 * t2 / 5040.0;
  } else {
    a = (1.0 - std::cos(theta)) / (theta * theta);
    b = (theta - std::sin(theta)) / (theta * theta * theta);
  }
  return Eigen::Matrix3d::Identity() + a * k + b * k * k;
}

Eigen::Matrix3d left_jacobian_inv(const Eigen::Vector3d& phi) {
  const double theta = phi.norm();
  const Eigen::Matrix3d k = hat(phi);
  double c;  // 1/t^2 - (1+cos t)/(2 t sin t)
  if (theta < kSmallAngle) {
    const double t2 = theta * theta;
    c = 1.0 / 12.0 + t2 / 720.0 + t2 * t2 / 30240.0;
  } else {
    c = 1.0 / (theta * theta) -
        (1.0 + std::cos(theta)) / (2.0 * theta * std::sin(theta));
  }
  return Eigen::Matrix3d::Identity() - 0.5 * k + c * k * k;
}

std::array<Eigen::Matrix3d, 3> left_jacobian_deriv(const Eigen::Vector3d& phi) {
  const double theta = phi.norm();
  const Eigen::Matrix3d k = hat(phi);
  const Eigen::Matrix3d k2 = k * k;
  double a, b, da_dt, db_dt;  // a = (1-cos t)/t^2, b = (t-sin t)/t^3
  if (theta < kSmallAngle) {
    const double t2 = theta * theta;
    a = 0.5 - t2 / 24.0 + t2 * t2 / 720.0;
    b = 1.0 / 6.0 - t2 / 120.0 + t2 * t2 / 5040.0;
    da_dt = -theta / 12.0 + theta * t2 / 180.0;
    db_dt = -theta / 60.0 + theta * t2 / 1260.0;
  } else {
    const double t2 = theta * theta;
    a = (1.0 - std::cos(theta)) / t2;
    b = (theta - std::sin(theta)) / (t2 * theta);
    da_dt = std::sin(theta) / t2 - 2.0 * (1.0 - std::cos(theta)) / (t2 * theta);
    db_dt = (1.0 - std::cos(theta)) / (t2 * theta) - 3.0 * (theta - std::sin(theta)) / (t2 * t2);
  }
  std::array<Eigen::Matrix3d, 3> out;
  for (int i = 0; i < 3; ++i) {
    const double dt_dphi = theta > 0 ? phi[i] / theta : 0.0;
    const Eigen::Matrix3d ei = hat(Eigen::Vector3d::Unit(i));
    out[i] = da_dt * dt_dphi * k + a * ei + db_dt * dt_dphi * k2 + b * (ei * k + k * ei);
  }
  return out;
}

}  // namespace so3

Pose exp_twist(const Twist& xi) {
  return Pose(so3::exp(xi.phi()), so3::left_jacobian(xi.phi()) * xi.rho());
}

Twist log_pose(const Pose& t) {
  const Eigen::Vector3d phi = so3::log(t.rotation());
  const Eigen::Vector3d rho = so3::left_jacobian_inv(phi) * t.translation();
  return Twist(rho, phi);
}

std::pair<Eigen::Vector3d, Quat> pose_to_tq(const Pose& t) {
  return {t.translation(), Quat::from_rotation(t.rotation())};
}

Eigen::Vector3d backproject(double u, double v, double depth, const Intrinsics& k) {
  if (!(depth > 0)) throw std::invalid_argument("backproject: depth must be positive");
  return depth * Eigen::Vector3d((u - k.cx) / k.fx, (v - k.cy) / k.fy, 1.0);
}

Projection project(const Eigen::Vector3d& p, const Intrinsics& k) {
  Projection out;
  out.depth = p.z();
  if (p.z() <= kEpsZ) return out;
  out.in_front = true;
  out.u = k.fx * p.x() / p.z() + k.cx;
  out.v = k.fy * p.y() / p.z() + k.cy;
  return out;
}

}  // namespace hiervo
