#pragma once

#include <cmath>
#include <numbers>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace fploc {

inline constexpr double kPi = std::numbers::pi;

inline double deg2rad(double deg) { return deg * kPi / 180.0; }
inline double rad2deg(double rad) { return rad * 180.0 / kPi; }

/// Wraps an angle into (-pi, pi].
inline double wrap_angle(double a)
{
  a = std::remainder(a, 2.0 * kPi);
  if (a <= -kPi) {
    a += 2.0 * kPi;
  }
  return a;
}

/// Planar rigid transform. theta is kept in (-pi, pi].
struct Pose2
{
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;

  Pose2() = default;
  Pose2(double x_, double y_, double theta_) : x(x_), y(y_), theta(wrap_angle(theta_)) {}

  Eigen::Vector2d translation() const { return {x, y}; }

  /// Maps a point expressed in this frame into the parent frame.
  Eigen::Vector2d transform(const Eigen::Vector2d& p) const
  {
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    return {x + c * p.x() - s * p.y(), y + s * p.x() + c * p.y()};
  }

  Pose2 inverse() const
  {
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    return {-c * x - s * y, s * x - c * y, -theta};
  }

  friend bool operator==(const Pose2&, const Pose2&) = default;
};

/// a ⊕ b: b expressed in frame a, lifted into a's parent frame.
inline Pose2 operator*(const Pose2& a, const Pose2& b)
{
  const Eigen::Vector2d t = a.transform(b.translation());
  return {t.x(), t.y(), a.theta + b.theta};
}

/// Relative motion from a to b, expressed in frame a.
inline Pose2 between(const Pose2& a, const Pose2& b) { return a.inverse() * b; }

/// Rigid transform in 3D. The rotation is kept unit-norm.
struct Pose3
{
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();
  Eigen::Quaterniond rotation = Eigen::Quaterniond::Identity();

  Pose3() = default;
  Pose3(const Eigen::Vector3d& t, const Eigen::Quaterniond& q) : translation(t), rotation(q.normalized()) {}

  /// Fixed-axis roll (x), pitch (y), yaw (z), applied as Rz * Ry * Rx.
  static Pose3 from_xyz_rpy(const Eigen::Vector3d& t, double roll, double pitch, double yaw)
  {
    const Eigen::Quaterniond q = Eigen::AngleAxisd(yaw, Eigen::Vector3d::UnitZ()) *
                                 Eigen::AngleAxisd(pitch, Eigen::Vector3d::UnitY()) *
                                 Eigen::AngleAxisd(roll, Eigen::Vector3d::UnitX());
    return {t, q};
  }

  /// SE(2) pose embedded at z = 0 with a yaw-only rotation.
  static Pose3 from_pose2(const Pose2& p)
  {
    return {Eigen::Vector3d(p.x, p.y, 0.0), Eigen::Quaterniond(Eigen::AngleAxisd(p.theta, Eigen::Vector3d::UnitZ()))};
  }

  Eigen::Matrix3d rotation_matrix() const { return rotation.toRotationMatrix(); }

  Eigen::Vector3d apply(const Eigen::Vector3d& p) const { return rotation * p + translation; }

  Pose3 inverse() const
  {
    const Eigen::Quaterniond qi = rotation.conjugate();
    return {-(qi * translation), qi};
  }
};

inline Pose3 operator*(const Pose3& a, const Pose3& b)
{
  return {a.rotation * b.translation + a.translation, a.rotation * b.rotation};
}

}  // namespace fploc
