#include "fploc/camera.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "fploc/error.hpp"

namespace fploc {

namespace {

// Rows map body-frame coordinates (x fwd, y left, z up) to optical ones.
const Eigen::Matrix3d& body_to_optical()
{
  static const Eigen::Matrix3d m = (Eigen::Matrix3d() << 0, -1, 0, 0, 0, -1, 1, 0, 0).finished();
  return m;
}

}  // namespace

void CameraModel::validate() const
{
  if (!(fx > 0.0) || !(fy > 0.0)) {
    throw ValidationError("camera focal lengths must be positive");
  }
  if (width <= 0 || height <= 0) {
    throw ValidationError("camera image size must be positive");
  }
  if (!(cx >= 0.0 && cx < width) || !(cy >= 0.0 && cy < height)) {
    throw ValidationError("camera principal point must lie inside the image");
  }
  if (std::abs(extrinsics.rotation.norm() - 1.0) > 1e-9) {
    throw ValidationError("camera extrinsic rotation is not unit-norm");
  }
}

double GroundFrustum::angular_width() const
{
  const double w = wrap_angle(theta_plus - theta_minus);
  return w < 0.0 ? w + 2.0 * kPi : w;
}

bool GroundFrustum::contains_bearing(double bearing_rad) const
{
  double off = wrap_angle(bearing_rad - theta_minus);
  if (off < 0.0) {
    off += 2.0 * kPi;
  }
  return off <= angular_width();
}

Pose3 compose(const Pose2& robot_pose, const Pose3& extrinsics)
{
  return Pose3::from_pose2(robot_pose) * extrinsics;
}

GroundFrustum ground_frustum(const Pose2& robot_pose, const CameraModel& cam)
{
  const Pose3 cam_pose = compose(robot_pose, cam.extrinsics);
  const Eigen::Matrix3d r = cam_pose.rotation_matrix();

  const Eigen::Vector3d axis = r.col(0);
  if (std::abs(axis.z()) >= std::sin(deg2rad(80.0))) {
    throw DegenerateFrustumError("optical axis is too close to vertical for a planar field of view");
  }
  const double axis_bearing = std::atan2(axis.y(), axis.x());

  // Bearings of the four image-corner rays, relative to the optical axis.
  const std::array<Eigen::Vector2d, 4> corners = {
      Eigen::Vector2d(0.0, 0.0), Eigen::Vector2d(cam.width, 0.0), Eigen::Vector2d(0.0, cam.height),
      Eigen::Vector2d(cam.width, cam.height)};
  double lo = 0.0;
  double hi = 0.0;
  bool first = true;
  for (const auto& uv : corners) {
    const Eigen::Vector3d body(1.0, -(uv.x() - cam.cx) / cam.fx, -(uv.y() - cam.cy) / cam.fy);
    const Eigen::Vector3d dir = r * body;
    if (std::hypot(dir.x(), dir.y()) < 1e-12) {
      throw DegenerateFrustumError("image corner ray is vertical");
    }
    const double off = wrap_angle(std::atan2(dir.y(), dir.x()) - axis_bearing);
    lo = first ? off : std::min(lo, off);
    hi = first ? off : std::max(hi, off);
    first = false;
  }
  if (!(hi - lo > 0.0) || hi - lo >= kPi) {
    throw DegenerateFrustumError("projected field of view is not a proper sector");
  }

  GroundFrustum f;
  f.apex = cam_pose.translation.head<2>();
  f.theta_minus = wrap_angle(axis_bearing + lo);
  f.theta_plus = wrap_angle(axis_bearing + hi);
  return f;
}

std::optional<Eigen::Vector2d> project_optical(const CameraModel& cam, const Eigen::Vector3d& p)
{
  if (!(p.z() > kNearClipM)) {
    return std::nullopt;
  }
  const double u = cam.fx * p.x() / p.z() + cam.cx;
  const double v = cam.fy * p.y() / p.z() + cam.cy;
  if (!(u >= 0.0 && u < cam.width && v >= 0.0 && v < cam.height)) {
    return std::nullopt;
  }
  return Eigen::Vector2d(u, v);
}

ImageProjector::ImageProjector(const CameraModel& cam, const Pose3& camera_in_world) : cam_(&cam)
{
  const Eigen::Matrix3d rt = camera_in_world.rotation_matrix().transpose();
  world_to_optical_ = body_to_optical() * rt;
  offset_ = -(world_to_optical_ * camera_in_world.translation);
}

std::optional<Eigen::Vector2d> ImageProjector::operator()(const Eigen::Vector3d& point) const
{
  return project_optical(*cam_, world_to_optical_ * point + offset_);
}

std::optional<Eigen::Vector2d> project(const CameraModel& cam, const Pose3& camera_in_world, const Eigen::Vector3d& point)
{
  return ImageProjector(cam, camera_in_world)(point);
}

}  // namespace fploc
