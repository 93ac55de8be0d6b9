#pragma once

#include <optional>

#include <Eigen/Core>

#include "fploc/geometry.hpp"

namespace fploc {

/// Points closer than this along the optical axis are not projected.
inline constexpr double kNearClipM = 0.05;

/// Rectified pinhole camera rigidly mounted on the robot.
///
/// `extrinsics` is the pose of the camera body frame in the robot frame. The
/// body frame follows the robot convention (x forward, y left, z up), so
/// identity extrinsics give a level camera looking along the robot heading.
/// The optical frame (x right, y down, z forward) is derived from the body
/// frame by a fixed axis permutation.
struct CameraModel
{
  double fx = 180.0;
  double fy = 180.0;
  double cx = 160.0;
  double cy = 160.0;
  int width = 320;
  int height = 320;
  Pose3 extrinsics;

  void validate() const;
};

/// Orthogonal projection of the camera frustum onto the floor: an apex and the
/// world bearings bounding the visible sector, [theta_minus, theta_plus]
/// counter-clockwise.
struct GroundFrustum
{
  Eigen::Vector2d apex = Eigen::Vector2d::Zero();
  double theta_minus = 0.0;
  double theta_plus = 0.0;

  /// Counter-clockwise angular width in [0, 2π).
  double angular_width() const;
  bool contains_bearing(double bearing_rad) const;
};

/// robot ⊕ extrinsics: the camera frame in world coordinates.
Pose3 compose(const Pose2& robot_pose, const Pose3& extrinsics);

/// Throws DegenerateFrustumError when the optical axis is within 10° of
/// vertical or the projected sector is not narrower than π.
GroundFrustum ground_frustum(const Pose2& robot_pose, const CameraModel& cam);

/// Camera-frame point (x right, y down, z forward) to pixel coordinates.
std::optional<Eigen::Vector2d> project_optical(const CameraModel& cam, const Eigen::Vector3d& p_optical);

/// World point to pixel coordinates given the camera pose in the world;
/// nullopt behind the near clip or outside [0, width) x [0, height).
std::optional<Eigen::Vector2d> project(const CameraModel& cam, const Pose3& camera_in_world, const Eigen::Vector3d& point);

/// Precomputed world → image mapping for one camera pose. Same arithmetic as
/// project(); used where many points share a pose.
class ImageProjector
{
public:
  ImageProjector(const CameraModel& cam, const Pose3& camera_in_world);

  std::optional<Eigen::Vector2d> operator()(const Eigen::Vector3d& point) const;

  const CameraModel& camera() const { return *cam_; }

private:
  const CameraModel* cam_;
  Eigen::Matrix3d world_to_optical_;
  Eigen::Vector3d offset_;
};

}  // namespace fploc
