#pragma once

#include <cstddef>
#include <filesystem>
#include <vector>

#include <Eigen/Core>

#include "fploc/camera.hpp"
#include "fploc/floorplan.hpp"

namespace fploc {

struct LayoutParams
{
  int n_rays = 150;
  int n_vertical_samples = 100;
  double max_range_m = 15.0;
  /// Line-of-sight slack for corner visibility in cells of the ray-cast plan.
  double visibility_tol_cells = 3.0;
  /// Ray-cast on a plan coarsened by this factor (1 = full resolution).
  int raycast_downsample = 1;

  void validate() const;
};

enum class LayoutKind { Floor, Ceiling, CornerVertical };

/// 3D layout points of the plan visible from one pose.
///
/// Layout: n_floor floor points (ray order), the same number of ceiling points
/// (same order), then n_vertical_samples points per visible corner, bottom to top.
struct LayoutPointSet
{
  std::vector<Eigen::Vector3d> points;
  std::size_t n_floor = 0;
  std::size_t n_ceiling = 0;
  std::size_t n_corner_vertical = 0;
  int n_vertical_samples = 0;
  /// Ray index and range of each floor point (parallel to the floor block).
  std::vector<int> floor_ray_index;
  std::vector<double> floor_range_m;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  LayoutKind kind(std::size_t i) const;
};

/// Corners whose bearing from the apex lies inside the frustum and whose line
/// of sight reaches within `visibility_tol_m` of them before any other
/// Occupied cell. Corners beyond `max_range_m` are dropped.
std::vector<Eigen::Vector2d> visible_corners(const FloorPlan& plan, const CornerSet& corners, const GroundFrustum& frustum,
                                             double max_range_m, double visibility_tol_m);

/// Builds O_x for `robot_pose`. `plan` is the plan that is ray-cast; pass a
/// downsampled plan to use the low-resolution option (params.raycast_downsample
/// only documents the factor, the caller owns the coarse plan).
LayoutPointSet extract_layout(const FloorPlan& plan, const CornerSet& corners, const Pose2& robot_pose,
                              const CameraModel& cam, const LayoutParams& params);

/// Same as extract_layout with the frustum already computed. Reuses `out`.
void extract_layout_into(const FloorPlan& plan, const CornerSet& corners, const GroundFrustum& frustum,
                         const LayoutParams& params, LayoutPointSet& out);

/// CSV with columns x,y,z,kind.
void write_layout_csv(const std::filesystem::path& path, const LayoutPointSet& layout);

}  // namespace fploc
