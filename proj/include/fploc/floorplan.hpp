#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "fploc/geometry.hpp"
#include "fploc/image_io.hpp"

namespace fploc {

/// Metric metadata of a floor-plan raster.
///
/// Pixel convention: the cell in column i, row j covers [i, i+1) x [j, j+1) in
/// grid units and its center sits at ((i + 0.5) σ, (j + 0.5) σ) in the plan
/// frame. Row index grows along the plan frame's +y axis. `origin` is the pose
/// of the plan frame (the corner of cell (0, 0)) in the world.
struct PlanMetadata
{
  double resolution_m_per_px = 0.01;
  Pose2 origin;
  double ceiling_height_m = 2.6;
  int occupancy_threshold = 128;  ///< intensity < threshold is Occupied

  void validate() const;
};

/// Reads the sidecar `key: value` file. Required keys: resolution, origin_x,
/// origin_y, origin_theta, ceiling_height. Optional: occupancy_threshold.
/// Lines starting with '#' are comments.
PlanMetadata read_plan_metadata(const std::filesystem::path& path);
void write_plan_metadata(const std::filesystem::path& path, const PlanMetadata& meta);

/// Binary occupancy grid with metric metadata. Immutable after construction.
class FloorPlan
{
public:
  FloorPlan() = default;
  /// `occupied` holds one byte per cell (non-zero = Occupied), row-major.
  FloorPlan(int width, int height, std::vector<std::uint8_t> occupied, PlanMetadata meta);

  int width() const { return width_; }
  int height() const { return height_; }
  double resolution() const { return meta_.resolution_m_per_px; }
  const Pose2& origin() const { return meta_.origin; }
  double ceiling_height() const { return meta_.ceiling_height_m; }
  const PlanMetadata& metadata() const { return meta_; }

  /// 0 = Free, 1 = Occupied.
  std::span<const std::uint8_t> cells() const { return cells_; }

  bool in_bounds(int col, int row) const { return col >= 0 && row >= 0 && col < width_ && row < height_; }
  bool occupied(int col, int row) const { return cells_[static_cast<std::size_t>(row) * width_ + col] != 0; }

  /// World point → continuous grid coordinates (cell units).
  Eigen::Vector2d world_to_grid(const Eigen::Vector2d& world) const;
  Eigen::Vector2d grid_to_world(const Eigen::Vector2d& grid) const;
  Eigen::Vector2d cell_center(int col, int row) const { return grid_to_world({col + 0.5, row + 0.5}); }

  bool contains(const Eigen::Vector2d& world) const;
  /// Points outside the grid count as not Occupied.
  bool occupied_at(const Eigen::Vector2d& world) const;
  /// Inside the grid and on a Free cell.
  bool free_at(const Eigen::Vector2d& world) const;

  FloorPlan with_cells(std::vector<std::uint8_t> occupied) const { return {width_, height_, std::move(occupied), meta_}; }
  FloorPlan with_origin(const Pose2& origin) const;

  /// Coarser copy for ray casting: a coarse cell is Occupied if any of the
  /// covered fine cells is. Resolution scales by `factor`, origin is kept.
  FloorPlan downsampled(int factor) const;

  GrayImage to_image() const;

private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> cells_;
  PlanMetadata meta_;
};

FloorPlan floorplan_from_image(const GrayImage& image, const PlanMetadata& meta);
FloorPlan load_floorplan(const std::filesystem::path& image_path, const std::filesystem::path& meta_path);
void save_floorplan(const FloorPlan& plan, const std::filesystem::path& image_path, const std::filesystem::path& meta_path);

/// Opening (erosion then dilation) of the Occupied set with a square of
/// half-width `open_radius_px`, followed by closing (dilation then erosion)
/// with half-width `close_radius_px`. Both are computed as if the plan were
/// surrounded by unbounded free space. Square elements keep axis-aligned
/// room corners sharp.
FloorPlan preprocess(const FloorPlan& plan, int open_radius_px, int close_radius_px);

struct HarrisParams
{
  double k = 0.04;
  double relative_threshold = 0.01;  ///< fraction of the maximum response
  double cluster_radius_m = 0.10;
};

struct CornerSet
{
  std::vector<Eigen::Vector2d> corners;  ///< world frame, meters

  std::size_t size() const { return corners.size(); }
  bool empty() const { return corners.empty(); }
};

/// Harris response on the occupancy image, 3x3 local maxima above the
/// relative threshold, then clustering. Output sorted by (y, x).
CornerSet detect_corners(const FloorPlan& plan, const HarrisParams& params = {});

/// Merges points closer than `radius` (single linkage) into their centroids,
/// repeated until every pair is at least `radius` apart. Independent of input
/// order; result sorted by (y, x).
std::vector<Eigen::Vector2d> cluster_points(std::vector<Eigen::Vector2d> points, double radius);

void write_corners_csv(const std::filesystem::path& path, const CornerSet& corners);

struct RayHit
{
  Eigen::Vector2d point = Eigen::Vector2d::Zero();
  double range_m = 0.0;
  bool hit = false;
};

/// Grid traversal from `origin` along `direction_rad` (world frame). Returns the
/// point where the ray enters the first Occupied cell. An origin on an Occupied
/// cell is a hit at range 0. Leaving the grid or exceeding `max_range_m` is a
/// miss; so is an origin outside the grid.
RayHit raycast(const FloorPlan& plan, const Eigen::Vector2d& origin, double direction_rad, double max_range_m);

}  // namespace fploc
