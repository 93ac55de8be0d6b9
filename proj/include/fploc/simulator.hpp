#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "fploc/camera.hpp"
#include "fploc/floorplan.hpp"
#include "fploc/layout.hpp"
#include "fploc/mcl.hpp"
#include "fploc/measurement.hpp"

namespace fploc {

/// Corruption applied to rendered masks, standing in for network failures.
struct NoiseConfig
{
  double pixel_dropout = 0.3;
  int n_occluders = 2;
  int occluder_min_px = 40;
  int occluder_max_px = 100;
  int edge_width_px = 6;
  double mask_jitter_px = 1.0;

  void validate() const;
  /// No corruption at all; edge width stays at its default.
  static NoiseConfig none();
};

struct TrajectorySpec
{
  /// Only the positions are used when there are two or more waypoints; the
  /// heading follows the direction of motion.
  std::vector<Pose2> waypoints;
  double step_translation_m = 0.02;
  /// Turns at a bend are split into in-place steps no larger than this.
  double step_rotation_rad = 0.025;
};

/// Straight segments between waypoints sampled at (at most) the step length,
/// with in-place rotation at bends. Throws ValidationError when a waypoint or
/// segment is not in free space.
std::vector<Pose2> generate_trajectory(const FloorPlan& plan, const TrajectorySpec& spec);

/// Ideal layout-edge mask for the true pose: floor and ceiling polylines (split
/// at misses and at range jumps above `kDepthBreakM`), corner verticals,
/// stroked to `edge_width_px`.
EdgeMask render_gt_mask(const FloorPlan& plan, const CornerSet& corners, const Pose2& true_pose, const CameraModel& cam,
                        const LayoutParams& layout_params, int edge_width_px);

inline constexpr double kDepthBreakM = 0.5;

/// Pixel dropout, erasing occluder rectangles and a random integer shift of at
/// most mask_jitter_px along each axis, in that order.
EdgeMask corrupt_mask(const EdgeMask& mask, const NoiseConfig& cfg, std::uint64_t seed);

/// Per-step relative motions of `true_poses`, each perturbed by the odometry
/// motion model.
std::vector<OdometryDelta> simulate_odometry(const std::vector<Pose2>& true_poses, const MotionNoise& noise,
                                             std::uint64_t seed);

/// Composes deltas starting from `start`; returns one pose per delta plus the start.
std::vector<Pose2> integrate_odometry(const Pose2& start, const std::vector<OdometryDelta>& deltas);

/// Binary stroke helpers shared with the renderer.
void draw_line(EdgeMask& mask, Eigen::Vector2i a, Eigen::Vector2i b);
EdgeMask dilate_disc(const EdgeMask& mask, double radius_px);

/// Synthetic five-room apartment (about 15 m x 10 m, σ = 1 cm/px): three
/// rooms south of a corridor, two north, 0.8 m doors, a column and two wall stubs.
struct Scenario
{
  FloorPlan plan;
  TrajectorySpec trajectory;
};

Scenario make_apartment_scenario();

}  // namespace fploc
