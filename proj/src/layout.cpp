#include "fploc/layout.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>

#include "fploc/error.hpp"

namespace fploc {

void LayoutParams::validate() const
{
  if (n_rays < 2) {
    throw ValidationError("layout needs at least 2 rays");
  }
  if (n_vertical_samples < 2) {
    throw ValidationError("layout needs at least 2 vertical samples per corner");
  }
  if (!(max_range_m > 0.0)) {
    throw ValidationError("layout max range must be positive");
  }
  if (!(visibility_tol_cells >= 0.0)) {
    throw ValidationError("corner visibility tolerance must be non-negative");
  }
  if (raycast_downsample < 1) {
    throw ValidationError("ray-cast downsample factor must be >= 1");
  }
}

LayoutKind LayoutPointSet::kind(std::size_t i) const
{
  if (i < n_floor) {
    return LayoutKind::Floor;
  }
  if (i < n_floor + n_ceiling) {
    return LayoutKind::Ceiling;
  }
  return LayoutKind::CornerVertical;
}

std::vector<Eigen::Vector2d> visible_corners(const FloorPlan& plan, const CornerSet& corners, const GroundFrustum& frustum,
                                             double max_range_m, double visibility_tol_m)
{
  std::vector<Eigen::Vector2d> out;
  for (const auto& c : corners.corners) {
    const Eigen::Vector2d d = c - frustum.apex;
    const double dist = d.norm();
    if (dist > max_range_m) {
      continue;
    }
    const double bearing = std::atan2(d.y(), d.x());
    if (!frustum.contains_bearing(bearing)) {
      continue;
    }
    const RayHit hit = raycast(plan, frustum.apex, bearing, dist + visibility_tol_m);
    if (!hit.hit || hit.range_m >= dist - visibility_tol_m) {
      out.push_back(c);
    }
  }
  return out;
}

void extract_layout_into(const FloorPlan& plan, const CornerSet& corners, const GroundFrustum& frustum,
                         const LayoutParams& params, LayoutPointSet& out)
{
  out.points.clear();
  out.floor_ray_index.clear();
  out.floor_range_m.clear();
  out.n_vertical_samples = params.n_vertical_samples;

  const double h = plan.ceiling_height();
  const double width = frustum.angular_width();
  const int n = params.n_rays;
  for (int i = 0; i < n; ++i) {
    const double bearing = frustum.theta_minus + width * static_cast<double>(i) / (n - 1);
    const RayHit hit = raycast(plan, frustum.apex, bearing, params.max_range_m);
    if (hit.hit) {
      out.points.emplace_back(hit.point.x(), hit.point.y(), 0.0);
      out.floor_ray_index.push_back(i);
      out.floor_range_m.push_back(hit.range_m);
    }
  }
  out.n_floor = out.points.size();
  for (std::size_t i = 0; i < out.n_floor; ++i) {
    out.points.emplace_back(out.points[i].x(), out.points[i].y(), h);
  }
  out.n_ceiling = out.n_floor;

  const auto visible = visible_corners(plan, corners, frustum, params.max_range_m,
                                       params.visibility_tol_cells * plan.resolution());
  const int m = params.n_vertical_samples;
  for (const auto& c : visible) {
    for (int k = 0; k < m; ++k) {
      // endpoints exact: z = 0 and z = h
      const double z = k == m - 1 ? h : h * static_cast<double>(k) / (m - 1);
      out.points.emplace_back(c.x(), c.y(), z);
    }
  }
  out.n_corner_vertical = visible.size() * static_cast<std::size_t>(m);
}

LayoutPointSet extract_layout(const FloorPlan& plan, const CornerSet& corners, const Pose2& robot_pose,
                              const CameraModel& cam, const LayoutParams& params)
{
  params.validate();
  LayoutPointSet out;
  out.points.reserve(2 * static_cast<std::size_t>(params.n_rays));
  extract_layout_into(plan, corners, ground_frustum(robot_pose, cam), params, out);
  return out;
}

void write_layout_csv(const std::filesystem::path& path, const LayoutPointSet& layout)
{
  std::ofstream out(path);
  if (!out) {
    throw Error("cannot write '" + path.string() + "'");
  }
  out << std::setprecision(10) << "x,y,z,kind\n";
  for (std::size_t i = 0; i < layout.size(); ++i) {
    const auto& p = layout.points[i];
    const char* kind = "corner";
    switch (layout.kind(i)) {
    case LayoutKind::Floor: kind = "floor"; break;
    case LayoutKind::Ceiling: kind = "ceiling"; break;
    case LayoutKind::CornerVertical: break;
    }
    out << p.x() << ',' << p.y() << ',' << p.z() << ',' << kind << '\n';
  }
}

}  // namespace fploc
