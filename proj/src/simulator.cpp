#include "fploc/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

#include "fploc/error.hpp"
#include "fploc/random.hpp"

namespace fploc {

void NoiseConfig::validate() const
{
  if (!(pixel_dropout >= 0.0 && pixel_dropout <= 1.0)) {
    throw ValidationError("pixel dropout must be in [0, 1]");
  }
  if (n_occluders < 0) {
    throw ValidationError("occluder count must be non-negative");
  }
  if (n_occluders > 0 && (occluder_min_px < 1 || occluder_max_px < occluder_min_px)) {
    throw ValidationError("occluder size range is invalid");
  }
  if (edge_width_px < 1) {
    throw ValidationError("edge width must be at least 1 px");
  }
  if (!(mask_jitter_px >= 0.0)) {
    throw ValidationError("mask jitter must be non-negative");
  }
}

NoiseConfig NoiseConfig::none()
{
  NoiseConfig cfg;
  cfg.pixel_dropout = 0.0;
  cfg.n_occluders = 0;
  cfg.mask_jitter_px = 0.0;
  return cfg;
}

namespace {

void check_segment(const FloorPlan& plan, const Eigen::Vector2d& a, const Eigen::Vector2d& b)
{
  const Eigen::Vector2d d = b - a;
  const double len = d.norm();
  if (len == 0.0) {
    return;
  }
  const RayHit hit = raycast(plan, a, std::atan2(d.y(), d.x()), len);
  if (hit.hit) {
    throw ValidationError("trajectory segment crosses an occupied cell");
  }
}

}  // namespace

std::vector<Pose2> generate_trajectory(const FloorPlan& plan, const TrajectorySpec& spec)
{
  if (spec.waypoints.empty()) {
    throw ValidationError("trajectory needs at least one waypoint");
  }
  if (!(spec.step_translation_m > 0.0) || !(spec.step_rotation_rad > 0.0)) {
    throw ValidationError("trajectory step sizes must be positive");
  }
  for (const auto& w : spec.waypoints) {
    if (!plan.free_at(w.translation())) {
      throw ValidationError("waypoint is not in free space");
    }
  }
  if (spec.waypoints.size() == 1) {
    return {spec.waypoints.front()};
  }

  std::vector<Pose2> poses;
  std::optional<double> heading;
  for (std::size_t s = 0; s + 1 < spec.waypoints.size(); ++s) {
    const Eigen::Vector2d a = spec.waypoints[s].translation();
    const Eigen::Vector2d b = spec.waypoints[s + 1].translation();
    const Eigen::Vector2d d = b - a;
    const double len = d.norm();
    if (len == 0.0) {
      continue;
    }
    check_segment(plan, a, b);
    const double h = std::atan2(d.y(), d.x());
    if (!heading) {
      poses.emplace_back(a.x(), a.y(), h);
    } else {
      const double turn = wrap_angle(h - *heading);
      const int m = static_cast<int>(std::ceil(std::abs(turn) / spec.step_rotation_rad));
      for (int k = 1; k <= m; ++k) {
        poses.emplace_back(a.x(), a.y(), *heading + turn * k / m);
      }
    }
    const int n = static_cast<int>(std::ceil(len / spec.step_translation_m - 1e-9));
    for (int k = 1; k <= n; ++k) {
      const Eigen::Vector2d p = a + d * (static_cast<double>(k) / n);
      poses.emplace_back(p.x(), p.y(), h);
    }
    heading = h;
  }
  if (poses.empty()) {
    return {spec.waypoints.front()};
  }
  return poses;
}

void draw_line(EdgeMask& mask, Eigen::Vector2i a, Eigen::Vector2i b)
{
  int x0 = a.x();
  int y0 = a.y();
  const int dx = std::abs(b.x() - x0);
  const int dy = -std::abs(b.y() - y0);
  const int sx = x0 < b.x() ? 1 : -1;
  const int sy = y0 < b.y() ? 1 : -1;
  int err = dx + dy;
  while (true) {
    if (mask.in_bounds(x0, y0)) {
      mask.set(x0, y0);
    }
    if (x0 == b.x() && y0 == b.y()) {
      break;
    }
    const int e2 = 2 * err;
    if (e2 >= dy) {
      err += dy;
      x0 += sx;
    }
    if (e2 <= dx) {
      err += dx;
      y0 += sy;
    }
  }
}

EdgeMask dilate_disc(const EdgeMask& mask, double radius_px)
{
  if (radius_px <= 0.0) {
    return mask;
  }
  const int r = static_cast<int>(std::floor(radius_px));
  std::vector<Eigen::Vector2i> offsets;
  for (int dy = -r; dy <= r; ++dy) {
    for (int dx = -r; dx <= r; ++dx) {
      if (dx * dx + dy * dy <= radius_px * radius_px) {
        offsets.emplace_back(dx, dy);
      }
    }
  }
  EdgeMask out(mask.width(), mask.height());
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      if (!mask.edge(x, y)) {
        continue;
      }
      for (const auto& o : offsets) {
        if (out.in_bounds(x + o.x(), y + o.y())) {
          out.set(x + o.x(), y + o.y());
        }
      }
    }
  }
  return out;
}

EdgeMask render_gt_mask(const FloorPlan& plan, const CornerSet& corners, const Pose2& true_pose, const CameraModel& cam,
                        const LayoutParams& layout_params, int edge_width_px)
{
  if (edge_width_px < 1) {
    throw ValidationError("edge width must be at least 1 px");
  }
  const LayoutPointSet layout = extract_layout(plan, corners, true_pose, cam, layout_params);
  const ImageProjector projector(cam, compose(true_pose, cam.extrinsics));

  std::vector<std::optional<Eigen::Vector2i>> px(layout.size());
  for (std::size_t i = 0; i < layout.size(); ++i) {
    if (const auto uv = projector(layout.points[i])) {
      px[i] = Eigen::Vector2i(static_cast<int>(uv->x()), static_cast<int>(uv->y()));
    }
  }

  EdgeMask thin(cam.width, cam.height);
  const auto stroke = [&](std::size_t i, bool connect_next) {
    if (!px[i]) {
      return;
    }
    if (connect_next && px[i + 1]) {
      draw_line(thin, *px[i], *px[i + 1]);
    } else {
      draw_line(thin, *px[i], *px[i]);
    }
  };

  const std::size_t nf = layout.n_floor;
  for (std::size_t block = 0; block < 2; ++block) {
    const std::size_t base = block * nf;
    for (std::size_t i = 0; i < nf; ++i) {
      const bool connect = i + 1 < nf && layout.floor_ray_index[i + 1] == layout.floor_ray_index[i] + 1 &&
                           std::abs(layout.floor_range_m[i + 1] - layout.floor_range_m[i]) <= kDepthBreakM;
      stroke(base + i, connect);
    }
  }
  const std::size_t m = static_cast<std::size_t>(layout.n_vertical_samples);
  for (std::size_t i = 2 * nf; i < layout.size(); ++i) {
    stroke(i, (i - 2 * nf) % m + 1 < m);
  }

  return dilate_disc(thin, (edge_width_px - 1) / 2.0);
}

EdgeMask corrupt_mask(const EdgeMask& mask, const NoiseConfig& cfg, std::uint64_t seed)
{
  cfg.validate();
  Rng rng(seed);
  EdgeMask out = mask;
  const int w = mask.width();
  const int h = mask.height();

  if (cfg.pixel_dropout > 0.0) {
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        if (out.edge(x, y) && u01(rng) < cfg.pixel_dropout) {
          out.set(x, y, false);
        }
      }
    }
  }

  if (cfg.n_occluders > 0 && w > 0 && h > 0) {
    std::uniform_int_distribution<int> size(cfg.occluder_min_px, cfg.occluder_max_px);
    std::uniform_int_distribution<int> px(0, w - 1);
    std::uniform_int_distribution<int> py(0, h - 1);
    for (int k = 0; k < cfg.n_occluders; ++k) {
      const int rw = size(rng);
      const int rh = size(rng);
      const int x0 = px(rng);
      const int y0 = py(rng);
      for (int y = y0; y < std::min(h, y0 + rh); ++y) {
        for (int x = x0; x < std::min(w, x0 + rw); ++x) {
          out.set(x, y, false);
        }
      }
    }
  }

  if (cfg.mask_jitter_px > 0.0) {
    std::uniform_real_distribution<double> shift(-cfg.mask_jitter_px, cfg.mask_jitter_px);
    const int tx = static_cast<int>(std::lround(shift(rng)));
    const int ty = static_cast<int>(std::lround(shift(rng)));
    if (tx != 0 || ty != 0) {
      EdgeMask shifted(w, h);
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
          if (out.edge(x, y) && shifted.in_bounds(x + tx, y + ty)) {
            shifted.set(x + tx, y + ty);
          }
        }
      }
      out = std::move(shifted);
    }
  }
  return out;
}

std::vector<OdometryDelta> simulate_odometry(const std::vector<Pose2>& true_poses, const MotionNoise& noise,
                                             std::uint64_t seed)
{
  noise.validate();
  if (true_poses.size() < 2) {
    throw ValidationError("odometry needs at least two poses");
  }
  const bool noiseless = noise.alpha1 == 0.0 && noise.alpha2 == 0.0 && noise.alpha3 == 0.0 && noise.alpha4 == 0.0;
  Rng rng(seed);
  std::vector<OdometryDelta> out;
  for (std::size_t i = 0; i + 1 < true_poses.size(); ++i) {
    const OdometryDelta u = OdometryDelta::from_pose(between(true_poses[i], true_poses[i + 1]));
    out.push_back(noiseless ? u : sample_motion(u, noise, rng));
  }
  return out;
}

std::vector<Pose2> integrate_odometry(const Pose2& start, const std::vector<OdometryDelta>& deltas)
{
  std::vector<Pose2> out{start};
  out.reserve(deltas.size() + 1);
  for (const auto& u : deltas) {
    out.push_back(out.back() * u.as_pose());
  }
  return out;
}

Scenario make_apartment_scenario()
{
  constexpr double kRes = 0.01;
  constexpr double kMargin = 0.5;
  constexpr double kWidth = 15.0;
  constexpr double kDepth = 10.0;
  const int cols = static_cast<int>(std::lround((kWidth + 2 * kMargin) / kRes));
  const int rows = static_cast<int>(std::lround((kDepth + 2 * kMargin) / kRes));
  std::vector<std::uint8_t> cells(static_cast<std::size_t>(cols) * rows, 0);

  // Building coordinates: interior spans [0, 15] x [0, 10].
  const auto to_px = [](double v) { return static_cast<int>(std::lround((v + kMargin) / kRes)); };
  const auto fill = [&](double x0, double y0, double x1, double y1, std::uint8_t value) {
    for (int r = std::max(0, to_px(y0)); r < std::min(rows, to_px(y1)); ++r) {
      for (int c = std::max(0, to_px(x0)); c < std::min(cols, to_px(x1)); ++c) {
        cells[static_cast<std::size_t>(r) * cols + c] = value;
      }
    }
  };
  const auto wall = [&](double x0, double y0, double x1, double y1) { fill(x0, y0, x1, y1, 1); };
  const auto door = [&](double x0, double y0, double x1, double y1) { fill(x0, y0, x1, y1, 0); };

  constexpr double kExt = 0.2;
  constexpr double kInt = 0.05;  // half thickness of 0.1 m interior walls
  wall(-kExt, -kExt, kWidth + kExt, 0.0);
  wall(-kExt, kDepth, kWidth + kExt, kDepth + kExt);
  wall(-kExt, 0.0, 0.0, kDepth);
  wall(kWidth, 0.0, kWidth + kExt, kDepth);

  // Corridor between y = 4.2 and y = 5.8.
  wall(0.0, 4.2 - kInt, kWidth, 4.2 + kInt);
  wall(0.0, 5.8 - kInt, kWidth, 5.8 + kInt);
  // South rooms A | B | C, north rooms D | E.
  wall(4.5 - kInt, 0.0, 4.5 + kInt, 4.2);
  wall(9.5 - kInt, 0.0, 9.5 + kInt, 4.2);
  wall(6.5 - kInt, 5.8, 6.5 + kInt, kDepth);

  door(3.0, 4.2 - kInt, 3.8, 4.2 + kInt);
  door(6.0, 4.2 - kInt, 6.8, 4.2 + kInt);
  door(11.0, 4.2 - kInt, 11.8, 4.2 + kInt);
  door(2.0, 5.8 - kInt, 2.8, 5.8 + kInt);
  door(10.0, 5.8 - kInt, 10.8, 5.8 + kInt);
  door(6.5 - kInt, 8.0, 6.5 + kInt, 8.8);

  wall(12.0, 7.6, 12.4, 8.0);                // column in E
  wall(3.8, 8.8, 3.9, kDepth);               // stub from the north wall of D
  wall(14.0, 2.0 - kInt, kWidth, 2.0 + kInt);  // stub from the east wall of C

  PlanMetadata meta;
  meta.resolution_m_per_px = kRes;
  meta.ceiling_height_m = 2.6;

  Scenario s{FloorPlan(cols, rows, std::move(cells), meta), {}};
  const std::vector<Eigen::Vector2d> tour = {
      {1.2, 1.2},  {3.4, 1.2},  {3.4, 5.0},  {6.4, 5.0},  {6.4, 2.0},  {8.5, 2.0},  {8.5, 3.2},
      {6.4, 3.2},  {6.4, 5.0},  {11.4, 5.0}, {11.4, 2.6}, {13.4, 2.6}, {13.4, 1.2}, {11.4, 1.2},
      {11.4, 5.0}, {10.4, 5.0}, {10.4, 7.0}, {13.4, 7.0}, {13.4, 9.0}, {8.0, 9.0},  {8.0, 8.4},
      {5.0, 8.4},  {5.0, 7.0},  {2.4, 7.0},
  };
  for (const auto& p : tour) {
    s.trajectory.waypoints.emplace_back(p.x() + kMargin, p.y() + kMargin, 0.0);
  }
  return s;
}

}  // namespace fploc
