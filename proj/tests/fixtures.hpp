#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "fploc/camera.hpp"
#include "fploc/floorplan.hpp"
#include "fploc/measurement.hpp"
#include "fploc/random.hpp"

namespace fixture {

/// Scratch directory removed on destruction.
struct TempDir
{
  std::filesystem::path path;

  explicit TempDir(const std::string& tag)
      : path(std::filesystem::temp_directory_path() / ("fploc_" + tag + "_" + std::to_string(::getpid())))
  {
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::filesystem::path operator/(const std::string& name) const { return path / name; }
};

inline fploc::PlanMetadata meta(double resolution = 0.01, double ceiling = 2.6)
{
  fploc::PlanMetadata m;
  m.resolution_m_per_px = resolution;
  m.ceiling_height_m = ceiling;
  return m;
}

/// Cell buffer with helpers to paint rectangles in cell coordinates.
struct Canvas
{
  int w;
  int h;
  std::vector<std::uint8_t> cells;

  Canvas(int width, int height) : w(width), h(height), cells(static_cast<std::size_t>(width) * height, 0) {}

  /// Half-open cell rectangle [x0, x1) x [y0, y1), clipped.
  Canvas& rect(int x0, int y0, int x1, int y1, std::uint8_t value = 1)
  {
    for (int y = std::max(0, y0); y < std::min(h, y1); ++y) {
      for (int x = std::max(0, x0); x < std::min(w, x1); ++x) {
        cells[static_cast<std::size_t>(y) * w + x] = value;
      }
    }
    return *this;
  }

  Canvas& border(int thickness = 1)
  {
    rect(0, 0, w, thickness);
    rect(0, h - thickness, w, h);
    rect(0, 0, thickness, h);
    rect(w - thickness, 0, w, h);
    return *this;
  }

  fploc::FloorPlan plan(double resolution = 0.01, double ceiling = 2.6) const
  {
    return {w, h, cells, meta(resolution, ceiling)};
  }
};

/// Square room of side `side_m` with a one-cell occupied border.
inline fploc::FloorPlan box_room(double side_m, double resolution = 0.01)
{
  const int n = static_cast<int>(std::lround(side_m / resolution));
  return Canvas(n, n).border().plan(resolution);
}

/// 6 m x 4 m room (2 cm cells) with 10 cm walls, a column and a wall stub so
/// that no two poses see the same layout.
inline fploc::FloorPlan asymmetric_room()
{
  Canvas c(300, 200);
  c.border(5);
  c.rect(200, 60, 215, 75);   // column at (4.0..4.3, 1.2..1.5)
  c.rect(80, 140, 85, 200);   // stub from the north wall at x = 1.6
  c.rect(250, 0, 300, 40);    // notch in the south-east corner
  return c.plan(0.02);
}

/// Random axis-aligned blocks on an empty grid.
inline fploc::FloorPlan random_blocks(fploc::Rng& rng, int w, int h, int n_blocks, double resolution)
{
  Canvas c(w, h);
  std::uniform_int_distribution<int> px(0, w - 1);
  std::uniform_int_distribution<int> py(0, h - 1);
  std::uniform_int_distribution<int> size(1, std::max(2, std::min(w, h) / 4));
  for (int i = 0; i < n_blocks; ++i) {
    const int x = px(rng);
    const int y = py(rng);
    c.rect(x, y, x + size(rng), y + size(rng));
  }
  return c.plan(resolution);
}

inline fploc::EdgeMask random_mask(fploc::Rng& rng, int w, int h, double density)
{
  fploc::EdgeMask m(w, h);
  std::bernoulli_distribution b(density);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (b(rng)) {
        m.set(x, y);
      }
    }
  }
  return m;
}

/// Level camera at the robot origin with a 90° horizontal field of view.
inline fploc::CameraModel wide_camera()
{
  fploc::CameraModel cam;
  cam.fx = 160.0;
  cam.fy = 160.0;
  cam.cx = 160.0;
  cam.cy = 120.0;
  cam.width = 320;
  cam.height = 240;
  return cam;
}

/// Default simulation camera: 1 m above the floor, 10 cm ahead of the robot.
inline fploc::CameraModel robot_camera()
{
  fploc::CameraModel cam;
  cam.extrinsics = fploc::Pose3::from_xyz_rpy({0.1, 0.0, 1.0}, 0.0, 0.0, 0.0);
  return cam;
}

}  // namespace fixture
