#include "fploc/floorplan.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>
#include <string>

#include "fploc/error.hpp"

namespace fploc {

void PlanMetadata::validate() const
{
  if (!(resolution_m_per_px > 0.0) || !std::isfinite(resolution_m_per_px)) {
    throw ValidationError("floor plan resolution must be positive");
  }
  if (!(ceiling_height_m > 0.0) || !std::isfinite(ceiling_height_m)) {
    throw ValidationError("floor plan ceiling height must be positive");
  }
  if (occupancy_threshold < 1 || occupancy_threshold > 255) {
    throw ValidationError("occupancy threshold must lie in [1, 255]");
  }
}

namespace {

std::string trim(const std::string& s)
{
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) {
    return {};
  }
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double parse_number(const std::map<std::string, std::string>& kv, const std::string& key,
                    const std::filesystem::path& path)
{
  const auto it = kv.find(key);
  if (it == kv.end()) {
    throw LoadError("metadata '" + path.string() + "' is missing key '" + key + "'");
  }
  try {
    std::size_t used = 0;
    const double v = std::stod(it->second, &used);
    if (used != it->second.size()) {
      throw std::invalid_argument(key);
    }
    return v;
  } catch (const std::exception&) {
    throw LoadError("metadata '" + path.string() + "': key '" + key + "' is not a number");
  }
}

}  // namespace

PlanMetadata read_plan_metadata(const std::filesystem::path& path)
{
  std::ifstream in(path);
  if (!in) {
    throw LoadError("cannot open metadata file '" + path.string() + "'");
  }
  std::map<std::string, std::string> kv;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty() || line[0] == '#') {
      continue;
    }
    const auto sep = line.find(':');
    if (sep == std::string::npos) {
      throw LoadError("metadata '" + path.string() + "' line " + std::to_string(line_no) + ": expected 'key: value'");
    }
    kv[trim(line.substr(0, sep))] = trim(line.substr(sep + 1));
  }

  PlanMetadata meta;
  meta.resolution_m_per_px = parse_number(kv, "resolution", path);
  meta.origin = Pose2(parse_number(kv, "origin_x", path), parse_number(kv, "origin_y", path),
                      parse_number(kv, "origin_theta", path));
  meta.ceiling_height_m = parse_number(kv, "ceiling_height", path);
  if (kv.contains("occupancy_threshold")) {
    meta.occupancy_threshold = static_cast<int>(parse_number(kv, "occupancy_threshold", path));
  }
  meta.validate();
  return meta;
}

void write_plan_metadata(const std::filesystem::path& path, const PlanMetadata& meta)
{
  std::ofstream out(path);
  if (!out) {
    throw Error("cannot write metadata file '" + path.string() + "'");
  }
  out << std::setprecision(17);
  out << "# floor plan metadata\n"
      << "resolution: " << meta.resolution_m_per_px << '\n'
      << "origin_x: " << meta.origin.x << '\n'
      << "origin_y: " << meta.origin.y << '\n'
      << "origin_theta: " << meta.origin.theta << '\n'
      << "ceiling_height: " << meta.ceiling_height_m << '\n'
      << "occupancy_threshold: " << meta.occupancy_threshold << '\n';
}

FloorPlan::FloorPlan(int width, int height, std::vector<std::uint8_t> occupied, PlanMetadata meta)
    : width_(width), height_(height), cells_(std::move(occupied)), meta_(meta)
{
  meta_.validate();
  if (width_ <= 0 || height_ <= 0) {
    throw ValidationError("floor plan dimensions must be positive");
  }
  if (cells_.size() != static_cast<std::size_t>(width_) * height_) {
    throw ValidationError("floor plan cell buffer does not match its dimensions");
  }
  for (auto& c : cells_) {
    c = c != 0 ? 1 : 0;
  }
}

Eigen::Vector2d FloorPlan::world_to_grid(const Eigen::Vector2d& world) const
{
  const double c = std::cos(meta_.origin.theta);
  const double s = std::sin(meta_.origin.theta);
  const double dx = world.x() - meta_.origin.x;
  const double dy = world.y() - meta_.origin.y;
  return Eigen::Vector2d(c * dx + s * dy, -s * dx + c * dy) / meta_.resolution_m_per_px;
}

Eigen::Vector2d FloorPlan::grid_to_world(const Eigen::Vector2d& grid) const
{
  return meta_.origin.transform(grid * meta_.resolution_m_per_px);
}

bool FloorPlan::contains(const Eigen::Vector2d& world) const
{
  const Eigen::Vector2d g = world_to_grid(world);
  return in_bounds(static_cast<int>(std::floor(g.x())), static_cast<int>(std::floor(g.y())));
}

bool FloorPlan::occupied_at(const Eigen::Vector2d& world) const
{
  const Eigen::Vector2d g = world_to_grid(world);
  const int col = static_cast<int>(std::floor(g.x()));
  const int row = static_cast<int>(std::floor(g.y()));
  return in_bounds(col, row) && occupied(col, row);
}

bool FloorPlan::free_at(const Eigen::Vector2d& world) const
{
  const Eigen::Vector2d g = world_to_grid(world);
  const int col = static_cast<int>(std::floor(g.x()));
  const int row = static_cast<int>(std::floor(g.y()));
  return in_bounds(col, row) && !occupied(col, row);
}

FloorPlan FloorPlan::with_origin(const Pose2& origin) const
{
  PlanMetadata meta = meta_;
  meta.origin = origin;
  return {width_, height_, cells_, meta};
}

FloorPlan FloorPlan::downsampled(int factor) const
{
  if (factor < 1) {
    throw ValidationError("downsample factor must be >= 1");
  }
  if (factor == 1) {
    return *this;
  }
  const int w = (width_ + factor - 1) / factor;
  const int h = (height_ + factor - 1) / factor;
  std::vector<std::uint8_t> coarse(static_cast<std::size_t>(w) * h, 0);
  for (int row = 0; row < height_; ++row) {
    for (int col = 0; col < width_; ++col) {
      if (occupied(col, row)) {
        coarse[static_cast<std::size_t>(row / factor) * w + col / factor] = 1;
      }
    }
  }
  PlanMetadata meta = meta_;
  meta.resolution_m_per_px *= factor;
  return {w, h, std::move(coarse), meta};
}

GrayImage FloorPlan::to_image() const
{
  GrayImage img(width_, height_);
  for (std::size_t i = 0; i < cells_.size(); ++i) {
    img.pixels[i] = cells_[i] ? 0 : 255;
  }
  return img;
}

FloorPlan floorplan_from_image(const GrayImage& image, const PlanMetadata& meta)
{
  meta.validate();
  std::vector<std::uint8_t> occ(image.pixels.size());
  for (std::size_t i = 0; i < occ.size(); ++i) {
    occ[i] = image.pixels[i] < meta.occupancy_threshold ? 1 : 0;
  }
  return {image.width, image.height, std::move(occ), meta};
}

FloorPlan load_floorplan(const std::filesystem::path& image_path, const std::filesystem::path& meta_path)
{
  const PlanMetadata meta = read_plan_metadata(meta_path);
  return floorplan_from_image(read_gray_image(image_path), meta);
}

void save_floorplan(const FloorPlan& plan, const std::filesystem::path& image_path, const std::filesystem::path& meta_path)
{
  write_gray_image(image_path, plan.to_image());
  write_plan_metadata(meta_path, plan.metadata());
}

// ---------------------------------------------------------------------------
// Morphology
// ---------------------------------------------------------------------------

namespace {

struct BinaryGrid
{
  int w = 0;
  int h = 0;
  std::vector<std::uint8_t> v;

  std::uint8_t& at(int x, int y) { return v[static_cast<std::size_t>(y) * w + x]; }
  std::uint8_t at(int x, int y) const { return v[static_cast<std::size_t>(y) * w + x]; }
};

// Sliding-window pass along one axis. `erode` requires the whole window to be
// set and inside the buffer (outside counts as unset); dilation requires any.
void window_pass(BinaryGrid& g, int r, bool along_x, bool erode)
{
  const int len = along_x ? g.w : g.h;
  const int lines = along_x ? g.h : g.w;
  std::vector<int> prefix(static_cast<std::size_t>(len) + 1);
  std::vector<std::uint8_t> out(static_cast<std::size_t>(len));
  for (int line = 0; line < lines; ++line) {
    prefix[0] = 0;
    for (int i = 0; i < len; ++i) {
      prefix[i + 1] = prefix[i] + (along_x ? g.at(i, line) : g.at(line, i));
    }
    for (int i = 0; i < len; ++i) {
      const int lo = i - r;
      const int hi = i + r;
      if (erode) {
        out[i] = (lo >= 0 && hi < len && prefix[hi + 1] - prefix[lo] == 2 * r + 1) ? 1 : 0;
      } else {
        out[i] = prefix[std::min(hi, len - 1) + 1] - prefix[std::max(lo, 0)] > 0 ? 1 : 0;
      }
    }
    for (int i = 0; i < len; ++i) {
      (along_x ? g.at(i, line) : g.at(line, i)) = out[i];
    }
  }
}

void dilate(BinaryGrid& g, int r)
{
  if (r > 0) {
    window_pass(g, r, true, false);
    window_pass(g, r, false, false);
  }
}

void erode(BinaryGrid& g, int r)
{
  if (r > 0) {
    window_pass(g, r, true, true);
    window_pass(g, r, false, true);
  }
}

}  // namespace

FloorPlan preprocess(const FloorPlan& plan, int open_radius_px, int close_radius_px)
{
  if (open_radius_px < 0 || close_radius_px < 0) {
    throw ValidationError("morphology radii must be non-negative");
  }
  const int w = plan.width();
  const int h = plan.height();
  BinaryGrid g{w, h, {plan.cells().begin(), plan.cells().end()}};

  // Opening never grows the set, so the image bounds suffice.
  erode(g, open_radius_px);
  dilate(g, open_radius_px);

  // Closing: pad so the intermediate dilation is not clipped.
  const int p = close_radius_px;
  BinaryGrid padded{w + 2 * p, h + 2 * p, {}};
  padded.v.assign(static_cast<std::size_t>(padded.w) * padded.h, 0);
  for (int y = 0; y < h; ++y) {
    std::copy_n(&g.v[static_cast<std::size_t>(y) * w], w, &padded.at(p, y + p));
  }
  dilate(padded, p);
  erode(padded, p);
  for (int y = 0; y < h; ++y) {
    std::copy_n(&padded.at(p, y + p), w, &g.v[static_cast<std::size_t>(y) * w]);
  }
  return plan.with_cells(std::move(g.v));
}

// ---------------------------------------------------------------------------
// Corners
// ---------------------------------------------------------------------------

std::vector<Eigen::Vector2d> cluster_points(std::vector<Eigen::Vector2d> points, double radius)
{
  if (!(radius > 0.0)) {
    throw ValidationError("cluster radius must be positive");
  }
  const auto by_yx = [](const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
    return a.y() != b.y() ? a.y() < b.y() : a.x() < b.x();
  };
  const double r2 = radius * radius;
  for (;;) {
    std::sort(points.begin(), points.end(), by_yx);
    const std::size_t n = points.size();
    std::vector<std::size_t> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    const auto find = [&](std::size_t i) {
      while (parent[i] != i) {
        parent[i] = parent[parent[i]];
        i = parent[i];
      }
      return i;
    };
    bool merged = false;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        // sorted by y: later points can only be farther in y
        if (points[j].y() - points[i].y() >= radius) {
          break;
        }
        if ((points[i] - points[j]).squaredNorm() < r2) {
          const std::size_t a = find(i);
          const std::size_t b = find(j);
          if (a != b) {
            parent[std::max(a, b)] = std::min(a, b);
            merged = true;
          }
        }
      }
    }
    if (!merged) {
      return points;
    }
    std::vector<Eigen::Vector2d> sums(n, Eigen::Vector2d::Zero());
    std::vector<int> counts(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t root = find(i);
      sums[root] += points[i];
      ++counts[root];
    }
    std::vector<Eigen::Vector2d> next;
    for (std::size_t i = 0; i < n; ++i) {
      if (counts[i] > 0) {
        next.push_back(sums[i] / counts[i]);
      }
    }
    points = std::move(next);
  }
}

CornerSet detect_corners(const FloorPlan& plan, const HarrisParams& params)
{
  if (!(params.cluster_radius_m > 0.0)) {
    throw ValidationError("corner cluster radius must be positive");
  }
  const int w = plan.width();
  const int h = plan.height();
  const auto idx = [w](int x, int y) { return static_cast<std::size_t>(y) * w + x; };
  const auto clampx = [w](int x) { return std::clamp(x, 0, w - 1); };
  const auto clampy = [h](int y) { return std::clamp(y, 0, h - 1); };
  const auto img = [&](int x, int y) { return static_cast<double>(plan.occupied(clampx(x), clampy(y))); };

  // Sobel gradients with replicated borders.
  std::vector<double> ixx(plan.cells().size());
  std::vector<double> iyy(ixx.size());
  std::vector<double> ixy(ixx.size());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double gx = (img(x + 1, y - 1) + 2.0 * img(x + 1, y) + img(x + 1, y + 1)) -
                        (img(x - 1, y - 1) + 2.0 * img(x - 1, y) + img(x - 1, y + 1));
      const double gy = (img(x - 1, y + 1) + 2.0 * img(x, y + 1) + img(x + 1, y + 1)) -
                        (img(x - 1, y - 1) + 2.0 * img(x, y - 1) + img(x + 1, y - 1));
      ixx[idx(x, y)] = gx * gx;
      iyy[idx(x, y)] = gy * gy;
      ixy[idx(x, y)] = gx * gy;
    }
  }

  // 3x3 box window for the structure tensor, then the Harris response.
  std::vector<double> response(ixx.size());
  double max_response = 0.0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double a = 0.0, b = 0.0, c = 0.0;
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          const std::size_t i = idx(clampx(x + dx), clampy(y + dy));
          a += ixx[i];
          b += iyy[i];
          c += ixy[i];
        }
      }
      const double r = a * b - c * c - params.k * (a + b) * (a + b);
      response[idx(x, y)] = r;
      max_response = std::max(max_response, r);
    }
  }

  CornerSet out;
  if (!(max_response > 0.0)) {
    return out;
  }
  const double threshold = params.relative_threshold * max_response;
  std::vector<Eigen::Vector2d> candidates;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double r = response[idx(x, y)];
      if (r <= threshold || r <= 0.0) {
        continue;
      }
      bool is_max = true;
      for (int dy = -1; dy <= 1 && is_max; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          const int nx = x + dx;
          const int ny = y + dy;
          if ((dx || dy) && nx >= 0 && ny >= 0 && nx < w && ny < h && response[idx(nx, ny)] > r) {
            is_max = false;
            break;
          }
        }
      }
      if (is_max) {
        candidates.emplace_back(x + 0.5, y + 0.5);
      }
    }
  }

  const auto clustered = cluster_points(std::move(candidates), params.cluster_radius_m / plan.resolution());
  out.corners.reserve(clustered.size());
  for (const auto& g : clustered) {
    out.corners.push_back(plan.grid_to_world(g));
  }
  std::sort(out.corners.begin(), out.corners.end(), [](const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
    return a.y() != b.y() ? a.y() < b.y() : a.x() < b.x();
  });
  return out;
}

void write_corners_csv(const std::filesystem::path& path, const CornerSet& corners)
{
  std::ofstream out(path);
  if (!out) {
    throw Error("cannot write '" + path.string() + "'");
  }
  out << std::setprecision(10) << "x_m,y_m\n";
  for (const auto& c : corners.corners) {
    out << c.x() << ',' << c.y() << '\n';
  }
}

// ---------------------------------------------------------------------------
// Ray casting
// ---------------------------------------------------------------------------

RayHit raycast(const FloorPlan& plan, const Eigen::Vector2d& origin, double direction_rad, double max_range_m)
{
  RayHit out;
  const Eigen::Vector2d g = plan.world_to_grid(origin);
  int ix = static_cast<int>(std::floor(g.x()));
  int iy = static_cast<int>(std::floor(g.y()));
  if (!plan.in_bounds(ix, iy)) {
    return out;
  }
  if (plan.occupied(ix, iy)) {
    out.hit = true;
    out.point = origin;
    return out;
  }

  const double local = direction_rad - plan.origin().theta;
  const double dx = std::cos(local);
  const double dy = std::sin(local);
  constexpr double inf = std::numeric_limits<double>::infinity();
  const int step_x = dx > 0.0 ? 1 : -1;
  const int step_y = dy > 0.0 ? 1 : -1;
  const double delta_x = dx != 0.0 ? 1.0 / std::abs(dx) : inf;
  const double delta_y = dy != 0.0 ? 1.0 / std::abs(dy) : inf;
  double t_x = dx > 0.0 ? (ix + 1 - g.x()) * delta_x : (dx < 0.0 ? (g.x() - ix) * delta_x : inf);
  double t_y = dy > 0.0 ? (iy + 1 - g.y()) * delta_y : (dy < 0.0 ? (g.y() - iy) * delta_y : inf);
  const double max_t = max_range_m / plan.resolution();

  const int w = plan.width();
  const int h = plan.height();
  const std::uint8_t* cells = plan.cells().data();
  for (;;) {
    double t;
    if (t_x < t_y) {
      ix += step_x;
      t = t_x;
      t_x += delta_x;
    } else {
      iy += step_y;
      t = t_y;
      t_y += delta_y;
    }
    if (t > max_t || ix < 0 || iy < 0 || ix >= w || iy >= h) {
      return out;
    }
    if (cells[static_cast<std::size_t>(iy) * w + ix]) {
      out.hit = true;
      out.range_m = t * plan.resolution();
      out.point = origin + out.range_m * Eigen::Vector2d(std::cos(direction_rad), std::sin(direction_rad));
      return out;
    }
  }
}

}  // namespace fploc
