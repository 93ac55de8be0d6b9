#include "fploc/measurement.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fploc/error.hpp"

namespace fploc {

EdgeMask EdgeMask::from_image(const GrayImage& image)
{
  EdgeMask m(image.width, image.height);
  for (std::size_t i = 0; i < image.pixels.size(); ++i) {
    m.data_[i] = image.pixels[i] >= 128 ? 1 : 0;
  }
  return m;
}

EdgeMask EdgeMask::from_probability(std::span<const float> probabilities, int width, int height, float threshold)
{
  if (probabilities.size() != static_cast<std::size_t>(width) * height) {
    throw ValidationError("probability map does not match the mask dimensions");
  }
  EdgeMask m(width, height);
  for (std::size_t i = 0; i < probabilities.size(); ++i) {
    m.data_[i] = probabilities[i] >= threshold ? 1 : 0;
  }
  return m;
}

std::size_t EdgeMask::count() const
{
  return static_cast<std::size_t>(std::count(data_.begin(), data_.end(), std::uint8_t{1}));
}

GrayImage EdgeMask::to_image() const
{
  GrayImage img(width_, height_);
  for (std::size_t i = 0; i < data_.size(); ++i) {
    img.pixels[i] = data_[i] ? 255 : 0;
  }
  return img;
}

EdgeMask load_edge_mask(const std::filesystem::path& path)
{
  return EdgeMask::from_image(read_gray_image(path));
}

void save_edge_mask(const std::filesystem::path& path, const EdgeMask& mask)
{
  write_gray_image(path, mask.to_image());
}

DistanceField::DistanceField(int width, int height, std::vector<std::int64_t> squared, bool empty_mask)
    : width_(width), height_(height), squared_(std::move(squared)), dist_(squared_.size()), empty_mask_(empty_mask)
{
  const double diag = diagonal();
  for (std::size_t i = 0; i < squared_.size(); ++i) {
    dist_[i] = empty_mask_ ? diag : std::sqrt(static_cast<double>(squared_[i]));
  }
}

double DistanceField::diagonal() const
{
  return std::hypot(static_cast<double>(width_), static_cast<double>(height_));
}

DistanceField distance_transform(const EdgeMask& mask)
{
  const int w = mask.width();
  const int h = mask.height();
  constexpr std::int64_t kInf = std::numeric_limits<std::int64_t>::max() / 4;
  std::vector<std::int64_t> col(static_cast<std::size_t>(w) * h, kInf);
  const auto idx = [w](int x, int y) { return static_cast<std::size_t>(y) * w + x; };

  // Column pass: squared vertical distance to the nearest edge in the column.
  bool any_edge = false;
  for (int x = 0; x < w; ++x) {
    std::int64_t last = -1;
    for (int y = 0; y < h; ++y) {
      if (mask.edge(x, y)) {
        last = y;
        any_edge = true;
      }
      if (last >= 0) {
        col[idx(x, y)] = (y - last) * (y - last);
      }
    }
    last = -1;
    for (int y = h - 1; y >= 0; --y) {
      if (mask.edge(x, y)) {
        last = y;
      }
      if (last >= 0) {
        col[idx(x, y)] = std::min(col[idx(x, y)], (last - y) * (last - y));
      }
    }
  }

  std::vector<std::int64_t> out(col.size(), 0);
  if (!any_edge) {
    return {w, h, std::move(out), true};
  }

  // Row pass: lower envelope of parabolas (x - q)² + f(q) over finite sites.
  std::vector<int> sites(static_cast<std::size_t>(w));
  std::vector<double> bounds(static_cast<std::size_t>(w) + 1);
  for (int y = 0; y < h; ++y) {
    const std::int64_t* f = &col[idx(0, y)];
    int k = -1;
    for (int q = 0; q < w; ++q) {
      if (f[q] >= kInf) {
        continue;
      }
      double s = -std::numeric_limits<double>::infinity();
      while (k >= 0) {
        const int v = sites[k];
        s = (static_cast<double>(f[q] + std::int64_t{q} * q) - static_cast<double>(f[v] + std::int64_t{v} * v)) /
            (2.0 * (q - v));
        if (s > bounds[k]) {
          break;
        }
        --k;
      }
      ++k;
      sites[k] = q;
      bounds[k] = k == 0 ? -std::numeric_limits<double>::infinity() : s;
    }
    bounds[k + 1] = std::numeric_limits<double>::infinity();
    int j = 0;
    for (int x = 0; x < w; ++x) {
      while (bounds[j + 1] < x) {
        ++j;
      }
      const std::int64_t dx = x - sites[j];
      out[idx(x, y)] = dx * dx + f[sites[j]];
    }
  }
  return {w, h, std::move(out), false};
}

void MeasurementParams::validate() const
{
  if (!(sigma_z_px > 0.0) || !(delta_px > 0.0)) {
    throw ValidationError("measurement sigma_z and delta must be positive");
  }
}

Likelihood log_likelihood(const LayoutPointSet& layout, const DistanceField& field, const ImageProjector& projector,
                          const MeasurementParams& params)
{
  const CameraModel& cam = projector.camera();
  if (field.width() != cam.width || field.height() != cam.height) {
    throw ValidationError("distance field does not match the camera image size");
  }
  const double delta = params.delta_px;
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& p : layout.points) {
    const auto uv = projector(p);
    if (!uv) {
      continue;
    }
    const double d = std::min(field.at(static_cast<int>(uv->x()), static_cast<int>(uv->y())), delta);
    sum += d * d;
    ++n;
  }
  Likelihood out;
  out.n_projected = n;
  if (n == 0) {
    out.log_likelihood = params.saturation_floor();
    out.unexplained = true;
    return out;
  }
  out.log_likelihood = -sum / (2.0 * static_cast<double>(n) * params.sigma_z_px * params.sigma_z_px);
  return out;
}

Likelihood log_likelihood(const LayoutPointSet& layout, const DistanceField& field, const CameraModel& cam,
                          const Pose2& robot_pose, const MeasurementParams& params)
{
  return log_likelihood(layout, field, ImageProjector(cam, compose(robot_pose, cam.extrinsics)), params);
}

EdgeError edge_error(const EdgeMask& predicted, const EdgeMask& truth)
{
  if (predicted.width() != truth.width() || predicted.height() != truth.height()) {
    throw ValidationError("edge masks differ in size");
  }
  const std::size_t np = predicted.count();
  const std::size_t nt = truth.count();
  if (np == 0 || nt == 0) {
    return {std::hypot(static_cast<double>(truth.width()), static_cast<double>(truth.height())), true};
  }
  const DistanceField to_truth = distance_transform(truth);
  const DistanceField to_pred = distance_transform(predicted);
  double sp = 0.0;
  double st = 0.0;
  for (int y = 0; y < truth.height(); ++y) {
    for (int x = 0; x < truth.width(); ++x) {
      if (predicted.edge(x, y)) {
        sp += to_truth.at(x, y);
      }
      if (truth.edge(x, y)) {
        st += to_pred.at(x, y);
      }
    }
  }
  return {0.5 * (sp / static_cast<double>(np) + st / static_cast<double>(nt)), false};
}

}  // namespace fploc
