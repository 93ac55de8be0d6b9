#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "fploc/camera.hpp"
#include "fploc/image_io.hpp"
#include "fploc/layout.hpp"

namespace fploc {

/// Binary layout-edge image. Pixel (x, y) covers [x, x+1) x [y, y+1) in image
/// coordinates, matching the projection convention.
class EdgeMask
{
public:
  EdgeMask() = default;
  EdgeMask(int width, int height) : width_(width), height_(height), data_(static_cast<std::size_t>(width) * height, 0) {}

  /// Intensity >= 128 is an edge.
  static EdgeMask from_image(const GrayImage& image);
  /// Soft network output thresholded at `threshold` (inclusive).
  static EdgeMask from_probability(std::span<const float> probabilities, int width, int height, float threshold = 0.5f);

  int width() const { return width_; }
  int height() const { return height_; }
  bool edge(int x, int y) const { return data_[static_cast<std::size_t>(y) * width_ + x] != 0; }
  void set(int x, int y, bool value = true) { data_[static_cast<std::size_t>(y) * width_ + x] = value ? 1 : 0; }
  bool in_bounds(int x, int y) const { return x >= 0 && y >= 0 && x < width_ && y < height_; }
  std::size_t count() const;
  std::span<const std::uint8_t> data() const { return data_; }

  GrayImage to_image() const;

  friend bool operator==(const EdgeMask&, const EdgeMask&) = default;

private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> data_;
};

EdgeMask load_edge_mask(const std::filesystem::path& path);
void save_edge_mask(const std::filesystem::path& path, const EdgeMask& mask);

/// Per-pixel Euclidean distance (px) to the nearest edge pixel.
class DistanceField
{
public:
  DistanceField() = default;
  DistanceField(int width, int height, std::vector<std::int64_t> squared, bool empty_mask);

  int width() const { return width_; }
  int height() const { return height_; }
  double at(int x, int y) const { return dist_[static_cast<std::size_t>(y) * width_ + x]; }
  /// Exact squared distance; meaningless when the mask was empty.
  std::int64_t squared_at(int x, int y) const { return squared_[static_cast<std::size_t>(y) * width_ + x]; }
  /// True when the source mask had no edge pixels; every value is then the
  /// image diagonal.
  bool empty_mask() const { return empty_mask_; }
  double diagonal() const;

private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::int64_t> squared_;
  std::vector<double> dist_;
  bool empty_mask_ = false;
};

/// Exact Euclidean distance transform: per-column 1D distances followed by a
/// per-row lower envelope of parabolas over squared distances.
DistanceField distance_transform(const EdgeMask& mask);

struct MeasurementParams
{
  double sigma_z_px = 10.0;
  double delta_px = 25.0;

  void validate() const;
  /// Lowest attainable log-likelihood, -δ²/(2σ_z²).
  double saturation_floor() const { return -delta_px * delta_px / (2.0 * sigma_z_px * sigma_z_px); }
};

struct Likelihood
{
  double log_likelihood = 0.0;
  std::size_t n_projected = 0;
  /// No layout point projected into the image; log_likelihood is the floor.
  bool unexplained = false;
};

/// log p(z | x) = -1/(2 n σ_z²) Σ min(d(π(o), z), δ)² over the n layout points
/// that project into the image.
Likelihood log_likelihood(const LayoutPointSet& layout, const DistanceField& field, const CameraModel& cam,
                          const Pose2& robot_pose, const MeasurementParams& params);

/// Same, with the projection precomputed.
Likelihood log_likelihood(const LayoutPointSet& layout, const DistanceField& field, const ImageProjector& projector,
                          const MeasurementParams& params);

struct EdgeError
{
  double value = 0.0;
  /// One of the masks was empty; value is the image diagonal.
  bool degenerate = false;
};

/// Symmetric chamfer error: mean distance of predicted edge pixels to the
/// truth, averaged with the mean distance of truth pixels to the prediction.
EdgeError edge_error(const EdgeMask& predicted, const EdgeMask& truth);

}  // namespace fploc
