#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include <Eigen/Core>

#include "fploc/camera.hpp"
#include "fploc/floorplan.hpp"
#include "fploc/geometry.hpp"
#include "fploc/layout.hpp"
#include "fploc/measurement.hpp"
#include "fploc/random.hpp"

namespace fploc {

struct Particle
{
  Pose2 pose;
  double log_weight = 0.0;
};

struct ParticleSet
{
  std::vector<Particle> particles;
  /// Σ exp(log_weight) = 1.
  bool normalized = false;

  std::size_t size() const { return particles.size(); }
  bool empty() const { return particles.empty(); }
  /// Linear-domain weights, renormalized to sum to one.
  std::vector<double> weights() const;
};

/// Relative motion in the previous robot frame.
struct OdometryDelta
{
  double dx = 0.0;
  double dy = 0.0;
  double dtheta = 0.0;

  OdometryDelta() = default;
  OdometryDelta(double dx_, double dy_, double dtheta_) : dx(dx_), dy(dy_), dtheta(wrap_angle(dtheta_)) {}

  static OdometryDelta from_pose(const Pose2& p) { return {p.x, p.y, p.theta}; }
  Pose2 as_pose() const { return {dx, dy, dtheta}; }

  /// Motion `next` appended after this one.
  OdometryDelta then(const OdometryDelta& next) const { return from_pose(as_pose() * next.as_pose()); }
};

/// Variance coefficients of the (rot1, trans, rot2) odometry model.
struct MotionNoise
{
  double alpha1 = 0.05;  ///< rotation from rotation
  double alpha2 = 0.05;  ///< rotation from translation
  double alpha3 = 0.05;  ///< translation from translation
  double alpha4 = 0.02;  ///< translation from rotation

  void validate() const;
  static MotionNoise zero() { return {0.0, 0.0, 0.0, 0.0}; }
};

/// (rot1, trans, rot2) decomposition of a relative motion. Translations under
/// 1 mm are treated as a rotation in place with rot1 = 0.
struct MotionDecomposition
{
  double rot1 = 0.0;
  double trans = 0.0;
  double rot2 = 0.0;
  bool in_place = false;
};

inline constexpr double kInPlaceTranslationM = 1e-3;

MotionDecomposition decompose(const OdometryDelta& u);

/// Draws one noisy version of `u` from the odometry motion model.
OdometryDelta sample_motion(const OdometryDelta& u, const MotionNoise& noise, Rng& rng);

struct KldParams
{
  double epsilon = 0.05;
  double quantile_z = 2.3263;  ///< upper 1 - δ quantile of N(0, 1), 99%
  double bin_x_m = 0.5;
  double bin_y_m = 0.5;
  double bin_theta_rad = deg2rad(15.0);
  int n_min = 1500;
  int n_max = 5000;

  void validate() const;
};

struct GatingParams
{
  double translation_m = 0.25;
  double rotation_rad = 0.25;
};

struct PoseStd
{
  double x_m = 0.0;
  double y_m = 0.0;
  double theta_rad = 0.0;
};

/// n particles from independent Gaussians around pose0, uniform weights.
ParticleSet init(const Pose2& pose0, const PoseStd& std, int n, std::uint64_t seed);

/// Advances every particle by a noisy sample of u. Weights are untouched.
ParticleSet predict(ParticleSet set, const OdometryDelta& u, const MotionNoise& noise, std::uint64_t seed);

/// Shifts log weights so the largest is 0, then subtracts log Σ exp.
void normalize(ParticleSet& set);

/// Scores every particle with the layout likelihood and renormalizes.
/// Particles outside the free space of `plan` get the saturation floor.
/// Evaluation is data-parallel and independent of the worker count.
ParticleSet weight(ParticleSet set, const DistanceField& field, const FloorPlan& plan, const CornerSet& corners,
                   const CameraModel& cam, const LayoutParams& layout_params, const MeasurementParams& meas_params);

/// KLD bound before clamping; k <= 1 returns 0.
double kld_bound(int k_bins, double epsilon, double quantile_z);

/// Wilson–Hilferty chi-square bound clamped to [n_min, n_max].
int kld_sample_size(int k_bins, const KldParams& params);

struct ResampleResult
{
  ParticleSet set;
  int occupied_bins = 0;
  /// Input weights were all zero (or not finite) and a uniform draw was used.
  bool uniform_fallback = false;
};

/// KLD-adaptive resampling. Draws come from a systematic comb of n_max
/// positions visited in a seeded random order; the draw stops once the count
/// reaches the KLD bound of the occupied bins (within [n_min, n_max]).
ResampleResult resample(const ParticleSet& set, const KldParams& params, std::uint64_t seed);

bool should_update(const OdometryDelta& accumulated, const GatingParams& gating = {});

struct PoseEstimate
{
  Pose2 mean;
  Eigen::Matrix3d covariance = Eigen::Matrix3d::Zero();
};

/// Weighted mean (circular for θ) and covariance with wrapped angular
/// residuals. Independent of particle order, bit for bit.
PoseEstimate estimate(const ParticleSet& set);

/// Filter state snapshot, columns x,y,theta,weight.
void write_particles_csv(const std::filesystem::path& path, const ParticleSet& set);

}  // namespace fploc
