#include "fploc/mcl.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <unordered_set>

#include <tbb/blocked_range.h>
#include <tbb/parallel_for.h>

#include "fploc/error.hpp"

namespace fploc {

std::vector<double> ParticleSet::weights() const
{
  std::vector<double> w(particles.size());
  if (w.empty()) {
    return w;
  }
  double m = -std::numeric_limits<double>::infinity();
  for (const auto& p : particles) {
    m = std::max(m, p.log_weight);
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    w[i] = std::isfinite(m) ? std::exp(particles[i].log_weight - m) : 0.0;
    sum += w[i];
  }
  if (sum > 0.0 && std::isfinite(sum)) {
    for (auto& v : w) {
      v /= sum;
    }
  }
  return w;
}

void MotionNoise::validate() const
{
  if (!(alpha1 >= 0.0 && alpha2 >= 0.0 && alpha3 >= 0.0 && alpha4 >= 0.0)) {
    throw ValidationError("motion noise coefficients must be non-negative");
  }
}

void KldParams::validate() const
{
  if (!(epsilon > 0.0 && epsilon < 1.0)) {
    throw ValidationError("KLD epsilon must lie in (0, 1)");
  }
  if (!(bin_x_m > 0.0 && bin_y_m > 0.0 && bin_theta_rad > 0.0)) {
    throw ValidationError("KLD bin sizes must be positive");
  }
  if (n_min < 1 || n_min > n_max) {
    throw ValidationError("KLD particle bounds must satisfy 1 <= n_min <= n_max");
  }
}

MotionDecomposition decompose(const OdometryDelta& u)
{
  MotionDecomposition d;
  d.trans = std::hypot(u.dx, u.dy);
  if (d.trans < kInPlaceTranslationM) {
    d.in_place = true;
    d.rot2 = u.dtheta;
    return d;
  }
  d.rot1 = std::atan2(u.dy, u.dx);
  d.rot2 = wrap_angle(u.dtheta - d.rot1);
  return d;
}

OdometryDelta sample_motion(const OdometryDelta& u, const MotionNoise& noise, Rng& rng)
{
  const MotionDecomposition d = decompose(u);
  std::normal_distribution<double> n01(0.0, 1.0);
  const double e1 = n01(rng);
  const double e2 = n01(rng);
  const double e3 = n01(rng);

  const double t2 = d.trans * d.trans;
  const double rot1 = d.rot1 - std::sqrt(noise.alpha1 * d.rot1 * d.rot1 + noise.alpha2 * t2) * e1;
  const double trans =
      d.trans - std::sqrt(noise.alpha3 * t2 + noise.alpha4 * (d.rot1 * d.rot1 + d.rot2 * d.rot2)) * e2;
  const double rot2 = d.rot2 - std::sqrt(noise.alpha1 * d.rot2 * d.rot2 + noise.alpha2 * t2) * e3;

  if (d.in_place) {
    return {u.dx, u.dy, rot1 + rot2};
  }
  return {trans * std::cos(rot1), trans * std::sin(rot1), rot1 + rot2};
}

ParticleSet init(const Pose2& pose0, const PoseStd& std, int n, std::uint64_t seed)
{
  if (n < 1) {
    throw ValidationError("particle count must be positive");
  }
  Rng rng(seed);
  std::normal_distribution<double> n01(0.0, 1.0);
  ParticleSet set;
  set.particles.resize(static_cast<std::size_t>(n));
  const double lw = -std::log(static_cast<double>(n));
  for (auto& p : set.particles) {
    const double ex = n01(rng);
    const double ey = n01(rng);
    const double et = n01(rng);
    p.pose = Pose2(pose0.x + std.x_m * ex, pose0.y + std.y_m * ey, pose0.theta + std.theta_rad * et);
    p.log_weight = lw;
  }
  set.normalized = true;
  return set;
}

ParticleSet predict(ParticleSet set, const OdometryDelta& u, const MotionNoise& noise, std::uint64_t seed)
{
  noise.validate();
  if (set.empty()) {
    throw ValidationError("cannot predict an empty particle set");
  }
  const bool noiseless = noise.alpha1 == 0.0 && noise.alpha2 == 0.0 && noise.alpha3 == 0.0 && noise.alpha4 == 0.0;
  if (noiseless) {
    const Pose2 step = u.as_pose();
    for (auto& p : set.particles) {
      p.pose = p.pose * step;
    }
    return set;
  }
  Rng rng(seed);
  for (auto& p : set.particles) {
    p.pose = p.pose * sample_motion(u, noise, rng).as_pose();
  }
  return set;
}

void normalize(ParticleSet& set)
{
  double m = -std::numeric_limits<double>::infinity();
  for (const auto& p : set.particles) {
    m = std::max(m, p.log_weight);
  }
  if (!std::isfinite(m)) {
    set.normalized = false;
    return;
  }
  double sum = 0.0;
  for (const auto& p : set.particles) {
    sum += std::exp(p.log_weight - m);
  }
  const double shift = m + std::log(sum);
  for (auto& p : set.particles) {
    p.log_weight -= shift;
  }
  set.normalized = true;
}

ParticleSet weight(ParticleSet set, const DistanceField& field, const FloorPlan& plan, const CornerSet& corners,
                   const CameraModel& cam, const LayoutParams& layout_params, const MeasurementParams& meas_params)
{
  layout_params.validate();
  meas_params.validate();
  if (field.width() != cam.width || field.height() != cam.height) {
    throw ValidationError("distance field does not match the camera image size");
  }
  const double floor = meas_params.saturation_floor();
  std::vector<double> ll(set.size(), floor);

  tbb::parallel_for(tbb::blocked_range<std::size_t>(0, set.size(), 32), [&](const tbb::blocked_range<std::size_t>& r) {
    LayoutPointSet layout;
    layout.points.reserve(4 * static_cast<std::size_t>(layout_params.n_rays));
    for (std::size_t i = r.begin(); i != r.end(); ++i) {
      const Pose2& pose = set.particles[i].pose;
      if (!plan.free_at(pose.translation())) {
        continue;
      }
      GroundFrustum frustum;
      try {
        frustum = ground_frustum(pose, cam);
      } catch (const DegenerateFrustumError&) {
        continue;
      }
      extract_layout_into(plan, corners, frustum, layout_params, layout);
      const ImageProjector projector(cam, compose(pose, cam.extrinsics));
      ll[i] = log_likelihood(layout, field, projector, meas_params).log_likelihood;
    }
  });

  for (std::size_t i = 0; i < set.size(); ++i) {
    set.particles[i].log_weight += ll[i];
  }
  normalize(set);
  return set;
}

double kld_bound(int k_bins, double epsilon, double quantile_z)
{
  if (k_bins <= 1) {
    return 0.0;
  }
  const double km1 = static_cast<double>(k_bins - 1);
  const double a = 2.0 / (9.0 * km1);
  const double x = 1.0 - a + std::sqrt(a) * quantile_z;
  return km1 / (2.0 * epsilon) * x * x * x;
}

int kld_sample_size(int k_bins, const KldParams& params)
{
  if (k_bins <= 1) {
    return params.n_min;
  }
  const double n = std::ceil(kld_bound(k_bins, params.epsilon, params.quantile_z));
  if (n >= static_cast<double>(params.n_max)) {
    return params.n_max;
  }
  return std::max(params.n_min, static_cast<int>(n));
}

namespace {

std::uint64_t bin_key(const Pose2& p, const KldParams& params)
{
  const auto ix = static_cast<std::int64_t>(std::floor(p.x / params.bin_x_m));
  const auto iy = static_cast<std::int64_t>(std::floor(p.y / params.bin_y_m));
  const auto it = static_cast<std::int64_t>(std::floor((p.theta + kPi) / params.bin_theta_rad));
  constexpr std::int64_t bias = std::int64_t{1} << 20;
  constexpr std::uint64_t mask = (std::uint64_t{1} << 21) - 1;
  return ((static_cast<std::uint64_t>(ix + bias) & mask) << 42) | ((static_cast<std::uint64_t>(iy + bias) & mask) << 21) |
         (static_cast<std::uint64_t>(it + bias) & mask);
}

}  // namespace

ResampleResult resample(const ParticleSet& set, const KldParams& params, std::uint64_t seed)
{
  params.validate();
  if (set.empty()) {
    throw ValidationError("cannot resample an empty particle set");
  }
  const std::size_t n = set.size();
  ResampleResult result;

  std::vector<double> w = set.weights();
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  if (!(total > 0.0) || !std::isfinite(total)) {
    std::fill(w.begin(), w.end(), 1.0 / static_cast<double>(n));
    result.uniform_fallback = true;
  }
  std::vector<double> cumulative(n);
  std::partial_sum(w.begin(), w.end(), cumulative.begin());
  const double scale = cumulative.back();
  for (auto& c : cumulative) {
    c /= scale;
  }
  cumulative.back() = 1.0;

  Rng rng(seed);
  const int comb = params.n_max;
  std::uniform_real_distribution<double> offset(0.0, 1.0);
  const double r = offset(rng);
  std::vector<int> order(static_cast<std::size_t>(comb));
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);

  std::unordered_set<std::uint64_t> bins;
  auto& out = result.set.particles;
  out.reserve(static_cast<std::size_t>(comb));
  int limit = params.n_min;
  for (int draw = 0; draw < comb; ++draw) {
    const double u = (order[static_cast<std::size_t>(draw)] + r) / comb;
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
    const auto idx = std::min<std::size_t>(static_cast<std::size_t>(it - cumulative.begin()), n - 1);
    out.push_back({set.particles[idx].pose, 0.0});
    if (bins.insert(bin_key(set.particles[idx].pose, params)).second) {
      limit = kld_sample_size(static_cast<int>(bins.size()), params);
    }
    if (static_cast<int>(out.size()) >= limit) {
      break;
    }
  }

  const double lw = -std::log(static_cast<double>(out.size()));
  for (auto& p : out) {
    p.log_weight = lw;
  }
  result.set.normalized = true;
  result.occupied_bins = static_cast<int>(bins.size());
  return result;
}

bool should_update(const OdometryDelta& accumulated, const GatingParams& gating)
{
  return std::hypot(accumulated.dx, accumulated.dy) > gating.translation_m ||
         std::abs(accumulated.dtheta) > gating.rotation_rad;
}

PoseEstimate estimate(const ParticleSet& set)
{
  if (set.empty()) {
    throw ValidationError("cannot estimate from an empty particle set");
  }
  std::vector<std::size_t> order(set.size());
  std::iota(order.begin(), order.end(), 0);
  const auto key = [&](std::size_t i) {
    const auto& p = set.particles[i];
    return std::tie(p.pose.x, p.pose.y, p.pose.theta, p.log_weight);
  };
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return key(a) < key(b); });

  double m = -std::numeric_limits<double>::infinity();
  for (const auto& p : set.particles) {
    m = std::max(m, p.log_weight);
  }
  std::vector<double> w(set.size());
  double total = 0.0;
  for (std::size_t i : order) {
    w[i] = std::isfinite(m) ? std::exp(set.particles[i].log_weight - m) : 1.0;
    total += w[i];
  }

  double mx = 0.0, my = 0.0, ms = 0.0, mc = 0.0;
  for (std::size_t i : order) {
    const double wi = w[i] / total;
    const auto& p = set.particles[i].pose;
    mx += wi * p.x;
    my += wi * p.y;
    ms += wi * std::sin(p.theta);
    mc += wi * std::cos(p.theta);
  }
  PoseEstimate out;
  out.mean = Pose2(mx, my, std::atan2(ms, mc));
  for (std::size_t i : order) {
    const double wi = w[i] / total;
    const auto& p = set.particles[i].pose;
    const Eigen::Vector3d r(p.x - mx, p.y - my, wrap_angle(p.theta - out.mean.theta));
    out.covariance += wi * r * r.transpose();
  }
  return out;
}

void write_particles_csv(const std::filesystem::path& path, const ParticleSet& set)
{
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) {
    throw Error("cannot write '" + path.string() + "'");
  }
  const auto w = set.weights();
  std::fputs("x,y,theta,weight\n", f);
  for (std::size_t i = 0; i < set.size(); ++i) {
    const auto& p = set.particles[i].pose;
    std::fprintf(f, "%.17g,%.17g,%.17g,%.17g\n", p.x, p.y, p.theta, w[i]);
  }
  std::fclose(f);
}

}  // namespace fploc
