#include "fploc/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include <json.hpp>
#include <tbb/parallel_for.h>
#include <tbb/task_arena.h>

#include "fploc/error.hpp"
#include "fploc/random.hpp"

namespace fploc {

namespace fs = std::filesystem;
using nlohmann::json;

CameraModel CameraConfig::model() const
{
  CameraModel cam;
  cam.fx = fx;
  cam.fy = fy;
  cam.cx = cx;
  cam.cy = cy;
  cam.width = width;
  cam.height = height;
  cam.extrinsics = Pose3::from_xyz_rpy({x, y, z}, roll, pitch, yaw);
  return cam;
}

void ExperimentConfig::validate() const
{
  if (n_runs < 1) {
    throw ValidationError("n_runs must be at least 1");
  }
  if (threads < 0) {
    throw ValidationError("threads must be non-negative");
  }
  if (open_radius_px < 0 || close_radius_px < 0) {
    throw ValidationError("morphology radii must be non-negative");
  }
  camera.model().validate();
  measurement.validate();
  layout.validate();
  motion_noise.validate();
  kld.validate();
  if (!(gating.translation_m >= 0.0) || !(gating.rotation_rad >= 0.0)) {
    throw ValidationError("gating thresholds must be non-negative");
  }
  if (init.n_particles < kld.n_min || init.n_particles > kld.n_max) {
    throw ValidationError("initial particle count must lie in [n_min, n_max]");
  }
  if (!(init.std.x_m >= 0.0) || !(init.std.y_m >= 0.0) || !(init.std.theta_rad >= 0.0) ||
      !(init.perturb_translation_m >= 0.0) || !(init.perturb_rotation_rad >= 0.0)) {
    throw ValidationError("initialization spreads must be non-negative");
  }
  if (simulation.scenario != "apartment" && simulation.scenario != "plan") {
    throw ValidationError("unknown simulation scenario '" + simulation.scenario + "'");
  }
  if (!(simulation.step_translation_m > 0.0) || !(simulation.step_rotation_rad > 0.0)) {
    throw ValidationError("simulation step sizes must be positive");
  }
  simulation.odometry_noise.validate();
  simulation.mask_noise.validate();
}

// ---------------------------------------------------------------------------
// JSON schema
// ---------------------------------------------------------------------------

namespace {

json pose_to_json(const Pose2& p) { return json::array({p.x, p.y, p.theta}); }

Pose2 pose_from_json(const json& j, const std::string& where)
{
  if (!j.is_array() || j.size() != 3) {
    throw ValidationError(where + ": expected [x, y, theta]");
  }
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

class Reader
{
public:
  Reader(const json& j, std::string prefix) : j_(j), prefix_(std::move(prefix))
  {
    if (!j_.is_object()) {
      throw ValidationError("config section '" + prefix_ + "' must be an object");
    }
  }

  template <class T>
  void field(const char* key, T& value)
  {
    seen_.insert(key);
    if (!j_.contains(key)) {
      return;
    }
    const json& v = j_.at(key);
    try {
      if constexpr (std::is_same_v<T, fs::path>) {
        value = v.get<std::string>();
      } else if constexpr (std::is_same_v<T, std::optional<double>>) {
        value = v.is_null() ? std::nullopt : std::optional<double>(v.get<double>());
      } else if constexpr (std::is_same_v<T, std::optional<Pose2>>) {
        value = v.is_null() ? std::nullopt : std::optional<Pose2>(pose_from_json(v, prefix_ + key));
      } else if constexpr (std::is_same_v<T, std::vector<Pose2>>) {
        value.clear();
        for (const auto& e : v) {
          if (e.is_array() && e.size() == 2) {
            value.emplace_back(e[0].get<double>(), e[1].get<double>(), 0.0);
          } else {
            value.push_back(pose_from_json(e, prefix_ + key));
          }
        }
      } else {
        value = v.get<T>();
      }
    } catch (const json::exception& e) {
      throw ValidationError("config key '" + prefix_ + key + "': " + e.what());
    }
  }

  template <class F>
  void section(const char* key, F&& body)
  {
    seen_.insert(key);
    const json empty = json::object();
    Reader sub(j_.contains(key) ? j_.at(key) : empty, prefix_ + key + ".");
    body(sub);
    sub.finish();
  }

  void finish() const
  {
    for (const auto& item : j_.items()) {
      if (!seen_.count(item.key())) {
        throw ValidationError("unknown config key '" + prefix_ + item.key() + "'");
      }
    }
  }

private:
  const json& j_;
  std::string prefix_;
  std::set<std::string> seen_;
};

class Writer
{
public:
  explicit Writer(json& j) : j_(j) { j_ = json::object(); }

  template <class T>
  void field(const char* key, T& value)
  {
    if constexpr (std::is_same_v<T, fs::path>) {
      j_[key] = value.generic_string();
    } else if constexpr (std::is_same_v<T, std::optional<double>>) {
      j_[key] = value ? json(*value) : json(nullptr);
    } else if constexpr (std::is_same_v<T, std::optional<Pose2>>) {
      j_[key] = value ? pose_to_json(*value) : json(nullptr);
    } else if constexpr (std::is_same_v<T, std::vector<Pose2>>) {
      json arr = json::array();
      for (const auto& p : value) {
        arr.push_back(pose_to_json(p));
      }
      j_[key] = arr;
    } else {
      j_[key] = value;
    }
  }

  template <class F>
  void section(const char* key, F&& body)
  {
    json sub;
    Writer w(sub);
    body(w);
    j_[key] = std::move(sub);
  }

private:
  json& j_;
};

template <class V>
void visit_noise(V& v, MotionNoise& n)
{
  v.field("alpha1", n.alpha1);
  v.field("alpha2", n.alpha2);
  v.field("alpha3", n.alpha3);
  v.field("alpha4", n.alpha4);
}

template <class V>
void visit_config(V& v, ExperimentConfig& c)
{
  v.field("dataset_dir", c.dataset_dir);
  v.field("output_dir", c.output_dir);
  v.field("seed", c.seed);
  v.field("n_runs", c.n_runs);
  v.field("threads", c.threads);
  v.section("preprocess", [&](auto& s) {
    s.field("open_radius_px", c.open_radius_px);
    s.field("close_radius_px", c.close_radius_px);
  });
  v.section("corners", [&](auto& s) {
    s.field("harris_k", c.harris.k);
    s.field("relative_threshold", c.harris.relative_threshold);
    s.field("cluster_radius_m", c.harris.cluster_radius_m);
  });
  v.section("camera", [&](auto& s) {
    s.field("fx", c.camera.fx);
    s.field("fy", c.camera.fy);
    s.field("cx", c.camera.cx);
    s.field("cy", c.camera.cy);
    s.field("width", c.camera.width);
    s.field("height", c.camera.height);
    s.field("x", c.camera.x);
    s.field("y", c.camera.y);
    s.field("z", c.camera.z);
    s.field("roll", c.camera.roll);
    s.field("pitch", c.camera.pitch);
    s.field("yaw", c.camera.yaw);
  });
  v.section("measurement", [&](auto& s) {
    s.field("sigma_z_px", c.measurement.sigma_z_px);
    s.field("delta_px", c.measurement.delta_px);
  });
  v.section("layout", [&](auto& s) {
    s.field("n_rays", c.layout.n_rays);
    s.field("n_vertical_samples", c.layout.n_vertical_samples);
    s.field("max_range_m", c.layout.max_range_m);
    s.field("visibility_tol_cells", c.layout.visibility_tol_cells);
    s.field("raycast_downsample", c.layout.raycast_downsample);
  });
  v.section("motion_noise", [&](auto& s) { visit_noise(s, c.motion_noise); });
  v.section("kld", [&](auto& s) {
    s.field("epsilon", c.kld.epsilon);
    s.field("quantile_z", c.kld.quantile_z);
    s.field("bin_x_m", c.kld.bin_x_m);
    s.field("bin_y_m", c.kld.bin_y_m);
    s.field("bin_theta_rad", c.kld.bin_theta_rad);
    s.field("n_min", c.kld.n_min);
    s.field("n_max", c.kld.n_max);
  });
  v.section("gating", [&](auto& s) {
    s.field("translation_m", c.gating.translation_m);
    s.field("rotation_rad", c.gating.rotation_rad);
  });
  v.section("init", [&](auto& s) {
    s.field("pose", c.init.pose);
    s.section("std", [&](auto& t) {
      t.field("x_m", c.init.std.x_m);
      t.field("y_m", c.init.std.y_m);
      t.field("theta_rad", c.init.std.theta_rad);
    });
    s.field("perturb_translation_m", c.init.perturb_translation_m);
    s.field("perturb_rotation_rad", c.init.perturb_rotation_rad);
    s.field("n_particles", c.init.n_particles);
  });
  v.section("simulation", [&](auto& s) {
    auto& sim = c.simulation;
    s.field("scenario", sim.scenario);
    s.field("waypoints", sim.waypoints);
    s.field("step_translation_m", sim.step_translation_m);
    s.field("step_rotation_rad", sim.step_rotation_rad);
    s.field("seed", sim.seed);
    s.section("odometry_noise", [&](auto& t) { visit_noise(t, sim.odometry_noise); });
    s.section("mask_noise", [&](auto& t) {
      auto& m = sim.mask_noise;
      t.field("pixel_dropout", m.pixel_dropout);
      t.field("n_occluders", m.n_occluders);
      t.field("occluder_min_px", m.occluder_min_px);
      t.field("occluder_max_px", m.occluder_max_px);
      t.field("edge_width_px", m.edge_width_px);
      t.field("mask_jitter_px", m.mask_jitter_px);
    });
  });
}

json parse_json(std::string_view text, const char* what)
{
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("malformed ") + what + ": " + e.what());
  }
}

std::string read_text(const fs::path& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw LoadError("cannot open '" + path.string() + "'");
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text)
{
  std::ofstream out(path, std::ios::binary);
  out << text;
  out.close();
  if (!out) {
    throw Error("cannot write '" + path.string() + "'");
  }
}

}  // namespace

ExperimentConfig parse_config(std::string_view json_text)
{
  const json j = parse_json(json_text, "config");
  ExperimentConfig cfg;
  Reader r(j, "");
  visit_config(r, cfg);
  r.finish();
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const fs::path& path) { return parse_config(read_text(path)); }

std::string dump_config(const ExperimentConfig& cfg)
{
  ExperimentConfig copy = cfg;
  json j;
  Writer w(j);
  visit_config(w, copy);
  return j.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Dataset
// ---------------------------------------------------------------------------

namespace {

/// Line-oriented CSV with a fixed header; returns the rows split on commas.
std::vector<std::vector<std::string>> read_csv(const fs::path& path, const std::string& header, std::size_t n_cols)
{
  std::ifstream in(path);
  if (!in) {
    throw LoadError("cannot open '" + path.string() + "'");
  }
  std::string line;
  if (!std::getline(in, line) || line != header) {
    throw LoadError("'" + path.string() + "': expected header '" + header + "'");
  }
  std::vector<std::vector<std::string>> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) {
      continue;
    }
    std::vector<std::string> cols;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      cols.push_back(cell);
    }
    if (!line.empty() && line.back() == ',') {
      cols.emplace_back();
    }
    if (cols.size() != n_cols) {
      throw LoadError("'" + path.string() + "' line " + std::to_string(lineno) + ": expected " +
                      std::to_string(n_cols) + " columns");
    }
    rows.push_back(std::move(cols));
  }
  return rows;
}

double to_double(const std::string& s, const fs::path& path)
{
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) {
    throw LoadError("'" + path.string() + "': bad number '" + s + "'");
  }
  return v;
}

int to_int(const std::string& s, const fs::path& path)
{
  const double v = to_double(s, path);
  if (v != std::floor(v)) {
    throw LoadError("'" + path.string() + "': bad integer '" + s + "'");
  }
  return static_cast<int>(v);
}

std::string num(double v)
{
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

class CsvWriter
{
public:
  CsvWriter(const fs::path& path, const char* header) : path_(path), f_(std::fopen(path.c_str(), "w"))
  {
    if (!f_) {
      throw Error("cannot write '" + path.string() + "'");
    }
    std::fputs(header, f_);
    std::fputc('\n', f_);
  }
  ~CsvWriter()
  {
    if (f_) {
      std::fclose(f_);
    }
  }
  CsvWriter(const CsvWriter&) = delete;
  CsvWriter& operator=(const CsvWriter&) = delete;

  void row(const std::vector<std::string>& cols)
  {
    for (std::size_t i = 0; i < cols.size(); ++i) {
      if (i) {
        std::fputc(',', f_);
      }
      std::fputs(cols[i].c_str(), f_);
    }
    std::fputc('\n', f_);
  }

  void close()
  {
    const bool bad = std::ferror(f_) != 0;
    const bool fail = std::fclose(f_) != 0;
    f_ = nullptr;
    if (bad || fail) {
      throw Error("cannot write '" + path_.string() + "'");
    }
  }

private:
  fs::path path_;
  std::FILE* f_;
};

}  // namespace

fs::path plan_image_path(const fs::path& dir) { return dir / "plan.pgm"; }
fs::path plan_meta_path(const fs::path& dir) { return dir / "plan.meta"; }

fs::path mask_path(const fs::path& dir, int step)
{
  char name[32];
  std::snprintf(name, sizeof name, "mask_%06d.png", step);
  return dir / "masks" / name;
}

void write_odometry_csv(const fs::path& path, const std::vector<OdometryDelta>& deltas)
{
  CsvWriter w(path, "step,dx,dy,dtheta");
  for (std::size_t i = 0; i < deltas.size(); ++i) {
    w.row({std::to_string(i + 1), num(deltas[i].dx), num(deltas[i].dy), num(deltas[i].dtheta)});
  }
  w.close();
}

std::vector<OdometryDelta> read_odometry_csv(const fs::path& path)
{
  std::vector<OdometryDelta> out;
  for (const auto& r : read_csv(path, "step,dx,dy,dtheta", 4)) {
    if (to_int(r[0], path) != static_cast<int>(out.size()) + 1) {
      throw LoadError("'" + path.string() + "': odometry steps must be 1, 2, 3, ...");
    }
    out.emplace_back(to_double(r[1], path), to_double(r[2], path), to_double(r[3], path));
  }
  return out;
}

void write_pose_csv(const fs::path& path, const std::vector<Pose2>& poses)
{
  CsvWriter w(path, "step,x,y,theta");
  for (std::size_t i = 0; i < poses.size(); ++i) {
    w.row({std::to_string(i), num(poses[i].x), num(poses[i].y), num(poses[i].theta)});
  }
  w.close();
}

std::vector<Pose2> read_pose_csv(const fs::path& path)
{
  std::vector<Pose2> out;
  for (const auto& r : read_csv(path, "step,x,y,theta", 4)) {
    if (to_int(r[0], path) != static_cast<int>(out.size())) {
      throw LoadError("'" + path.string() + "': pose steps must be 0, 1, 2, ...");
    }
    out.emplace_back(to_double(r[1], path), to_double(r[2], path), to_double(r[3], path));
  }
  return out;
}

Dataset load_dataset(const fs::path& dir)
{
  Dataset d;
  d.dir = dir;
  d.plan = load_floorplan(plan_image_path(dir), plan_meta_path(dir));
  d.odometry = read_odometry_csv(dir / "odometry.csv");
  if (fs::exists(dir / "groundtruth.csv")) {
    d.ground_truth = read_pose_csv(dir / "groundtruth.csv");
    if (d.ground_truth.size() != d.odometry.size() + 1) {
      throw LoadError("ground truth must hold one pose per odometry step plus the start");
    }
  }
  return d;
}

std::vector<int> update_steps(const std::vector<OdometryDelta>& odometry, const GatingParams& gating)
{
  std::vector<int> steps;
  OdometryDelta acc;
  for (std::size_t i = 0; i < odometry.size(); ++i) {
    acc = acc.then(odometry[i]);
    if (should_update(acc, gating)) {
      steps.push_back(static_cast<int>(i) + 1);
      acc = {};
    }
  }
  return steps;
}

PreparedMap prepare_map(const FloorPlan& raw, const ExperimentConfig& cfg)
{
  PreparedMap m;
  m.processed = preprocess(raw, cfg.open_radius_px, cfg.close_radius_px);
  m.raycast = cfg.layout.raycast_downsample > 1 ? m.processed.downsampled(cfg.layout.raycast_downsample) : m.processed;
  m.corners = detect_corners(m.processed, cfg.harris);
  return m;
}

SimulationSummary simulate_dataset(const ExperimentConfig& cfg)
{
  cfg.validate();
  const auto& sim = cfg.simulation;
  const fs::path dir = cfg.dataset_dir;
  fs::create_directories(dir / "masks");

  FloorPlan raw;
  TrajectorySpec spec;
  if (sim.scenario == "apartment") {
    Scenario s = make_apartment_scenario();
    raw = std::move(s.plan);
    spec = std::move(s.trajectory);
    save_floorplan(raw, plan_image_path(dir), plan_meta_path(dir));
  } else {
    raw = load_floorplan(plan_image_path(dir), plan_meta_path(dir));
  }
  if (!sim.waypoints.empty()) {
    spec.waypoints = sim.waypoints;
  }
  if (spec.waypoints.empty()) {
    throw ValidationError("simulation needs waypoints");
  }
  spec.step_translation_m = sim.step_translation_m;
  spec.step_rotation_rad = sim.step_rotation_rad;

  const std::vector<Pose2> gt = generate_trajectory(raw, spec);
  const std::vector<OdometryDelta> odo = simulate_odometry(gt, sim.odometry_noise, derive_seed(sim.seed, 0));
  write_pose_csv(dir / "groundtruth.csv", gt);
  write_odometry_csv(dir / "odometry.csv", odo);

  for (const auto& entry : fs::directory_iterator(dir / "masks")) {
    const std::string name = entry.path().filename().string();
    if (name.rfind("mask_", 0) == 0 && entry.path().extension() == ".png") {
      fs::remove(entry.path());
    }
  }

  const PreparedMap map = prepare_map(raw, cfg);
  const CameraModel cam = cfg.camera.model();
  const std::vector<int> steps = update_steps(odo, cfg.gating);
  tbb::parallel_for(std::size_t{0}, steps.size(), [&](std::size_t k) {
    const int step = steps[k];
    const EdgeMask ideal =
        render_gt_mask(map.processed, map.corners, gt[step], cam, cfg.layout, sim.mask_noise.edge_width_px);
    save_edge_mask(mask_path(dir, step), corrupt_mask(ideal, sim.mask_noise, derive_seed(sim.seed, 1, step)));
  });

  SimulationSummary summary;
  summary.n_poses = static_cast<int>(gt.size());
  summary.n_masks = static_cast<int>(steps.size());
  for (std::size_t i = 0; i + 1 < gt.size(); ++i) {
    summary.path_length_m += (gt[i + 1].translation() - gt[i].translation()).norm();
  }
  return summary;
}

// ---------------------------------------------------------------------------
// Filter runs
// ---------------------------------------------------------------------------

std::uint64_t run_seed(std::uint64_t base_seed, int run) { return derive_seed(base_seed, static_cast<std::uint64_t>(run)); }

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0)
{
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

}  // namespace

TrajectoryLog run_filter(const PreparedMap& map, const Dataset& data, const ExperimentConfig& cfg, int run)
{
  TrajectoryLog log;
  log.run = run;
  log.seed = run_seed(cfg.seed, run);
  const std::uint64_t seed = log.seed;
  const bool have_gt = !data.ground_truth.empty();

  Pose2 start;
  if (cfg.init.pose) {
    start = *cfg.init.pose;
  } else if (have_gt) {
    start = data.ground_truth.front();
  } else {
    throw ValidationError("no initial pose: set init.pose or provide ground truth");
  }

  Rng rng(derive_seed(seed, 1));
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const double r = cfg.init.perturb_translation_m * std::sqrt(u01(rng));
  const double phi = 2.0 * kPi * u01(rng);
  const double dtheta = cfg.init.perturb_rotation_rad * (2.0 * u01(rng) - 1.0);
  const Pose2 mean0(start.x + r * std::cos(phi), start.y + r * std::sin(phi), start.theta + dtheta);

  ParticleSet set = init(mean0, cfg.init.std, cfg.init.n_particles, derive_seed(seed, 0));
  const CameraModel cam = cfg.camera.model();

  Pose2 dr = start;
  OdometryDelta acc;
  StageTimings pending;
  auto cycle_start = Clock::now();
  for (std::size_t i = 0; i < data.odometry.size(); ++i) {
    const OdometryDelta& u = data.odometry[i];
    auto t0 = Clock::now();
    set = predict(std::move(set), u, cfg.motion_noise, derive_seed(seed, 2, i));
    pending.predict_ms += ms_since(t0);
    dr = dr * u.as_pose();
    acc = acc.then(u);
    if (!should_update(acc, cfg.gating)) {
      continue;
    }
    acc = {};
    const int step = static_cast<int>(i) + 1;

    t0 = Clock::now();
    const fs::path mp = mask_path(data.dir, step);
    if (!fs::exists(mp)) {
      throw LoadError("run " + std::to_string(run) + ": missing mask for step " + std::to_string(step) + " ('" +
                      mp.string() + "')");
    }
    const DistanceField field = distance_transform(load_edge_mask(mp));
    pending.measurement_ms = ms_since(t0);

    t0 = Clock::now();
    set = weight(std::move(set), field, map.raycast, map.corners, cam, cfg.layout, cfg.measurement);
    pending.weight_ms = ms_since(t0);

    const PoseEstimate est = estimate(set);
    StepRecord rec;
    rec.step = step;
    if (have_gt) {
      rec.ground_truth = data.ground_truth[static_cast<std::size_t>(step)];
    }
    rec.estimate = est.mean;
    rec.covariance_trace = est.covariance.trace();
    rec.n_particles = static_cast<int>(set.size());
    rec.dead_reckoning = dr;

    t0 = Clock::now();
    set = resample(set, cfg.kld, derive_seed(seed, 3, static_cast<std::uint64_t>(step))).set;
    pending.resample_ms = ms_since(t0);
    pending.total_ms = ms_since(cycle_start);
    rec.timings = pending;
    log.records.push_back(rec);

    pending = {};
    cycle_start = Clock::now();
  }
  return log;
}

namespace {

fs::path run_csv_path(const fs::path& dir, int run, const char* suffix = "")
{
  char name[48];
  std::snprintf(name, sizeof name, "run_%03d%s.csv", run, suffix);
  return dir / "runs" / name;
}

void remove_run_files(const fs::path& dir)
{
  if (!fs::exists(dir / "runs")) {
    return;
  }
  for (const auto& entry : fs::directory_iterator(dir / "runs")) {
    const std::string name = entry.path().filename().string();
    if (name.rfind("run_", 0) == 0 && entry.path().extension() == ".csv") {
      fs::remove(entry.path());
    }
  }
}

}  // namespace

std::vector<TrajectoryLog> run_experiment(const ExperimentConfig& cfg)
{
  cfg.validate();
  const Dataset data = load_dataset(cfg.dataset_dir);
  const PreparedMap map = prepare_map(data.plan, cfg);

  std::vector<TrajectoryLog> logs(static_cast<std::size_t>(cfg.n_runs));
  tbb::task_arena arena(cfg.threads > 0 ? cfg.threads : tbb::task_arena::automatic);
  arena.execute([&] {
    tbb::parallel_for(0, cfg.n_runs, [&](int r) { logs[static_cast<std::size_t>(r)] = run_filter(map, data, cfg, r); });
  });

  fs::create_directories(cfg.output_dir / "runs");
  remove_run_files(cfg.output_dir);
  for (const auto& log : logs) {
    write_run_csv(run_csv_path(cfg.output_dir, log.run), log);
    write_timing_csv(run_csv_path(cfg.output_dir, log.run, "_timing"), log);
  }
  write_dead_reckoning_csv(cfg.output_dir / "dead_reckoning.csv", logs.front());
  return logs;
}

namespace {

constexpr const char* kRunHeader = "step,gt_x,gt_y,gt_theta,est_x,est_y,est_theta,cov_trace,n_particles";

}  // namespace

void write_run_csv(const fs::path& path, const TrajectoryLog& log)
{
  CsvWriter w(path, kRunHeader);
  for (const auto& r : log.records) {
    const auto& g = r.ground_truth;
    w.row({std::to_string(r.step), g ? num(g->x) : "", g ? num(g->y) : "", g ? num(g->theta) : "", num(r.estimate.x),
           num(r.estimate.y), num(r.estimate.theta), num(r.covariance_trace), std::to_string(r.n_particles)});
  }
  w.close();
}

TrajectoryLog read_run_csv(const fs::path& path)
{
  TrajectoryLog log;
  for (const auto& c : read_csv(path, kRunHeader, 9)) {
    StepRecord r;
    r.step = to_int(c[0], path);
    if (!log.records.empty() && r.step <= log.records.back().step) {
      throw LoadError("'" + path.string() + "': steps must increase");
    }
    if (!c[1].empty() || !c[2].empty() || !c[3].empty()) {
      r.ground_truth = Pose2(to_double(c[1], path), to_double(c[2], path), to_double(c[3], path));
    }
    r.estimate = Pose2(to_double(c[4], path), to_double(c[5], path), to_double(c[6], path));
    r.covariance_trace = to_double(c[7], path);
    r.n_particles = to_int(c[8], path);
    log.records.push_back(r);
  }
  return log;
}

void write_timing_csv(const fs::path& path, const TrajectoryLog& log)
{
  CsvWriter w(path, "step,predict_ms,measurement_ms,weight_ms,resample_ms,total_ms");
  for (const auto& r : log.records) {
    const auto& t = r.timings;
    w.row({std::to_string(r.step), num(t.predict_ms), num(t.measurement_ms), num(t.weight_ms), num(t.resample_ms),
           num(t.total_ms)});
  }
  w.close();
}

void write_dead_reckoning_csv(const fs::path& path, const TrajectoryLog& log)
{
  CsvWriter w(path, "step,x,y,theta");
  for (const auto& r : log.records) {
    if (r.dead_reckoning) {
      w.row({std::to_string(r.step), num(r.dead_reckoning->x), num(r.dead_reckoning->y),
             num(r.dead_reckoning->theta)});
    }
  }
  w.close();
}

std::vector<TrajectoryLog> load_run_logs(const fs::path& dir)
{
  std::vector<std::pair<int, fs::path>> files;
  if (fs::exists(dir / "runs")) {
    for (const auto& entry : fs::directory_iterator(dir / "runs")) {
      const std::string name = entry.path().filename().string();
      int run = -1;
      char tail[8] = {};
      if (std::sscanf(name.c_str(), "run_%d%7s", &run, tail) == 2 && std::string(tail) == ".csv") {
        files.emplace_back(run, entry.path());
      }
    }
  }
  if (files.empty()) {
    throw LoadError("no run logs under '" + (dir / "runs").string() + "'");
  }
  std::sort(files.begin(), files.end());

  std::map<int, Pose2> dr;
  const fs::path dr_path = dir / "dead_reckoning.csv";
  if (fs::exists(dr_path)) {
    for (const auto& c : read_csv(dr_path, "step,x,y,theta", 4)) {
      dr[to_int(c[0], dr_path)] = Pose2(to_double(c[1], dr_path), to_double(c[2], dr_path), to_double(c[3], dr_path));
    }
  }

  std::vector<TrajectoryLog> logs;
  for (const auto& [run, path] : files) {
    TrajectoryLog log = read_run_csv(path);
    log.run = run;
    for (auto& r : log.records) {
      if (const auto it = dr.find(r.step); it != dr.end()) {
        r.dead_reckoning = it->second;
      }
    }
    logs.push_back(std::move(log));
  }
  return logs;
}

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

namespace {

TrajectoryError error_of(const TrajectoryLog& log, bool use_dead_reckoning)
{
  if (log.records.empty()) {
    throw ValidationError("cannot evaluate an empty trajectory log");
  }
  double sl = 0.0;
  double sa = 0.0;
  TrajectoryError e;
  for (const auto& r : log.records) {
    if (!r.ground_truth) {
      throw ValidationError("step " + std::to_string(r.step) + " has no ground truth");
    }
    const std::optional<Pose2>& p = use_dead_reckoning ? r.dead_reckoning : std::optional<Pose2>(r.estimate);
    if (!p) {
      throw ValidationError("step " + std::to_string(r.step) + " has no dead-reckoning pose");
    }
    const double dx = p->x - r.ground_truth->x;
    const double dy = p->y - r.ground_truth->y;
    const double da = wrap_angle(p->theta - r.ground_truth->theta);
    sl += dx * dx + dy * dy;
    sa += da * da;
    e.terminal_error_m = std::hypot(dx, dy);
  }
  const double n = static_cast<double>(log.records.size());
  e.linear_rmse_m = std::sqrt(sl / n);
  e.angular_rmse_deg = rad2deg(std::sqrt(sa / n));
  return e;
}

MeanStd mean_std(const std::vector<double>& v)
{
  MeanStd out;
  out.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  if (v.size() >= 2) {
    double ss = 0.0;
    for (double x : v) {
      ss += (x - out.mean) * (x - out.mean);
    }
    out.std = std::sqrt(ss / static_cast<double>(v.size() - 1));
  }
  return out;
}

/// Sum independent of input order.
double sorted_sum(std::vector<double> v)
{
  std::sort(v.begin(), v.end());
  return std::accumulate(v.begin(), v.end(), 0.0);
}

}  // namespace

TrajectoryError trajectory_error(const TrajectoryLog& log) { return error_of(log, false); }
TrajectoryError dead_reckoning_error(const TrajectoryLog& log) { return error_of(log, true); }

RmseReport rmse(const std::vector<TrajectoryLog>& logs)
{
  if (logs.empty()) {
    throw ValidationError("no trajectory logs to evaluate");
  }
  RmseReport rep;
  rep.n_runs = static_cast<int>(logs.size());
  rep.n_updates = static_cast<int>(logs.front().records.size());
  for (const auto& log : logs) {
    const TrajectoryError e = trajectory_error(log);
    rep.per_run_linear_rmse_m.push_back(e.linear_rmse_m);
    rep.per_run_angular_rmse_deg.push_back(e.angular_rmse_deg);
    rep.per_run_terminal_error_m.push_back(e.terminal_error_m);
  }
  rep.linear_rmse_m = mean_std(rep.per_run_linear_rmse_m);
  rep.angular_rmse_deg = mean_std(rep.per_run_angular_rmse_deg);
  rep.terminal_error_m = mean_std(rep.per_run_terminal_error_m);

  const auto& first = logs.front().records;
  if (std::all_of(first.begin(), first.end(), [](const StepRecord& r) { return r.dead_reckoning.has_value(); })) {
    const TrajectoryError e = dead_reckoning_error(logs.front());
    rep.odometry_linear_rmse_m = e.linear_rmse_m;
    rep.odometry_angular_rmse_deg = e.angular_rmse_deg;
    rep.odometry_terminal_error_m = e.terminal_error_m;
  }

  const TrajectoryError m = trajectory_error(mean_trajectory(logs));
  rep.mean_trajectory_linear_rmse_m = m.linear_rmse_m;
  rep.mean_trajectory_angular_rmse_deg = m.angular_rmse_deg;
  return rep;
}

TrajectoryLog mean_trajectory(const std::vector<TrajectoryLog>& logs)
{
  if (logs.empty()) {
    throw ValidationError("no trajectory logs to average");
  }
  const auto& ref = logs.front().records;
  for (const auto& log : logs) {
    if (log.records.size() != ref.size()) {
      throw ValidationError("trajectory logs have different step sets");
    }
    for (std::size_t k = 0; k < ref.size(); ++k) {
      if (log.records[k].step != ref[k].step) {
        throw ValidationError("trajectory logs have different step sets");
      }
    }
  }

  const std::size_t n = logs.size();
  const double dn = static_cast<double>(n);
  TrajectoryLog out;
  out.run = -1;
  std::vector<double> xs(n), ys(n), ss(n), cs(n), tr(n), np(n);
  for (std::size_t k = 0; k < ref.size(); ++k) {
    for (std::size_t r = 0; r < n; ++r) {
      const StepRecord& rec = logs[r].records[k];
      xs[r] = rec.estimate.x;
      ys[r] = rec.estimate.y;
      ss[r] = std::sin(rec.estimate.theta);
      cs[r] = std::cos(rec.estimate.theta);
      tr[r] = rec.covariance_trace;
      np[r] = rec.n_particles;
    }
    StepRecord m = ref[k];
    m.timings = {};
    const double mx = sorted_sum(xs) / dn;
    const double my = sorted_sum(ys) / dn;
    m.estimate = Pose2(mx, my, std::atan2(sorted_sum(ss), sorted_sum(cs)));
    m.covariance_trace = sorted_sum(tr) / dn;
    m.n_particles = static_cast<int>(std::lround(sorted_sum(np) / dn));
    out.records.push_back(m);

    std::vector<double> dx2(n), dy2(n);
    for (std::size_t r = 0; r < n; ++r) {
      dx2[r] = (xs[r] - mx) * (xs[r] - mx);
      dy2[r] = (ys[r] - my) * (ys[r] - my);
    }
    const double sx = std::sqrt(sorted_sum(dx2) / dn);
    const double sy = std::sqrt(sorted_sum(dy2) / dn);
    out.std_x.push_back(sx);
    out.std_y.push_back(sy);
    out.translational_std.push_back(std::hypot(sx, sy));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Report
// ---------------------------------------------------------------------------

namespace {

template <class V>
void visit_mean_std(V& v, const char* key, MeanStd& m)
{
  v.section(key, [&](auto& s) {
    s.field("mean", m.mean);
    s.field("std", m.std);
  });
}

template <class V>
void visit_report(V& v, RmseReport& r)
{
  v.field("n_runs", r.n_runs);
  v.field("n_updates", r.n_updates);
  v.field("logging", r.logging);
  visit_mean_std(v, "linear_rmse_m", r.linear_rmse_m);
  visit_mean_std(v, "angular_rmse_deg", r.angular_rmse_deg);
  visit_mean_std(v, "terminal_error_m", r.terminal_error_m);
  v.field("per_run_linear_rmse_m", r.per_run_linear_rmse_m);
  v.field("per_run_angular_rmse_deg", r.per_run_angular_rmse_deg);
  v.field("per_run_terminal_error_m", r.per_run_terminal_error_m);
  v.section("dead_reckoning", [&](auto& s) {
    s.field("linear_rmse_m", r.odometry_linear_rmse_m);
    s.field("angular_rmse_deg", r.odometry_angular_rmse_deg);
    s.field("terminal_error_m", r.odometry_terminal_error_m);
  });
  v.section("mean_trajectory", [&](auto& s) {
    s.field("linear_rmse_m", r.mean_trajectory_linear_rmse_m);
    s.field("angular_rmse_deg", r.mean_trajectory_angular_rmse_deg);
  });
}

constexpr const char* kPlotScript = R"(#!/usr/bin/env python3
"""Trajectory overlay and error over time for an fploc results directory."""
import csv
import math
import pathlib
import sys

import matplotlib.pyplot as plt

root = pathlib.Path(sys.argv[1] if len(sys.argv) > 1 else pathlib.Path(__file__).parent)


def rows(path):
    with open(path, newline="") as f:
        return list(csv.DictReader(f))


mean = rows(root / "mean_trajectory.csv")
runs = sorted((root / "runs").glob("run_[0-9][0-9][0-9].csv"))
step = [int(r["step"]) for r in mean]

fig, (ax_xy, ax_err) = plt.subplots(1, 2, figsize=(14, 6))
for path in runs:
    run = rows(path)
    ax_xy.plot([float(r["est_x"]) for r in run], [float(r["est_y"]) for r in run], color="0.8", lw=0.6)
if mean[0]["gt_x"]:
    ax_xy.plot([float(r["gt_x"]) for r in mean], [float(r["gt_y"]) for r in mean], "k-", lw=1.5, label="ground truth")
ax_xy.plot([float(r["est_x"]) for r in mean], [float(r["est_y"]) for r in mean], "b-", lw=1.2, label="MCL mean")
if mean[0]["dr_x"]:
    ax_xy.plot([float(r["dr_x"]) for r in mean], [float(r["dr_y"]) for r in mean], "r--", lw=1.0, label="odometry")
ax_xy.set_aspect("equal")
ax_xy.set_xlabel("x [m]")
ax_xy.set_ylabel("y [m]")
ax_xy.legend()

if mean[0]["gt_x"]:
    err = [math.hypot(float(r["est_x"]) - float(r["gt_x"]), float(r["est_y"]) - float(r["gt_y"])) for r in mean]
    ax_err.plot(step, err, "b-", label="MCL mean error")
    if mean[0]["dr_x"]:
        dr = [math.hypot(float(r["dr_x"]) - float(r["gt_x"]), float(r["dr_y"]) - float(r["gt_y"])) for r in mean]
        ax_err.plot(step, dr, "r--", label="odometry error")
ax_err.plot(step, [float(r["translational_std"]) for r in mean], "g:", label="std across runs")
ax_err.set_xlabel("step")
ax_err.set_ylabel("translational error [m]")
ax_err.legend()

fig.tight_layout()
out = root / "trajectory.png"
fig.savefig(out, dpi=150)
print(out)
)";

void write_mean_trajectory_csv(const fs::path& path, const TrajectoryLog& mean)
{
  CsvWriter w(path, "step,gt_x,gt_y,gt_theta,est_x,est_y,est_theta,std_x,std_y,translational_std,dr_x,dr_y,dr_theta");
  for (std::size_t k = 0; k < mean.records.size(); ++k) {
    const auto& r = mean.records[k];
    const auto& g = r.ground_truth;
    const auto& d = r.dead_reckoning;
    w.row({std::to_string(r.step), g ? num(g->x) : "", g ? num(g->y) : "", g ? num(g->theta) : "", num(r.estimate.x),
           num(r.estimate.y), num(r.estimate.theta), num(mean.std_x[k]), num(mean.std_y[k]),
           num(mean.translational_std[k]), d ? num(d->x) : "", d ? num(d->y) : "", d ? num(d->theta) : ""});
  }
  w.close();
}

}  // namespace

std::string report_to_json(const RmseReport& report)
{
  RmseReport copy = report;
  json j;
  Writer w(j);
  visit_report(w, copy);
  return j.dump(2) + "\n";
}

RmseReport report_from_json(std::string_view json_text)
{
  const json j = parse_json(json_text, "report");
  RmseReport rep;
  Reader r(j, "");
  visit_report(r, rep);
  r.finish();
  return rep;
}

void emit_report(const RmseReport& report, const std::vector<TrajectoryLog>& logs, const fs::path& dir)
{
  if (logs.empty()) {
    throw ValidationError("no trajectory logs to report");
  }
  const TrajectoryLog mean = mean_trajectory(logs);
  const std::string report_text = report_to_json(report);

  std::error_code ec;
  fs::create_directories(dir / "runs", ec);
  if (ec) {
    throw Error("cannot create '" + (dir / "runs").string() + "': " + ec.message());
  }
  write_text(dir / "report.json", report_text);
  for (const auto& log : logs) {
    write_run_csv(run_csv_path(dir, log.run), log);
  }
  write_mean_trajectory_csv(dir / "mean_trajectory.csv", mean);
  write_text(dir / "plot_results.py", kPlotScript);
}

}  // namespace fploc
