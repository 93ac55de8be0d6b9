#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fploc/camera.hpp"
#include "fploc/floorplan.hpp"
#include "fploc/layout.hpp"
#include "fploc/mcl.hpp"
#include "fploc/measurement.hpp"
#include "fploc/simulator.hpp"

namespace fploc {

struct CameraConfig
{
  double fx = 180.0;
  double fy = 180.0;
  double cx = 160.0;
  double cy = 160.0;
  int width = 320;
  int height = 320;
  /// Camera body pose on the robot (x forward, y left, z up; radians).
  double x = 0.1;
  double y = 0.0;
  double z = 1.0;
  double roll = 0.0;
  double pitch = 0.0;
  double yaw = 0.0;

  CameraModel model() const;
};

struct InitConfig
{
  /// Defaults to the first ground-truth pose.
  std::optional<Pose2> pose;
  PoseStd std{0.1, 0.1, deg2rad(15.0)};
  /// Each run offsets the initial mean uniformly within this disc and angle.
  double perturb_translation_m = 0.1;
  double perturb_rotation_rad = deg2rad(15.0);
  int n_particles = 1500;
};

struct SimulationConfig
{
  /// "apartment" builds the synthetic plan; "plan" uses the plan already in
  /// the dataset directory together with `waypoints`.
  std::string scenario = "apartment";
  std::vector<Pose2> waypoints;
  double step_translation_m = 0.02;
  double step_rotation_rad = 0.025;
  MotionNoise odometry_noise;
  NoiseConfig mask_noise;
  std::uint64_t seed = 7;
};

struct ExperimentConfig
{
  std::filesystem::path dataset_dir = "data";
  std::filesystem::path output_dir = "results";
  std::uint64_t seed = 1;
  int n_runs = 10;
  /// 0 lets the scheduler pick.
  int threads = 0;

  int open_radius_px = 1;
  int close_radius_px = 45;
  HarrisParams harris;
  CameraConfig camera;
  MeasurementParams measurement;
  LayoutParams layout{150, 100, 15.0, 3.0, 4};
  MotionNoise motion_noise;
  KldParams kld;
  GatingParams gating;
  InitConfig init;
  SimulationConfig simulation;

  /// Parameter ranges only; files are checked where they are read.
  void validate() const;
};

ExperimentConfig parse_config(std::string_view json_text);
ExperimentConfig load_config(const std::filesystem::path& path);
std::string dump_config(const ExperimentConfig& cfg);

// ---------------------------------------------------------------------------
// Dataset
// ---------------------------------------------------------------------------

struct Dataset
{
  std::filesystem::path dir;
  FloorPlan plan;
  std::vector<OdometryDelta> odometry;
  /// Pose per step (odometry.size() + 1 entries) or empty.
  std::vector<Pose2> ground_truth;
};

std::filesystem::path plan_image_path(const std::filesystem::path& dir);
std::filesystem::path plan_meta_path(const std::filesystem::path& dir);
std::filesystem::path mask_path(const std::filesystem::path& dir, int step);

Dataset load_dataset(const std::filesystem::path& dir);

void write_odometry_csv(const std::filesystem::path& path, const std::vector<OdometryDelta>& deltas);
std::vector<OdometryDelta> read_odometry_csv(const std::filesystem::path& path);
/// Columns step,x,y,theta with steps 0..n-1.
void write_pose_csv(const std::filesystem::path& path, const std::vector<Pose2>& poses);
std::vector<Pose2> read_pose_csv(const std::filesystem::path& path);

/// Steps (pose indices) at which the gate fires for this odometry stream.
std::vector<int> update_steps(const std::vector<OdometryDelta>& odometry, const GatingParams& gating);

struct SimulationSummary
{
  int n_poses = 0;
  int n_masks = 0;
  double path_length_m = 0.0;
};

/// Writes plan, odometry, ground truth and one corrupted mask per update step
/// into cfg.dataset_dir.
SimulationSummary simulate_dataset(const ExperimentConfig& cfg);

// ---------------------------------------------------------------------------
// Filter runs
// ---------------------------------------------------------------------------

/// Plans and corners the filter and the renderer work on.
struct PreparedMap
{
  FloorPlan processed;
  /// `processed` coarsened by layout.raycast_downsample.
  FloorPlan raycast;
  CornerSet corners;
};

PreparedMap prepare_map(const FloorPlan& raw, const ExperimentConfig& cfg);

struct StageTimings
{
  double predict_ms = 0.0;
  double measurement_ms = 0.0;  ///< mask load and distance transform
  double weight_ms = 0.0;
  double resample_ms = 0.0;
  double total_ms = 0.0;
};

struct StepRecord
{
  int step = 0;
  std::optional<Pose2> ground_truth;
  Pose2 estimate;
  double covariance_trace = 0.0;
  int n_particles = 0;
  std::optional<Pose2> dead_reckoning;
  StageTimings timings;
};

/// One record per filter update, in increasing step order.
struct TrajectoryLog
{
  int run = 0;
  std::uint64_t seed = 0;
  std::vector<StepRecord> records;
  /// Per-step translational std across runs; filled by mean_trajectory only.
  std::vector<double> translational_std;
  std::vector<double> std_x;
  std::vector<double> std_y;
};

std::uint64_t run_seed(std::uint64_t base_seed, int run);

/// One filter pass over the dataset. Throws LoadError naming the step when a
/// due mask is missing.
TrajectoryLog run_filter(const PreparedMap& map, const Dataset& data, const ExperimentConfig& cfg, int run);

/// cfg.n_runs independent runs, concurrently on cfg.threads workers. Writes
/// per-run CSVs, timing CSVs and the dead-reckoning CSV to cfg.output_dir.
std::vector<TrajectoryLog> run_experiment(const ExperimentConfig& cfg);

/// Fixed 9-column schema: step,gt_x,gt_y,gt_theta,est_x,est_y,est_theta,cov_trace,n_particles.
void write_run_csv(const std::filesystem::path& path, const TrajectoryLog& log);
TrajectoryLog read_run_csv(const std::filesystem::path& path);
void write_timing_csv(const std::filesystem::path& path, const TrajectoryLog& log);
/// Columns step,x,y,theta for the records of `log` that carry dead reckoning.
void write_dead_reckoning_csv(const std::filesystem::path& path, const TrajectoryLog& log);

/// Loads run_*.csv from `dir`/runs and attaches dead_reckoning.csv when present.
std::vector<TrajectoryLog> load_run_logs(const std::filesystem::path& dir);

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

struct MeanStd
{
  double mean = 0.0;
  /// Sample standard deviation; absent for a single run.
  std::optional<double> std;

  friend bool operator==(const MeanStd&, const MeanStd&) = default;
};

struct RmseReport
{
  int n_runs = 0;
  int n_updates = 0;
  std::string logging = "update steps only";
  MeanStd linear_rmse_m;
  MeanStd angular_rmse_deg;
  std::vector<double> per_run_linear_rmse_m;
  std::vector<double> per_run_angular_rmse_deg;
  std::vector<double> per_run_terminal_error_m;
  MeanStd terminal_error_m;
  std::optional<double> odometry_linear_rmse_m;
  std::optional<double> odometry_angular_rmse_deg;
  std::optional<double> odometry_terminal_error_m;
  double mean_trajectory_linear_rmse_m = 0.0;
  double mean_trajectory_angular_rmse_deg = 0.0;

  friend bool operator==(const RmseReport&, const RmseReport&) = default;
};

struct TrajectoryError
{
  double linear_rmse_m = 0.0;
  double angular_rmse_deg = 0.0;
  double terminal_error_m = 0.0;
};

/// Errors of the estimates of one log against its ground truth. Throws
/// ValidationError when a record lacks ground truth or the log is empty.
TrajectoryError trajectory_error(const TrajectoryLog& log);
/// Same for the dead-reckoning poses.
TrajectoryError dead_reckoning_error(const TrajectoryLog& log);

RmseReport rmse(const std::vector<TrajectoryLog>& logs);

/// Per-step mean of the estimates (circular for θ) and per-axis population
/// standard deviation. Ground truth and dead reckoning come from the first log.
TrajectoryLog mean_trajectory(const std::vector<TrajectoryLog>& logs);

std::string report_to_json(const RmseReport& report);
RmseReport report_from_json(std::string_view json_text);

/// Writes report.json, runs/run_XXX.csv, mean_trajectory.csv and
/// plot_results.py into `dir`. Nothing is written when `logs` is empty.
void emit_report(const RmseReport& report, const std::vector<TrajectoryLog>& logs, const std::filesystem::path& dir);

}  // namespace fploc
