#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "fixtures.hpp"
#include "fploc/error.hpp"
#include "fploc/harness.hpp"

using namespace fploc;
namespace fs = std::filesystem;

namespace {

StepRecord record(int step, const Pose2& gt, const Pose2& est)
{
  StepRecord r;
  r.step = step;
  r.ground_truth = gt;
  r.estimate = est;
  r.covariance_trace = 0.01 * step;
  r.n_particles = 1500;
  return r;
}

TrajectoryLog line_log(int run, double offset_x, double offset_y = 0.0, double offset_theta = 0.0)
{
  TrajectoryLog log;
  log.run = run;
  for (int k = 1; k <= 10; ++k) {
    const Pose2 gt(0.3 * k, 1.0, 0.1 * k);
    log.records.push_back(record(k * 13, gt, Pose2(gt.x + offset_x, gt.y + offset_y, gt.theta + offset_theta)));
  }
  return log;
}

/// Small noise-free dataset in the asymmetric room, written to `dir`.
ExperimentConfig small_config(const fs::path& dir)
{
  ExperimentConfig cfg;
  cfg.dataset_dir = dir / "data";
  cfg.output_dir = dir / "results";
  cfg.n_runs = 2;
  cfg.threads = 1;
  cfg.close_radius_px = 3;
  cfg.layout.raycast_downsample = 1;
  cfg.simulation.scenario = "plan";
  cfg.simulation.waypoints = {Pose2(1.0, 1.0, 0.0), Pose2(3.5, 1.0, 0.0), Pose2(3.5, 2.2, 0.0), Pose2(2.2, 2.2, 0.0)};
  cfg.simulation.step_translation_m = 0.05;
  cfg.simulation.step_rotation_rad = 0.1;
  cfg.simulation.odometry_noise = MotionNoise::zero();
  cfg.simulation.mask_noise = NoiseConfig::none();
  cfg.motion_noise = MotionNoise::zero();
  cfg.init.std = {};
  cfg.init.perturb_translation_m = 0.0;
  cfg.init.perturb_rotation_rad = 0.0;
  fs::create_directories(cfg.dataset_dir);
  save_floorplan(fixture::asymmetric_room(), plan_image_path(cfg.dataset_dir), plan_meta_path(cfg.dataset_dir));
  return cfg;
}

std::string slurp(const fs::path& p)
{
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_SUITE("config")
{
  TEST_CASE("defaults")
  {
    const ExperimentConfig cfg;
    CHECK(cfg.measurement.sigma_z_px == 10.0);
    CHECK(cfg.measurement.delta_px == 25.0);
    CHECK(cfg.layout.n_rays == 150);
    CHECK(cfg.layout.n_vertical_samples == 100);
    CHECK(cfg.kld.n_min == 1500);
    CHECK(cfg.kld.n_max == 5000);
    CHECK(cfg.gating.translation_m == 0.25);
    CHECK(cfg.gating.rotation_rad == 0.25);
    CHECK_NOTHROW(cfg.validate());
  }

  TEST_CASE("round trip through json")
  {
    ExperimentConfig cfg;
    cfg.seed = 99;
    cfg.n_runs = 3;
    cfg.camera.pitch = 0.1;
    cfg.init.pose = Pose2(1.0, 2.0, 0.5);
    cfg.simulation.waypoints = {Pose2(1.0, 1.0, 0.0), Pose2(2.0, 3.0, 0.0)};
    cfg.simulation.mask_noise.pixel_dropout = 0.25;
    cfg.kld.epsilon = 0.07;
    const std::string text = dump_config(cfg);
    const ExperimentConfig back = parse_config(text);
    CHECK(dump_config(back) == text);
    CHECK(back.seed == 99);
    REQUIRE(back.init.pose);
    CHECK(*back.init.pose == Pose2(1.0, 2.0, 0.5));
    CHECK(back.simulation.waypoints.size() == 2);
    CHECK(back.kld.epsilon == 0.07);
  }

  TEST_CASE("partial config keeps defaults")
  {
    const ExperimentConfig cfg = parse_config(R"({"n_runs": 4, "measurement": {"delta_px": 30}})");
    CHECK(cfg.n_runs == 4);
    CHECK(cfg.measurement.delta_px == 30.0);
    CHECK(cfg.measurement.sigma_z_px == 10.0);
    CHECK(cfg.layout.n_rays == 150);
  }

  TEST_CASE("waypoints may omit the heading")
  {
    const ExperimentConfig cfg = parse_config(R"({"simulation": {"waypoints": [[1, 2], [3, 4, 0.5]]}})");
    REQUIRE(cfg.simulation.waypoints.size() == 2);
    CHECK(cfg.simulation.waypoints[0] == Pose2(1.0, 2.0, 0.0));
    CHECK(cfg.simulation.waypoints[1] == Pose2(3.0, 4.0, 0.5));
  }

  TEST_CASE("bad input is rejected")
  {
    CHECK_THROWS_AS(parse_config(R"({"n_run": 4})"), ValidationError);
    CHECK_THROWS_AS(parse_config(R"({"kld": {"eps": 0.1}})"), ValidationError);
    CHECK_THROWS_AS(parse_config(R"({"n_runs": "four"})"), ValidationError);
    CHECK_THROWS_AS(parse_config(R"({"n_runs": 0})"), ValidationError);
    CHECK_THROWS_AS(parse_config("{not json"), ValidationError);
    CHECK_THROWS_AS(parse_config(R"({"init": {"pose": [1, 2]}})"), ValidationError);
    CHECK_THROWS_AS(parse_config(R"({"init": {"n_particles": 100}})"), ValidationError);
    CHECK_THROWS_AS(load_config("/nonexistent/fploc.json"), LoadError);
  }
}

TEST_SUITE("rmse")
{
  TEST_CASE("perfect estimates")
  {
    const RmseReport r = rmse({line_log(0, 0.0), line_log(1, 0.0)});
    CHECK(r.linear_rmse_m.mean == 0.0);
    CHECK(r.angular_rmse_deg.mean == 0.0);
    REQUIRE(r.linear_rmse_m.std);
    CHECK(*r.linear_rmse_m.std == 0.0);
    CHECK(r.n_runs == 2);
    CHECK(r.n_updates == 10);
    CHECK(r.logging == "update steps only");
  }

  TEST_CASE("constant offset")
  {
    const RmseReport r = rmse({line_log(0, 0.1)});
    CHECK(r.linear_rmse_m.mean == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(r.terminal_error_m.mean == doctest::Approx(0.1).epsilon(1e-12));
    CHECK_FALSE(r.linear_rmse_m.std);
  }

  TEST_CASE("angles wrap")
  {
    TrajectoryLog log;
    log.records.push_back(record(1, Pose2(0.0, 0.0, deg2rad(-179.0)), Pose2(0.0, 0.0, deg2rad(179.0))));
    log.records.push_back(record(2, Pose2(0.0, 0.0, deg2rad(179.0)), Pose2(0.0, 0.0, deg2rad(-179.0))));
    CHECK(trajectory_error(log).angular_rmse_deg == doctest::Approx(2.0));
  }

  TEST_CASE("mean and sample std across runs")
  {
    const RmseReport r = rmse({line_log(0, 0.1), line_log(1, 0.3), line_log(2, 0.2)});
    CHECK(r.linear_rmse_m.mean == doctest::Approx(0.2));
    REQUIRE(r.linear_rmse_m.std);
    CHECK(*r.linear_rmse_m.std == doctest::Approx(0.1));
    CHECK(r.per_run_linear_rmse_m.size() == 3);
  }

  TEST_CASE("dead reckoning baseline")
  {
    TrajectoryLog log = line_log(0, 0.0);
    for (auto& rec : log.records) {
      rec.dead_reckoning = Pose2(rec.ground_truth->x, rec.ground_truth->y + 0.5, rec.ground_truth->theta);
    }
    const RmseReport r = rmse({log});
    REQUIRE(r.odometry_linear_rmse_m);
    CHECK(*r.odometry_linear_rmse_m == doctest::Approx(0.5));
    CHECK(*r.odometry_terminal_error_m == doctest::Approx(0.5));
    CHECK_FALSE(rmse({line_log(0, 0.0)}).odometry_linear_rmse_m);
  }

  TEST_CASE("missing ground truth is an error")
  {
    TrajectoryLog log = line_log(0, 0.0);
    log.records[3].ground_truth.reset();
    CHECK_THROWS_AS(rmse({log}), ValidationError);
    CHECK_THROWS_AS(rmse({}), ValidationError);
  }
}

TEST_SUITE("mean_trajectory")
{
  TEST_CASE("single run is returned as is")
  {
    const TrajectoryLog log = line_log(0, 0.05, -0.02, 0.01);
    const TrajectoryLog m = mean_trajectory({log});
    REQUIRE(m.records.size() == log.records.size());
    for (std::size_t k = 0; k < m.records.size(); ++k) {
      CHECK(m.records[k].step == log.records[k].step);
      CHECK(m.records[k].estimate.x == log.records[k].estimate.x);
      CHECK(m.records[k].estimate.y == log.records[k].estimate.y);
      CHECK(m.records[k].estimate.theta == doctest::Approx(log.records[k].estimate.theta));
      CHECK(m.translational_std[k] == 0.0);
    }
  }

  TEST_CASE("mirrored runs average to the truth")
  {
    const TrajectoryLog m = mean_trajectory({line_log(0, 0.0, 0.1), line_log(1, 0.0, -0.1)});
    for (std::size_t k = 0; k < m.records.size(); ++k) {
      CHECK(m.records[k].estimate.y == doctest::Approx(m.records[k].ground_truth->y));
      CHECK(m.std_y[k] == doctest::Approx(0.1));
      CHECK(m.std_x[k] == 0.0);
    }
  }

  TEST_CASE("circular mean of headings")
  {
    TrajectoryLog a;
    TrajectoryLog b;
    a.records.push_back(record(1, Pose2(0.0, 0.0, kPi), Pose2(0.0, 0.0, deg2rad(170.0))));
    b.records.push_back(record(1, Pose2(0.0, 0.0, kPi), Pose2(0.0, 0.0, deg2rad(-170.0))));
    CHECK(std::abs(wrap_angle(mean_trajectory({a, b}).records[0].estimate.theta - kPi)) < 1e-12);
  }

  TEST_CASE("run order does not matter")
  {
    std::vector<TrajectoryLog> logs;
    Rng rng(71);
    std::normal_distribution<double> n(0.0, 0.1);
    for (int r = 0; r < 6; ++r) {
      logs.push_back(line_log(r, n(rng), n(rng), n(rng)));
    }
    const TrajectoryLog a = mean_trajectory(logs);
    std::rotate(logs.begin() + 1, logs.begin() + 3, logs.end());
    std::swap(logs[1], logs[4]);
    const TrajectoryLog b = mean_trajectory(logs);
    for (std::size_t k = 0; k < a.records.size(); ++k) {
      CHECK(a.records[k].estimate.x == doctest::Approx(b.records[k].estimate.x).epsilon(1e-14));
      CHECK(a.records[k].estimate.y == doctest::Approx(b.records[k].estimate.y).epsilon(1e-14));
      CHECK(a.translational_std[k] == doctest::Approx(b.translational_std[k]).epsilon(1e-12));
    }
  }

  TEST_CASE("mismatched steps are rejected")
  {
    TrajectoryLog a = line_log(0, 0.0);
    TrajectoryLog b = line_log(1, 0.0);
    b.records[4].step += 1;
    CHECK_THROWS_AS(mean_trajectory({a, b}), ValidationError);
    b = line_log(1, 0.0);
    b.records.pop_back();
    CHECK_THROWS_AS(mean_trajectory({a, b}), ValidationError);
  }
}

TEST_SUITE("report")
{
  TEST_CASE("empty logs write nothing")
  {
    const fixture::TempDir tmp("report_empty");
    const fs::path out = tmp / "out";
    CHECK_THROWS_AS(emit_report(RmseReport{}, {}, out), ValidationError);
    CHECK_FALSE(fs::exists(out));
  }

  TEST_CASE("files and round trip")
  {
    const fixture::TempDir tmp("report_files");
    const std::vector<TrajectoryLog> logs = {line_log(0, 0.1), line_log(1, -0.05, 0.02)};
    const RmseReport rep = rmse(logs);
    emit_report(rep, logs, tmp.path);
    for (const char* name : {"report.json", "mean_trajectory.csv", "plot_results.py", "runs/run_000.csv", "runs/run_001.csv"}) {
      CHECK_MESSAGE(fs::exists(tmp / name), name);
    }
    CHECK(report_from_json(slurp(tmp / "report.json")) == rep);
    CHECK(report_to_json(report_from_json(report_to_json(rep))) == report_to_json(rep));

    for (const char* name : {"runs/run_000.csv", "runs/run_001.csv"}) {
      std::ifstream in(tmp / name);
      std::string line;
      while (std::getline(in, line)) {
        CHECK(std::count(line.begin(), line.end(), ',') == 8);
      }
    }
    const TrajectoryLog back = read_run_csv(tmp / "runs" / "run_001.csv");
    REQUIRE(back.records.size() == logs[1].records.size());
    for (std::size_t k = 0; k < back.records.size(); ++k) {
      CHECK(back.records[k].estimate == logs[1].records[k].estimate);
      CHECK(back.records[k].ground_truth == logs[1].records[k].ground_truth);
    }
  }

  TEST_CASE("report reader rejects unknown keys")
  {
    CHECK_THROWS_AS(report_from_json(R"({"n_runs": 1, "bogus": 2})"), ValidationError);
  }
}

TEST_SUITE("dataset io")
{
  TEST_CASE("odometry and pose csv round trip")
  {
    const fixture::TempDir tmp("dataset_io");
    const std::vector<OdometryDelta> odo = {{0.1, 0.0, 0.0}, {0.05, -0.01, 0.3}, {0.0, 0.0, -1.0 / 3.0}};
    write_odometry_csv(tmp / "odometry.csv", odo);
    const auto back = read_odometry_csv(tmp / "odometry.csv");
    REQUIRE(back.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
      CHECK(back[i].as_pose() == odo[i].as_pose());
    }
    const std::vector<Pose2> poses = {Pose2(1.0, 2.0, 0.1), Pose2(1.0 / 3.0, -2.0, 3.0)};
    write_pose_csv(tmp / "gt.csv", poses);
    CHECK(read_pose_csv(tmp / "gt.csv") == poses);
    CHECK(slurp(tmp / "odometry.csv").rfind("step,dx,dy,dtheta\n1,", 0) == 0);
  }

  TEST_CASE("malformed csv is reported")
  {
    const fixture::TempDir tmp("dataset_bad");
    std::ofstream(tmp / "a.csv") << "step,dx,dy\n1,0,0\n";
    CHECK_THROWS_AS(read_odometry_csv(tmp / "a.csv"), LoadError);
    std::ofstream(tmp / "b.csv") << "step,dx,dy,dtheta\n1,0,0\n";
    CHECK_THROWS_AS(read_odometry_csv(tmp / "b.csv"), LoadError);
    std::ofstream(tmp / "c.csv") << "step,dx,dy,dtheta\n2,0,0,0\n";
    CHECK_THROWS_AS(read_odometry_csv(tmp / "c.csv"), LoadError);
    std::ofstream(tmp / "d.csv") << "step,dx,dy,dtheta\n1,0,zero,0\n";
    CHECK_THROWS_AS(read_odometry_csv(tmp / "d.csv"), LoadError);
  }

  TEST_CASE("update steps follow the gate")
  {
    const std::vector<OdometryDelta> odo(40, OdometryDelta(0.02, 0.0, 0.0));
    CHECK(update_steps(odo, {}) == std::vector<int>{13, 26, 39});
    const std::vector<OdometryDelta> turn(10, OdometryDelta(0.0, 0.0, 0.1));
    CHECK(update_steps(turn, {}) == std::vector<int>{3, 6, 9});
  }

  TEST_CASE("mask file names")
  {
    CHECK(mask_path("d", 42) == fs::path("d") / "masks" / "mask_000042.png");
  }
}

TEST_SUITE("pipeline")
{
  TEST_CASE("noise-free runs track the ground truth")
  {
    const fixture::TempDir tmp("pipeline_clean");
    const ExperimentConfig cfg = small_config(tmp.path);
    const SimulationSummary sim = simulate_dataset(cfg);
    CHECK(sim.n_masks > 10);
    CHECK(sim.path_length_m == doctest::Approx(2.5 + 1.2 + 1.3));

    const std::vector<TrajectoryLog> logs = run_experiment(cfg);
    REQUIRE(logs.size() == 2);
    CHECK(logs[0].seed != logs[1].seed);
    const double sigma = fixture::asymmetric_room().resolution();
    for (const auto& log : logs) {
      REQUIRE(static_cast<int>(log.records.size()) == sim.n_masks);
      for (const auto& r : log.records) {
        REQUIRE(r.ground_truth);
        CHECK((r.estimate.translation() - r.ground_truth->translation()).norm() <= 2 * sigma);
        CHECK(r.n_particles >= cfg.kld.n_min);
        CHECK(r.n_particles <= cfg.kld.n_max);
        const auto& t = r.timings;
        CHECK(t.predict_ms >= 0.0);
        CHECK(t.measurement_ms >= 0.0);
        CHECK(t.weight_ms >= 0.0);
        CHECK(t.resample_ms >= 0.0);
        CHECK(t.predict_ms + t.measurement_ms + t.weight_ms + t.resample_ms <= t.total_ms + 1e-9);
      }
    }
    CHECK(fs::exists(cfg.output_dir / "runs" / "run_000.csv"));
    CHECK(fs::exists(cfg.output_dir / "runs" / "run_001_timing.csv"));
    CHECK(fs::exists(cfg.output_dir / "dead_reckoning.csv"));

    const auto loaded = load_run_logs(cfg.output_dir);
    REQUIRE(loaded.size() == 2);
    CHECK(rmse(loaded) == rmse(logs));
  }

  TEST_CASE("runs are reproducible and seeds are distinct")
  {
    const fixture::TempDir tmp("pipeline_repeat");
    ExperimentConfig cfg = small_config(tmp.path);
    cfg.simulation.odometry_noise = MotionNoise();
    cfg.simulation.mask_noise = NoiseConfig();
    cfg.motion_noise = MotionNoise();
    cfg.init.std = {0.05, 0.05, 0.1};
    cfg.init.perturb_translation_m = 0.05;
    cfg.init.n_particles = 1500;
    cfg.layout.raycast_downsample = 2;
    cfg.n_runs = 3;
    simulate_dataset(cfg);
    const auto a = run_experiment(cfg);
    const std::string first = slurp(cfg.output_dir / "runs" / "run_002.csv");
    cfg.threads = 3;
    const auto b = run_experiment(cfg);
    CHECK(slurp(cfg.output_dir / "runs" / "run_002.csv") == first);
    CHECK(report_to_json(rmse(a)) == report_to_json(rmse(b)));
    std::set<std::uint64_t> seeds;
    for (const auto& log : a) {
      seeds.insert(log.seed);
    }
    CHECK(seeds.size() == 3);
    CHECK_FALSE(slurp(cfg.output_dir / "runs" / "run_000.csv") == first);
  }

  TEST_CASE("a missing mask aborts with the step")
  {
    const fixture::TempDir tmp("pipeline_missing");
    const ExperimentConfig cfg = small_config(tmp.path);
    simulate_dataset(cfg);
    const Dataset data = load_dataset(cfg.dataset_dir);
    const int step = update_steps(data.odometry, cfg.gating).at(2);
    fs::remove(mask_path(cfg.dataset_dir, step));
    try {
      run_experiment(cfg);
      FAIL("expected a LoadError");
    } catch (const LoadError& e) {
      CHECK(std::string(e.what()).find("step " + std::to_string(step)) != std::string::npos);
    }
  }

  TEST_CASE("stale run files are replaced")
  {
    const fixture::TempDir tmp("pipeline_stale");
    ExperimentConfig cfg = small_config(tmp.path);
    simulate_dataset(cfg);
    cfg.n_runs = 3;
    run_experiment(cfg);
    cfg.n_runs = 1;
    run_experiment(cfg);
    CHECK(load_run_logs(cfg.output_dir).size() == 1);
  }
}
