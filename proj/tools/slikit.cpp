// Command-line front end: dataset generation, the odometry + loop-closure +
// pose-graph pipeline, trajectory/cloud evaluation, and the initialization
// sweep. Exit codes: 0 success, 1 config error, 2 data error, 3 numerical
// failure.

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "slikit/slikit.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json load_json(const fs::path& path) {
  std::ifstream f(path);
  if (!f) throw slikit::IoError(slikit::IoError::Code::file_missing, "missing file: " + path.string());
  json j;
  try {
    f >> j;
  } catch (const json::exception& e) {
    throw std::invalid_argument("config parse error in " + path.string() + ": " + e.what());
  }
  return j;
}

void write_text(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path().empty() ? "." : path.parent_path());
  std::ofstream f(path);
  f << text;
}

int run_generate(const fs::path& config_path, const fs::path& out, std::optional<std::uint64_t> seed) {
  json config = load_json(config_path);
  if (seed && config.contains("trajectory")) config["trajectory"]["seed"] = *seed;
  const auto ds = slikit::pipeline::cmd_generate(config, out, config_path.parent_path());
  std::cout << "generated " << ds.frames.size() << " frames -> " << out.string() << "\n";
  return 0;
}

int run_run(const fs::path& config_path, const fs::path& out, std::optional<std::uint64_t> seed,
            const fs::path& replay_manifest) {
  json config = load_json(config_path);
  if (seed) config["seed"] = *seed;
  auto cfg = slikit::pipeline::run_config_from_json(config, config_path.parent_path());
  if (!replay_manifest.empty()) {
    const json manifest = load_json(replay_manifest);
    const auto refined = slikit::pipeline::replay_backend(manifest, cfg);
    fs::create_directories(out);
    slikit::io::write_tum(out / "trajectory_post.tum", refined);
    std::cout << "replayed back end over " << refined.size() << " poses -> " << out.string() << "\n";
    return 0;
  }
  const auto result = slikit::pipeline::cmd_run(cfg, out);
  std::cout << "run complete: " << result.pairs.size() + 1 << " frames, "
            << result.loop_edges.size() << " loop edge(s)";
  if (result.ate_pre) {
    std::cout << ", ATE pre " << *result.ate_pre << " m, post " << *result.ate_post << " m";
  }
  std::cout << " -> " << out.string() << "\n";
  if (!result.failures.empty()) {
    std::cout << result.failures.size() << " pair failure(s) recorded in the manifest\n";
  }
  return 0;
}

int run_eval(const fs::path& est, const fs::path& gt, const fs::path& est_cloud,
             const fs::path& gt_cloud, const fs::path& out, const std::string& format) {
  const auto estimated = slikit::io::read_tum(est);
  const auto ground_truth = slikit::io::read_tum(gt);
  slikit::PointCloud ec, gc;
  const bool with_clouds = !est_cloud.empty() && !gt_cloud.empty();
  if (with_clouds) {
    ec = slikit::io::read_ply_cloud(est_cloud);
    gc = slikit::io::read_ply_cloud(gt_cloud);
  }
  const auto report = slikit::pipeline::cmd_eval(estimated, ground_truth,
                                                 with_clouds ? &ec : nullptr,
                                                 with_clouds ? &gc : nullptr);
  fs::create_directories(out);
  if (format == "json" || format == "both") {
    write_text(out / "metrics.json", report.to_json().dump(2) + "\n");
  }
  if (format == "csv" || format == "both") {
    write_text(out / "metrics.csv", report.to_csv());
  }
  std::cout << "ate_rmse " << report.trajectory.ate_rmse << " m, rpe medians "
            << report.trajectory.rpe_translation_median << " m / "
            << report.trajectory.rpe_rotation_median << " deg";
  if (report.hausdorff_m) std::cout << ", hausdorff " << *report.hausdorff_m << " m";
  std::cout << " -> " << out.string() << "\n";
  return 0;
}

int run_sweep(const fs::path& config_path, const fs::path& out, std::optional<std::uint64_t> seed,
              const std::string& format) {
  const json config = load_json(config_path);
  const fs::path dataset =
      config_path.parent_path() / config.at("dataset").get<std::string>();
  const auto fractions = config.at("fractions").get<std::vector<double>>();
  slikit::OdometryConfig odo;
  if (config.contains("odometry")) odo = slikit::pipeline::odometry_from_json(config.at("odometry"));
  const std::uint64_t use_seed = seed ? *seed : slikit::pipeline::get_or(config, "seed", std::uint64_t{0});
  const auto max_points = slikit::pipeline::get_or(config, "max_points", std::size_t{50000});

  const auto ds = slikit::io::load_dataset(dataset);
  const auto rows = slikit::pipeline::cmd_sweep_init(ds, fractions, odo, use_seed, max_points);

  json j = json::array();
  std::ostringstream csv;
  csv.precision(17);
  csv << "fraction,mean_translation_error_m,mean_rotation_error_deg\n";
  for (const auto& r : rows) {
    j.push_back({{"fraction", r.fraction},
                 {"mean_translation_error_m", r.mean_translation_error_m},
                 {"mean_rotation_error_deg", r.mean_rotation_error_deg}});
    csv << r.fraction << "," << r.mean_translation_error_m << "," << r.mean_rotation_error_deg << "\n";
  }
  fs::create_directories(out);
  if (format == "json" || format == "both") write_text(out / "sweep.json", j.dump(2) + "\n");
  if (format == "csv" || format == "both") write_text(out / "sweep.csv", csv.str());
  for (const auto& r : rows) {
    std::cout << "fraction " << r.fraction << ": mean err " << r.mean_translation_error_m << " m / "
              << r.mean_rotation_error_deg << " deg\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"slikit: structured-light phase SLAM toolkit"};
  app.require_subcommand(1);

  std::string config, out = "out", format = "json";
  std::string est, gt, est_cloud, gt_cloud, replay;
  std::optional<std::uint64_t> seed;

  auto* cmd_generate = app.add_subcommand("generate", "render a synthetic dataset");
  cmd_generate->add_option("--config", config, "generation config JSON")->required();
  cmd_generate->add_option("--out", out, "output dataset directory")->required();
  cmd_generate->add_option("--seed", seed, "override the trajectory seed");

  auto* cmd_run = app.add_subcommand("run", "odometry + loop closure + pose graph");
  cmd_run->add_option("--config", config, "run config JSON")->required();
  cmd_run->add_option("--out", out, "output run directory")->required();
  cmd_run->add_option("--seed", seed, "override the config seed");
  cmd_run->add_option("--replay", replay, "replay the back end from a manifest");

  auto* cmd_eval = app.add_subcommand("eval", "trajectory and reconstruction metrics");
  cmd_eval->add_option("--est", est, "estimated trajectory (TUM)")->required();
  cmd_eval->add_option("--gt", gt, "ground-truth trajectory (TUM)")->required();
  cmd_eval->add_option("--est-cloud", est_cloud, "estimated cloud (PLY)");
  cmd_eval->add_option("--gt-cloud", gt_cloud, "ground-truth cloud (PLY)");
  cmd_eval->add_option("--out", out, "output directory");
  cmd_eval->add_option("--format", format, "json|csv|both")->check(CLI::IsMember({"json", "csv", "both"}));

  auto* cmd_sweep = app.add_subcommand("sweep-init", "initialization sensitivity sweep");
  cmd_sweep->add_option("--config", config, "sweep config JSON")->required();
  cmd_sweep->add_option("--out", out, "output directory");
  cmd_sweep->add_option("--seed", seed, "override the config seed");
  cmd_sweep->add_option("--format", format, "json|csv|both")->check(CLI::IsMember({"json", "csv", "both"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (cmd_generate->parsed()) return run_generate(config, out, seed);
    if (cmd_run->parsed()) return run_run(config, out, seed, replay);
    if (cmd_eval->parsed()) return run_eval(est, gt, est_cloud, gt_cloud, out, format);
    if (cmd_sweep->parsed()) return run_sweep(config, out, seed, format);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: config: " << e.what() << "\n";
    return 1;
  } catch (const slikit::IoError& e) {
    std::cerr << "error: data: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: numerical: " << e.what() << "\n";
    return 3;
  }
  return 1;
}
