#pragma once

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "slikit/dataset.hpp"
#include "slikit/loop.hpp"
#include "slikit/metrics.hpp"
#include "slikit/odometry.hpp"
#include "slikit/pose_graph.hpp"
#include "slikit/rng.hpp"
#include "slikit/sim.hpp"
#include "slikit/version.hpp"

namespace slikit {

// End-to-end orchestration: odometry chain, compressive loop detection,
// pose-graph refinement, reconstruction export, evaluation. Everything here
// is drivable both from the CLI and from tests.

namespace pipeline {

using nlohmann::json;

// --- config parsing ----------------------------------------------------------

template <typename T>
T get_or(const json& j, const std::string& key, T fallback) {
  if (j.contains(key)) return j.at(key).get<T>();
  return fallback;
}

inline Vec3 vec3_from_json(const json& j) {
  const auto v = j.get<std::vector<double>>();
  if (v.size() != 3) throw std::invalid_argument("expected a 3-vector");
  return Vec3(v[0], v[1], v[2]);
}

inline Scene scene_from_json(const json& j, const std::filesystem::path& base_dir = {}) {
  Scene scene;
  scene.ambient = get_or(j, "ambient", 0.05);
  if (!j.contains("surfaces")) throw std::invalid_argument("scene: missing field 'surfaces'");
  for (const auto& s : j.at("surfaces")) {
    Surface surf;
    surf.albedo = get_or(s, "albedo", 0.9);
    const std::string type = s.at("type").get<std::string>();
    if (type == "plane") {
      Plane p;
      p.point = vec3_from_json(s.at("point"));
      p.normal = vec3_from_json(s.at("normal")).normalized();
      surf.shape = p;
    } else if (type == "sphere") {
      Sphere sp;
      sp.center = vec3_from_json(s.at("center"));
      sp.radius = s.at("radius").get<double>();
      surf.shape = sp;
    } else if (type == "mesh") {
      const std::filesystem::path file = base_dir / s.at("file").get<std::string>();
      io::PlyData data;
      if (file.extension() == ".obj") data = io::read_obj(file);
      else data = io::read_ply(file);
      surf.shape = TriangleMesh(std::move(data.vertices), std::move(data.faces));
    } else {
      throw std::invalid_argument("scene: unknown surface type '" + type + "'");
    }
    scene.surfaces.push_back(std::move(surf));
  }
  scene.validate();
  return scene;
}

inline TrajectorySpec trajectory_from_json(const json& j) {
  TrajectorySpec spec;
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "orbit") {
    spec.kind = TrajectorySpec::Kind::orbit;
    spec.radius_m = get_or(j, "radius_m", 1.2);
    spec.step_deg = get_or(j, "step_deg", 20.0);
    spec.count = get_or(j, "count", 19);
  } else if (kind == "random_6dof") {
    spec.kind = TrajectorySpec::Kind::random_6dof;
    spec.translation_bound_m = get_or(j, "translation_bound_m", 0.02);
    spec.rotation_bound_rad = deg_to_rad(get_or(j, "rotation_bound_deg", 2.0));
    spec.count = get_or(j, "count", 8);
    spec.seed = get_or(j, "seed", std::uint64_t{0});
  } else {
    throw std::invalid_argument("trajectory: unknown kind '" + kind + "'");
  }
  spec.validate();
  return spec;
}

inline PmpConfig pmp_from_json(const json& j) {
  PmpConfig cfg;
  cfg.n_patterns = get_or(j, "n_patterns", 4);
  cfg.brightness_a = get_or(j, "brightness_a", 0.5);
  cfg.modulation_b = get_or(j, "modulation_b", 0.4);
  cfg.validate();
  return cfg;
}

enum class InitPolicy { zero, constant_velocity, ground_truth };
enum class OdometryMode { estimate, ground_truth };

struct RunConfig {
  std::filesystem::path dataset_path;
  OdometryConfig odometry;
  InitPolicy init_policy = InitPolicy::constant_velocity;
  OdometryMode odometry_mode = OdometryMode::estimate;
  double drift_sigma_translation_m = 0.0;  // injected into relative motions
  double drift_sigma_rotation_rad = 0.0;
  std::size_t max_points = 50000;
  LoopConfig loop;
  double sigma_odometry = 1.0;
  double sigma_loop = 0.5;
  int graph_max_iters = 50;
  double graph_tol = 1e-12;
  double export_voxel_m = 0.0;
  std::uint64_t seed = 0;
  json raw;  // config snapshot echoed into the manifest
};

inline OdometryConfig odometry_from_json(const json& j) {
  OdometryConfig cfg;
  cfg.max_iters = get_or(j, "max_iters", 100);
  cfg.step_init = get_or(j, "step_init", 1.0);
  cfg.armijo_c = get_or(j, "armijo_c", 1e-4);
  cfg.armijo_shrink = get_or(j, "armijo_shrink", 0.5);
  cfg.tol_step = get_or(j, "tol_step", 1e-10);
  cfg.tol_cost = get_or(j, "tol_cost", 1e-12);
  const std::string solver = get_or<std::string>(j, "solver", "gauss_newton");
  if (solver == "gauss_newton") cfg.solver = OdometryConfig::Solver::gauss_newton;
  else if (solver == "steepest_descent") cfg.solver = OdometryConfig::Solver::steepest_descent;
  else throw std::invalid_argument("odometry: unknown solver '" + solver + "'");
  const std::string jac = get_or<std::string>(j, "jacobian", "analytic");
  if (jac == "analytic") cfg.jacobian = OdometryConfig::JacobianMode::analytic;
  else if (jac == "finite_difference") cfg.jacobian = OdometryConfig::JacobianMode::finite_difference;
  else throw std::invalid_argument("odometry: unknown jacobian mode '" + jac + "'");
  if (j.contains("roi")) {
    const auto& r = j.at("roi");
    cfg.roi = Roi(r.at(0).get<int>(), r.at(1).get<int>(), r.at(2).get<int>(), r.at(3).get<int>());
  }
  cfg.validate();
  return cfg;
}

inline RunConfig run_config_from_json(const json& j, const std::filesystem::path& base_dir = {}) {
  RunConfig cfg;
  cfg.raw = j;
  if (!j.contains("dataset")) throw std::invalid_argument("run config: missing field 'dataset'");
  cfg.dataset_path = base_dir / j.at("dataset").get<std::string>();
  if (j.contains("odometry")) {
    const auto& o = j.at("odometry");
    cfg.odometry = odometry_from_json(o);
    const std::string policy = get_or<std::string>(o, "init_policy", "constant_velocity");
    if (policy == "zero") cfg.init_policy = InitPolicy::zero;
    else if (policy == "constant_velocity") cfg.init_policy = InitPolicy::constant_velocity;
    else if (policy == "ground_truth") cfg.init_policy = InitPolicy::ground_truth;
    else throw std::invalid_argument("run config: unknown init_policy '" + policy + "'");
    const std::string mode = get_or<std::string>(o, "mode", "estimate");
    if (mode == "estimate") cfg.odometry_mode = OdometryMode::estimate;
    else if (mode == "ground_truth") cfg.odometry_mode = OdometryMode::ground_truth;
    else throw std::invalid_argument("run config: unknown odometry mode '" + mode + "'");
    cfg.drift_sigma_translation_m = get_or(o, "drift_sigma_translation_mm", 0.0) * 1e-3;
    cfg.drift_sigma_rotation_rad = deg_to_rad(get_or(o, "drift_sigma_rotation_deg", 0.0));
    cfg.max_points = get_or(o, "max_points", std::size_t{50000});
  }
  if (j.contains("loop")) {
    const auto& l = j.at("loop");
    cfg.loop.compressor.m_rows = get_or(l, "m_rows", 100);
    cfg.loop.compressor.seed = get_or(l, "seed", std::uint64_t{1});
    cfg.loop.tau_absolute = get_or(l, "tau_absolute", -1.0);
    cfg.loop.tau_adaptive_factor = get_or(l, "tau_adaptive_factor", 0.3);
    cfg.loop.min_gap = get_or(l, "min_gap", 5);
  }
  if (j.contains("pose_graph")) {
    const auto& g = j.at("pose_graph");
    cfg.sigma_odometry = get_or(g, "sigma_odometry", 1.0);
    cfg.sigma_loop = get_or(g, "sigma_loop", 0.5);
    cfg.graph_max_iters = get_or(g, "max_iters", 50);
    cfg.graph_tol = get_or(g, "tol", 1e-12);
  }
  cfg.export_voxel_m = get_or(j, "export_voxel_m", 0.0);
  cfg.seed = get_or(j, "seed", std::uint64_t{0});
  return cfg;
}

// --- generate ----------------------------------------------------------------

// Renders a dataset from a {rig, scene, trajectory, pmp} spec and saves it.
inline Dataset cmd_generate(const json& config, const std::filesystem::path& out_dir,
                            const std::filesystem::path& base_dir = {}) {
  if (!config.contains("rig")) throw std::invalid_argument("generate config: missing field 'rig'");
  const SensorRig rig = io::rig_from_json(config.at("rig"));
  const Scene scene = scene_from_json(config.at("scene"), base_dir);
  const TrajectorySpec traj = trajectory_from_json(config.at("trajectory"));
  const PmpConfig pmp = config.contains("pmp") ? pmp_from_json(config.at("pmp")) : PmpConfig{};
  return generate_dataset(scene, rig, traj, pmp, out_dir);
}

// --- run ---------------------------------------------------------------------

struct PairRecord {
  int from = 0, to = 0;
  EulerPose delta;  // registers frame `from` points into frame `to` coords
  double cost = 0.0;
  int iterations = 0;
  std::size_t residual_count = 0;
  bool converged = false;
  bool injected = false;   // ground-truth mode (optionally noise-injected)
  bool failed = false;
  std::string error;
  double seconds = 0.0;
};

struct LoopEdgeRecord {
  int frame_a = 0, frame_b = 0;
  double distance = 0.0;
  RigidTransform measurement;  // pose of frame_b in frame_a's frame
};

struct RunOutput {
  std::vector<PairRecord> pairs;
  std::vector<std::vector<double>> signatures;
  std::vector<LoopCandidate> candidates;  // accepted ones become edges
  std::vector<LoopEdgeRecord> loop_edges;
  std::vector<RigidTransform> trajectory_pre;
  std::vector<RigidTransform> trajectory_post;
  std::optional<double> ate_pre, ate_post;
  std::vector<std::string> failures;
  json timings;
  json manifest;
};

namespace detail {

inline double now_seconds() {
  return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch()).count();
}

inline json pose_to_json(const RigidTransform& t) {
  const Eigen::Quaterniond q(t.r);
  return json::array({t.t.x(), t.t.y(), t.t.z(), q.x(), q.y(), q.z(), q.w()});
}

inline RigidTransform pose_from_json(const json& j) {
  const Eigen::Quaterniond q(j.at(6).get<double>(), j.at(3).get<double>(), j.at(4).get<double>(),
                             j.at(5).get<double>());
  return RigidTransform(q.normalized().toRotationMatrix(),
                        Vec3(j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()));
}

inline Mat6 scaled_information(double sigma) {
  return Mat6::Identity() / (sigma * sigma);
}

// Re-optimizes the incrementally built chain after each accepted loop.
inline std::vector<PoseVertex> refine(const std::vector<PoseVertex>& vertices,
                                      const std::vector<PairRecord>& pairs,
                                      const std::vector<LoopEdgeRecord>& loop_edges,
                                      const RunConfig& cfg, double* chi2 = nullptr) {
  std::vector<PoseEdge> edges;
  for (const auto& p : pairs) {
    if (p.to >= static_cast<int>(vertices.size())) break;
    PoseEdge e;
    e.from_id = p.from;
    e.to_id = p.to;
    e.measurement = RigidTransform::from_euler(p.delta).inverse();
    e.information = scaled_information(cfg.sigma_odometry);
    edges.push_back(e);
  }
  for (const auto& l : loop_edges) {
    if (l.frame_b >= static_cast<int>(vertices.size())) continue;
    PoseEdge e;
    e.from_id = l.frame_a;
    e.to_id = l.frame_b;
    e.measurement = l.measurement;
    e.information = scaled_information(cfg.sigma_loop);
    edges.push_back(e);
  }
  const OptimizeResult res = optimize(vertices, edges, cfg.graph_max_iters, cfg.graph_tol);
  if (chi2) *chi2 = res.chi2;
  return res.vertices;
}

}  // namespace detail

// Full front-to-back run over a loaded dataset. Single-pair odometry
// failures degrade to an identity motion and are recorded; the run always
// completes.
inline RunOutput run_pipeline(const RunConfig& cfg, const Dataset& ds) {
  if (ds.frames.size() < 2) throw std::invalid_argument("run: dataset needs at least 2 frames");
  if (cfg.odometry_mode == OdometryMode::ground_truth && !ds.has_ground_truth()) {
    throw std::invalid_argument("run: ground-truth odometry mode needs gt poses");
  }
  if ((cfg.init_policy == InitPolicy::ground_truth) && !ds.has_ground_truth()) {
    throw std::invalid_argument("run: ground-truth init policy needs gt poses");
  }

  RunOutput out;
  double odometry_s = 0.0, compress_s = 0.0, detect_s = 0.0, solve_s = 0.0;

  // Frame 0 signature.
  {
    const double t0 = detail::now_seconds();
    out.signatures.push_back(compress(ds.frames[0].phase, cfg.loop.compressor));
    compress_s += detail::now_seconds() - t0;
  }

  std::vector<PoseVertex> vertices{{0, RigidTransform::identity()}};
  EulerPose previous_delta;

  for (std::size_t k = 0; k + 1 < ds.frames.size(); ++k) {
    PairRecord rec;
    rec.from = static_cast<int>(k);
    rec.to = static_cast<int>(k + 1);

    EulerPose gt_delta;
    if (ds.has_ground_truth()) {
      const RigidTransform rel = relative_motion(*ds.frames[k].gt_pose, *ds.frames[k + 1].gt_pose);
      gt_delta = euler_from_matrix(rel.r, rel.t);
    }

    const double t0 = detail::now_seconds();
    if (cfg.odometry_mode == OdometryMode::ground_truth) {
      rec.delta = gt_delta;
      rec.injected = true;
      if (cfg.drift_sigma_translation_m > 0.0 || cfg.drift_sigma_rotation_rad > 0.0) {
        Rng noise(Rng::derive(cfg.seed, k + 1));
        Vec6 v = rec.delta.to_vector();
        for (int i = 0; i < 3; ++i) v[i] += cfg.drift_sigma_translation_m * noise.normal();
        for (int i = 3; i < 6; ++i) v[i] += cfg.drift_sigma_rotation_rad * noise.normal();
        rec.delta = EulerPose::from_vector(v);
      }
      rec.converged = true;
    } else {
      EulerPose init;
      if (cfg.init_policy == InitPolicy::constant_velocity) init = previous_delta;
      else if (cfg.init_policy == InitPolicy::ground_truth) init = gt_delta;
      try {
        const OdometryResult res =
            estimate_motion(ds.frames[k].cloud.strided(cfg.max_points), ds.frames[k + 1].phase,
                            ds.rig, init, cfg.odometry);
        rec.delta = res.delta_x;
        rec.cost = res.final_cost;
        rec.iterations = res.iterations;
        rec.residual_count = res.residual_count;
        rec.converged = res.converged;
        if (!res.converged) {
          out.failures.push_back("pair " + std::to_string(k) + "->" + std::to_string(k + 1) +
                                 ": not converged (" + res.stop_reason + ")");
        }
      } catch (const std::exception& e) {
        rec.failed = true;
        rec.error = e.what();
        rec.delta = EulerPose();  // identity fallback
        out.failures.push_back("pair " + std::to_string(k) + "->" + std::to_string(k + 1) + ": " +
                               e.what());
      }
    }
    rec.seconds = detail::now_seconds() - t0;
    odometry_s += rec.seconds;
    previous_delta = rec.delta;
    out.pairs.push_back(rec);

    // Chain the device-pose increment (inverse of the point transform).
    const RigidTransform increment = RigidTransform::from_euler(rec.delta).inverse();
    vertices.push_back({static_cast<int>(k + 1), vertices.back().pose * increment});

    // Compress the new frame and look for a revisit.
    const double t1 = detail::now_seconds();
    std::vector<double> sig = compress(ds.frames[k + 1].phase, cfg.loop.compressor);
    compress_s += detail::now_seconds() - t1;

    const double t2 = detail::now_seconds();
    const auto candidate = detect(out.signatures, sig, cfg.loop);
    detect_s += detail::now_seconds() - t2;
    out.signatures.push_back(std::move(sig));

    if (candidate) {
      out.candidates.push_back(*candidate);
      LoopEdgeRecord edge;
      edge.frame_a = candidate->frame_a;
      edge.frame_b = candidate->frame_b;
      edge.distance = candidate->distance;
      bool edge_ok = true;
      try {
        // Measurement: register the revisiting frame's points into the old
        // frame -> T_a^-1 * T_b, the pose of b in a's frame.
        const OdometryResult res = estimate_motion(
            ds.frames[edge.frame_b].cloud.strided(cfg.max_points), ds.frames[edge.frame_a].phase,
            ds.rig, EulerPose(), cfg.odometry);
        edge.measurement = RigidTransform::from_euler(res.delta_x);
      } catch (const std::exception& e) {
        edge_ok = false;
        out.failures.push_back("loop " + std::to_string(edge.frame_a) + "<->" +
                               std::to_string(edge.frame_b) + ": " + e.what());
      }
      if (edge_ok) {
        out.loop_edges.push_back(edge);
        const double t3 = detail::now_seconds();
        vertices = detail::refine(vertices, out.pairs, out.loop_edges, cfg);
        solve_s += detail::now_seconds() - t3;
      }
    }
  }

  // Open chain (no loop information), for the pre/post comparison.
  std::vector<EulerPose> increments;
  for (const auto& p : out.pairs) {
    const RigidTransform inc = RigidTransform::from_euler(p.delta).inverse();
    increments.push_back(euler_from_matrix(inc.r, inc.t));
  }
  for (const auto& v : accumulate(increments)) out.trajectory_pre.push_back(v.pose);
  for (const auto& v : vertices) out.trajectory_post.push_back(v.pose);

  if (ds.has_ground_truth()) {
    const auto gt = ds.ground_truth();
    out.ate_pre = ate_rmse(out.trajectory_pre, gt);
    out.ate_post = ate_rmse(out.trajectory_post, gt);
  }

  out.timings = {
      {"odometry_total_s", odometry_s},
      {"compress_total_s", compress_s},
      {"detect_total_s", detect_s},
      {"graph_solve_total_s", solve_s},
      {"backend_total_s", compress_s + detect_s + solve_s},
  };

  // Manifest: everything needed to replay the back end byte-for-byte.
  json manifest;
  manifest["manifest_version"] = kManifestVersion;
  manifest["software_version"] = kVersion;
  manifest["config"] = cfg.raw;
  json pairs = json::array();
  for (const auto& p : out.pairs) {
    json jp;
    jp["from"] = p.from;
    jp["to"] = p.to;
    const Vec6 v = p.delta.to_vector();
    jp["delta"] = std::vector<double>(v.data(), v.data() + 6);
    jp["cost"] = p.cost;
    jp["iterations"] = p.iterations;
    jp["residual_count"] = p.residual_count;
    jp["converged"] = p.converged;
    jp["injected"] = p.injected;
    jp["failed"] = p.failed;
    if (p.failed) jp["error"] = p.error;
    pairs.push_back(jp);
  }
  manifest["odometry_pairs"] = pairs;
  json sigs = json::array();
  for (const auto& s : out.signatures) sigs.push_back(s);
  manifest["signatures"] = sigs;
  json cands = json::array();
  for (const auto& c : out.candidates) {
    cands.push_back({{"frame_a", c.frame_a},
                     {"frame_b", c.frame_b},
                     {"distance", c.distance},
                     {"accepted", c.accepted}});
  }
  manifest["loop_candidates"] = cands;
  json ledges = json::array();
  for (const auto& l : out.loop_edges) {
    ledges.push_back({{"frame_a", l.frame_a},
                      {"frame_b", l.frame_b},
                      {"distance", l.distance},
                      {"measurement", detail::pose_to_json(l.measurement)}});
  }
  manifest["loop_edges"] = ledges;
  json pre = json::array(), post = json::array();
  for (const auto& t : out.trajectory_pre) pre.push_back(detail::pose_to_json(t));
  for (const auto& t : out.trajectory_post) post.push_back(detail::pose_to_json(t));
  manifest["trajectory_pre"] = pre;
  manifest["trajectory_post"] = post;
  if (out.ate_pre) {
    manifest["metrics"] = {{"ate_rmse_pre", *out.ate_pre}, {"ate_rmse_post", *out.ate_post}};
  }
  manifest["failures"] = out.failures;
  manifest["timings"] = out.timings;
  out.manifest = std::move(manifest);
  return out;
}

// Back-end-only replay: rebuilds the chain from the manifest's stored
// odometry deltas and loop edges and re-runs the same optimization schedule.
inline std::vector<RigidTransform> replay_backend(const json& manifest, const RunConfig& cfg) {
  std::vector<PairRecord> pairs;
  for (const auto& jp : manifest.at("odometry_pairs")) {
    PairRecord p;
    p.from = jp.at("from").get<int>();
    p.to = jp.at("to").get<int>();
    const auto d = jp.at("delta").get<std::vector<double>>();
    p.delta = EulerPose(d[0], d[1], d[2], d[3], d[4], d[5]);
    pairs.push_back(p);
  }
  std::vector<LoopEdgeRecord> loop_edges;
  for (const auto& jl : manifest.at("loop_edges")) {
    LoopEdgeRecord l;
    l.frame_a = jl.at("frame_a").get<int>();
    l.frame_b = jl.at("frame_b").get<int>();
    l.distance = jl.at("distance").get<double>();
    l.measurement = detail::pose_from_json(jl.at("measurement"));
    loop_edges.push_back(l);
  }

  std::vector<PoseVertex> vertices{{0, RigidTransform::identity()}};
  std::size_t next_loop = 0;
  for (const auto& p : pairs) {
    const RigidTransform increment = RigidTransform::from_euler(p.delta).inverse();
    vertices.push_back({p.to, vertices.back().pose * increment});
    while (next_loop < loop_edges.size() && loop_edges[next_loop].frame_b == p.to) {
      std::vector<LoopEdgeRecord> so_far(loop_edges.begin(),
                                         loop_edges.begin() + static_cast<long>(next_loop) + 1);
      vertices = detail::refine(vertices, pairs, so_far, cfg);
      ++next_loop;
    }
  }
  std::vector<RigidTransform> out;
  for (const auto& v : vertices) out.push_back(v.pose);
  return out;
}

// Runs the pipeline and writes manifest, trajectories, merged cloud, and the
// g2o dump under out_dir.
inline RunOutput cmd_run(const RunConfig& cfg, const std::filesystem::path& out_dir) {
  const Dataset ds = io::load_dataset(cfg.dataset_path);
  RunOutput out = run_pipeline(cfg, ds);
  std::filesystem::create_directories(out_dir);
  {
    std::ofstream f(out_dir / "manifest.json");
    f << out.manifest.dump(2) << "\n";
  }
  io::write_tum(out_dir / "trajectory_pre.tum", out.trajectory_pre);
  io::write_tum(out_dir / "trajectory_post.tum", out.trajectory_post);
  {
    std::vector<PoseVertex> vertices;
    std::vector<PointCloud> clouds;
    for (std::size_t i = 0; i < ds.frames.size(); ++i) {
      vertices.push_back({static_cast<int>(i), out.trajectory_post[i]});
      clouds.push_back(ds.frames[i].cloud);
    }
    io::write_ply(out_dir / "merged.ply", apply_to_clouds(vertices, clouds, cfg.export_voxel_m));
    std::vector<PoseEdge> edges;
    for (const auto& p : out.pairs) {
      edges.push_back({p.from, p.to, RigidTransform::from_euler(p.delta).inverse(),
                       detail::scaled_information(cfg.sigma_odometry)});
    }
    for (const auto& l : out.loop_edges) {
      edges.push_back({l.frame_a, l.frame_b, l.measurement, detail::scaled_information(cfg.sigma_loop)});
    }
    write_g2o(out_dir / "graph.g2o", vertices, edges);
  }
  return out;
}

// --- eval --------------------------------------------------------------------

struct EvalReport {
  TrajectoryError trajectory;
  std::optional<double> hausdorff_m;
  double eval_seconds = 0.0;

  json to_json() const {
    json j;
    j["ate_rmse"] = trajectory.ate_rmse;
    j["rpe_translation"] = trajectory.rpe_translation;
    j["rpe_rotation_deg"] = trajectory.rpe_rotation;
    j["rpe_translation_median"] = trajectory.rpe_translation_median;
    j["rpe_rotation_median_deg"] = trajectory.rpe_rotation_median;
    if (hausdorff_m) j["hausdorff_m"] = *hausdorff_m;
    j["eval_seconds"] = eval_seconds;
    return j;
  }

  std::string to_csv() const {
    std::ostringstream ss;
    ss.precision(17);
    ss << "metric,value\n";
    ss << "ate_rmse," << trajectory.ate_rmse << "\n";
    ss << "rpe_translation_median," << trajectory.rpe_translation_median << "\n";
    ss << "rpe_rotation_median_deg," << trajectory.rpe_rotation_median << "\n";
    if (hausdorff_m) ss << "hausdorff_m," << *hausdorff_m << "\n";
    ss << "step,rpe_translation,rpe_rotation_deg\n";
    for (std::size_t i = 0; i < trajectory.rpe_translation.size(); ++i) {
      ss << i << "," << trajectory.rpe_translation[i] << "," << trajectory.rpe_rotation[i] << "\n";
    }
    return ss.str();
  }
};

inline EvalReport cmd_eval(const std::vector<RigidTransform>& estimated,
                           const std::vector<RigidTransform>& ground_truth,
                           const PointCloud* est_cloud = nullptr,
                           const PointCloud* gt_cloud = nullptr) {
  if (estimated.size() != ground_truth.size()) {
    throw std::invalid_argument("eval: trajectory frame counts differ");
  }
  EvalReport report;
  const double t0 = detail::now_seconds();
  report.trajectory = rpe(estimated, ground_truth, 1);
  report.trajectory.ate_rmse = ate_rmse(estimated, ground_truth);
  if (est_cloud && gt_cloud) {
    report.hausdorff_m = hausdorff(*est_cloud, *gt_cloud);
  }
  report.eval_seconds = detail::now_seconds() - t0;
  return report;
}

// --- sweep -------------------------------------------------------------------

struct SweepRow {
  double fraction = 0.0;
  double mean_translation_error_m = 0.0;
  double mean_rotation_error_deg = 0.0;
};

// Initialization-sensitivity sweep: per fraction, run odometry on every
// consecutive pair with the true motion perturbed by that fraction as init.
inline std::vector<SweepRow> cmd_sweep_init(const Dataset& ds, const std::vector<double>& fractions,
                                            const OdometryConfig& odo, std::uint64_t seed,
                                            std::size_t max_points = 50000) {
  if (!ds.has_ground_truth()) throw std::invalid_argument("sweep: dataset has no ground truth");
  if (ds.frames.size() < 2) throw std::invalid_argument("sweep: dataset needs at least 2 frames");
  std::vector<SweepRow> rows;
  for (const double fraction : fractions) {
    SweepRow row;
    row.fraction = fraction;
    double sum_t = 0.0, sum_r = 0.0;
    std::size_t n = 0;
    for (std::size_t k = 0; k + 1 < ds.frames.size(); ++k) {
      const RigidTransform rel = relative_motion(*ds.frames[k].gt_pose, *ds.frames[k + 1].gt_pose);
      const EulerPose gt_delta = euler_from_matrix(rel.r, rel.t);
      const EulerPose init = perturb_pose(gt_delta, fraction, Rng::derive(seed, k));
      const OdometryResult res = estimate_motion(ds.frames[k].cloud.strided(max_points),
                                                 ds.frames[k + 1].phase, ds.rig, init, odo);
      const RigidTransform err = rel.inverse() * RigidTransform::from_euler(res.delta_x);
      sum_t += err.t.norm();
      sum_r += rad_to_deg(rotation_angle(err.r));
      ++n;
    }
    row.mean_translation_error_m = sum_t / static_cast<double>(n);
    row.mean_rotation_error_deg = sum_r / static_cast<double>(n);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace pipeline
}  // namespace slikit
