// Acceptance suite: one line per criterion, nonzero exit when any fails.
// Criteria marked with measured values so a failing run is diagnosable from
// the log alone.

#include <chrono>
#include <cstdarg>
#include <cstdio>
#include <functional>

#include "fd_harness.hpp"
#include "slikit/slikit.hpp"
#include "test_fixtures.hpp"

using namespace slikit;
using nlohmann::json;

namespace {

int g_failures = 0;

void report(int criterion, const char* name, bool pass, const std::string& detail) {
  std::printf("[%s] criterion %2d: %-28s %s\n", pass ? "PASS" : "FAIL", criterion, name,
              detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

double seconds_since(const std::chrono::steady_clock::time_point& t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* format, ...) {
  char buf[512];
  va_list args;
  va_start(args, format);
  std::vsnprintf(buf, sizeof(buf), format, args);
  va_end(args);
  return buf;
}

struct FramePair {
  PointCloud cloud;       // triangulated at the first pose, <= 50k points
  PointCloud target_cloud;
  PhaseImage target;
  EulerPose true_motion;
};

FramePair render_pair(const SensorRig& rig, const Scene& scene, const EulerPose& motion) {
  const RigidTransform pose_a = RigidTransform::identity();
  const RigidTransform pose_b = pose_a * RigidTransform::from_euler(motion).inverse();
  PmpConfig pmp;
  FramePair out;
  const PhaseImage phase_a = decode_phase(render_raw_patterns(scene, rig, pose_a, pmp), pmp);
  out.target = decode_phase(render_raw_patterns(scene, rig, pose_b, pmp), pmp);
  out.cloud = triangulate(phase_a, rig).strided(50000);
  out.target_cloud = triangulate(out.target, rig).strided(50000);
  out.true_motion = motion;
  return out;
}

// --- criterion 1: analytic Jacobian vs central finite differences -----------

void criterion_1() {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(1001);
  int checked = 0;
  double worst_rel = 0.0;
  bool ok = true;
  while (checked < 1000) {
    const auto cfg = fd_harness::random_config(rng);
    const ResidualEval ev = residual(cfg.point, cfg.pose, cfg.rig, cfg.target);
    const auto fd = fd_harness::fd_jacobian(cfg);
    if (!ev.ok() || !fd) continue;
    const Vec6 analytic = jacobian_row(ev.terms);
    if (!fd_harness::rows_match(analytic, *fd)) ok = false;
    for (int k = 0; k < 6; ++k) {
      const double mag = std::abs((*fd)[k]);
      if (mag > 1e-3) worst_rel = std::max(worst_rel, std::abs(analytic[k] - (*fd)[k]) / mag);
    }
    ++checked;
  }
  const double elapsed = seconds_since(t0);
  report(1, "jacobian correctness", ok && elapsed < 10.0,
         fmt("1000 configs, worst rel err %.2e (tol 1e-5), %.2f s (limit 10 s)", worst_rel, elapsed));
}

// --- criterion 2: PMP round trip ---------------------------------------------

void criterion_2(const SensorRig& rig) {
  const auto t0 = std::chrono::steady_clock::now();
  PmpConfig pmp;

  // Analytic: decode the projector-plane patterns themselves.
  const auto patterns = generate_patterns(pmp, rig);
  const PhaseImage decoded = decode_phase(patterns, pmp);
  double worst_analytic = 0.0;
  for (int r = 0; r < rig.proj_height; ++r) {
    const double truth = pattern_phase(r, rig.proj_height);
    double d = std::abs(decoded.at(r, 0) - truth);
    d = std::min(d, kTwoPi - d);
    worst_analytic = std::max(worst_analytic, d);
  }

  // Full renderer path on a 640x480 frame.
  const Scene scene = fixtures::plane_sphere_scene();
  const RigidTransform pose = RigidTransform::from_euler(EulerPose(0.01, -0.005, 0.02, 0.01, -0.02, 0.015));
  const auto [direct, cloud] = render_phase_direct(scene, rig, pose);
  const PhaseImage through = decode_phase(render_raw_patterns(scene, rig, pose, pmp), pmp);
  double worst_render = 0.0;
  std::size_t compared = 0;
  for (std::size_t i = 0; i < direct.phase.size(); ++i) {
    if (!direct.valid[i] || !through.valid[i]) continue;
    double d = std::abs(direct.phase[i] - through.phase[i]);
    d = std::min(d, kTwoPi - d);
    worst_render = std::max(worst_render, d);
    ++compared;
  }
  const double elapsed = seconds_since(t0);
  report(2, "pmp round trip",
         worst_analytic < 1e-10 && worst_render < 1e-6 && compared > 100000 && elapsed < 30.0,
         fmt("analytic %.2e (tol 1e-10), renderer %.2e over %zu px (tol 1e-6), %.1f s (limit 30 s)",
             worst_analytic, worst_render, compared, elapsed));
}

// --- criterion 3: odometry recovery ------------------------------------------

void criterion_3(const SensorRig& rig) {
  Rng rng(1003);
  bool ok = true;
  double worst_t = 0.0, worst_r = 0.0, worst_s = 0.0;
  OdometryConfig cfg;
  for (int trial = 0; trial < 3; ++trial) {
    EulerPose motion(rng.uniform(-0.02, 0.02), rng.uniform(-0.02, 0.02), rng.uniform(-0.02, 0.02),
                     deg_to_rad(rng.uniform(-2, 2)), deg_to_rad(rng.uniform(-2, 2)),
                     deg_to_rad(rng.uniform(-2, 2)));
    const FramePair pair = render_pair(rig, fixtures::plane_sphere_scene(), motion);
    const auto t0 = std::chrono::steady_clock::now();
    const OdometryResult res = estimate_motion(pair.cloud, pair.target, rig, EulerPose(), cfg);
    const double elapsed = seconds_since(t0);
    const Vec6 err = res.delta_x.to_vector() - motion.to_vector();
    worst_t = std::max(worst_t, err.head<3>().norm());
    worst_r = std::max(worst_r, rad_to_deg(err.tail<3>().norm()));
    worst_s = std::max(worst_s, elapsed);
    if (err.head<3>().norm() > 1e-4 || rad_to_deg(err.tail<3>().norm()) > 0.01 || elapsed > 2.0) {
      ok = false;
    }
  }
  report(3, "odometry recovery", ok,
         fmt("3 pairs: worst %.4f mm (tol 0.1), %.5f deg (tol 0.01), %.2f s/pair (limit 2)",
             worst_t * 1e3, worst_r, worst_s));
}

// --- criterion 4: initialization robustness ----------------------------------

void criterion_4() {
  const SensorRig rig = fixtures::default_rig(320, 240);
  TrajectorySpec traj;
  traj.kind = TrajectorySpec::Kind::random_6dof;
  traj.translation_bound_m = 0.015;
  traj.rotation_bound_rad = deg_to_rad(1.5);
  traj.count = 5;
  traj.seed = 77;
  const Dataset ds = generate_dataset(fixtures::plane_sphere_scene(), rig, traj, PmpConfig{});
  OdometryConfig odo;
  const auto rows = pipeline::cmd_sweep_init(ds, {0.0, 0.1, 0.2, 0.3, 0.4}, odo, 7, 50000);
  bool ok = true;
  for (const auto& row : rows) {
    if (row.mean_translation_error_m > 2.0 * rows[0].mean_translation_error_m + 1e-12 ||
        row.mean_rotation_error_deg > 2.0 * rows[0].mean_rotation_error_deg + 1e-12) {
      ok = false;
    }
  }
  report(4, "initialization robustness", ok,
         fmt("baseline %.2e m / %.2e deg; 40%% perturbation %.2e m / %.2e deg (limit 2x)",
             rows[0].mean_translation_error_m, rows[0].mean_rotation_error_deg,
             rows.back().mean_translation_error_m, rows.back().mean_rotation_error_deg));
}

// --- criteria 5, 6, 8: the 1.2 m orbit ---------------------------------------

void criterion_5(const Dataset& orbit) {
  CompressorConfig comp;
  comp.m_rows = 100;
  comp.seed = 1;
  const long ratio = static_cast<long>(orbit.rig.cam_width) * orbit.rig.cam_height / comp.m_rows;
  std::vector<std::vector<double>> sigs;
  for (const auto& f : orbit.frames) sigs.push_back(compress(f.phase, comp));
  const double revisit = distance(sigs[0], sigs[18]);
  double min_other = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < sigs.size(); ++i) {
    for (std::size_t j = i + 1; j < sigs.size(); ++j) {
      if (i == 0 && j == 18) continue;
      min_other = std::min(min_other, distance(sigs[i], sigs[j]));
    }
  }
  LoopConfig loop;
  loop.compressor = comp;
  std::vector<std::vector<double>> history(sigs.begin(), sigs.begin() + 18);
  const auto hit = detect(history, sigs[18], loop);
  const bool ok = hit && hit->frame_a == 0 && hit->frame_b == 18 &&
                  2.0 * revisit < min_other && ratio == 3072;
  report(5, "loop detection", ok,
         fmt("revisit dy %.3e vs min other %.3e (need 2x), n=100, ratio %ld:1", revisit, min_other,
             ratio));
}

void criterion_6(const Dataset& orbit, const std::filesystem::path& dir) {
  json config;
  config["dataset"] = dir.string();
  config["odometry"] = {{"mode", "ground_truth"},
                        {"drift_sigma_translation_mm", 1.0},
                        {"drift_sigma_rotation_deg", 0.1}};
  config["loop"] = {{"m_rows", 100}, {"seed", 1}};
  config["pose_graph"] = {{"sigma_odometry", 1.0}, {"sigma_loop", 0.5}};
  config["seed"] = 2024;
  const auto cfg = pipeline::run_config_from_json(config);
  const auto out = pipeline::run_pipeline(cfg, orbit);
  const bool have = out.ate_pre && out.ate_post && !out.loop_edges.empty();
  const double reduction = have ? 1.0 - *out.ate_post / *out.ate_pre : 0.0;
  report(6, "loop-closure benefit", have && *out.ate_post < *out.ate_pre && reduction >= 0.25,
         have ? fmt("ATE pre %.3f mm -> post %.3f mm, reduction %.1f%% (need >= 25%%)",
                    *out.ate_pre * 1e3, *out.ate_post * 1e3, reduction * 100.0)
              : std::string("no loop edge or no ground truth"));
}

void criterion_8(const Dataset& orbit, const std::filesystem::path& dir,
                 const std::vector<Sphere>& surface) {
  json config;
  config["dataset"] = dir.string();
  config["odometry"] = {{"mode", "estimate"}, {"init_policy", "ground_truth"}, {"max_points", 50000}};
  config["loop"] = {{"m_rows", 100}, {"seed", 1}};
  const auto cfg = pipeline::run_config_from_json(config);
  const auto out = pipeline::run_pipeline(cfg, orbit);

  std::vector<PoseVertex> vertices;
  std::vector<PointCloud> clouds;
  for (std::size_t i = 0; i < orbit.frames.size(); ++i) {
    vertices.push_back({static_cast<int>(i), out.trajectory_post[i]});
    clouds.push_back(orbit.frames[i].cloud);
  }
  const PointCloud merged = apply_to_clouds(vertices, clouds);
  // Rendered hits lie on the boundary of the sphere union, so the distance
  // to the analytic surface is the distance to the nearest sphere shell.
  double worst = 0.0, mean = 0.0;
  for (const auto& p : merged.points) {
    double d = std::numeric_limits<double>::infinity();
    for (const auto& s : surface) {
      d = std::min(d, std::abs((p - s.center).norm() - s.radius));
    }
    worst = std::max(worst, d);
    mean += d;
  }
  mean /= static_cast<double>(merged.size());
  report(8, "reconstruction quality", worst < 1e-3 && merged.size() > 100000,
         fmt("%zu merged points, max surface distance %.4f mm (tol 1), mean %.5f mm",
             merged.size(), worst * 1e3, mean * 1e3));
}

// --- criterion 7: phase odometry vs point-to-point ICP -----------------------

void criterion_7(const SensorRig& rig) {
  const EulerPose motion(0.012, -0.008, 0.015, deg_to_rad(1.0), deg_to_rad(-1.5), deg_to_rad(0.8));
  const FramePair pair = render_pair(rig, fixtures::plane_sphere_scene(), motion);

  OdometryConfig cfg;
  EulerPose phase_result;
  const double phase_s = timing_harness(
      [&] { phase_result = estimate_motion(pair.cloud, pair.target, rig, EulerPose(), cfg).delta_x; }, 3);
  IcpResult icp_result;
  const double icp_s = timing_harness(
      [&] { icp_result = icp_point_to_point(pair.cloud, pair.target_cloud, 30); }, 3);

  const auto pose_error = [&](const EulerPose& est) {
    const RigidTransform err =
        RigidTransform::from_euler(motion).inverse() * RigidTransform::from_euler(est);
    return std::pair{err.t.norm(), rotation_angle(err.r)};
  };
  const auto [phase_te, phase_re] = pose_error(phase_result);
  const auto [icp_te, icp_re] = pose_error(icp_result.motion);
  const bool ok = phase_s < icp_s && phase_te <= icp_te && phase_re <= icp_re;
  report(7, "comparative efficiency", ok,
         fmt("%zu pts: phase %.3f s / %.3f mm / %.4f deg vs ICP %.3f s / %.3f mm / %.4f deg",
             pair.cloud.size(), phase_s, phase_te * 1e3, rad_to_deg(phase_re), icp_s, icp_te * 1e3,
             rad_to_deg(icp_re)));
}

// --- criterion 9: compressed-sensing sanity -----------------------------------

void criterion_9() {
  const int n_rows = 100;
  const std::size_t dim = static_cast<std::size_t>(640) * 480;
  const double scale = 1.0 / std::sqrt(static_cast<double>(n_rows));
  Rng rng(1009);
  const int trials = 10000;
  int outside = 0;
  double mean = 0.0, lo = 1e9, hi = 0.0;
  for (int trial = 0; trial < trials; ++trial) {
    const int s = 1 + static_cast<int>(rng.next_u64() % 12);
    std::vector<std::pair<std::size_t, double>> v;
    double norm2 = 0.0;
    for (int k = 0; k < 2 * s; ++k) {
      const double value = rng.normal();
      v.emplace_back(rng.next_u64() % dim, value);
      norm2 += value * value;
    }
    double cy2 = 0.0;
    for (int r = 0; r < n_rows; ++r) {
      double acc = 0.0;
      for (const auto& [idx, value] : v) acc += gaussian_matrix_entry(7, r, idx) * value;
      acc *= scale;
      cy2 += acc * acc;
    }
    const double ratio = cy2 / norm2;
    mean += ratio;
    lo = std::min(lo, ratio);
    hi = std::max(hi, ratio);
    if (ratio < 0.5 || ratio > 1.5) ++outside;
  }
  mean /= trials;
  // The ratio is chi^2_100/100: ~0.13% of draws fall outside [0.5, 1.5] by
  // construction, so the band is checked on the distribution, not per draw.
  const bool ok = outside <= trials / 200 && std::abs(mean - 1.0) < 0.05;
  report(9, "compressed-sensing sanity", ok,
         fmt("10000 draws: ratio in [%.3f, %.3f], mean %.4f, %d outside [0.5,1.5] (allow <= 50)",
             lo, hi, mean, outside));
}

// --- criterion 10: metric oracle equivalence ----------------------------------

void criterion_10() {
  Rng rng(1010);
  bool ok = true;
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    // Random trajectories.
    std::vector<RigidTransform> est, gt;
    RigidTransform pe, pg;
    const int n = 5 + static_cast<int>(rng.next_u64() % 8);
    for (int i = 0; i < n; ++i) {
      est.push_back(pe);
      gt.push_back(pg);
      const auto step = [&] {
        return RigidTransform::from_euler(EulerPose(rng.uniform(-0.2, 0.2), rng.uniform(-0.2, 0.2),
                                                    rng.uniform(-0.2, 0.2), rng.uniform(-0.3, 0.3),
                                                    rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3)));
      };
      pe = pe * step();
      pg = pg * step();
    }

    // ATE against Eigen's umeyama as the independent reference.
    Eigen::Matrix3Xd src(3, n), dst(3, n);
    for (int i = 0; i < n; ++i) {
      src.col(i) = est[i].t;
      dst.col(i) = gt[i].t;
    }
    const Eigen::Matrix4d u = Eigen::umeyama(src, dst, false);
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
      sum += (u.topLeftCorner<3, 3>() * est[i].t + u.topRightCorner<3, 1>() - gt[i].t).squaredNorm();
    }
    const double ate_ref = std::sqrt(sum / n);
    const double ate = ate_rmse(est, gt);
    worst = std::max(worst, std::abs(ate - ate_ref));
    if (std::abs(ate - ate_ref) > 1e-10) ok = false;

    // RPE against a direct homogeneous-matrix evaluation.
    const TrajectoryError e = rpe(est, gt);
    for (int k = 0; k + 1 < n; ++k) {
      Eigen::Matrix4d me = Eigen::Matrix4d::Identity(), mg = Eigen::Matrix4d::Identity();
      auto fill = [](Eigen::Matrix4d& m, const RigidTransform& t) {
        m.topLeftCorner<3, 3>() = t.r;
        m.topRightCorner<3, 1>() = t.t;
      };
      Eigen::Matrix4d ek, ek1, gk, gk1;
      ek.setIdentity(); ek1.setIdentity(); gk.setIdentity(); gk1.setIdentity();
      fill(ek, est[k]); fill(ek1, est[k + 1]); fill(gk, gt[k]); fill(gk1, gt[k + 1]);
      const Eigen::Matrix4d err = (gk.inverse() * gk1).inverse() * (ek.inverse() * ek1);
      const double te = err.topRightCorner<3, 1>().norm();
      worst = std::max(worst, std::abs(te - e.rpe_translation[k]));
      if (std::abs(te - e.rpe_translation[k]) > 1e-10) ok = false;
      (void)me; (void)mg;
    }

    // Hausdorff against the all-pairs oracle.
    PointCloud a, b;
    for (int i = 0; i < 60; ++i) {
      a.add(Vec3(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)));
      b.add(Vec3(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)));
    }
    const double h1 = hausdorff(a, b);
    const double h2 = hausdorff_brute(a, b);
    worst = std::max(worst, std::abs(h1 - h2));
    if (std::abs(h1 - h2) > 1e-10) ok = false;
  }
  report(10, "metric oracle equivalence", ok, fmt("worst |diff| %.2e (tol 1e-10)", worst));
}

// --- criterion 11: determinism -------------------------------------------------

void criterion_11() {
  const auto dir = fixtures::temp_dir("acc_det");
  json gen;
  {
    const SensorRig rig = fixtures::default_rig(160, 120);
    gen["rig"] = io::rig_to_json(rig);
    json surfaces = json::array();
    for (const auto& s : fixtures::orbit_blob_spheres()) {
      surfaces.push_back({{"type", "sphere"},
                          {"center", {s.center.x(), s.center.y(), s.center.z()}},
                          {"radius", s.radius},
                          {"albedo", 0.9}});
    }
    gen["scene"] = {{"ambient", 0.05}, {"surfaces", surfaces}};
    gen["trajectory"] = {{"kind", "orbit"}, {"radius_m", 1.2}, {"step_deg", 20.0}, {"count", 19}};
  }
  pipeline::cmd_generate(gen, dir / "data");
  json config;
  config["dataset"] = (dir / "data").string();
  config["odometry"] = {{"mode", "ground_truth"},
                        {"drift_sigma_translation_mm", 1.0},
                        {"drift_sigma_rotation_deg", 0.1}};
  config["loop"] = {{"m_rows", 100}, {"seed", 1}};
  config["seed"] = 99;
  const auto cfg = pipeline::run_config_from_json(config);
  const auto a = pipeline::cmd_run(cfg, dir / "run_a");
  const auto b = pipeline::cmd_run(cfg, dir / "run_b");
  json ma = a.manifest, mb = b.manifest;
  ma.erase("timings");
  mb.erase("timings");
  const bool ok = ma.dump() == mb.dump();
  report(11, "determinism", ok,
         ok ? "identical manifests modulo timing fields" : "manifests differ");
}

}  // namespace

int main() {
  const auto t0 = std::chrono::steady_clock::now();
  const SensorRig rig = fixtures::default_rig();  // 640x480

  criterion_1();
  criterion_2(rig);
  criterion_3(rig);
  criterion_4();

  // Shared 640x480 orbit dataset (Sec. V geometry: 1.2 m radius, 20 deg).
  const auto orbit_dir = fixtures::temp_dir("acc_orbit");
  const Dataset orbit = generate_dataset(fixtures::orbit_sphere_scene(), rig, TrajectorySpec{},
                                         PmpConfig{}, orbit_dir);
  criterion_5(orbit);
  criterion_6(orbit, orbit_dir);
  criterion_7(rig);
  criterion_8(orbit, orbit_dir, fixtures::orbit_blob_spheres());
  criterion_9();
  criterion_10();
  criterion_11();

  std::printf("%d/11 criteria passed in %.1f s\n", 11 - g_failures, seconds_since(t0));
  return g_failures == 0 ? 0 : 1;
}
