#include <catch2/catch_amalgamated.hpp>
#include <thread>

#include "test_fixtures.hpp"

using namespace slikit;

namespace {

std::vector<RigidTransform> random_trajectory(Rng& rng, int n) {
  std::vector<RigidTransform> out;
  RigidTransform pose;
  for (int i = 0; i < n; ++i) {
    out.push_back(pose);
    pose = pose * RigidTransform::from_euler(
                      EulerPose(rng.uniform(-0.1, 0.1), rng.uniform(-0.1, 0.1), rng.uniform(-0.1, 0.1),
                                rng.uniform(-0.2, 0.2), rng.uniform(-0.2, 0.2), rng.uniform(-0.2, 0.2)));
  }
  return out;
}

// Independent RPE reference built on Eigen homogeneous matrices.
void rpe_reference(const std::vector<RigidTransform>& est, const std::vector<RigidTransform>& gt,
                   std::vector<double>& trans, std::vector<double>& rot_deg) {
  const auto to_mat = [](const RigidTransform& t) {
    Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
    m.topLeftCorner<3, 3>() = t.r;
    m.topRightCorner<3, 1>() = t.t;
    return m;
  };
  for (std::size_t k = 0; k + 1 < est.size(); ++k) {
    const Eigen::Matrix4d q_rel = to_mat(gt[k]).inverse() * to_mat(gt[k + 1]);
    const Eigen::Matrix4d p_rel = to_mat(est[k]).inverse() * to_mat(est[k + 1]);
    const Eigen::Matrix4d e = q_rel.inverse() * p_rel;
    trans.push_back(e.topRightCorner<3, 1>().norm());
    rot_deg.push_back(rad_to_deg(
        std::acos(std::clamp((e.topLeftCorner<3, 3>().trace() - 1.0) / 2.0, -1.0, 1.0))));
  }
}

}  // namespace

TEST_CASE("ate_rmse") {
  Rng rng(81);
  const auto traj = random_trajectory(rng, 12);

  SECTION("identical trajectories score zero") {
    CHECK(ate_rmse(traj, traj) < 1e-12);
  }
  SECTION("a global shift is removed by the alignment") {
    std::vector<RigidTransform> shifted = traj;
    for (auto& t : shifted) t.t += Vec3(1, 0, 0);
    CHECK(ate_rmse(shifted, traj) < 1e-9);
  }
  SECTION("any rigid transform of one trajectory is removed") {
    const RigidTransform g(EulerPose(0, 0, 0, 0.4, -0.2, 0.9).rotation(), Vec3(0.3, -1.0, 2.0));
    std::vector<RigidTransform> moved = traj;
    for (auto& t : moved) t = g * t;
    CHECK(ate_rmse(moved, traj) < 1e-9);
  }
  SECTION("one pose offset 10 mm among 10 coincident poses") {
    // After centroid alignment the residuals are 9 x 1 mm and 1 x 9 mm:
    // RMSE = sqrt((9*1 + 81) mm^2 / 10) = 3 mm exactly.
    std::vector<RigidTransform> gt(10), est(10);
    est[4].t = Vec3(0.010, 0, 0);
    CHECK(ate_rmse(est, gt) == Catch::Approx(0.003).margin(1e-15));
  }
  SECTION("errors") {
    CHECK_THROWS_AS(ate_rmse(traj, random_trajectory(rng, 5)), std::invalid_argument);
    CHECK_THROWS_AS(ate_rmse({traj[0], traj[1]}, {traj[0], traj[1]}), std::invalid_argument);
  }
}

TEST_CASE("rpe") {
  Rng rng(82);
  const auto traj = random_trajectory(rng, 10);

  SECTION("identical trajectories are all zero") {
    const TrajectoryError e = rpe(traj, traj);
    REQUIRE(e.rpe_translation.size() == 9);
    for (double v : e.rpe_translation) CHECK(v < 1e-12);
    for (double v : e.rpe_rotation) CHECK(v < 1e-9);
  }
  SECTION("a constant extra yaw per step shows up exactly") {
    std::vector<RigidTransform> gt, est;
    for (int k = 0; k < 8; ++k) {
      gt.emplace_back(Mat3::Identity(), Vec3(0.1 * k, 0, 0));
      est.emplace_back(EulerPose(0, 0, 0, 0, 0, deg_to_rad(1.0 * k)).rotation(), Vec3(0.1 * k, 0, 0));
    }
    const TrajectoryError e = rpe(est, gt);
    for (double v : e.rpe_rotation) CHECK(v == Catch::Approx(1.0).margin(1e-9));
    CHECK(e.rpe_rotation_median == Catch::Approx(1.0).margin(1e-9));
  }
  SECTION("matches the naive reference implementation") {
    const auto est = random_trajectory(rng, 10);
    std::vector<double> ref_t, ref_r;
    rpe_reference(est, traj, ref_t, ref_r);
    const TrajectoryError e = rpe(est, traj);
    REQUIRE(e.rpe_translation.size() == ref_t.size());
    for (std::size_t i = 0; i < ref_t.size(); ++i) {
      CHECK(e.rpe_translation[i] == Catch::Approx(ref_t[i]).margin(1e-10));
      CHECK(e.rpe_rotation[i] == Catch::Approx(ref_r[i]).margin(1e-10));
    }
  }
  SECTION("invariant to the global frame choice") {
    const auto est = random_trajectory(rng, 10);
    const RigidTransform g(EulerPose(0, 0, 0, 1.0, -0.5, 0.25).rotation(), Vec3(5, -2, 1));
    std::vector<RigidTransform> est_g = est, gt_g = traj;
    for (auto& t : est_g) t = g * t;
    for (auto& t : gt_g) t = g * t;
    const TrajectoryError a = rpe(est, traj);
    const TrajectoryError b = rpe(est_g, gt_g);
    for (std::size_t i = 0; i < a.rpe_translation.size(); ++i) {
      CHECK(a.rpe_translation[i] == Catch::Approx(b.rpe_translation[i]).margin(1e-10));
      CHECK(a.rpe_rotation[i] == Catch::Approx(b.rpe_rotation[i]).margin(1e-10));
    }
  }
}

TEST_CASE("hausdorff distance") {
  SECTION("identical clouds score zero") {
    PointCloud a;
    a.add(Vec3(0, 0, 0));
    a.add(Vec3(1, 1, 1));
    a.add(Vec3(0, 1, 0));
    CHECK(hausdorff(a, a) == 0.0);
  }
  SECTION("two singletons") {
    PointCloud a, b;
    a.add(Vec3(0, 0, 0));
    b.add(Vec3(0, 0, 2));
    CHECK(hausdorff(a, b) == 2.0);
  }
  SECTION("a 1 mm shift of a random cloud") {
    Rng rng(83);
    PointCloud a;
    for (int i = 0; i < 1000; ++i) {
      a.add(Vec3(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)));
    }
    PointCloud b = a;
    for (auto& p : b.points) p += Vec3(0.001, 0, 0);
    CHECK(hausdorff(a, b) == Catch::Approx(0.001).margin(1e-12));
  }
  SECTION("kd-tree path equals the brute-force oracle") {
    Rng rng(84);
    for (int trial = 0; trial < 10; ++trial) {
      PointCloud a, b;
      const int na = 30 + static_cast<int>(rng.next_u64() % 100);
      const int nb = 30 + static_cast<int>(rng.next_u64() % 100);
      for (int i = 0; i < na; ++i) a.add(Vec3(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)));
      for (int i = 0; i < nb; ++i) b.add(Vec3(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)));
      CHECK(hausdorff(a, b) == Catch::Approx(hausdorff_brute(a, b)).margin(1e-12));
      CHECK(hausdorff(a, b) == Catch::Approx(hausdorff(b, a)).margin(0.0));  // symmetry
    }
  }
  SECTION("triangle inequality on sampled triples") {
    Rng rng(85);
    for (int trial = 0; trial < 8; ++trial) {
      PointCloud a, b, c;
      for (int i = 0; i < 40; ++i) {
        a.add(Vec3(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)));
        b.add(Vec3(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)));
        c.add(Vec3(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)));
      }
      CHECK(hausdorff(a, c) <= hausdorff(a, b) + hausdorff(b, c) + 1e-12);
    }
  }
  SECTION("empty clouds are an error") {
    PointCloud a, empty;
    a.add(Vec3(0, 0, 0));
    CHECK_THROWS_AS(hausdorff(a, empty), std::invalid_argument);
  }
}

TEST_CASE("icp point to point") {
  Rng rng(86);
  PointCloud cloud;
  for (int i = 0; i < 800; ++i) {
    cloud.add(Vec3(rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5), rng.uniform(0.5, 1.5)));
  }

  SECTION("a cloud against itself is the identity") {
    const IcpResult res = icp_point_to_point(cloud, cloud, 10);
    CHECK(res.rms < 1e-12);
    CHECK(res.motion.to_vector().cwiseAbs().maxCoeff() < 1e-12);
  }
  SECTION("recovers a 5-degree rotation about z") {
    const EulerPose true_motion(0, 0, 0, 0, 0, deg_to_rad(5.0));
    const PointCloud target = cloud.transformed(RigidTransform::from_euler(true_motion));
    const IcpResult res = icp_point_to_point(cloud, target, 30);
    CHECK(std::abs(res.motion.gamma - true_motion.gamma) < 1e-6);
    CHECK(res.rms < 1e-9);
    for (std::size_t i = 1; i < res.per_iteration_rms.size(); ++i) {
      CHECK(res.per_iteration_rms[i] <= res.per_iteration_rms[i - 1] + 1e-15);
    }
  }
  SECTION("degenerate clouds are rejected") {
    PointCloud line;
    for (int i = 0; i < 10; ++i) line.add(Vec3(i * 0.1, 0, 0));
    CHECK_THROWS_AS(icp_point_to_point(line, line, 5), std::invalid_argument);
    PointCloud two;
    two.add(Vec3(0, 0, 0));
    two.add(Vec3(1, 0, 0));
    CHECK_THROWS_AS(icp_point_to_point(two, two, 5), std::invalid_argument);
  }
}

TEST_CASE("timing harness") {
  SECTION("a no-op measures near zero") {
    CHECK(timing_harness([] {}, 5) < 1e-3);
  }
  SECTION("a sleep stub lands within 10%") {
    const double d = timing_harness([] { std::this_thread::sleep_for(std::chrono::milliseconds(30)); }, 3);
    CHECK(d > 0.030 * 0.9);
    CHECK(d < 0.030 * 1.1 + 0.005);
  }
  SECTION("too few repetitions is an error") {
    CHECK_THROWS_AS(timing_harness([] {}, 2), std::invalid_argument);
  }
}
