#include <catch2/catch_amalgamated.hpp>
#include <fstream>

#include "test_fixtures.hpp"

using namespace slikit;

TEST_CASE("compose_projection basic forms") {
  SECTION("colocated frames give [K | 0]") {
    const SensorRig rig = make_rig(500, 500, 320, 240, 640, 480, 800, 240, 608, 480);
    CHECK((rig.m.leftCols<3>() - rig.camera_intrinsics()).cwiseAbs().maxCoeff() == 0.0);
    CHECK(rig.m.col(3).norm() == 0.0);
  }
  SECTION("principal point projection") {
    const SensorRig rig = make_rig(500, 500, 320, 240, 640, 480, 800, 240, 608, 480);
    const auto px = project_to_camera(Vec3(0, 0, 1), rig);
    REQUIRE(px.has_value());
    CHECK(px->x() == Catch::Approx(320.0).margin(1e-12));
    CHECK(px->y() == Catch::Approx(240.0).margin(1e-12));
  }
  SECTION("left block recovers K through the extrinsic rotation") {
    const SensorRig rig = fixtures::default_rig();
    const Mat3 k_back = rig.m.leftCols<3>() * rig.extrinsic_rotation.transpose();
    CHECK((k_back - rig.camera_intrinsics()).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("projection consistency: composed matrix equals the two-step path") {
  const SensorRig rig = fixtures::default_rig();
  Rng rng(21);
  for (int i = 0; i < 500; ++i) {
    const Vec3 p(rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5), rng.uniform(0.3, 2.0));
    const Vec3 cam = rig.extrinsic_rotation * p + rig.extrinsic_translation;
    if (cam.z() < 1e-3) continue;
    const Vec3 hom = rig.camera_intrinsics() * cam;
    const auto px = project_to_camera(p, rig);
    REQUIRE(px.has_value());
    CHECK(px->x() == Catch::Approx(hom.x() / hom.z()).margin(1e-12));
    CHECK(px->y() == Catch::Approx(hom.y() / hom.z()).margin(1e-12));
  }
}

TEST_CASE("non-orthonormal extrinsics are rejected") {
  Mat3 bad = Mat3::Identity();
  bad(0, 0) = 1.5;
  CHECK_THROWS_AS(make_rig(500, 500, 320, 240, 640, 480, 800, 240, 608, 480, bad),
                  std::invalid_argument);
}

TEST_CASE("bilinear sampling") {
  PhaseImage img(2, 2);
  img.set(0, 0, 0.0);
  img.set(0, 1, 1.0);
  img.set(1, 0, 2.0);
  img.set(1, 1, 3.0);

  SECTION("center of a 2x2 patch is the mean") {
    const auto s = sample_phase(img, 0.5, 0.5);
    REQUIRE(s.valid);
    CHECK(s.value == Catch::Approx(1.5));
  }
  SECTION("integer coordinates return the stored value") {
    const auto s = sample_phase(img, 0.0, 0.0);
    REQUIRE(s.valid);
    CHECK(s.value == 0.0);
  }
  SECTION("any invalid neighbor invalidates the sample") {
    img.set_invalid(1, 1);
    CHECK_FALSE(sample_phase(img, 0.5, 0.5).valid);
  }
  SECTION("out of bounds is an invalid marker, not a fault") {
    CHECK_FALSE(sample_phase(img, -0.5, 0.5).valid);
    CHECK_FALSE(sample_phase(img, 1.5, 0.5).valid);
  }
}

TEST_CASE("bilinear interpolation error shrinks quadratically") {
  const auto field = [](double x, double y) { return std::sin(1.3 * x) * std::cos(0.7 * y) + 2.0; };
  const auto max_err = [&](double scale) {
    const int n = 96;
    PhaseImage img(n, n);
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < n; ++c) img.set(r, c, field(c * scale, r * scale));
    double err = 0.0;
    Rng rng(22);
    for (int i = 0; i < 200; ++i) {
      const double x = rng.uniform(1.0 * scale, (n - 2) * scale);
      const double y = rng.uniform(1.0 * scale, (n - 2) * scale);
      const auto s = sample_phase(img, x / scale, y / scale);
      REQUIRE(s.valid);
      err = std::max(err, std::abs(s.value - field(x, y)));
    }
    return err;
  };
  const double coarse = max_err(0.04);
  const double fine = max_err(0.02);
  CHECK(fine < coarse / 3.0);
}

TEST_CASE("roi validation") {
  CHECK_NOTHROW(Roi(0, 20, 0, 20).validate(640, 480));
  CHECK_THROWS_AS(Roi(0, 5, 0, 5).validate(640, 480), std::invalid_argument);   // < 100 px
  CHECK_THROWS_AS(Roi(0, 700, 0, 20).validate(640, 480), std::invalid_argument);
  CHECK_THROWS_AS(Roi(20, 10, 0, 20).validate(640, 480), std::invalid_argument);
}

namespace {

Dataset tiny_dataset() {
  Dataset ds;
  ds.rig = make_rig(100, 100, 8, 6, 16, 12, 120, 6, 16, 12);
  Rng rng(23);
  for (int f = 0; f < 2; ++f) {
    Frame frame;
    frame.phase = PhaseImage(16, 12);
    for (int r = 0; r < 12; ++r) {
      for (int c = 0; c < 16; ++c) {
        if (r == 3 && c == 4) frame.phase.set_invalid(r, c);
        else frame.phase.set(r, c, rng.uniform(0.0, kTwoPi));
      }
    }
    frame.cloud.add(Vec3(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(0.5, 2)), 1, 2);
    frame.cloud.add(Vec3(0.25, -0.125, 1.0));
    frame.gt_pose = RigidTransform(EulerPose(0, 0, 0, 0.1 * f, 0.2 * f, -0.1 * f).rotation(),
                                   Vec3(0.1 * f, rng.uniform(-1, 1), 0.0));
    ds.frames.push_back(std::move(frame));
  }
  return ds;
}

}  // namespace

TEST_CASE("dataset save/load round trip") {
  const auto dir = fixtures::temp_dir("dataset_rt");
  const Dataset ds = tiny_dataset();
  io::save_dataset(ds, dir);
  const Dataset back = io::load_dataset(dir);
  REQUIRE(back.frames.size() == 2);

  // Phase survives at 32-bit float precision and is bitwise-stable from the
  // first reload onward.
  for (std::size_t f = 0; f < 2; ++f) {
    REQUIRE(back.frames[f].phase.valid == ds.frames[f].phase.valid);
    for (std::size_t i = 0; i < ds.frames[f].phase.phase.size(); ++i) {
      CHECK(static_cast<float>(ds.frames[f].phase.phase[i]) ==
            static_cast<float>(back.frames[f].phase.phase[i]));
    }
  }
  const auto dir2 = fixtures::temp_dir("dataset_rt2");
  io::save_dataset(back, dir2);
  const Dataset again = io::load_dataset(dir2);
  for (std::size_t f = 0; f < 2; ++f) {
    CHECK(again.frames[f].phase.phase == back.frames[f].phase.phase);
    CHECK(again.frames[f].phase.valid == back.frames[f].phase.valid);
  }

  // Poses at full precision.
  for (std::size_t f = 0; f < 2; ++f) {
    REQUIRE(back.frames[f].gt_pose.has_value());
    CHECK((back.frames[f].gt_pose->t - ds.frames[f].gt_pose->t).cwiseAbs().maxCoeff() == 0.0);
    CHECK((back.frames[f].gt_pose->r - ds.frames[f].gt_pose->r).cwiseAbs().maxCoeff() < 1e-15);
  }

  // Clouds at 32-bit float precision.
  for (std::size_t f = 0; f < 2; ++f) {
    REQUIRE(back.frames[f].cloud.size() == ds.frames[f].cloud.size());
    for (std::size_t i = 0; i < ds.frames[f].cloud.size(); ++i) {
      for (int a = 0; a < 3; ++a) {
        CHECK(static_cast<float>(ds.frames[f].cloud.points[i][a]) ==
              static_cast<float>(back.frames[f].cloud.points[i][a]));
      }
    }
  }
}

TEST_CASE("dataset error diagnostics are distinct") {
  SECTION("missing calibration") {
    const auto dir = fixtures::temp_dir("dataset_nocalib");
    try {
      io::load_dataset(dir);
      FAIL("expected an error");
    } catch (const IoError& e) {
      CHECK(e.code == IoError::Code::calibration_missing);
    }
  }
  SECTION("dimension mismatch") {
    const auto dir = fixtures::temp_dir("dataset_dims");
    Dataset ds = tiny_dataset();
    io::save_dataset(ds, dir);
    PhaseImage wrong(4, 4);
    for (int r = 0; r < 4; ++r)
      for (int c = 0; c < 4; ++c) wrong.set(r, c, 1.0);
    io::write_pfm(dir / "frames" / "0000.phase.pfm", wrong);
    try {
      io::load_dataset(dir);
      FAIL("expected an error");
    } catch (const IoError& e) {
      CHECK(e.code == IoError::Code::dimension_mismatch);
    }
  }
  SECTION("malformed trajectory line") {
    const auto dir = fixtures::temp_dir("dataset_badtum");
    Dataset ds = tiny_dataset();
    io::save_dataset(ds, dir);
    std::ofstream f(dir / "gt_trajectory.tum");
    f << "0 0 0 0 0 0 0 1\n1 0.1 bad line\n";
    f.close();
    try {
      io::load_dataset(dir);
      FAIL("expected an error");
    } catch (const IoError& e) {
      CHECK(e.code == IoError::Code::malformed_trajectory);
    }
  }
}

TEST_CASE("ply reader handles ascii meshes and fan triangulation") {
  const auto dir = fixtures::temp_dir("ply_ascii");
  {
    std::ofstream f(dir / "quad.ply");
    f << "ply\nformat ascii 1.0\nelement vertex 4\n"
         "property float x\nproperty float y\nproperty float z\n"
         "element face 1\nproperty list uchar int vertex_indices\nend_header\n"
         "0 0 0\n1 0 0\n1 1 0\n0 1 0\n4 0 1 2 3\n";
  }
  const auto data = io::read_ply(dir / "quad.ply");
  REQUIRE(data.vertices.size() == 4);
  REQUIRE(data.faces.size() == 2);  // quad fan-triangulated
  CHECK(data.faces[0] == Eigen::Vector3i(0, 1, 2));
  CHECK(data.faces[1] == Eigen::Vector3i(0, 2, 3));
}

TEST_CASE("tum trajectories round trip at full precision") {
  const auto dir = fixtures::temp_dir("tum_rt");
  std::vector<RigidTransform> poses;
  Rng rng(24);
  for (int i = 0; i < 5; ++i) {
    poses.push_back(RigidTransform(
        EulerPose(0, 0, 0, rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)).rotation(),
        Vec3(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1))));
  }
  io::write_tum(dir / "traj.tum", poses);
  const auto back = io::read_tum(dir / "traj.tum");
  REQUIRE(back.size() == poses.size());
  for (std::size_t i = 0; i < poses.size(); ++i) {
    CHECK((back[i].t - poses[i].t).cwiseAbs().maxCoeff() == 0.0);
    CHECK((back[i].r - poses[i].r).cwiseAbs().maxCoeff() < 1e-12);
  }
}
