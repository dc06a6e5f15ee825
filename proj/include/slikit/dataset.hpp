#pragma once

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>
#include <vector>

#include <json.hpp>

#include "slikit/cloud.hpp"
#include "slikit/image.hpp"
#include "slikit/io.hpp"
#include "slikit/rig.hpp"

namespace slikit {

struct Frame {
  PhaseImage phase;
  PointCloud cloud;
  std::optional<RigidTransform> gt_pose;
};

// On-disk layout:
//   calib.json
//   frames/NNNN.phase.pfm
//   frames/NNNN.cloud.ply
//   gt_trajectory.tum            (optional, one line per frame)
struct Dataset {
  SensorRig rig;
  std::vector<Frame> frames;

  bool has_ground_truth() const {
    for (const auto& f : frames) {
      if (!f.gt_pose) return false;
    }
    return !frames.empty();
  }

  std::vector<RigidTransform> ground_truth() const {
    std::vector<RigidTransform> out;
    out.reserve(frames.size());
    for (const auto& f : frames) out.push_back(*f.gt_pose);
    return out;
  }
};

namespace io {

inline nlohmann::json rig_to_json(const SensorRig& rig) {
  nlohmann::json j;
  j["cam_fx"] = rig.cam_fx;
  j["cam_fy"] = rig.cam_fy;
  j["cam_cx"] = rig.cam_cx;
  j["cam_cy"] = rig.cam_cy;
  j["cam_width"] = rig.cam_width;
  j["cam_height"] = rig.cam_height;
  j["proj_fy"] = rig.proj_fy;
  j["proj_cy"] = rig.proj_cy;
  j["proj_width"] = rig.proj_width;
  j["proj_height"] = rig.proj_height;
  std::vector<double> r(rig.extrinsic_rotation.data(),
                        rig.extrinsic_rotation.data() + 9);
  // Eigen stores column-major; emit row-major.
  j["extrinsic_rotation"] = std::vector<double>{
      rig.extrinsic_rotation(0, 0), rig.extrinsic_rotation(0, 1), rig.extrinsic_rotation(0, 2),
      rig.extrinsic_rotation(1, 0), rig.extrinsic_rotation(1, 1), rig.extrinsic_rotation(1, 2),
      rig.extrinsic_rotation(2, 0), rig.extrinsic_rotation(2, 1), rig.extrinsic_rotation(2, 2)};
  j["extrinsic_translation"] = std::vector<double>{
      rig.extrinsic_translation.x(), rig.extrinsic_translation.y(), rig.extrinsic_translation.z()};
  std::vector<double> m;
  for (int r_ = 0; r_ < 3; ++r_)
    for (int c = 0; c < 4; ++c) m.push_back(rig.m(r_, c));
  j["m"] = m;
  return j;
}

inline SensorRig rig_from_json(const nlohmann::json& j) {
  SensorRig rig;
  rig.cam_fx = j.at("cam_fx").get<double>();
  rig.cam_fy = j.at("cam_fy").get<double>();
  rig.cam_cx = j.at("cam_cx").get<double>();
  rig.cam_cy = j.at("cam_cy").get<double>();
  rig.cam_width = j.at("cam_width").get<int>();
  rig.cam_height = j.at("cam_height").get<int>();
  rig.proj_fy = j.at("proj_fy").get<double>();
  rig.proj_cy = j.at("proj_cy").get<double>();
  rig.proj_width = j.at("proj_width").get<int>();
  rig.proj_height = j.at("proj_height").get<int>();
  const auto r = j.at("extrinsic_rotation").get<std::vector<double>>();
  const auto t = j.at("extrinsic_translation").get<std::vector<double>>();
  if (r.size() != 9 || t.size() != 3) {
    throw IoError(IoError::Code::bad_format, "calibration: extrinsics have wrong shape");
  }
  for (int i = 0; i < 3; ++i)
    for (int c = 0; c < 3; ++c) rig.extrinsic_rotation(i, c) = r[3 * i + c];
  rig.extrinsic_translation = Vec3(t[0], t[1], t[2]);
  if (j.contains("m")) {
    const auto m = j.at("m").get<std::vector<double>>();
    if (m.size() != 12) throw IoError(IoError::Code::bad_format, "calibration: m must have 12 entries");
    for (int i = 0; i < 3; ++i)
      for (int c = 0; c < 4; ++c) rig.m(i, c) = m[4 * i + c];
  } else {
    rig.m = compose_projection(rig);
  }
  rig.validate();
  return rig;
}

inline std::string frame_stem(std::size_t index) {
  std::ostringstream ss;
  ss << std::setw(4) << std::setfill('0') << index;
  return ss.str();
}

inline void save_dataset(const Dataset& ds, const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir / "frames");
  {
    std::ofstream f(dir / "calib.json");
    f << rig_to_json(ds.rig).dump(2) << "\n";
  }
  for (std::size_t i = 0; i < ds.frames.size(); ++i) {
    const auto stem = frame_stem(i);
    write_pfm(dir / "frames" / (stem + ".phase.pfm"), ds.frames[i].phase);
    write_ply(dir / "frames" / (stem + ".cloud.ply"), ds.frames[i].cloud);
  }
  if (ds.has_ground_truth()) {
    write_tum(dir / "gt_trajectory.tum", ds.ground_truth());
  }
}

inline Dataset load_dataset(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  if (!fs::exists(dir / "calib.json")) {
    throw IoError(IoError::Code::calibration_missing,
                  "calibration missing: " + (dir / "calib.json").string());
  }
  Dataset ds;
  {
    std::ifstream f(dir / "calib.json");
    nlohmann::json j;
    try {
      f >> j;
    } catch (const nlohmann::json::exception& e) {
      throw IoError(IoError::Code::bad_format,
                    "calibration unreadable: " + std::string(e.what()));
    }
    ds.rig = rig_from_json(j);
  }
  for (std::size_t i = 0;; ++i) {
    const auto stem = frame_stem(i);
    const auto phase_path = dir / "frames" / (stem + ".phase.pfm");
    if (!fs::exists(phase_path)) break;
    Frame frame;
    frame.phase = read_pfm(phase_path);
    if (frame.phase.width != ds.rig.cam_width || frame.phase.height != ds.rig.cam_height) {
      throw IoError(IoError::Code::dimension_mismatch,
                    "frame " + stem + " does not match the calibrated image size");
    }
    frame.cloud = read_ply_cloud(dir / "frames" / (stem + ".cloud.ply"));
    ds.frames.push_back(std::move(frame));
  }
  const auto gt_path = dir / "gt_trajectory.tum";
  if (fs::exists(gt_path)) {
    const auto poses = read_tum(gt_path);
    if (poses.size() != ds.frames.size()) {
      throw IoError(IoError::Code::malformed_trajectory,
                    "gt_trajectory.tum has " + std::to_string(poses.size()) + " poses for " +
                        std::to_string(ds.frames.size()) + " frames");
    }
    for (std::size_t i = 0; i < poses.size(); ++i) ds.frames[i].gt_pose = poses[i];
  }
  return ds;
}

}  // namespace io
}  // namespace slikit
