#pragma once

#include <Eigen/Geometry>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "slikit/cloud.hpp"
#include "slikit/geometry.hpp"
#include "slikit/image.hpp"

namespace slikit {

struct IoError : std::runtime_error {
  enum class Code {
    file_missing,
    calibration_missing,
    dimension_mismatch,
    malformed_trajectory,
    bad_format,
  };
  Code code;
  IoError(Code c, const std::string& msg) : std::runtime_error(msg), code(c) {}
};

namespace io {

// --- PFM (grayscale, 32-bit little-endian float) ---------------------------
// Rows are stored bottom-to-top per the PFM convention; invalid pixels are
// written as NaN and recovered into the validity mask on load.

inline void write_pfm(const std::filesystem::path& path, const PhaseImage& img) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError(IoError::Code::file_missing, "cannot open for write: " + path.string());
  f << "Pf\n" << img.width << " " << img.height << "\n-1.0\n";
  std::vector<float> row(img.width);
  for (int r = img.height - 1; r >= 0; --r) {
    for (int c = 0; c < img.width; ++c) {
      row[c] = img.is_valid(r, c) ? static_cast<float>(img.at(r, c))
                                  : std::numeric_limits<float>::quiet_NaN();
    }
    f.write(reinterpret_cast<const char*>(row.data()),
            static_cast<std::streamsize>(row.size() * sizeof(float)));
  }
  if (!f) throw IoError(IoError::Code::bad_format, "short write: " + path.string());
}

inline PhaseImage read_pfm(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError(IoError::Code::file_missing, "missing phase image: " + path.string());
  std::string magic;
  int w = 0, h = 0;
  double scale = 0.0;
  f >> magic >> w >> h >> scale;
  if (magic != "Pf" || w <= 0 || h <= 0 || scale >= 0.0) {
    throw IoError(IoError::Code::bad_format, "not a little-endian grayscale PFM: " + path.string());
  }
  f.get();  // single whitespace after the scale
  PhaseImage img(w, h);
  std::vector<float> row(w);
  for (int r = h - 1; r >= 0; --r) {
    f.read(reinterpret_cast<char*>(row.data()),
           static_cast<std::streamsize>(row.size() * sizeof(float)));
    if (!f) throw IoError(IoError::Code::bad_format, "truncated PFM: " + path.string());
    for (int c = 0; c < w; ++c) {
      if (std::isfinite(row[c])) {
        img.set(r, c, static_cast<double>(row[c]));
      } else {
        img.set_invalid(r, c);
      }
    }
  }
  return img;
}

// --- PLY --------------------------------------------------------------------

inline void write_ply(const std::filesystem::path& path, const PointCloud& cloud) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError(IoError::Code::file_missing, "cannot open for write: " + path.string());
  f << "ply\nformat binary_little_endian 1.0\n"
    << "element vertex " << cloud.size() << "\n"
    << "property float x\nproperty float y\nproperty float z\nend_header\n";
  for (const auto& p : cloud.points) {
    const float xyz[3] = {static_cast<float>(p.x()), static_cast<float>(p.y()),
                          static_cast<float>(p.z())};
    f.write(reinterpret_cast<const char*>(xyz), sizeof(xyz));
  }
  if (!f) throw IoError(IoError::Code::bad_format, "short write: " + path.string());
}

struct PlyData {
  std::vector<Vec3> vertices;
  std::vector<Eigen::Vector3i> faces;  // empty for plain clouds
};

namespace detail {

inline std::size_t ply_scalar_size(const std::string& type) {
  if (type == "char" || type == "uchar" || type == "int8" || type == "uint8") return 1;
  if (type == "short" || type == "ushort" || type == "int16" || type == "uint16") return 2;
  if (type == "int" || type == "uint" || type == "int32" || type == "uint32" || type == "float" ||
      type == "float32") {
    return 4;
  }
  if (type == "double" || type == "float64" || type == "int64" || type == "uint64") return 8;
  throw IoError(IoError::Code::bad_format, "unknown PLY scalar type: " + type);
}

inline double ply_read_scalar(std::ifstream& f, const std::string& type) {
  char buf[8];
  const std::size_t n = ply_scalar_size(type);
  f.read(buf, static_cast<std::streamsize>(n));
  if (type == "float" || type == "float32") {
    float v;
    std::memcpy(&v, buf, 4);
    return v;
  }
  if (type == "double" || type == "float64") {
    double v;
    std::memcpy(&v, buf, 8);
    return v;
  }
  std::int64_t v = 0;
  std::memcpy(&v, buf, n);  // little-endian host assumed
  if (type == "char" || type == "int8") return static_cast<std::int8_t>(v);
  if (type == "short" || type == "int16") return static_cast<std::int16_t>(v);
  if (type == "int" || type == "int32") return static_cast<std::int32_t>(v);
  return static_cast<double>(static_cast<std::uint64_t>(v) & ((n == 8) ? ~0ull : ((1ull << (8 * n)) - 1)));
}

}  // namespace detail

// Reads ascii or binary_little_endian PLY with vertex x/y/z (extra vertex
// properties are skipped) and optional triangular faces.
inline PlyData read_ply(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError(IoError::Code::file_missing, "missing PLY: " + path.string());
  std::string line;
  std::getline(f, line);
  if (line.rfind("ply", 0) != 0) throw IoError(IoError::Code::bad_format, "not a PLY file: " + path.string());

  bool binary = false;
  struct Element {
    std::string name;
    std::size_t count = 0;
    std::vector<std::pair<std::string, std::string>> props;  // (type, name); list types "list:<count>:<item>"
  };
  std::vector<Element> elements;
  while (std::getline(f, line)) {
    std::istringstream ss(line);
    std::string tok;
    ss >> tok;
    if (tok == "comment") continue;
    if (tok == "format") {
      std::string fmt;
      ss >> fmt;
      if (fmt == "binary_little_endian") binary = true;
      else if (fmt == "ascii") binary = false;
      else throw IoError(IoError::Code::bad_format, "unsupported PLY format: " + fmt);
    } else if (tok == "element") {
      Element e;
      ss >> e.name >> e.count;
      elements.push_back(e);
    } else if (tok == "property") {
      std::string type;
      ss >> type;
      if (type == "list") {
        std::string ct, it, name;
        ss >> ct >> it >> name;
        elements.back().props.emplace_back("list:" + ct + ":" + it, name);
      } else {
        std::string name;
        ss >> name;
        elements.back().props.emplace_back(type, name);
      }
    } else if (tok == "end_header") {
      break;
    }
  }

  PlyData out;
  for (const auto& e : elements) {
    for (std::size_t i = 0; i < e.count; ++i) {
      double x = 0, y = 0, z = 0;
      std::vector<long> list_values;
      std::istringstream ascii_line;
      if (!binary) {
        std::getline(f, line);
        ascii_line.str(line);
      }
      for (const auto& [type, name] : e.props) {
        if (type.rfind("list:", 0) == 0) {
          const auto second = type.find(':', 5);
          const std::string count_type = type.substr(5, second - 5);
          const std::string item_type = type.substr(second + 1);
          long count = 0;
          if (binary) count = static_cast<long>(detail::ply_read_scalar(f, count_type));
          else ascii_line >> count;
          list_values.clear();
          for (long k = 0; k < count; ++k) {
            long v = 0;
            if (binary) v = static_cast<long>(detail::ply_read_scalar(f, item_type));
            else ascii_line >> v;
            list_values.push_back(v);
          }
        } else {
          double v = 0;
          if (binary) v = detail::ply_read_scalar(f, type);
          else ascii_line >> v;
          if (name == "x") x = v;
          else if (name == "y") y = v;
          else if (name == "z") z = v;
        }
      }
      if (e.name == "vertex") {
        out.vertices.emplace_back(x, y, z);
      } else if (e.name == "face" && !list_values.empty()) {
        // fan-triangulate polygons
        for (std::size_t k = 2; k < list_values.size(); ++k) {
          out.faces.emplace_back(static_cast<int>(list_values[0]),
                                 static_cast<int>(list_values[k - 1]),
                                 static_cast<int>(list_values[k]));
        }
      }
    }
    if (!f) throw IoError(IoError::Code::bad_format, "truncated PLY: " + path.string());
  }
  return out;
}

inline PointCloud read_ply_cloud(const std::filesystem::path& path) {
  PointCloud cloud;
  cloud.points = read_ply(path).vertices;
  return cloud;
}

// --- OBJ (vertices + triangular faces) --------------------------------------

inline PlyData read_obj(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw IoError(IoError::Code::file_missing, "missing OBJ: " + path.string());
  PlyData out;
  std::string line;
  while (std::getline(f, line)) {
    std::istringstream ss(line);
    std::string tok;
    ss >> tok;
    if (tok == "v") {
      double x, y, z;
      ss >> x >> y >> z;
      out.vertices.emplace_back(x, y, z);
    } else if (tok == "f") {
      std::vector<int> idx;
      std::string v;
      while (ss >> v) {
        idx.push_back(std::stoi(v.substr(0, v.find('/'))) - 1);
      }
      for (std::size_t k = 2; k < idx.size(); ++k) {
        out.faces.emplace_back(idx[0], idx[k - 1], idx[k]);
      }
    }
  }
  return out;
}

// --- TUM trajectories --------------------------------------------------------
// One line per pose: "timestamp tx ty tz qx qy qz qw".

inline void write_tum(const std::filesystem::path& path,
                      const std::vector<RigidTransform>& poses) {
  std::ofstream f(path);
  if (!f) throw IoError(IoError::Code::file_missing, "cannot open for write: " + path.string());
  f.precision(17);
  for (std::size_t i = 0; i < poses.size(); ++i) {
    const Eigen::Quaterniond q(poses[i].r);
    f << i << " " << poses[i].t.x() << " " << poses[i].t.y() << " " << poses[i].t.z() << " "
      << q.x() << " " << q.y() << " " << q.z() << " " << q.w() << "\n";
  }
}

inline std::vector<RigidTransform> read_tum(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw IoError(IoError::Code::file_missing, "missing trajectory: " + path.string());
  std::vector<RigidTransform> poses;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    double ts, tx, ty, tz, qx, qy, qz, qw;
    if (!(ss >> ts >> tx >> ty >> tz >> qx >> qy >> qz >> qw)) {
      throw IoError(IoError::Code::malformed_trajectory,
                    "malformed trajectory line " + std::to_string(lineno) + " in " + path.string());
    }
    Eigen::Quaterniond q(qw, qx, qy, qz);
    if (std::abs(q.norm() - 1.0) > 1e-6) q.normalize();
    poses.emplace_back(q.toRotationMatrix(), Vec3(tx, ty, tz));
  }
  return poses;
}

}  // namespace io
}  // namespace slikit
