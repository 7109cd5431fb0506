#pragma once

#include <Eigen/Core>
#include <filesystem>
#include <vector>

#include "aeos/geometry/point_cloud.hpp"

namespace aeos {

struct PlyPoints {
  std::vector<Eigen::Vector3d> points;
  std::vector<Eigen::Vector3d> normals;  // empty unless nx/ny/nz are present
};

enum class PlyFormat { kAscii, kBinaryLittleEndian };

/// Reads the vertex element (x/y/z, optional nx/ny/nz) of an ASCII or
/// binary little-endian PLY file. Throws IoError on malformed input.
PlyPoints read_ply(const std::filesystem::path& path);

/// World-frame cloud from a PLY map.
PointCloud load_ply(const std::filesystem::path& path);

void write_ply(const std::filesystem::path& path, const std::vector<Eigen::Vector3d>& points,
               const std::vector<Eigen::Vector3d>& normals, PlyFormat format);

}  // namespace aeos
