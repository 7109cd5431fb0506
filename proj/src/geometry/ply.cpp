#include "aeos/geometry/ply.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>

#include "aeos/common/error.hpp"

namespace aeos {
namespace {

enum class Scalar { kI8, kU8, kI16, kU16, kI32, kU32, kF32, kF64 };

std::optional<Scalar> parse_scalar(const std::string& s) {
  static const std::map<std::string, Scalar> kTypes = {
      {"char", Scalar::kI8},   {"int8", Scalar::kI8},     {"uchar", Scalar::kU8},
      {"uint8", Scalar::kU8},  {"short", Scalar::kI16},   {"int16", Scalar::kI16},
      {"ushort", Scalar::kU16}, {"uint16", Scalar::kU16}, {"int", Scalar::kI32},
      {"int32", Scalar::kI32}, {"uint", Scalar::kU32},    {"uint32", Scalar::kU32},
      {"float", Scalar::kF32}, {"float32", Scalar::kF32}, {"double", Scalar::kF64},
      {"float64", Scalar::kF64}};
  const auto it = kTypes.find(s);
  if (it == kTypes.end()) return std::nullopt;
  return it->second;
}

std::size_t scalar_size(Scalar s) {
  switch (s) {
    case Scalar::kI8:
    case Scalar::kU8: return 1;
    case Scalar::kI16:
    case Scalar::kU16: return 2;
    case Scalar::kI32:
    case Scalar::kU32:
    case Scalar::kF32: return 4;
    case Scalar::kF64: return 8;
  }
  return 0;
}

template <typename T>
T read_le(const unsigned char* p) {
  T v;
  std::memcpy(&v, p, sizeof(T));
  return v;
}

double decode(Scalar s, const unsigned char* p) {
  switch (s) {
    case Scalar::kI8: return read_le<std::int8_t>(p);
    case Scalar::kU8: return read_le<std::uint8_t>(p);
    case Scalar::kI16: return read_le<std::int16_t>(p);
    case Scalar::kU16: return read_le<std::uint16_t>(p);
    case Scalar::kI32: return read_le<std::int32_t>(p);
    case Scalar::kU32: return read_le<std::uint32_t>(p);
    case Scalar::kF32: return read_le<float>(p);
    case Scalar::kF64: return read_le<double>(p);
  }
  return 0.0;
}

struct Property {
  std::string name;
  Scalar type = Scalar::kF32;
  bool is_list = false;
  Scalar count_type = Scalar::kU8;
};

struct Element {
  std::string name;
  std::size_t count = 0;
  std::vector<Property> properties;
};

}  // namespace

PlyPoints read_ply(const std::filesystem::path& path) {
  static_assert(std::endian::native == std::endian::little, "PLY reader assumes a little-endian host");
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open PLY file: " + path.string());

  std::string line;
  std::getline(in, line);
  if (line.rfind("ply", 0) != 0) throw IoError(path.string() + ": missing 'ply' magic");

  bool binary = false;
  std::vector<Element> elements;
  while (true) {
    if (!std::getline(in, line)) throw IoError(path.string() + ": truncated header");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream ls(line);
    std::string word;
    ls >> word;
    if (word == "end_header") break;
    if (word == "comment" || word == "obj_info" || word.empty()) continue;
    if (word == "format") {
      std::string fmt;
      ls >> fmt;
      if (fmt == "ascii") {
        binary = false;
      } else if (fmt == "binary_little_endian") {
        binary = true;
      } else {
        throw IoError(path.string() + ": unsupported PLY format '" + fmt + "'");
      }
    } else if (word == "element") {
      Element e;
      ls >> e.name >> e.count;
      elements.push_back(e);
    } else if (word == "property") {
      if (elements.empty()) throw IoError(path.string() + ": property before element");
      Property p;
      std::string type;
      ls >> type;
      if (type == "list") {
        std::string ct, it;
        ls >> ct >> it >> p.name;
        const auto c = parse_scalar(ct);
        const auto i = parse_scalar(it);
        if (!c || !i) throw IoError(path.string() + ": bad list property types");
        p.is_list = true;
        p.count_type = *c;
        p.type = *i;
      } else {
        const auto t = parse_scalar(type);
        if (!t) throw IoError(path.string() + ": unknown property type '" + type + "'");
        p.type = *t;
        ls >> p.name;
      }
      elements.back().properties.push_back(p);
    } else {
      throw IoError(path.string() + ": unexpected header line '" + line + "'");
    }
  }

  PlyPoints out;
  for (const Element& e : elements) {
    const bool is_vertex = e.name == "vertex";
    int ix = -1, iy = -1, iz = -1, inx = -1, iny = -1, inz = -1;
    for (int k = 0; k < static_cast<int>(e.properties.size()); ++k) {
      const std::string& n = e.properties[k].name;
      if (n == "x") ix = k;
      if (n == "y") iy = k;
      if (n == "z") iz = k;
      if (n == "nx") inx = k;
      if (n == "ny") iny = k;
      if (n == "nz") inz = k;
    }
    if (is_vertex) {
      if (ix < 0 || iy < 0 || iz < 0) throw IoError(path.string() + ": vertex lacks x/y/z");
      for (const auto& p : e.properties) {
        if (p.is_list) throw IoError(path.string() + ": list property in vertex element");
      }
    }
    const bool has_normals = is_vertex && inx >= 0 && iny >= 0 && inz >= 0;
    std::vector<double> values(e.properties.size());

    for (std::size_t r = 0; r < e.count; ++r) {
      if (binary) {
        for (std::size_t k = 0; k < e.properties.size(); ++k) {
          const Property& p = e.properties[k];
          if (p.is_list) {
            unsigned char buf[8];
            in.read(reinterpret_cast<char*>(buf), static_cast<std::streamsize>(scalar_size(p.count_type)));
            const auto n = static_cast<std::size_t>(decode(p.count_type, buf));
            in.seekg(static_cast<std::streamoff>(n * scalar_size(p.type)), std::ios::cur);
          } else {
            unsigned char buf[8];
            in.read(reinterpret_cast<char*>(buf), static_cast<std::streamsize>(scalar_size(p.type)));
            values[k] = decode(p.type, buf);
          }
        }
        if (!in) throw IoError(path.string() + ": truncated binary body");
      } else {
        if (!std::getline(in, line)) throw IoError(path.string() + ": truncated ASCII body");
        if (!is_vertex) continue;
        std::istringstream ls(line);
        for (std::size_t k = 0; k < e.properties.size(); ++k) {
          if (!(ls >> values[k])) throw IoError(path.string() + ": short vertex row");
        }
      }
      if (is_vertex) {
        out.points.emplace_back(values[ix], values[iy], values[iz]);
        if (has_normals) out.normals.emplace_back(values[inx], values[iny], values[inz]);
      }
    }
    if (is_vertex) break;
  }
  return out;
}

PointCloud load_ply(const std::filesystem::path& path) {
  return PointCloud(Frame::kWorld, read_ply(path).points);
}

void write_ply(const std::filesystem::path& path, const std::vector<Eigen::Vector3d>& points,
               const std::vector<Eigen::Vector3d>& normals, PlyFormat format) {
  const bool with_normals = !normals.empty();
  if (with_normals && normals.size() != points.size()) throw InputError("write_ply: normals size mismatch");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write PLY file: " + path.string());
  out << "ply\nformat " << (format == PlyFormat::kAscii ? "ascii" : "binary_little_endian")
      << " 1.0\nelement vertex " << points.size()
      << "\nproperty float x\nproperty float y\nproperty float z\n";
  if (with_normals) out << "property float nx\nproperty float ny\nproperty float nz\n";
  out << "end_header\n";
  for (std::size_t i = 0; i < points.size(); ++i) {
    float v[6];
    for (int k = 0; k < 3; ++k) v[k] = static_cast<float>(points[i][k]);
    if (with_normals) {
      for (int k = 0; k < 3; ++k) v[3 + k] = static_cast<float>(normals[i][k]);
    }
    const int n = with_normals ? 6 : 3;
    if (format == PlyFormat::kAscii) {
      for (int k = 0; k < n; ++k) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.9g", static_cast<double>(v[k]));
        out << buf << (k + 1 < n ? ' ' : '\n');
      }
    } else {
      out.write(reinterpret_cast<const char*>(v), static_cast<std::streamsize>(n * sizeof(float)));
    }
  }
}

}  // namespace aeos
