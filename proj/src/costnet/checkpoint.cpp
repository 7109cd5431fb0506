#include "aeos/costnet/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "aeos/common/error.hpp"

namespace aeos {

void round_to_f32(std::span<double> values) {
  for (double& v : values) v = static_cast<double>(static_cast<float>(v));
}

std::filesystem::path checkpoint_bin(const std::filesystem::path& stem) {
  auto p = stem;
  p += ".bin";
  return p;
}

std::filesystem::path checkpoint_json(const std::filesystem::path& stem) {
  auto p = stem;
  p += ".json";
  return p;
}

void save_checkpoint(const std::filesystem::path& stem, std::span<const double> values,
                     const nlohmann::json& metadata) {
  if (stem.has_parent_path()) std::filesystem::create_directories(stem.parent_path());
  std::ofstream bin(checkpoint_bin(stem), std::ios::binary);
  if (!bin) throw IoError("cannot write " + checkpoint_bin(stem).string());
  std::vector<unsigned char> buf(values.size() * 4);
  for (std::size_t i = 0; i < values.size(); ++i) {
    auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(values[i]));
    for (int b = 0; b < 4; ++b) buf[i * 4 + static_cast<std::size_t>(b)] = static_cast<unsigned char>(bits >> (8 * b));
  }
  bin.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (!bin) throw IoError("write failed: " + checkpoint_bin(stem).string());

  nlohmann::json meta = metadata;
  meta["count"] = values.size();
  meta["dtype"] = "float32-le";
  std::ofstream js(checkpoint_json(stem));
  if (!js) throw IoError("cannot write " + checkpoint_json(stem).string());
  js << meta.dump(2) << '\n';
}

Checkpoint load_checkpoint(const std::filesystem::path& stem) {
  std::ifstream js(checkpoint_json(stem));
  if (!js) throw IoError("cannot read " + checkpoint_json(stem).string());
  Checkpoint c;
  try {
    c.metadata = nlohmann::json::parse(js);
  } catch (const nlohmann::json::exception& e) {
    throw IoError("bad checkpoint sidecar: " + std::string(e.what()));
  }
  const auto count = c.metadata.value("count", std::size_t{0});
  std::ifstream bin(checkpoint_bin(stem), std::ios::binary);
  if (!bin) throw IoError("cannot read " + checkpoint_bin(stem).string());
  std::vector<unsigned char> buf(count * 4);
  bin.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (bin.gcount() != static_cast<std::streamsize>(buf.size()) || bin.peek() != EOF) {
    throw IoError("checkpoint size does not match its sidecar: " + checkpoint_bin(stem).string());
  }
  c.values.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::uint32_t bits = 0;
    for (int b = 0; b < 4; ++b) bits |= static_cast<std::uint32_t>(buf[i * 4 + static_cast<std::size_t>(b)]) << (8 * b);
    c.values[i] = static_cast<double>(std::bit_cast<float>(bits));
  }
  return c;
}

}  // namespace aeos
