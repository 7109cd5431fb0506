#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

namespace aeos {

/// Rounds every value to the nearest float, so a later save/load round trip
/// is exact.
void round_to_f32(std::span<double> values);

/// Writes `<stem>.bin` (little-endian float32 vector) and `<stem>.json`
/// (metadata plus the value count).
void save_checkpoint(const std::filesystem::path& stem, std::span<const double> values,
                     const nlohmann::json& metadata);

struct Checkpoint {
  std::vector<double> values;
  nlohmann::json metadata;
};

/// Throws IoError on missing files or a count mismatch with the sidecar.
Checkpoint load_checkpoint(const std::filesystem::path& stem);

std::filesystem::path checkpoint_bin(const std::filesystem::path& stem);
std::filesystem::path checkpoint_json(const std::filesystem::path& stem);

}  // namespace aeos
