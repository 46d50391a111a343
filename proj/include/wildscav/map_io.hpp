#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "wildscav/world.hpp"

namespace wildscav {

inline constexpr std::uint16_t kMapFormatVersion = 1;

// Serializes a map in the WSCV binary format.
std::vector<std::uint8_t> encode_map(const WorldMap& map);

// Parses, builds the scene and validates. Throws FormatError on malformed
// input and ValidationError when an invariant does not hold.
WorldMap decode_map(std::span<const std::uint8_t> bytes);

void save_map(const WorldMap& map, const std::filesystem::path& path);
WorldMap load_map(const std::filesystem::path& path);

}  // namespace wildscav
