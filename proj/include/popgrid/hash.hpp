#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>

namespace popgrid {

// FNV-1a, 64 bit. Used for manifest content hashes; stable and dependency-free.
std::uint64_t fnv1a64(const void* data, std::size_t len);
std::uint64_t fnv1a64_file(const std::filesystem::path& path);
std::string to_hex64(std::uint64_t v);

}  // namespace popgrid
