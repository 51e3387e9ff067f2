#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace popgrid {

inline constexpr const char* kToolName = "popgrid";
inline constexpr const char* kToolVersion = "0.1.0";

// Reproducibility record written beside every command's outputs as
// manifest_<command>.json: the command, the effective config, content hashes
// of the inputs, the output paths, and the seed. Re-running a command whose
// manifest matches reproduces the outputs bit-exactly.
struct RunManifest {
    std::string command;
    std::uint64_t seed = 0;
    std::map<std::string, std::string> config;
    std::vector<std::string> inputs;   // paths, hashed on write
    std::vector<std::string> outputs;  // paths
};

std::filesystem::path write_manifest(const std::filesystem::path& out_dir,
                                     const RunManifest& manifest);

}  // namespace popgrid
