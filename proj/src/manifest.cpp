#include "popgrid/manifest.hpp"

#include <fstream>

#include <json.hpp>

#include "popgrid/errors.hpp"
#include "popgrid/hash.hpp"

namespace popgrid {

using nlohmann::json;

std::filesystem::path write_manifest(const std::filesystem::path& out_dir,
                                     const RunManifest& manifest) {
    json inputs = json::array();
    for (const auto& path : manifest.inputs) {
        inputs.push_back({{"path", path}, {"fnv1a64", to_hex64(fnv1a64_file(path))}});
    }
    json doc{{"tool", kToolName},
             {"version", kToolVersion},
             {"command", manifest.command},
             {"seed", manifest.seed},
             {"config", manifest.config},
             {"inputs", std::move(inputs)},
             {"outputs", manifest.outputs}};
    std::filesystem::create_directories(out_dir);
    auto path = out_dir / ("manifest_" + manifest.command + ".json");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open for writing: " + path.string());
    out << doc.dump(2) << "\n";
    return path;
}

}  // namespace popgrid
