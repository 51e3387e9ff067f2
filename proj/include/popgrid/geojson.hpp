#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace popgrid {

using Ring = std::vector<std::pair<double, double>>;  // closed: first == last

// One county: a GeoJSON Polygon (outer ring plus optional holes) and its
// numeric properties (pop_t0 / pop_t1 when present).
struct CountyFeature {
    std::string id;
    std::vector<Ring> rings;
    std::map<std::string, double> properties;
};

std::vector<CountyFeature> read_counties_geojson(const std::filesystem::path& path);
void write_counties_geojson(const std::filesystem::path& path,
                            const std::vector<CountyFeature>& counties);

// Sidecar table: header "id,pop_t0,pop_t1".
void write_counties_csv(const std::filesystem::path& path,
                        const std::vector<CountyFeature>& counties);

// Generic estimate table: header "id,<column>"; returns id -> value.
std::map<std::string, double> read_county_csv(const std::filesystem::path& path,
                                              const std::string& column);
void write_county_csv(const std::filesystem::path& path, const std::string& column,
                      const std::vector<std::pair<std::string, double>>& rows);

}  // namespace popgrid
