#include "popgrid/geojson.hpp"

#include <fstream>

#include <json.hpp>

#include "popgrid/errors.hpp"
#include "popgrid/textio.hpp"

namespace popgrid {

using nlohmann::json;

std::vector<CountyFeature> read_counties_geojson(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open counties file: " + path.string());
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw DataError("invalid GeoJSON in " + path.string() + ": " + e.what());
    }
    if (doc.value("type", "") != "FeatureCollection" || !doc.contains("features")) {
        throw DataError("expected a GeoJSON FeatureCollection in " + path.string());
    }

    std::vector<CountyFeature> out;
    for (const auto& feat : doc["features"]) {
        CountyFeature county;
        const auto& props = feat.value("properties", json::object());
        if (props.contains("id")) {
            const auto& idv = props["id"];
            county.id = idv.is_string() ? idv.get<std::string>() : idv.dump();
        } else if (feat.contains("id")) {
            const auto& idv = feat["id"];
            county.id = idv.is_string() ? idv.get<std::string>() : idv.dump();
        } else {
            throw DataError("county feature without an id in " + path.string());
        }
        for (auto it = props.begin(); it != props.end(); ++it) {
            if (it.value().is_number()) county.properties[it.key()] = it.value().get<double>();
        }

        const auto& geom = feat.value("geometry", json::object());
        if (geom.value("type", "") != "Polygon") {
            throw DataError("county '" + county.id + "' has unsupported geometry type '" +
                            geom.value("type", "") + "' (only Polygon is supported)");
        }
        for (const auto& ring_json : geom.value("coordinates", json::array())) {
            Ring ring;
            for (const auto& pt : ring_json) {
                if (!pt.is_array() || pt.size() < 2) {
                    throw DataError("county '" + county.id + "' has a malformed coordinate");
                }
                ring.emplace_back(pt[0].get<double>(), pt[1].get<double>());
            }
            if (ring.size() < 4 || ring.front() != ring.back()) {
                throw DataError("county '" + county.id + "' has an unclosed ring");
            }
            county.rings.push_back(std::move(ring));
        }
        if (county.rings.empty()) {
            throw DataError("county '" + county.id + "' has no rings");
        }
        out.push_back(std::move(county));
    }
    return out;
}

void write_counties_geojson(const std::filesystem::path& path,
                            const std::vector<CountyFeature>& counties) {
    json features = json::array();
    for (const auto& county : counties) {
        json props;
        props["id"] = county.id;
        for (const auto& [k, v] : county.properties) props[k] = v;
        json coords = json::array();
        for (const auto& ring : county.rings) {
            json jring = json::array();
            for (const auto& [lon, lat] : ring) jring.push_back({lon, lat});
            coords.push_back(std::move(jring));
        }
        features.push_back({{"type", "Feature"},
                            {"properties", std::move(props)},
                            {"geometry", {{"type", "Polygon"}, {"coordinates", std::move(coords)}}}});
    }
    json doc = {{"type", "FeatureCollection"}, {"features", std::move(features)}};
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open for writing: " + path.string());
    out << doc.dump(2) << "\n";
}

void write_counties_csv(const std::filesystem::path& path,
                        const std::vector<CountyFeature>& counties) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open for writing: " + path.string());
    out << "id,pop_t0,pop_t1\n";
    for (const auto& county : counties) {
        double t0 = county.properties.count("pop_t0") ? county.properties.at("pop_t0") : 0.0;
        double t1 = county.properties.count("pop_t1") ? county.properties.at("pop_t1") : 0.0;
        out << county.id << ',' << format_double(t0) << ',' << format_double(t1) << "\n";
    }
}

std::map<std::string, double> read_county_csv(const std::filesystem::path& path,
                                              const std::string& column) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open CSV: " + path.string());
    std::string line;
    if (!std::getline(in, line)) {
        throw ParseError(ParseError::Kind::MalformedHeader, 1, "empty CSV " + path.string());
    }
    auto header = split_csv(line);
    int id_col = -1;
    int val_col = -1;
    for (std::size_t k = 0; k < header.size(); ++k) {
        if (header[k] == "id") id_col = static_cast<int>(k);
        if (!column.empty() && header[k] == column) val_col = static_cast<int>(k);
    }
    // An empty column name selects the second column, whatever its header.
    if (column.empty() && header.size() >= 2) val_col = 1;
    if (id_col < 0 || val_col < 0) {
        throw ParseError(ParseError::Kind::MalformedHeader, 1,
                         "CSV " + path.string() + " lacks columns 'id' and '" + column + "'");
    }
    std::map<std::string, double> out;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        auto fields = split_csv(line);
        if (fields.size() <= static_cast<std::size_t>(std::max(id_col, val_col))) {
            throw ParseError(ParseError::Kind::DimensionMismatch, line_no,
                             "too few CSV fields");
        }
        auto v = parse_double(fields[static_cast<std::size_t>(val_col)]);
        if (!v) {
            throw ParseError(ParseError::Kind::BadToken, line_no,
                             "unparsable value '" +
                                 std::string(fields[static_cast<std::size_t>(val_col)]) + "'");
        }
        out[std::string(fields[static_cast<std::size_t>(id_col)])] = *v;
    }
    return out;
}

void write_county_csv(const std::filesystem::path& path, const std::string& column,
                      const std::vector<std::pair<std::string, double>>& rows) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open for writing: " + path.string());
    out << "id," << column << "\n";
    for (const auto& [id, v] : rows) out << id << ',' << format_double(v) << "\n";
}

}  // namespace popgrid
