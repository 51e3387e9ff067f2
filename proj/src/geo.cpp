#include "popgrid/geo.hpp"

#include <cmath>
#include <string>

#include "popgrid/errors.hpp"

namespace popgrid {

GeoTransform GeoTransform::from_northwest(double lon, double nw_lat, double cell,
                                          int rows, int cols) {
    if (!(cell > 0.0)) throw DataError("cell_size must be positive");
    if (rows < 1 || cols < 1) throw DataError("grid must have at least one row and column");
    GeoTransform g;
    g.origin_lon = lon;
    g.south_lat = nw_lat - rows * cell;
    g.cell_size = cell;
    g.rows = rows;
    g.cols = cols;
    return g;
}

GeoTransform GeoTransform::continental_us() {
    return from_northwest(-124.849, 49.3844, 0.01, 2499, 5796);
}

std::pair<double, double> cell_centroid(const GeoTransform& geo, int i, int j) {
    if (i < 0 || i >= geo.rows || j < 0 || j >= geo.cols) {
        throw DataError("cell index (" + std::to_string(i) + ", " + std::to_string(j) +
                        ") out of bounds for " + std::to_string(geo.rows) + "x" +
                        std::to_string(geo.cols) + " grid");
    }
    double lon = geo.origin_lon + (j + 0.5) * geo.cell_size;
    double lat = geo.north_lat() - (i + 0.5) * geo.cell_size;
    return {lon, lat};
}

std::optional<std::pair<int, int>> locate(const GeoTransform& geo, double lon,
                                          double lat) {
    double fj = std::floor((lon - geo.origin_lon) / geo.cell_size);
    double fi = std::floor((geo.north_lat() - lat) / geo.cell_size);
    if (!(fi >= 0.0) || !(fj >= 0.0) || fi >= geo.rows || fj >= geo.cols) {
        return std::nullopt;
    }
    return std::make_pair(static_cast<int>(fi), static_cast<int>(fj));
}

}  // namespace popgrid
