#pragma once

#include <optional>
#include <utility>

namespace popgrid {

// Regular lon/lat lattice with square cells. Cell (0,0) sits at the
// northwest corner; rows grow southward, columns eastward. Cell (i,j)
// covers lon in [west + j*cell, west + (j+1)*cell) and lat in
// (north - (i+1)*cell, north - i*cell].
//
// The latitude anchor stored here is the south edge, because that is what
// the .asc interchange format carries (yllcorner); storing it directly
// makes file round-trips exact. The northwest corner is derived.
struct GeoTransform {
    double origin_lon = 0.0;  // west edge, degrees (negative = west)
    double south_lat = 0.0;   // south edge, degrees
    double cell_size = 1.0;   // degrees per cell
    int rows = 1;
    int cols = 1;

    static GeoTransform from_northwest(double lon, double nw_lat, double cell,
                                       int rows, int cols);

    // Continental-US lattice: NW corner (-124.849, 49.3844), 0.01 degree
    // cells, 2499 x 5796.
    static GeoTransform continental_us();

    double north_lat() const { return south_lat + rows * cell_size; }

    long long cell_count() const {
        return static_cast<long long>(rows) * static_cast<long long>(cols);
    }

    bool operator==(const GeoTransform&) const = default;
};

// Centroid of cell (i, j) in degrees. Throws DataError on out-of-bounds indices.
std::pair<double, double> cell_centroid(const GeoTransform& geo, int i, int j);

// Inverse of cell_centroid for any coordinate inside the grid footprint;
// nullopt when the coordinate falls outside (not an error).
std::optional<std::pair<int, int>> locate(const GeoTransform& geo, double lon,
                                          double lat);

}  // namespace popgrid
