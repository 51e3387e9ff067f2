#pragma once

#include <cstdint>
#include <vector>

#include "popgrid/errors.hpp"
#include "popgrid/geo.hpp"

namespace popgrid {

// Row-major georeferenced raster, north row first. nodata[k] == 1 marks a
// missing cell (ocean / unobserved); such cells are excluded from sampling,
// training, inference and aggregation. Immutable by convention once built.
template <typename T>
struct Grid {
    GeoTransform geo;
    std::vector<T> values;
    std::vector<std::uint8_t> nodata;

    Grid() = default;

    explicit Grid(const GeoTransform& g, T fill = T{})
        : geo(g),
          values(static_cast<std::size_t>(g.cell_count()), fill),
          nodata(static_cast<std::size_t>(g.cell_count()), 0) {}

    std::size_t index(int i, int j) const {
        return static_cast<std::size_t>(i) * static_cast<std::size_t>(geo.cols) +
               static_cast<std::size_t>(j);
    }

    T& at(int i, int j) { return values[index(i, j)]; }
    const T& at(int i, int j) const { return values[index(i, j)]; }

    bool is_nodata(int i, int j) const { return nodata[index(i, j)] != 0; }
    void set_nodata(int i, int j) { nodata[index(i, j)] = 1; }

    bool operator==(const Grid&) const = default;
};

using PopulationGrid = Grid<double>;

// Population classes (log2 bins). k_max tracks the largest class present.
struct ClassGrid : Grid<std::int32_t> {
    std::int32_t k_max = 0;

    ClassGrid() = default;
    explicit ClassGrid(const GeoTransform& g, std::int32_t fill = 0)
        : Grid<std::int32_t>(g, fill) {}
};

// Log2-width class binning. Class 0 covers [0,1); class k >= 1 covers
// [2^(k-1), 2^k), the unique indexing for which class 17 is [65536, 131072).
int bin_population(double p);

// Inverse of the binning under the bin-midpoint rule: 0 for class 0,
// (2^(c-1) + 2^c)/2 otherwise.
double unbin_midpoint(int c);

// Bin a whole raster; nodata propagates, k_max is the largest class produced.
ClassGrid bin_grid(const PopulationGrid& pop);

}  // namespace popgrid
