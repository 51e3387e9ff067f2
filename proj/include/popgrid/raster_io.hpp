#pragma once

#include <filesystem>

#include "popgrid/grid.hpp"

namespace popgrid {

// ESRI ASCII grid (.asc). Header keys ncols, nrows, xllcorner, yllcorner,
// cellsize, NODATA_value in that order, then row-major values with the
// north row first. Reals are written with shortest round-trip precision,
// so read(write(g)) == g including the geotransform.
inline constexpr double kAscNoData = -9999.0;

void write_grid(const PopulationGrid& grid, const std::filesystem::path& path);
void write_grid(const ClassGrid& grid, const std::filesystem::path& path);
void write_grid(const Grid<std::int32_t>& grid, const std::filesystem::path& path);

// Raw reader: any finite values, mask from the header's NODATA sentinel.
Grid<double> read_raw_grid(const std::filesystem::path& path);

// Validating readers. Population: values >= 0. Class: integral values >= 0,
// k_max set to the largest class present.
PopulationGrid read_population_grid(const std::filesystem::path& path);
ClassGrid read_class_grid(const std::filesystem::path& path);

}  // namespace popgrid
