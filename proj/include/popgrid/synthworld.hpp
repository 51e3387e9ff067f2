#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "popgrid/geojson.hpp"
#include "popgrid/grid.hpp"
#include "popgrid/tiles.hpp"

namespace popgrid {

// Deterministic synthetic world: Gaussian population kernels rendered into
// textured image tiles, for two "census years" linked by per-city growth.
// Serves as the ground-truth oracle for the whole pipeline.
struct WorldSpec {
    std::uint64_t seed = 0;
    int rows = 100;
    int cols = 100;
    int tile_h = 18;
    int tile_w = 18;
    int bands = 3;
    int n_cities = 3;
    double city_peak_min = 400.0;
    double city_peak_max = 4000.0;
    double city_radius_min = 6.0;  // Gaussian sigma, in cells
    double city_radius_max = 14.0;
    int n_confusers = 0;
    double growth_min = 0.4;  // multiplicative per-city change, year0 -> year1
    double growth_max = 2.4;
    int county_rows = 5;  // rectangular county partition of the grid
    int county_cols = 5;
    double origin_lon = -124.849;  // NW corner, continental-US defaults
    double nw_lat = 49.3844;
    double cell_size = 0.01;

    GeoTransform geo() const;
};

struct WorldYear {
    PopulationGrid population;
    TileStack tiles;
};

struct World {
    WorldYear year0;
    WorldYear year1;
    std::vector<CountyFeature> counties;  // pop_t0 / pop_t1 in properties
    std::vector<std::pair<int, int>> confuser_cells;
};

// Pure function of the spec: two runs produce bit-identical worlds.
World generate_world(const WorldSpec& spec);

// One tile. confuser_class < 0 means an ordinary cell (texture follows
// bin_population(population)); otherwise structures are drawn for that class
// even though the population is zero.
std::vector<std::uint8_t> render_tile(double population, std::uint64_t cell_seed,
                                      const WorldSpec& spec, int confuser_class = -1);

// County rectangles with exact per-year population sums over member cells.
std::vector<CountyFeature> generate_counties(const WorldSpec& spec,
                                             const PopulationGrid& pop_t0,
                                             const PopulationGrid& pop_t1);

// Pixels in band 0 at or above the structure threshold; the texture
// statistic the confuser and monotonicity properties are stated against.
int structure_pixel_count(const std::uint8_t* tile, int tile_h, int tile_w, int bands);
inline constexpr int kStructureThreshold = 120;

}  // namespace popgrid
