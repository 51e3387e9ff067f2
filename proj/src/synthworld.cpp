#include "popgrid/synthworld.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <string>

#include "popgrid/rng.hpp"

namespace popgrid {

namespace {

struct City {
    double ci = 0;  // center, fractional cell coordinates
    double cj = 0;
    double peak = 0;
    double sigma = 1;
    double growth = 1;
};

// Seed-stream tags; one independent stream per concern.
constexpr std::uint64_t kCityStream = 1;
constexpr std::uint64_t kConfuserStream = 2;

std::vector<City> draw_cities(const WorldSpec& spec) {
    SplitMix64 rng(mix_seed(spec.seed, kCityStream));
    std::vector<City> cities(static_cast<std::size_t>(spec.n_cities));
    for (auto& c : cities) {
        c.ci = rng.next_uniform(0.0, spec.rows);
        c.cj = rng.next_uniform(0.0, spec.cols);
        c.peak = rng.next_uniform(spec.city_peak_min, spec.city_peak_max);
        c.sigma = rng.next_uniform(spec.city_radius_min, spec.city_radius_max);
        c.growth = rng.next_uniform(spec.growth_min, spec.growth_max);
    }
    return cities;
}

PopulationGrid population_field(const WorldSpec& spec, const std::vector<City>& cities,
                                bool year1) {
    PopulationGrid grid(spec.geo());
    const int rows = spec.rows;
    const int cols = spec.cols;
#pragma omp parallel for schedule(static)
    for (int i = 0; i < rows; ++i) {
        for (int j = 0; j < cols; ++j) {
            double sum = 0.0;
            for (const auto& c : cities) {
                double scale = year1 ? c.growth : 1.0;
                double di = i - c.ci;
                double dj = j - c.cj;
                double d2 = di * di + dj * dj;
                sum += scale * c.peak * std::exp(-d2 / (2.0 * c.sigma * c.sigma));
            }
            double v = std::floor(sum);
            grid.at(i, j) = v < 0.0 ? 0.0 : v;
        }
    }
    return grid;
}

void validate(const WorldSpec& spec) {
    if (spec.rows < 1 || spec.cols < 1) throw DataError("world must have rows, cols >= 1");
    if (spec.tile_h < 1 || spec.tile_w < 1 || spec.bands < 1)
        throw DataError("tile dims and bands must be >= 1");
    if (spec.n_cities < 0 || spec.n_confusers < 0)
        throw DataError("city and confuser counts must be >= 0");
    if (spec.city_peak_min > spec.city_peak_max ||
        spec.city_radius_min > spec.city_radius_max || spec.growth_min > spec.growth_max)
        throw DataError("world spec ranges must be ordered min <= max");
    if (spec.city_radius_min <= 0) throw DataError("city radius must be positive");
    if (spec.county_rows < 1 || spec.county_cols < 1 || spec.county_rows > spec.rows ||
        spec.county_cols > spec.cols)
        throw DataError("county partition does not tile the grid");
}

}  // namespace

GeoTransform WorldSpec::geo() const {
    return GeoTransform::from_northwest(origin_lon, nw_lat, cell_size, rows, cols);
}

std::vector<std::uint8_t> render_tile(double population, std::uint64_t cell_seed,
                                      const WorldSpec& spec, int confuser_class) {
    if (!(population >= 0.0)) throw DataError("tile population must be >= 0");
    const int th = spec.tile_h;
    const int tw = spec.tile_w;
    const int nb = spec.bands;
    std::vector<std::uint8_t> tile(static_cast<std::size_t>(th) * tw * nb);

    SplitMix64 rng(cell_seed);
    const int cls = confuser_class >= 0 ? confuser_class : bin_population(population);
    // Count noise is drawn before any rectangle so that two renders of the
    // same seed with different classes share a common structure prefix.
    const int count_noise = static_cast<int>(rng.next_below(3));

    std::vector<int> bg_off(static_cast<std::size_t>(nb));
    std::vector<int> st_off(static_cast<std::size_t>(nb));
    for (int b = 0; b < nb; ++b) bg_off[static_cast<std::size_t>(b)] = static_cast<int>(rng.next_int(-10, 10));
    for (int b = 0; b < nb; ++b) st_off[static_cast<std::size_t>(b)] = static_cast<int>(rng.next_int(-8, 8));

    auto clamp_u8 = [](int v) {
        return static_cast<std::uint8_t>(std::clamp(v, 0, 255));
    };

    // Bands share one spatial base field so they correlate without matching.
    for (int y = 0; y < th; ++y) {
        for (int x = 0; x < tw; ++x) {
            int base = 30 + static_cast<int>(rng.next_below(40));
            for (int b = 0; b < nb; ++b) {
                int jitter = static_cast<int>(rng.next_int(-5, 5));
                tile[(static_cast<std::size_t>(y) * tw + x) * nb + static_cast<std::size_t>(b)] =
                    clamp_u8(base + bg_off[static_cast<std::size_t>(b)] + jitter);
            }
        }
    }

    // Bright rectangular structures: the count grows with the class, and the
    // brightness does too (denser settlement reads brighter in composites),
    // so tiles stay separable after the pixel count saturates at high classes.
    const int n_structures = cls == 0 ? 0 : 2 * cls + count_noise;
    const int base_intensity = 150 + 7 * std::min(cls, 14);
    for (int s = 0; s < n_structures; ++s) {
        int y0 = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(std::max(1, th - 1))));
        int x0 = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(std::max(1, tw - 1))));
        int sh = 2 + static_cast<int>(rng.next_below(2));
        int sw = 2 + static_cast<int>(rng.next_below(2));
        int inten = base_intensity + static_cast<int>(rng.next_below(9));
        for (int y = y0; y < std::min(th, y0 + sh); ++y) {
            for (int x = x0; x < std::min(tw, x0 + sw); ++x) {
                for (int b = 0; b < nb; ++b) {
                    int jitter = static_cast<int>(rng.next_int(-5, 5));
                    tile[(static_cast<std::size_t>(y) * tw + x) * nb + static_cast<std::size_t>(b)] =
                        clamp_u8(inten + st_off[static_cast<std::size_t>(b)] + jitter);
                }
            }
        }
    }
    return tile;
}

int structure_pixel_count(const std::uint8_t* tile, int tile_h, int tile_w, int bands) {
    int count = 0;
    for (int y = 0; y < tile_h; ++y)
        for (int x = 0; x < tile_w; ++x)
            if (tile[(static_cast<std::size_t>(y) * tile_w + x) * bands] >= kStructureThreshold)
                ++count;
    return count;
}

std::vector<CountyFeature> generate_counties(const WorldSpec& spec,
                                             const PopulationGrid& pop_t0,
                                             const PopulationGrid& pop_t1) {
    validate(spec);
    GeoTransform geo = spec.geo();
    double north = geo.north_lat();
    std::vector<CountyFeature> out;
    int idx = 0;
    for (int cr = 0; cr < spec.county_rows; ++cr) {
        int r0 = static_cast<int>(static_cast<long long>(cr) * spec.rows / spec.county_rows);
        int r1 = static_cast<int>(static_cast<long long>(cr + 1) * spec.rows / spec.county_rows);
        for (int cc = 0; cc < spec.county_cols; ++cc) {
            int c0 = static_cast<int>(static_cast<long long>(cc) * spec.cols / spec.county_cols);
            int c1 = static_cast<int>(static_cast<long long>(cc + 1) * spec.cols / spec.county_cols);

            double t0 = 0.0;
            double t1 = 0.0;
            for (int i = r0; i < r1; ++i) {
                for (int j = c0; j < c1; ++j) {
                    if (!pop_t0.is_nodata(i, j)) t0 += pop_t0.at(i, j);
                    if (!pop_t1.is_nodata(i, j)) t1 += pop_t1.at(i, j);
                }
            }

            double lon0 = geo.origin_lon + c0 * geo.cell_size;
            double lon1 = geo.origin_lon + c1 * geo.cell_size;
            double lat_n = north - r0 * geo.cell_size;
            double lat_s = north - r1 * geo.cell_size;

            CountyFeature county;
            char buf[16];
            std::snprintf(buf, sizeof(buf), "c%03d", idx++);
            county.id = buf;
            county.rings.push_back(Ring{{lon0, lat_s}, {lon1, lat_s}, {lon1, lat_n},
                                        {lon0, lat_n}, {lon0, lat_s}});
            county.properties["pop_t0"] = t0;
            county.properties["pop_t1"] = t1;
            out.push_back(std::move(county));
        }
    }
    return out;
}

World generate_world(const WorldSpec& spec) {
    validate(spec);
    World world;

    auto cities = draw_cities(spec);
    world.year0.population = population_field(spec, cities, false);
    world.year1.population = population_field(spec, cities, true);

    // Confusers: zero-population cells rendered with high-class texture.
    struct Confuser {
        int i, j, cls;
    };
    std::vector<Confuser> confusers;
    {
        SplitMix64 rng(mix_seed(spec.seed, kConfuserStream));
        long long attempts = 0;
        const long long max_attempts =
            200LL * std::max(1, spec.n_confusers) + 4LL * spec.rows * spec.cols;
        while (static_cast<int>(confusers.size()) < spec.n_confusers) {
            if (++attempts > max_attempts) {
                throw DataError("could not place confusers on zero-population cells");
            }
            int i = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(spec.rows)));
            int j = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(spec.cols)));
            if (world.year0.population.at(i, j) >= 1.0 ||
                world.year1.population.at(i, j) >= 1.0)
                continue;
            bool taken = false;
            for (const auto& c : confusers) taken = taken || (c.i == i && c.j == j);
            if (taken) continue;
            int cls = 11 + static_cast<int>(rng.next_below(2));
            confusers.push_back({i, j, cls});
            world.confuser_cells.emplace_back(i, j);
        }
    }

    // Per-cell texture class map: -1 ordinary, else the confuser's class.
    std::vector<int> confuser_class(
        static_cast<std::size_t>(spec.rows) * static_cast<std::size_t>(spec.cols), -1);
    for (const auto& c : confusers)
        confuser_class[static_cast<std::size_t>(c.i) * spec.cols + c.j] = c.cls;

    for (int year = 0; year < 2; ++year) {
        WorldYear& wy = year == 0 ? world.year0 : world.year1;
        wy.tiles = TileStack(spec.rows, spec.cols, spec.tile_h, spec.tile_w, spec.bands);
        const PopulationGrid& pop = wy.population;
#pragma omp parallel for schedule(static)
        for (int i = 0; i < spec.rows; ++i) {
            for (int j = 0; j < spec.cols; ++j) {
                std::uint64_t cell_seed =
                    mix_seed(spec.seed, static_cast<std::uint64_t>(i),
                             static_cast<std::uint64_t>(j));
                auto tile = render_tile(pop.at(i, j), cell_seed, spec,
                                        confuser_class[static_cast<std::size_t>(i) * spec.cols + j]);
                std::memcpy(wy.tiles.tile(i, j), tile.data(), tile.size());
            }
        }
    }

    world.counties = generate_counties(spec, world.year0.population, world.year1.population);
    return world;
}

}  // namespace popgrid
