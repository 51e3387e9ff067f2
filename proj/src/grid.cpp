#include "popgrid/grid.hpp"

#include <cmath>
#include <string>

namespace popgrid {

int bin_population(double p) {
    if (!std::isfinite(p)) throw DataError("population value is not finite");
    if (p < 0.0) throw DataError("population value is negative: " + std::to_string(p));
    if (p < 1.0) return 0;
    // p = m * 2^e with m in [0.5, 1), so p in [2^(e-1), 2^e) and the class is e.
    // frexp avoids the rounding hazards of floor(log2(p)) near powers of two.
    int e = 0;
    std::frexp(p, &e);
    return e;
}

double unbin_midpoint(int c) {
    if (c < 0) throw DataError("class index is negative: " + std::to_string(c));
    if (c == 0) return 0.0;
    // (2^(c-1) + 2^c) / 2 == 3 * 2^(c-2)
    return std::ldexp(3.0, c - 2);
}

ClassGrid bin_grid(const PopulationGrid& pop) {
    ClassGrid out(pop.geo);
    out.nodata = pop.nodata;
    std::int32_t k_max = 0;
    for (std::size_t k = 0; k < pop.values.size(); ++k) {
        if (pop.nodata[k]) continue;
        std::int32_t c = bin_population(pop.values[k]);
        out.values[k] = c;
        if (c > k_max) k_max = c;
    }
    out.k_max = k_max;
    return out;
}

}  // namespace popgrid
