#pragma once

#include <filesystem>
#include <vector>

#include "popgrid/estimator.hpp"
#include "popgrid/grid.hpp"

namespace popgrid {

// Signed class error, predicted - truth, so positive = over-prediction
// (red in the rendered map).
using ErrorGrid = Grid<std::int32_t>;

// Single-class probability raster in [0,1]; nodata propagated.
Grid<double> probability_map(const ProbGrid& probs, int cls);

struct TopTile {
    int i = 0;
    int j = 0;
    double confidence = 0;
};

struct TopKResult {
    std::vector<TopTile> tiles;  // confidence nonincreasing, ties by (i,j)
    bool short_of_k = false;     // fewer correct candidates than requested
};

// Candidates are cells where argmax == cls AND truth == cls ("correctly
// classified"); sorted by probability of cls descending.
TopKResult top_k_tiles(const ProbGrid& probs, const ClassGrid& truth, int cls, int k);

ErrorGrid error_map(const ClassGrid& truth, const ClassGrid& predicted);

// Connected same-sign regions (4-neighbor) of nonzero error, ranked by
// summed |error|; this is what surfaces confuser sites.
struct ErrorComponent {
    int size = 0;
    long long sum_abs = 0;
    int sign = 0;
    int min_i = 0, min_j = 0, max_i = 0, max_j = 0;
    int peak_i = 0, peak_j = 0;
    int peak_error = 0;
};

struct ErrorSummary {
    long long n_over = 0;
    long long n_under = 0;
    long long n_zero = 0;
    std::vector<ErrorComponent> components;  // top N by sum_abs
};

ErrorSummary summarize_errors(const ErrorGrid& errors, int top_n = 10);

// Plain (ASCII) PGM: values in [0,1] mapped to 0..255; nodata renders 0.
void write_pgm(const std::filesystem::path& path, const Grid<double>& grid);

// Plain PPM diverging render: positive errors fade white->red, negative
// white->blue; nodata renders black.
void write_ppm_diverging(const std::filesystem::path& path, const ErrorGrid& errors);

// One tile as grayscale PGM (band 0).
void write_tile_pgm(const std::filesystem::path& path, const std::uint8_t* tile,
                    int tile_h, int tile_w, int bands);

void write_topk_csv(const std::filesystem::path& path, const TopKResult& result);
void write_error_components_csv(const std::filesystem::path& path,
                                const ErrorSummary& summary);

}  // namespace popgrid
