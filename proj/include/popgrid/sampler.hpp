#pragma once

#include <cstdint>
#include <filesystem>
#include <utility>
#include <vector>

#include "popgrid/grid.hpp"

namespace popgrid {

// Half-open index rectangle [row0, row1) x [col0, col1).
struct Rect {
    int row0 = 0;
    int row1 = 0;
    int col0 = 0;
    int col1 = 0;

    bool contains(int i, int j) const {
        return i >= row0 && i < row1 && j >= col0 && j < col1;
    }
    long long cell_count() const {
        return static_cast<long long>(row1 - row0) * (col1 - col0);
    }
    bool operator==(const Rect&) const = default;
};

// Row-major tiling into chunk_size x chunk_size rectangles; edge chunks may
// be smaller. Rectangles whose cells are all nodata land in `skipped`.
struct ChunkPartition {
    int chunk_size = 0;
    std::vector<Rect> chunks;
    std::vector<Rect> skipped;
};

ChunkPartition partition_chunks(const ClassGrid& grid, int chunk_size);

struct ClassHistogram {
    std::vector<long long> counts;
    long long total = 0;
};

ClassHistogram class_histogram(const ClassGrid& grid, const Rect& region);

// Acceptance probability for a candidate of class `cls`: 1 - c/total,
// clamped below by epsilon so single-class regions stay sampleable.
inline constexpr double kAcceptanceFloor = 1e-6;
double acceptance_probability(const ClassHistogram& hist, int cls);

struct SampleSet {
    std::vector<std::pair<int, int>> train;
    std::vector<std::pair<int, int>> validation;
    std::uint64_t seed = 0;
};

// Class-balanced rejection sampling: shuffle the eligible cells, accept each
// candidate with acceptance_probability of its class, repeat passes over the
// remainder until ceil(frac * N) cells are accepted. Validation draws from
// the cells left over after the training draw, so the two splits are
// disjoint by construction. Deterministic in the seed.
SampleSet draw_samples(const ClassGrid& grid, const Rect& region, double train_frac,
                       double val_frac, std::uint64_t seed);

// Audit format: header "split,i,j,class".
void write_samples_csv(const std::filesystem::path& path, const SampleSet& samples,
                       const ClassGrid& grid);
SampleSet read_samples_csv(const std::filesystem::path& path);

}  // namespace popgrid
