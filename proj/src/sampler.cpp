#include "popgrid/sampler.hpp"

#include <cmath>
#include <fstream>
#include <string>

#include "popgrid/rng.hpp"
#include "popgrid/textio.hpp"

namespace popgrid {

ChunkPartition partition_chunks(const ClassGrid& grid, int chunk_size) {
    if (chunk_size < 1) throw DataError("chunk_size must be >= 1");
    ChunkPartition part;
    part.chunk_size = chunk_size;
    for (int r0 = 0; r0 < grid.geo.rows; r0 += chunk_size) {
        int r1 = std::min(grid.geo.rows, r0 + chunk_size);
        for (int c0 = 0; c0 < grid.geo.cols; c0 += chunk_size) {
            int c1 = std::min(grid.geo.cols, c0 + chunk_size);
            Rect rect{r0, r1, c0, c1};
            bool any_data = false;
            for (int i = r0; i < r1 && !any_data; ++i)
                for (int j = c0; j < c1; ++j)
                    if (!grid.is_nodata(i, j)) {
                        any_data = true;
                        break;
                    }
            (any_data ? part.chunks : part.skipped).push_back(rect);
        }
    }
    return part;
}

ClassHistogram class_histogram(const ClassGrid& grid, const Rect& region) {
    if (region.row0 < 0 || region.col0 < 0 || region.row1 > grid.geo.rows ||
        region.col1 > grid.geo.cols || region.row0 > region.row1 ||
        region.col0 > region.col1) {
        throw DataError("histogram region exceeds the grid");
    }
    ClassHistogram hist;
    hist.counts.assign(static_cast<std::size_t>(grid.k_max) + 1, 0);
    for (int i = region.row0; i < region.row1; ++i) {
        for (int j = region.col0; j < region.col1; ++j) {
            if (grid.is_nodata(i, j)) continue;
            std::int32_t c = grid.at(i, j);
            if (c >= static_cast<std::int32_t>(hist.counts.size()))
                hist.counts.resize(static_cast<std::size_t>(c) + 1, 0);
            ++hist.counts[static_cast<std::size_t>(c)];
            ++hist.total;
        }
    }
    return hist;
}

double acceptance_probability(const ClassHistogram& hist, int cls) {
    if (hist.total <= 0) throw DataError("empty histogram");
    long long c = 0;
    if (cls >= 0 && cls < static_cast<int>(hist.counts.size()))
        c = hist.counts[static_cast<std::size_t>(cls)];
    double w = 1.0 - static_cast<double>(c) / static_cast<double>(hist.total);
    return w < kAcceptanceFloor ? kAcceptanceFloor : w;
}

SampleSet draw_samples(const ClassGrid& grid, const Rect& region, double train_frac,
                       double val_frac, std::uint64_t seed) {
    if (!(train_frac > 0.0) || !(val_frac > 0.0) || train_frac + val_frac > 1.0) {
        throw DataError("require 0 < train_frac, 0 < val_frac, train_frac + val_frac <= 1");
    }

    std::vector<std::pair<int, int>> eligible;
    for (int i = region.row0; i < region.row1; ++i)
        for (int j = region.col0; j < region.col1; ++j)
            if (!grid.is_nodata(i, j)) eligible.emplace_back(i, j);

    if (eligible.empty()) throw DataError("sampling region has no eligible cells");
    const auto n = static_cast<long long>(eligible.size());
    const auto need_train = static_cast<long long>(
        std::ceil(train_frac * static_cast<double>(n)));
    const auto need_val = static_cast<long long>(
        std::ceil(val_frac * static_cast<double>(n)));
    if (need_train + need_val > n) {
        throw DataError("requested " + std::to_string(need_train + need_val) +
                        " samples but only " + std::to_string(n) +
                        " eligible cells (shortfall " +
                        std::to_string(need_train + need_val - n) + ")");
    }

    ClassHistogram hist = class_histogram(grid, region);
    SplitMix64 rng(seed);

    auto draw = [&](std::vector<std::pair<int, int>>& pool, long long quota) {
        std::vector<std::pair<int, int>> accepted;
        accepted.reserve(static_cast<std::size_t>(quota));
        while (static_cast<long long>(accepted.size()) < quota) {
            deterministic_shuffle(pool, rng);
            std::vector<std::pair<int, int>> rejected;
            rejected.reserve(pool.size());
            for (const auto& cell : pool) {
                if (static_cast<long long>(accepted.size()) >= quota) {
                    rejected.push_back(cell);
                    continue;
                }
                double w = acceptance_probability(hist, grid.at(cell.first, cell.second));
                if (rng.next_double() < w) {
                    accepted.push_back(cell);
                } else {
                    rejected.push_back(cell);
                }
            }
            pool.swap(rejected);
        }
        return accepted;
    };

    SampleSet out;
    out.seed = seed;
    out.train = draw(eligible, need_train);
    out.validation = draw(eligible, need_val);
    return out;
}

void write_samples_csv(const std::filesystem::path& path, const SampleSet& samples,
                       const ClassGrid& grid) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open for writing: " + path.string());
    out << "split,i,j,class\n";
    for (const auto& [i, j] : samples.train)
        out << "train," << i << ',' << j << ',' << grid.at(i, j) << "\n";
    for (const auto& [i, j] : samples.validation)
        out << "validation," << i << ',' << j << ',' << grid.at(i, j) << "\n";
}

SampleSet read_samples_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open samples CSV: " + path.string());
    std::string line;
    if (!std::getline(in, line) || trim(line) != "split,i,j,class") {
        throw ParseError(ParseError::Kind::MalformedHeader, 1,
                         "expected header 'split,i,j,class'");
    }
    SampleSet out;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        auto fields = split_csv(line);
        if (fields.size() != 4) {
            throw ParseError(ParseError::Kind::DimensionMismatch, line_no,
                             "expected 4 CSV fields");
        }
        auto i = parse_int(fields[1]);
        auto j = parse_int(fields[2]);
        if (!i || !j) {
            throw ParseError(ParseError::Kind::BadToken, line_no, "unparsable index");
        }
        if (fields[0] == "train") {
            out.train.emplace_back(static_cast<int>(*i), static_cast<int>(*j));
        } else if (fields[0] == "validation") {
            out.validation.emplace_back(static_cast<int>(*i), static_cast<int>(*j));
        } else {
            throw ParseError(ParseError::Kind::BadToken, line_no,
                             "unknown split '" + std::string(fields[0]) + "'");
        }
    }
    return out;
}

}  // namespace popgrid
