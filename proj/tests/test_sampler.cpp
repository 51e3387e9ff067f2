#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <set>

#include "popgrid/rng.hpp"
#include "popgrid/sampler.hpp"

using namespace popgrid;

namespace {

ClassGrid grid_with_counts(const std::vector<std::pair<int, long long>>& class_counts,
                           int cols = 50) {
    long long total = 0;
    for (const auto& [cls, count] : class_counts) total += count;
    int rows = static_cast<int>((total + cols - 1) / cols);
    ClassGrid g(GeoTransform::from_northwest(0, 0, 0.01, rows, cols));
    long long k = 0;
    std::int32_t k_max = 0;
    for (const auto& [cls, count] : class_counts) {
        for (long long c = 0; c < count; ++c, ++k)
            g.values[static_cast<std::size_t>(k)] = cls;
        k_max = std::max(k_max, cls);
    }
    for (; k < static_cast<long long>(g.values.size()); ++k)
        g.nodata[static_cast<std::size_t>(k)] = 1;
    g.k_max = k_max;
    return g;
}

}  // namespace

TEST_CASE("partition_chunks: continental grid tiles into 18 rectangles") {
    ClassGrid g(GeoTransform::continental_us());
    ChunkPartition part = partition_chunks(g, 1000);
    CHECK(part.chunks.size() == 18);  // ceil(2499/1000) * ceil(5796/1000)
    CHECK(part.skipped.empty());
    long long covered = 0;
    for (const auto& r : part.chunks) covered += r.cell_count();
    CHECK(covered == g.geo.cell_count());
}

TEST_CASE("partition_chunks: small grid is one chunk") {
    ClassGrid g(GeoTransform::from_northwest(0, 0, 0.01, 10, 10));
    ChunkPartition part = partition_chunks(g, 1000);
    CHECK(part.chunks.size() == 1);
    CHECK(part.chunks[0] == Rect{0, 10, 0, 10});
}

TEST_CASE("partition_chunks: all-nodata rectangles are skipped") {
    ClassGrid g(GeoTransform::from_northwest(0, 0, 0.01, 10, 30));
    for (int i = 0; i < 10; ++i)
        for (int j = 20; j < 30; ++j) g.set_nodata(i, j);
    ChunkPartition part = partition_chunks(g, 10);
    CHECK(part.chunks.size() == 2);
    REQUIRE(part.skipped.size() == 1);
    CHECK(part.skipped[0] == Rect{0, 10, 20, 30});
}

TEST_CASE("class_histogram counts exactly") {
    ClassGrid g = grid_with_counts({{0, 2}, {1, 1}, {3, 1}}, 2);
    Rect region{0, g.geo.rows, 0, g.geo.cols};
    ClassHistogram hist = class_histogram(g, region);
    CHECK(hist.total == 4);
    REQUIRE(hist.counts.size() >= 4);
    CHECK(hist.counts[0] == 2);
    CHECK(hist.counts[1] == 1);
    CHECK(hist.counts[2] == 0);
    CHECK(hist.counts[3] == 1);

    ClassGrid all_zero = grid_with_counts({{0, 40}});
    ClassHistogram hz = class_histogram(all_zero, Rect{0, all_zero.geo.rows, 0, 50});
    CHECK(hz.counts[0] == 40);
    CHECK(hz.total == 40);

    CHECK_THROWS_AS(class_histogram(g, Rect{0, g.geo.rows + 1, 0, 1}), DataError);
}

TEST_CASE("acceptance probabilities follow 1 - c/total") {
    ClassGrid g = grid_with_counts({{0, 90}, {1, 10}});
    ClassHistogram hist = class_histogram(g, Rect{0, g.geo.rows, 0, g.geo.cols});
    CHECK(acceptance_probability(hist, 0) == doctest::Approx(0.10));
    CHECK(acceptance_probability(hist, 1) == doctest::Approx(0.90));

    // single class present: clamped to the floor, sampling still terminates
    ClassGrid single = grid_with_counts({{2, 60}});
    ClassHistogram hs = class_histogram(single, Rect{0, single.geo.rows, 0, 50});
    CHECK(acceptance_probability(hs, 2) == kAcceptanceFloor);
    SampleSet s = draw_samples(single, Rect{0, single.geo.rows, 0, 50}, 0.1, 0.05, 5);
    CHECK(s.train.size() == 6);
    CHECK(s.validation.size() == 3);
}

TEST_CASE("draw_samples quotas, disjointness, determinism") {
    ClassGrid g = grid_with_counts({{0, 700}, {2, 200}, {5, 100}});
    Rect region{0, g.geo.rows, 0, g.geo.cols};

    SampleSet a = draw_samples(g, region, 0.1, 0.01, 99);
    CHECK(a.train.size() == 100);
    CHECK(a.validation.size() == 10);

    std::set<std::pair<int, int>> train_set(a.train.begin(), a.train.end());
    CHECK(train_set.size() == a.train.size());
    for (const auto& cell : a.validation) CHECK(train_set.count(cell) == 0);

    SampleSet b = draw_samples(g, region, 0.1, 0.01, 99);
    CHECK(a.train == b.train);
    CHECK(a.validation == b.validation);

    SampleSet c = draw_samples(g, region, 0.1, 0.01, 100);
    CHECK(a.train != c.train);
}

TEST_CASE("draw_samples error paths") {
    ClassGrid g = grid_with_counts({{0, 100}});
    Rect region{0, g.geo.rows, 0, g.geo.cols};
    CHECK_THROWS_AS(draw_samples(g, region, 0.0, 0.1, 1), DataError);
    CHECK_THROWS_AS(draw_samples(g, region, 0.9, 0.2, 1), DataError);

    ClassGrid masked = grid_with_counts({{0, 10}});
    for (auto& m : masked.nodata) m = 1;
    CHECK_THROWS_WITH_AS(
        draw_samples(masked, Rect{0, masked.geo.rows, 0, masked.geo.cols}, 0.1, 0.01, 1),
        doctest::Contains("no eligible cells"), DataError);
}

TEST_CASE("sampling flattens the class distribution") {
    // c_a > c_b: sampled ratio count_a/count_b stays below the raw ratio
    ClassGrid g = grid_with_counts({{0, 1600}, {1, 400}});
    Rect region{0, g.geo.rows, 0, g.geo.cols};
    double raw_ratio = 1600.0 / 400.0;
    double sampled_a = 0;
    double sampled_b = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        SampleSet s = draw_samples(g, region, 0.15, 0.01, seed);
        for (const auto& [i, j] : s.train) {
            if (g.at(i, j) == 0)
                sampled_a += 1;
            else
                sampled_b += 1;
        }
    }
    CHECK(sampled_b > 0);
    CHECK(sampled_a / sampled_b < raw_ratio);
}

TEST_CASE("empirical acceptance frequencies match the formula within 3 sigma") {
    ClassGrid g = grid_with_counts({{0, 600}, {1, 250}, {2, 100}, {3, 50}});
    ClassHistogram hist = class_histogram(g, Rect{0, g.geo.rows, 0, g.geo.cols});
    const int trials = 100000;
    SplitMix64 rng(4242);
    for (int cls = 0; cls <= 3; ++cls) {
        double w = acceptance_probability(hist, cls);
        long long accepted = 0;
        for (int t = 0; t < trials; ++t)
            if (rng.next_double() < w) ++accepted;
        double freq = static_cast<double>(accepted) / trials;
        double sigma = std::sqrt(w * (1.0 - w) / trials);
        CHECK(std::fabs(freq - w) <= 3.0 * sigma);
    }
}

TEST_CASE("samples CSV round-trips") {
    ClassGrid g = grid_with_counts({{0, 80}, {4, 20}});
    Rect region{0, g.geo.rows, 0, g.geo.cols};
    SampleSet s = draw_samples(g, region, 0.2, 0.05, 31);

    auto dir = std::filesystem::temp_directory_path() / "popgrid_test_sampler";
    std::filesystem::create_directories(dir);
    write_samples_csv(dir / "samples.csv", s, g);
    SampleSet back = read_samples_csv(dir / "samples.csv");
    CHECK(back.train == s.train);
    CHECK(back.validation == s.validation);
}
