#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "popgrid/estimator.hpp"
#include "popgrid/nn/train.hpp"
#include "popgrid/rng.hpp"

using namespace popgrid;

namespace {

CountyFeature square_county(const std::string& id, double lon0, double lat0, double lon1,
                            double lat1) {
    CountyFeature county;
    county.id = id;
    county.rings.push_back(
        Ring{{lon0, lat0}, {lon1, lat0}, {lon1, lat1}, {lon0, lat1}, {lon0, lat0}});
    return county;
}

ProbGrid uniform_probs(const GeoTransform& geo, int k) {
    ProbGrid grid(geo, k);
    for (int i = 0; i < geo.rows; ++i)
        for (int j = 0; j < geo.cols; ++j)
            for (int c = 0; c < k; ++c) grid.cell(i, j)[c] = 1.0 / k;
    return grid;
}

}  // namespace

TEST_CASE("point_in_polygon basics") {
    std::vector<Ring> unit = {{{0, 0}, {1, 0}, {1, 1}, {0, 1}, {0, 0}}};
    CHECK(point_in_polygon(0.5, 0.5, unit));
    CHECK_FALSE(point_in_polygon(1.5, 0.5, unit));
    CHECK(point_in_polygon(1.0, 0.5, unit));  // boundary counts as inside
    CHECK(point_in_polygon(0.0, 0.0, unit));  // vertex
}

TEST_CASE("assign_counties: tie on a shared edge goes to the first county") {
    // two unit squares sharing the edge lon = 1; centroids at lon 0.5, 1.5
    // with cell size 1 never sit on it, so probe a half-cell grid instead
    GeoTransform geo = GeoTransform::from_northwest(0.5, 1.0, 1.0, 1, 1);
    // centroid = (1.0, 0.5), exactly on the shared edge
    auto a = square_county("A", 0, 0, 1, 1);
    auto b = square_county("B", 1, 0, 2, 1);
    CountyAssignment ab = assign_counties(geo, {a, b});
    CHECK(ab.cell_county[0] == 0);
    CountyAssignment ba = assign_counties(geo, {b, a});
    CHECK(ba.cell_county[0] == 0);  // still the first in input order

    // outside all polygons -> none
    GeoTransform far_geo = GeoTransform::from_northwest(10, 10, 1.0, 1, 1);
    CountyAssignment none = assign_counties(far_geo, {a, b});
    CHECK(none.cell_county[0] == -1);

    // unclosed ring is rejected with the feature id
    CountyFeature bad = a;
    bad.id = "broken";
    bad.rings[0].pop_back();
    CHECK_THROWS_WITH_AS(assign_counties(geo, {bad}), doctest::Contains("broken"),
                         DataError);
}

TEST_CASE("assignment is invariant under ring rotation") {
    GeoTransform geo = GeoTransform::from_northwest(0, 2.0, 0.25, 8, 8);
    auto county = square_county("c", 0.3, 0.2, 1.7, 1.6);
    CountyAssignment base = assign_counties(geo, {county});

    Ring& ring = county.rings[0];
    ring.pop_back();  // open
    std::rotate(ring.begin(), ring.begin() + 2, ring.end());
    ring.push_back(ring.front());  // close again
    CountyAssignment rotated = assign_counties(geo, {county});
    CHECK(base.cell_county == rotated.cell_county);
}

TEST_CASE("aggregate_convraw sums bin midpoints") {
    GeoTransform geo = GeoTransform::from_northwest(0, 3.0, 1.0, 1, 3);
    ClassGrid classes(geo);
    classes.at(0, 0) = 0;
    classes.at(0, 1) = 1;
    classes.at(0, 2) = 17;
    classes.k_max = 17;

    auto county = square_county("all", 0, 2, 3, 3);
    CountyAssignment assignment = assign_counties(geo, {county});
    REQUIRE(assignment.cells[0].size() == 3);
    auto estimates = aggregate_convraw(classes, assignment);
    CHECK(estimates[0] == 98305.5);  // 0 + 1.5 + 98304

    // partition identity: total over counties equals total over cells
    auto left = square_county("L", 0, 2, 1.5, 3);
    auto right = square_county("R", 1.5, 2, 3, 3);
    CountyAssignment split = assign_counties(geo, {left, right});
    auto split_est = aggregate_convraw(classes, split);
    CHECK(split_est[0] + split_est[1] == 98305.5);
}

TEST_CASE("county_features sums probability vectors") {
    GeoTransform geo = GeoTransform::from_northwest(0, 2.0, 1.0, 2, 2);
    ProbGrid probs = uniform_probs(geo, 5);
    auto county = square_county("c", 0, 0, 2, 2);
    CountyAssignment assignment = assign_counties(geo, {county});
    REQUIRE(assignment.cells[0].size() == 4);

    CountyFeatureVectors f = county_features(probs, assignment);
    CHECK(f.n_classes == 5);
    for (int k = 0; k < 5; ++k)
        CHECK(f.features[static_cast<std::size_t>(k)] == doctest::Approx(4.0 / 5));
    CHECK(f.cell_counts[0] == 4.0);

    // conservation: sum of a county's feature entries equals its cell count
    double sum = 0;
    for (int k = 0; k < 5; ++k) sum += f.features[static_cast<std::size_t>(k)];
    CHECK(sum == doctest::Approx(4.0).epsilon(1e-9));

    // empty county -> zero vector
    auto outside = square_county("empty", 50, 50, 51, 51);
    CountyAssignment with_empty = assign_counties(geo, {county, outside});
    CountyFeatureVectors f2 = county_features(probs, with_empty);
    for (int k = 0; k < 5; ++k)
        CHECK(f2.features[static_cast<std::size_t>(5 + k)] == 0.0);
}

TEST_CASE("features CSV round-trips") {
    CountyFeatureVectors f;
    f.ids = {"a", "b"};
    f.n_classes = 3;
    f.features = {0.25, 0.5, 0.25, 1.0, 2.0, 3.5};
    f.cell_counts = {1, 7};
    auto dir = std::filesystem::temp_directory_path() / "popgrid_test_est";
    std::filesystem::create_directories(dir);
    write_features_csv(dir / "f.csv", f);
    CountyFeatureVectors back = read_features_csv(dir / "f.csv");
    CHECK(back.ids == f.ids);
    CHECK(back.n_classes == f.n_classes);
    CHECK(back.features == f.features);
    CHECK(back.cell_counts == f.cell_counts);
}

TEST_CASE("convaug: zero rounds gives the training mean; ids must match") {
    CountyFeatureVectors train;
    train.ids = {"a", "b", "c"};
    train.n_classes = 2;
    train.features = {1, 0, 0, 1, 0.5, 0.5};
    train.cell_counts = {1, 1, 1};
    std::map<std::string, double> truths = {{"a", 10}, {"b", 20}, {"c", 30}};

    GBRTConfig cfg;
    cfg.n_rounds = 0;
    ConvAugResult res = convaug(train, truths, train, cfg);
    for (double e : res.estimates) CHECK(e == doctest::Approx(20.0));

    std::map<std::string, double> missing = {{"a", 10}, {"b", 20}};
    CHECK_THROWS_AS(convaug(train, missing, train, cfg), DataError);

    std::map<std::string, double> renamed = {{"a", 10}, {"b", 20}, {"zz", 30}};
    CHECK_THROWS_WITH_AS(convaug(train, renamed, train, cfg), doctest::Contains("'c'"),
                         DataError);
}

TEST_CASE("convaug learns a linear feature-truth map on its training year") {
    SplitMix64 rng(404);
    CountyFeatureVectors train;
    train.n_classes = 2;
    const int n = 40;
    std::map<std::string, double> truths;
    double var_acc = 0;
    std::vector<double> ys;
    for (int c = 0; c < n; ++c) {
        std::string id = "c" + std::to_string(c);
        train.ids.push_back(id);
        double f0 = rng.next_uniform(0, 50);
        double f1 = rng.next_uniform(0, 10);
        train.features.push_back(f0);
        train.features.push_back(f1);
        train.cell_counts.push_back(10);
        double y = 100.0 * f0 + 5.0 * f1;
        truths[id] = y;
        ys.push_back(y);
    }
    double mean = 0;
    for (double y : ys) mean += y;
    mean /= n;
    for (double y : ys) var_acc += (y - mean) * (y - mean);
    double variance = var_acc / n;

    GBRTConfig cfg;  // default 100 rounds
    ConvAugResult res = convaug(train, truths, train, cfg);
    double mse = 0;
    for (int c = 0; c < n; ++c) {
        double e = res.estimates[static_cast<std::size_t>(c)] - ys[static_cast<std::size_t>(c)];
        mse += e * e;
    }
    mse /= n;
    CHECK(mse < 0.01 * variance);
}

TEST_CASE("metrics: hand-computed cases") {
    // estimates == truths
    MetricsResult perfect = compute_metrics({1, 2, 3}, {1, 2, 3});
    CHECK(perfect.mean_ae == 0.0);
    CHECK(perfect.median_ae == 0.0);
    REQUIRE(perfect.r2.has_value());
    CHECK(*perfect.r2 == 1.0);
    REQUIRE(perfect.mape.has_value());
    CHECK(*perfect.mape == 0.0);

    // single county 10% off
    MetricsResult ten = compute_metrics({110}, {100});
    CHECK(ten.mean_ae == 10.0);
    REQUIRE(ten.mape.has_value());
    CHECK(*ten.mape == doctest::Approx(10.0));

    // truths [1,2,3], estimates [2,2,2]: |e| = {1,0,1}
    MetricsResult hand = compute_metrics({2, 2, 2}, {1, 2, 3});
    CHECK(hand.mean_ae == doctest::Approx(2.0 / 3.0));
    CHECK(hand.median_ae == 1.0);
    REQUIRE(hand.r2.has_value());
    CHECK(*hand.r2 == doctest::Approx(0.0));

    // mean prediction scores r^2 = 0 by construction
    MetricsResult mean_pred = compute_metrics({2, 2, 2, 2}, {1, 2, 3, 2});
    REQUIRE(mean_pred.r2.has_value());
    CHECK(*mean_pred.r2 == doctest::Approx(0.0));

    // all-equal truths: r^2 undefined
    MetricsResult flat = compute_metrics({1, 2}, {5, 5});
    CHECK_FALSE(flat.r2.has_value());

    // zero-truth rows are excluded from MAPE and counted
    MetricsResult with_zero = compute_metrics({10, 5}, {0, 4});
    CHECK(with_zero.mape_excluded == 1);
    REQUIRE(with_zero.mape.has_value());
    CHECK(*with_zero.mape == doctest::Approx(25.0));

    CHECK_THROWS_AS(compute_metrics({}, {}), DataError);
    CHECK_THROWS_AS(compute_metrics({1}, {1, 2}), DataError);
}

TEST_CASE("metrics: absolute errors are translation-equivariant") {
    SplitMix64 rng(66);
    std::vector<double> est(20);
    std::vector<double> tru(20);
    for (std::size_t k = 0; k < est.size(); ++k) {
        tru[k] = rng.next_uniform(1, 100);
        est[k] = tru[k] + rng.next_uniform(-5, 5);
    }
    MetricsResult base = compute_metrics(est, tru);
    std::vector<double> est_shift = est;
    std::vector<double> tru_shift = tru;
    for (std::size_t k = 0; k < est.size(); ++k) {
        est_shift[k] += 1000.0;
        tru_shift[k] += 1000.0;
    }
    MetricsResult shifted = compute_metrics(est_shift, tru_shift);
    CHECK(shifted.mean_ae == doctest::Approx(base.mean_ae).epsilon(1e-9));
    CHECK(shifted.median_ae == doctest::Approx(base.median_ae).epsilon(1e-9));
}

TEST_CASE("baseline_uniform spreads county truth evenly and conserves it") {
    GeoTransform geo = GeoTransform::from_northwest(0, 2.0, 1.0, 2, 2);
    auto county = square_county("c", 0, 0, 2, 2);
    CountyAssignment assignment = assign_counties(geo, {county});
    UniformBaseline baseline = baseline_uniform({100.0}, assignment, geo);
    double total = 0;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
            CHECK(baseline.surface.at(i, j) == 25.0);
            total += baseline.surface.at(i, j);
        }
    CHECK(total == 100.0);
    CHECK(baseline.undistributable.empty());

    // a county with no cells is reported
    auto outside = square_county("far", 50, 50, 51, 51);
    CountyAssignment with_far = assign_counties(geo, {county, outside});
    UniformBaseline b2 = baseline_uniform({100.0, 7.0}, with_far, geo);
    REQUIRE(b2.undistributable.size() == 1);
    CHECK(b2.undistributable[0] == "far");
}

TEST_CASE("prior classifier: probabilities are the class frequencies") {
    ClassHistogram hist;
    hist.counts = {60, 30, 10};
    hist.total = 100;
    auto prior = prior_probabilities(hist);
    CHECK(prior[0] == doctest::Approx(0.6));
    CHECK(prior[1] == doctest::Approx(0.3));
    CHECK(prior[2] == doctest::Approx(0.1));

    // its top-1 accuracy equals the frequency of the modal class
    std::vector<int> labels = {0, 0, 0, 1, 1, 2, 0, 1, 0, 0};
    int modal = 0;
    long long hits = 0;
    for (int l : labels)
        if (l == modal) ++hits;
    double acc = static_cast<double>(hits) / static_cast<double>(labels.size());
    long long hits_via_topk = 0;
    for (int l : labels)
        if (nn::topk_hit(prior.data(), 3, l, 1)) ++hits_via_topk;
    CHECK(static_cast<double>(hits_via_topk) / labels.size() == doctest::Approx(acc));
}

TEST_CASE("predict_grid: zero-weight checkpoint gives class 0 everywhere, nodata kept") {
    GeoTransform geo = GeoTransform::from_northwest(0, 1.0, 0.01, 4, 5);
    TileStack tiles(4, 5, 18, 18, 3);
    for (std::size_t k = 0; k < tiles.pixels.size(); ++k)
        tiles.pixels[k] = static_cast<std::uint8_t>(k % 251);

    nn::Checkpoint ckpt;
    ckpt.spec = nn::build_preset("tiny", 3, 6);
    nn::Network net(ckpt.spec);  // zero weights -> uniform probabilities
    ckpt.params = net.params();
    ckpt.bn_state = net.bn_state();
    ckpt.band_min = {0, 0, 0};
    ckpt.band_max = {255, 255, 255};

    std::vector<std::uint8_t> mask(static_cast<std::size_t>(geo.cell_count()), 0);
    mask[3] = 1;  // cell (0,3)
    PredictOutput out = predict_grid(ckpt, tiles, geo, mask);
    CHECK(out.classes.at(0, 0) == 0);  // uniform probs, tie toward class 0
    CHECK(out.classes.at(3, 4) == 0);
    CHECK(out.classes.is_nodata(0, 3));
    CHECK(out.probs.is_nodata(0, 3));
    for (int c = 0; c < 6; ++c)
        CHECK(out.probs.cell(1, 1)[c] == doctest::Approx(1.0 / 6).epsilon(1e-12));
}

TEST_CASE("prob grid save/load round-trips") {
    GeoTransform geo = GeoTransform::from_northwest(0, 1.0, 0.1, 3, 3);
    ProbGrid grid(geo, 4);
    grid.nodata[4] = 1;  // masked cells carry no probabilities
    SplitMix64 rng(31415);
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            if (grid.is_nodata(i, j)) continue;
            double sum = 0;
            double* cell = grid.cell(i, j);
            for (int c = 0; c < 4; ++c) {
                cell[c] = rng.next_double() + 1e-3;
                sum += cell[c];
            }
            for (int c = 0; c < 4; ++c) cell[c] /= sum;
        }
    }

    auto dir = std::filesystem::temp_directory_path() / "popgrid_test_probs";
    std::filesystem::remove_all(dir);
    save_prob_grid(dir, grid);
    ProbGrid back = load_prob_grid(dir);
    CHECK(back.n_classes == 4);
    CHECK(back.geo == grid.geo);
    CHECK(back.nodata == grid.nodata);
    CHECK(back.probs == grid.probs);
}
