#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "popgrid/errors.hpp"
#include "popgrid/gbrt.hpp"
#include "popgrid/rng.hpp"

using namespace popgrid;

TEST_CASE("zero rounds predicts the target mean") {
    std::vector<double> X = {0, 1, 2, 3};
    std::vector<double> y = {1, 3, 5, 7};
    GBRTConfig cfg;
    cfg.n_rounds = 0;
    GBRTModel model = gbrt_fit(X, 4, 1, y, cfg);
    CHECK(model.base_score == doctest::Approx(4.0));
    for (double x : {0.0, 1.5, 99.0}) {
        std::vector<double> v = {x};
        CHECK(model.predict(v) == doctest::Approx(4.0));
    }
}

TEST_CASE("1-D stump fits {(0,0),(1,1)} exactly") {
    std::vector<double> X = {0, 1};
    std::vector<double> y = {0, 1};
    GBRTConfig cfg;
    cfg.n_rounds = 1;
    cfg.max_depth = 1;
    cfg.shrinkage = 1.0;
    GBRTModel model = gbrt_fit(X, 2, 1, y, cfg);
    REQUIRE(model.trees.size() == 1);
    const auto& nodes = model.trees[0].nodes;
    REQUIRE(nodes.size() == 3);
    CHECK(nodes[0].feature == 0);
    CHECK(nodes[0].threshold == doctest::Approx(0.5));
    std::vector<double> zero = {0.0};
    std::vector<double> one = {1.0};
    CHECK(model.predict(zero) == 0.0);
    CHECK(model.predict(one) == 1.0);
}

TEST_CASE("training MSE is nonincreasing across rounds") {
    SplitMix64 rng(808);
    const int n = 64, d = 5;
    std::vector<double> X(static_cast<std::size_t>(n) * d);
    std::vector<double> y(n);
    for (auto& v : X) v = rng.next_uniform(0, 1);
    for (int r = 0; r < n; ++r)
        y[static_cast<std::size_t>(r)] =
            3.0 * X[static_cast<std::size_t>(r) * d] + rng.next_uniform(0, 0.5);

    GBRTConfig cfg;  // defaults: 100 rounds, depth 3, shrinkage 0.1
    GBRTModel model = gbrt_fit(X, n, d, y, cfg);
    REQUIRE(model.train_mse.size() == 100);
    for (std::size_t k = 1; k < model.train_mse.size(); ++k)
        CHECK(model.train_mse[k] <= model.train_mse[k - 1]);
    CHECK(model.train_mse.back() < model.train_mse.front());
}

TEST_CASE("constant features predict the mean; depth limit holds") {
    std::vector<double> X = {2, 2, 2, 2};
    std::vector<double> y = {1, 2, 3, 6};
    GBRTConfig cfg;
    cfg.n_rounds = 10;
    GBRTModel model = gbrt_fit(X, 4, 1, y, cfg);
    std::vector<double> probe = {2.0};
    CHECK(model.predict(probe) == doctest::Approx(3.0));
    for (const auto& tree : model.trees) CHECK(tree.depth() <= cfg.max_depth);
}

TEST_CASE("fit is invariant to row permutations") {
    SplitMix64 rng(117);
    const int n = 40, d = 3;
    std::vector<double> X(static_cast<std::size_t>(n) * d);
    std::vector<double> y(n);
    for (auto& v : X) v = rng.next_uniform(0, 10);
    for (int r = 0; r < n; ++r)
        y[static_cast<std::size_t>(r)] = X[static_cast<std::size_t>(r) * d + 1] * 2.0 +
                                         X[static_cast<std::size_t>(r) * d + 2];

    GBRTConfig cfg;
    cfg.n_rounds = 20;
    GBRTModel a = gbrt_fit(X, n, d, y, cfg);

    // reverse the rows
    std::vector<double> Xr(X.size());
    std::vector<double> yr(y.size());
    for (int r = 0; r < n; ++r) {
        for (int f = 0; f < d; ++f)
            Xr[static_cast<std::size_t>(r) * d + f] =
                X[static_cast<std::size_t>(n - 1 - r) * d + f];
        yr[static_cast<std::size_t>(r)] = y[static_cast<std::size_t>(n - 1 - r)];
    }
    GBRTModel b = gbrt_fit(Xr, n, d, yr, cfg);
    CHECK(a == b);
}

TEST_CASE("determinism: identical inputs give identical models") {
    SplitMix64 rng(5);
    const int n = 30, d = 2;
    std::vector<double> X(static_cast<std::size_t>(n) * d);
    std::vector<double> y(n);
    for (auto& v : X) v = rng.next_uniform(-5, 5);
    for (auto& v : y) v = rng.next_uniform(0, 100);
    GBRTConfig cfg;
    cfg.n_rounds = 15;
    CHECK(gbrt_fit(X, n, d, y, cfg) == gbrt_fit(X, n, d, y, cfg));
}

TEST_CASE("error paths") {
    GBRTConfig cfg;
    std::vector<double> empty;
    CHECK_THROWS_AS(gbrt_fit(empty, 0, 1, empty, cfg), DataError);

    std::vector<double> X = {1.0, std::nan("")};
    std::vector<double> y = {1.0, 2.0};
    CHECK_THROWS_AS(gbrt_fit(X, 2, 1, y, cfg), DataError);

    std::vector<double> X2 = {1.0, 2.0};
    std::vector<double> y2 = {1.0, std::numeric_limits<double>::infinity()};
    CHECK_THROWS_AS(gbrt_fit(X2, 2, 1, y2, cfg), DataError);

    GBRTModel model = gbrt_fit(X2, 2, 1, y, cfg);
    std::vector<double> wrong_dim = {1.0, 2.0};
    CHECK_THROWS_AS(model.predict(wrong_dim), DataError);
}

TEST_CASE("predictions clamp at zero") {
    std::vector<double> X = {0, 1};
    std::vector<double> y = {0, 1};
    GBRTConfig cfg;
    cfg.n_rounds = 0;
    GBRTModel model = gbrt_fit(X, 2, 1, y, cfg);
    model.base_score = -5.0;  // force a negative raw prediction
    std::vector<double> probe = {0.0};
    CHECK(model.predict(probe) == 0.0);
}

TEST_CASE("JSON codec round-trips the model exactly") {
    SplitMix64 rng(2718);
    const int n = 25, d = 4;
    std::vector<double> X(static_cast<std::size_t>(n) * d);
    std::vector<double> y(n);
    for (auto& v : X) v = rng.next_uniform(0, 3);
    for (auto& v : y) v = rng.next_uniform(0, 1000);
    GBRTConfig cfg;
    cfg.n_rounds = 12;
    GBRTModel model = gbrt_fit(X, n, d, y, cfg);

    auto dir = std::filesystem::temp_directory_path() / "popgrid_test_gbrt";
    std::filesystem::create_directories(dir);
    auto path = dir / "model.json";
    save_gbrt_json(path, model);
    GBRTModel back = load_gbrt_json(path);
    CHECK(back == model);

    auto path2 = dir / "model2.json";
    save_gbrt_json(path2, back);
    std::ifstream a(path, std::ios::binary);
    std::ifstream b(path2, std::ios::binary);
    std::string sa((std::istreambuf_iterator<char>(a)), std::istreambuf_iterator<char>());
    std::string sb((std::istreambuf_iterator<char>(b)), std::istreambuf_iterator<char>());
    CHECK(sa == sb);
}

TEST_CASE("log-target option round-trips through the transform") {
    std::vector<double> X = {0, 1, 2, 3, 4, 5, 6, 7};
    std::vector<double> y = {1, 10, 100, 1000, 1, 10, 100, 1000};
    GBRTConfig cfg;
    cfg.n_rounds = 300;
    cfg.log_target = true;
    GBRTModel model = gbrt_fit(X, 8, 1, y, cfg);
    std::vector<double> probe = {3.0};
    CHECK(model.predict(probe) == doctest::Approx(1000.0).epsilon(0.01));
    CHECK(model.log_target);
}
