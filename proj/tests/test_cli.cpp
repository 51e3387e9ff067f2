#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "popgrid/cli.hpp"
#include "popgrid/config.hpp"
#include "popgrid/raster_io.hpp"

using namespace popgrid;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const char* name) {
    auto dir = fs::temp_directory_path() / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

}  // namespace

TEST_CASE("config: defaults, overrides, rejection") {
    auto dir = fresh_dir("popgrid_test_config");

    {
        std::ofstream out(dir / "empty.conf");
    }
    Config empty = load_config(dir / "empty.conf");
    CHECK(empty.batch_size == 512);
    CHECK(empty.epochs == 30);
    CHECK(empty.cell_size == 0.01);
    CHECK(empty.tile_h == 74);
    CHECK(empty.bands == 7);
    CHECK(empty.chunk_size == 1000);
    CHECK(empty.train_frac == 0.1);
    CHECK(empty.val_frac == 0.01);

    {
        std::ofstream out(dir / "batch.conf");
        out << "# comment line\n";
        out << "batch_size=512\n";
        out << "epochs = 12\n";
    }
    Config batch = load_config(dir / "batch.conf");
    CHECK(batch.batch_size == 512);
    CHECK(batch.epochs == 12);

    {
        std::ofstream out(dir / "zero_frac.conf");
        out << "train_frac=0\n";
    }
    CHECK_THROWS_AS(load_config(dir / "zero_frac.conf"), UsageError);

    {
        std::ofstream out(dir / "typo.conf");
        out << "batchsize=512\n";
    }
    CHECK_THROWS_WITH_AS(load_config(dir / "typo.conf"),
                         doctest::Contains("unknown config key"), UsageError);

    {
        std::ofstream out(dir / "bad_value.conf");
        out << "epochs=ten\n";
    }
    CHECK_THROWS_AS(load_config(dir / "bad_value.conf"), UsageError);
}

TEST_CASE("cli: exit codes for usage and data errors") {
    CHECK(cli::run({"definitely-not-a-command"}) == 1);
    CHECK(cli::run({"bin", "--no-such-flag"}) == 1);
    CHECK(cli::run({"--help"}) == 0);

    auto dir = fresh_dir("popgrid_test_cli_err");
    CHECK(cli::run({"bin", "--input", (dir / "missing.asc").string(), "--out-dir",
                    dir.string()}) == 2);
    CHECK(cli::run({"info", (dir / "missing.asc").string()}) == 2);
}

TEST_CASE("cli: synth -> bin -> info flow with manifests") {
    auto world_dir = fresh_dir("popgrid_test_cli_world");
    int rc = cli::run({"synth", "--seed", "5", "--rows", "24", "--cols", "24", "--cities",
                       "2", "--confusers", "1", "--county-rows", "2", "--county-cols", "2",
                       "--tile-size", "18", "--bands", "3", "--peak-min", "200",
                       "--peak-max", "900", "--radius-min", "3", "--radius-max", "5",
                       "--out-dir", world_dir.string()});
    REQUIRE(rc == 0);
    CHECK(fs::exists(world_dir / "pop_t0.asc"));
    CHECK(fs::exists(world_dir / "tiles_t1.pgts"));
    CHECK(fs::exists(world_dir / "counties.geojson"));
    CHECK(fs::exists(world_dir / "manifest_synth.json"));

    auto bin_dir = fresh_dir("popgrid_test_cli_bin");
    rc = cli::run({"bin", "--input", (world_dir / "pop_t0.asc").string(), "--out-dir",
                   bin_dir.string()});
    REQUIRE(rc == 0);
    CHECK(fs::exists(bin_dir / "classes.asc"));
    CHECK(fs::exists(bin_dir / "manifest_bin.json"));

    ClassGrid classes = read_class_grid(bin_dir / "classes.asc");
    CHECK(classes.k_max <= 17);  // synthetic defaults stay inside the paper range
    CHECK(classes.k_max >= 1);

    CHECK(cli::run({"info", (bin_dir / "classes.asc").string()}) == 0);
    CHECK(cli::run({"info", (world_dir / "tiles_t0.pgts").string()}) == 0);
    CHECK(cli::run({"info", (world_dir / "counties.geojson").string()}) == 0);
    CHECK(cli::run({"info", (world_dir / "manifest_synth.json").string()}) == 0);
}

TEST_CASE("cli: evaluate with estimates equal to truths reports zero error") {
    auto dir = fresh_dir("popgrid_test_cli_eval");
    {
        std::ofstream truth(dir / "counties.csv");
        truth << "id,pop_t0,pop_t1\n";
        truth << "a,10,12\n";
        truth << "b,20,24\n";
        truth << "c,30,36\n";
    }
    {
        std::ofstream est(dir / "perfect.csv");
        est << "id,estimate\n";
        est << "a,12\n";
        est << "b,24\n";
        est << "c,36\n";
    }
    int rc = cli::run({"evaluate", "--truth", (dir / "counties.csv").string(),
                       "--truth-column", "pop_t1", "--estimate",
                       "PERFECT=" + (dir / "perfect.csv").string(), "--out-dir",
                       dir.string()});
    REQUIRE(rc == 0);

    std::ifstream metrics(dir / "metrics.csv");
    std::string header;
    std::string row;
    std::getline(metrics, header);
    std::getline(metrics, row);
    CHECK(header == "method,mean_ae,median_ae,r2,mape,n,mape_excluded");
    CHECK(row == "PERFECT,0,0,1,0,3,0");
}

TEST_CASE("cli: missing estimate id is a data error") {
    auto dir = fresh_dir("popgrid_test_cli_eval2");
    {
        std::ofstream truth(dir / "t.csv");
        truth << "id,pop_t1\n";
        truth << "a,10\n";
        truth << "b,20\n";
    }
    {
        std::ofstream est(dir / "e.csv");
        est << "id,estimate\n";
        est << "a,10\n";
    }
    CHECK(cli::run({"evaluate", "--truth", (dir / "t.csv").string(), "--truth-column",
                    "pop_t1", "--estimate", "X=" + (dir / "e.csv").string(), "--out-dir",
                    dir.string()}) == 2);
}
