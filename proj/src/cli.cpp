#include "popgrid/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "popgrid/config.hpp"
#include "popgrid/estimator.hpp"
#include "popgrid/geojson.hpp"
#include "popgrid/gbrt.hpp"
#include "popgrid/grid.hpp"
#include "popgrid/interpret.hpp"
#include "popgrid/manifest.hpp"
#include "popgrid/nn/checkpoint.hpp"
#include "popgrid/nn/train.hpp"
#include "popgrid/raster_io.hpp"
#include "popgrid/rng.hpp"
#include "popgrid/sampler.hpp"
#include "popgrid/synthworld.hpp"
#include "popgrid/textio.hpp"
#include "popgrid/tiles.hpp"

namespace popgrid::cli {

namespace fs = std::filesystem;

namespace {

// Every subcommand shares --config/--seed/--out-dir; flags set on the
// command line override values from the config file.
struct Common {
    std::string config_path;
    std::string out_dir;
    std::optional<long long> seed;

    Config resolve() const {
        Config cfg = config_path.empty() ? Config{} : load_config(config_path);
        if (seed) cfg.seed = static_cast<std::uint64_t>(*seed);
        cfg.validate();
        return cfg;
    }
};

void add_common(CLI::App* cmd, Common& common, bool out_required = true) {
    cmd->add_option("--config", common.config_path, "flat key=value config file");
    auto* out = cmd->add_option("--out-dir", common.out_dir, "output directory");
    if (out_required) out->required();
    cmd->add_option("--seed", common.seed, "64-bit run seed");
}

void require_file(const std::string& path) {
    if (!fs::exists(path)) throw DataError("missing input file: " + path);
}

std::string chunk_model_name(int chunk_row, int chunk_col) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "chunk_r%03d_c%03d.pgnn", chunk_row, chunk_col);
    return buf;
}

struct ChunkModelEntry {
    int chunk_row = 0;
    int chunk_col = 0;
    Rect rect;
    std::string file;
    long long n_train = 0;
    long long n_val = 0;
};

void write_chunks_csv(const fs::path& path, const std::vector<ChunkModelEntry>& entries) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open for writing: " + path.string());
    out << "chunk_row,chunk_col,row0,row1,col0,col1,file,n_train,n_val\n";
    for (const auto& e : entries) {
        out << e.chunk_row << ',' << e.chunk_col << ',' << e.rect.row0 << ','
            << e.rect.row1 << ',' << e.rect.col0 << ',' << e.rect.col1 << ',' << e.file
            << ',' << e.n_train << ',' << e.n_val << "\n";
    }
}

std::vector<ChunkModelEntry> read_chunks_csv(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open chunk index: " + path.string());
    std::string line;
    if (!std::getline(in, line))
        throw ParseError(ParseError::Kind::MalformedHeader, 1, "empty chunk index");
    std::vector<ChunkModelEntry> entries;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        auto f = split_csv(line);
        if (f.size() != 9)
            throw ParseError(ParseError::Kind::DimensionMismatch, line_no,
                             "expected 9 fields in chunk index");
        ChunkModelEntry e;
        e.chunk_row = static_cast<int>(*parse_int(f[0]));
        e.chunk_col = static_cast<int>(*parse_int(f[1]));
        e.rect = Rect{static_cast<int>(*parse_int(f[2])), static_cast<int>(*parse_int(f[3])),
                      static_cast<int>(*parse_int(f[4])), static_cast<int>(*parse_int(f[5]))};
        e.file = std::string(f[6]);
        e.n_train = *parse_int(f[7]);
        e.n_val = *parse_int(f[8]);
        entries.push_back(std::move(e));
    }
    return entries;
}

// ---------------------------------------------------------------- synth

void cmd_synth(const Common& common, const Config& cfg, int rows, int cols, int cities,
               int confusers, int county_rows, int county_cols, double peak_min,
               double peak_max, double radius_min, double radius_max, double growth_min,
               double growth_max) {
    WorldSpec spec;
    spec.seed = cfg.seed;
    spec.rows = rows;
    spec.cols = cols;
    spec.tile_h = cfg.tile_h;
    spec.tile_w = cfg.tile_w;
    spec.bands = cfg.bands;
    spec.n_cities = cities;
    spec.n_confusers = confusers;
    spec.county_rows = county_rows;
    spec.county_cols = county_cols;
    spec.city_peak_min = peak_min;
    spec.city_peak_max = peak_max;
    spec.city_radius_min = radius_min;
    spec.city_radius_max = radius_max;
    spec.growth_min = growth_min;
    spec.growth_max = growth_max;
    spec.origin_lon = cfg.origin_lon;
    spec.nw_lat = cfg.origin_lat;
    spec.cell_size = cfg.cell_size;

    World world = generate_world(spec);

    fs::path dir(common.out_dir);
    fs::create_directories(dir);
    write_grid(world.year0.population, dir / "pop_t0.asc");
    write_grid(world.year1.population, dir / "pop_t1.asc");
    write_tiles(world.year0.tiles, dir / "tiles_t0.pgts");
    write_tiles(world.year1.tiles, dir / "tiles_t1.pgts");
    write_counties_geojson(dir / "counties.geojson", world.counties);
    write_counties_csv(dir / "counties.csv", world.counties);
    {
        std::ofstream conf(dir / "confusers.csv", std::ios::binary);
        conf << "i,j\n";
        for (const auto& [i, j] : world.confuser_cells) conf << i << ',' << j << "\n";
    }

    RunManifest manifest;
    manifest.command = "synth";
    manifest.seed = cfg.seed;
    manifest.config = cfg.to_kv();
    manifest.config["rows"] = format_int(rows);
    manifest.config["cols"] = format_int(cols);
    manifest.config["cities"] = format_int(cities);
    manifest.config["confusers"] = format_int(confusers);
    manifest.config["county_rows"] = format_int(county_rows);
    manifest.config["county_cols"] = format_int(county_cols);
    manifest.config["peak_min"] = format_double(peak_min);
    manifest.config["peak_max"] = format_double(peak_max);
    manifest.config["radius_min"] = format_double(radius_min);
    manifest.config["radius_max"] = format_double(radius_max);
    manifest.config["growth_min"] = format_double(growth_min);
    manifest.config["growth_max"] = format_double(growth_max);
    for (const char* name : {"pop_t0.asc", "pop_t1.asc", "tiles_t0.pgts", "tiles_t1.pgts",
                             "counties.geojson", "counties.csv", "confusers.csv"})
        manifest.outputs.push_back((dir / name).string());
    write_manifest(dir, manifest);
    std::cout << "synth: " << rows << "x" << cols << " world, " << cities << " cities, "
              << confusers << " confusers -> " << dir.string() << "\n";
}

// ------------------------------------------------------------------ bin

void cmd_bin(const Common& common, const Config& cfg, const std::string& input) {
    require_file(input);
    PopulationGrid pop = read_population_grid(input);
    ClassGrid classes = bin_grid(pop);
    fs::path dir(common.out_dir);
    fs::create_directories(dir);
    write_grid(classes, dir / "classes.asc");

    RunManifest manifest;
    manifest.command = "bin";
    manifest.seed = cfg.seed;
    manifest.config = cfg.to_kv();
    manifest.inputs.push_back(input);
    manifest.outputs.push_back((dir / "classes.asc").string());
    write_manifest(dir, manifest);
    std::cout << "bin: K_max " << classes.k_max << " -> "
              << (dir / "classes.asc").string() << "\n";
}

// --------------------------------------------------------------- sample

void cmd_sample(const Common& common, const Config& cfg, const std::string& classes_path) {
    require_file(classes_path);
    ClassGrid classes = read_class_grid(classes_path);
    ChunkPartition part = partition_chunks(classes, cfg.chunk_size);

    SampleSet all;
    all.seed = cfg.seed;
    for (std::size_t c = 0; c < part.chunks.size(); ++c) {
        SampleSet s = draw_samples(classes, part.chunks[c], cfg.train_frac, cfg.val_frac,
                                   mix_seed(cfg.seed, 0xC4, c));
        all.train.insert(all.train.end(), s.train.begin(), s.train.end());
        all.validation.insert(all.validation.end(), s.validation.begin(),
                              s.validation.end());
    }

    fs::path dir(common.out_dir);
    fs::create_directories(dir);
    write_samples_csv(dir / "samples.csv", all, classes);

    RunManifest manifest;
    manifest.command = "sample";
    manifest.seed = cfg.seed;
    manifest.config = cfg.to_kv();
    manifest.inputs.push_back(classes_path);
    manifest.outputs.push_back((dir / "samples.csv").string());
    write_manifest(dir, manifest);
    std::cout << "sample: " << all.train.size() << " train / " << all.validation.size()
              << " validation cells over " << part.chunks.size() << " chunk(s) ("
              << part.skipped.size() << " skipped) -> "
              << (dir / "samples.csv").string() << "\n";
}

// ---------------------------------------------------------------- train

void cmd_train(const Common& common, const Config& cfg, const std::string& tiles_path,
               const std::string& classes_path, const std::string& samples_path) {
    require_file(tiles_path);
    require_file(classes_path);
    require_file(samples_path);
    TileStack tiles = read_tiles(tiles_path);
    ClassGrid classes = read_class_grid(classes_path);
    SampleSet samples = read_samples_csv(samples_path);
    if (tiles.rows != classes.geo.rows || tiles.cols != classes.geo.cols)
        throw DataError("tile stack and class grid dimensions disagree");

    int n_classes = cfg.n_classes > 0 ? cfg.n_classes : classes.k_max + 1;
    if (n_classes < 2) n_classes = 2;
    // Band count comes from the tiles themselves; the config value only
    // steers synthesis.
    nn::ArchitectureSpec arch = nn::build_preset(cfg.preset, tiles.bands, n_classes);
    if (arch.in_h != tiles.tile_h || arch.in_w != tiles.tile_w ||
        arch.in_bands != tiles.bands)
        throw DataError("preset '" + cfg.preset + "' expects " +
                        std::to_string(arch.in_h) + "x" + std::to_string(arch.in_w) + "x" +
                        std::to_string(arch.in_bands) + " tiles, got " +
                        std::to_string(tiles.tile_h) + "x" + std::to_string(tiles.tile_w) +
                        "x" + std::to_string(tiles.bands));

    ChunkPartition part = partition_chunks(classes, cfg.chunk_size);
    fs::path dir(common.out_dir);
    fs::create_directories(dir);

    std::vector<ChunkModelEntry> entries;
    for (std::size_t c = 0; c < part.chunks.size(); ++c) {
        const Rect& rect = part.chunks[c];
        SampleSet chunk_samples;
        chunk_samples.seed = samples.seed;
        for (const auto& cell : samples.train)
            if (rect.contains(cell.first, cell.second)) chunk_samples.train.push_back(cell);
        for (const auto& cell : samples.validation)
            if (rect.contains(cell.first, cell.second))
                chunk_samples.validation.push_back(cell);
        if (chunk_samples.train.empty())
            throw DataError("chunk at rows [" + std::to_string(rect.row0) + ", " +
                            std::to_string(rect.row1) + ") has no training samples");

        nn::TrainConfig tc;
        tc.batch_size = cfg.batch_size;
        tc.epochs = cfg.epochs;
        tc.adam = {cfg.adam_alpha, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps};
        tc.seed = mix_seed(cfg.seed, 0x7A, c);

        nn::Checkpoint ckpt = nn::train_model(tiles, classes, chunk_samples, arch, tc);

        ChunkModelEntry entry;
        entry.chunk_row = rect.row0 / cfg.chunk_size;
        entry.chunk_col = rect.col0 / cfg.chunk_size;
        entry.rect = rect;
        entry.file = chunk_model_name(entry.chunk_row, entry.chunk_col);
        entry.n_train = static_cast<long long>(chunk_samples.train.size());
        entry.n_val = static_cast<long long>(chunk_samples.validation.size());
        nn::save_checkpoint(dir / entry.file, ckpt);
        const auto& last = ckpt.history.back();
        std::cout << "train: chunk (" << entry.chunk_row << "," << entry.chunk_col
                  << ") n=" << entry.n_train << " final train loss "
                  << format_double(last.train_loss) << " val top-1 "
                  << format_double(last.val_top1) << "\n";
        entries.push_back(std::move(entry));
    }
    write_chunks_csv(dir / "chunks.csv", entries);

    RunManifest manifest;
    manifest.command = "train";
    manifest.seed = cfg.seed;
    manifest.config = cfg.to_kv();
    manifest.config["n_classes_effective"] = format_int(n_classes);
    manifest.inputs = {tiles_path, classes_path, samples_path};
    for (const auto& e : entries) manifest.outputs.push_back((dir / e.file).string());
    manifest.outputs.push_back((dir / "chunks.csv").string());
    write_manifest(dir, manifest);
}

// -------------------------------------------------------------- predict

void cmd_predict(const Common& common, const Config& cfg, const std::string& models_dir,
                 const std::string& model_file, const std::string& tiles_path,
                 const std::string& grid_path) {
    require_file(tiles_path);
    require_file(grid_path);
    TileStack tiles = read_tiles(tiles_path);
    Grid<double> ref = read_raw_grid(grid_path);
    if (tiles.rows != ref.geo.rows || tiles.cols != ref.geo.cols)
        throw DataError("tile stack and reference grid dimensions disagree");

    PredictOutput out;
    std::vector<std::string> model_inputs;

    if (!model_file.empty()) {
        require_file(model_file);
        nn::Checkpoint ckpt = nn::load_checkpoint(model_file);
        out = predict_grid(ckpt, tiles, ref.geo, ref.nodata);
        model_inputs.push_back(model_file);
    } else {
        fs::path mdir(models_dir);
        auto entries = read_chunks_csv(mdir / "chunks.csv");
        if (entries.empty()) throw DataError("chunk index is empty: " + mdir.string());
        model_inputs.push_back((mdir / "chunks.csv").string());

        bool first = true;
        for (const auto& e : entries) {
            nn::Checkpoint ckpt = nn::load_checkpoint(mdir / e.file);
            model_inputs.push_back((mdir / e.file).string());
            if (first) {
                out.probs = ProbGrid(ref.geo, ckpt.spec.n_classes);
                out.probs.nodata = ref.nodata;
                out.classes = ClassGrid(ref.geo);
                out.classes.nodata = ref.nodata;
                first = false;
            } else if (ckpt.spec.n_classes != out.probs.n_classes) {
                throw DataError("chunk models disagree on n_classes");
            }
            predict_region(ckpt, tiles, e.rect, out);
        }
        // Cells of the reference grid not covered by any chunk model.
        std::vector<std::uint8_t> covered(ref.nodata.size(), 0);
        for (const auto& e : entries)
            for (int i = e.rect.row0; i < e.rect.row1; ++i)
                for (int j = e.rect.col0; j < e.rect.col1; ++j)
                    covered[static_cast<std::size_t>(i) * ref.geo.cols + j] = 1;
        for (std::size_t k = 0; k < covered.size(); ++k)
            if (!covered[k] && !ref.nodata[k])
                throw DataError("cell " + std::to_string(k) +
                                " is not covered by any chunk model");
    }

    fs::path dir(common.out_dir);
    fs::create_directories(dir);
    save_prob_grid(dir, out.probs);
    write_grid(out.classes, dir / "pred_class.asc");

    RunManifest manifest;
    manifest.command = "predict";
    manifest.seed = cfg.seed;
    manifest.config = cfg.to_kv();
    manifest.inputs = {tiles_path, grid_path};
    manifest.inputs.insert(manifest.inputs.end(), model_inputs.begin(), model_inputs.end());
    for (int c = 0; c < out.probs.n_classes; ++c) {
        char name[32];
        std::snprintf(name, sizeof(name), "prob_c%02d.asc", c);
        manifest.outputs.push_back((dir / name).string());
    }
    manifest.outputs.push_back((dir / "pred_class.asc").string());
    write_manifest(dir, manifest);
    std::cout << "predict: " << out.probs.n_classes << " class layers -> " << dir.string()
              << "\n";
}

// ------------------------------------------------------------ aggregate

void cmd_aggregate(const Common& common, const Config& cfg, const std::string& classes_path,
                   const std::string& counties_path, const std::string& probs_dir) {
    require_file(classes_path);
    require_file(counties_path);
    ClassGrid classes = read_class_grid(classes_path);
    auto counties = read_counties_geojson(counties_path);
    CountyAssignment assignment = assign_counties(classes.geo, counties);
    std::vector<double> convraw = aggregate_convraw(classes, assignment);

    fs::path dir(common.out_dir);
    fs::create_directories(dir);
    std::vector<std::pair<std::string, double>> rows;
    for (std::size_t c = 0; c < assignment.ids.size(); ++c)
        rows.emplace_back(assignment.ids[c], convraw[c]);
    write_county_csv(dir / "convraw.csv", "convraw", rows);

    RunManifest manifest;
    manifest.command = "aggregate";
    manifest.seed = cfg.seed;
    manifest.config = cfg.to_kv();
    manifest.inputs = {classes_path, counties_path};
    manifest.outputs.push_back((dir / "convraw.csv").string());

    if (!probs_dir.empty()) {
        ProbGrid probs = load_prob_grid(probs_dir);
        if (!(probs.geo == classes.geo))
            throw DataError("probability grid and class grid are misaligned");
        CountyFeatureVectors features = county_features(probs, assignment);
        write_features_csv(dir / "features.csv", features);
        manifest.inputs.push_back((fs::path(probs_dir) / "prob_c00.asc").string());
        manifest.outputs.push_back((dir / "features.csv").string());
    }
    write_manifest(dir, manifest);
    std::cout << "aggregate: " << assignment.ids.size() << " counties -> " << dir.string()
              << "\n";
}

// -------------------------------------------------------------- convaug

void cmd_convaug(const Common& common, const Config& cfg,
                 const std::string& train_features_path, const std::string& truth_path,
                 const std::string& truth_column, const std::string& test_features_path) {
    require_file(train_features_path);
    require_file(truth_path);
    require_file(test_features_path);
    CountyFeatureVectors train_features = read_features_csv(train_features_path);
    CountyFeatureVectors test_features = read_features_csv(test_features_path);
    auto truths = read_county_csv(truth_path, truth_column);

    GBRTConfig gc;
    gc.n_rounds = cfg.gbrt_rounds;
    gc.max_depth = cfg.gbrt_depth;
    gc.shrinkage = cfg.gbrt_shrinkage;
    gc.log_target = cfg.gbrt_log_target;
    ConvAugResult res =
        convaug(train_features, truths, test_features, gc, cfg.gbrt_cell_count_feature);

    fs::path dir(common.out_dir);
    fs::create_directories(dir);
    std::vector<std::pair<std::string, double>> rows;
    for (std::size_t c = 0; c < res.ids.size(); ++c)
        rows.emplace_back(res.ids[c], res.estimates[c]);
    write_county_csv(dir / "convaug.csv", "convaug", rows);
    save_gbrt_json(dir / "gbrt_model.json", res.model);

    RunManifest manifest;
    manifest.command = "convaug";
    manifest.seed = cfg.seed;
    manifest.config = cfg.to_kv();
    manifest.inputs = {train_features_path, truth_path, test_features_path};
    manifest.outputs = {(dir / "convaug.csv").string(), (dir / "gbrt_model.json").string()};
    write_manifest(dir, manifest);
    std::cout << "convaug: " << res.ids.size() << " county estimates -> " << dir.string()
              << "\n";
}

// ------------------------------------------------------------- evaluate

std::string metric_or_na(const std::optional<double>& v) {
    return v ? format_double(*v) : "NA";
}

void cmd_evaluate(const Common& common, const Config& cfg, const std::string& truth_path,
                  const std::string& truth_column,
                  const std::vector<std::string>& estimate_specs) {
    require_file(truth_path);
    auto truths = read_county_csv(truth_path, truth_column);
    if (truths.empty()) throw DataError("no truth rows in " + truth_path);

    fs::path dir(common.out_dir);
    fs::create_directories(dir);
    std::ofstream csv(dir / "metrics.csv", std::ios::binary);
    csv << "method,mean_ae,median_ae,r2,mape,n,mape_excluded\n";

    std::cout << "county-level evaluation vs " << truth_column << " (" << truths.size()
              << " counties)\n";
    std::printf("%-12s %14s %14s %10s %10s\n", "method", "MeanAE", "MedianAE", "r2",
                "MAPE");

    RunManifest manifest;
    manifest.command = "evaluate";
    manifest.seed = cfg.seed;
    manifest.config = cfg.to_kv();
    manifest.inputs.push_back(truth_path);

    for (const auto& spec : estimate_specs) {
        auto eq = spec.find('=');
        if (eq == std::string::npos)
            throw UsageError("--estimate expects NAME=path.csv, got '" + spec + "'");
        std::string name = spec.substr(0, eq);
        std::string path = spec.substr(eq + 1);
        require_file(path);
        auto estimates = read_county_csv(path, "");

        std::vector<double> est;
        std::vector<double> tru;
        for (const auto& [id, t] : truths) {
            auto it = estimates.find(id);
            if (it == estimates.end())
                throw DataError("estimate file " + path + " lacks county '" + id + "'");
            est.push_back(it->second);
            tru.push_back(t);
        }
        MetricsResult m = compute_metrics(est, tru);
        csv << name << ',' << format_double(m.mean_ae) << ',' << format_double(m.median_ae)
            << ',' << metric_or_na(m.r2) << ',' << metric_or_na(m.mape) << ',' << m.n
            << ',' << m.mape_excluded << "\n";
        std::printf("%-12s %14.2f %14.2f %10s %10s\n", name.c_str(), m.mean_ae,
                    m.median_ae, metric_or_na(m.r2).c_str(), metric_or_na(m.mape).c_str());
        manifest.inputs.push_back(path);
    }
    manifest.outputs.push_back((dir / "metrics.csv").string());
    write_manifest(dir, manifest);
}

// ------------------------------------------------------------ interpret

void cmd_interpret(const Common& common, const Config& cfg, const std::string& probs_dir,
                   const std::string& pred_path, const std::string& truth_path,
                   const std::string& tiles_path, std::vector<int> class_list, int top_k,
                   int top_components) {
    require_file(pred_path);
    require_file(truth_path);
    ProbGrid probs = load_prob_grid(probs_dir);
    ClassGrid pred = read_class_grid(pred_path);
    ClassGrid truth = read_class_grid(truth_path);

    TileStack tiles;
    bool have_tiles = !tiles_path.empty();
    if (have_tiles) {
        require_file(tiles_path);
        tiles = read_tiles(tiles_path);
    }

    if (class_list.empty())
        for (int c = 0; c < probs.n_classes; ++c) class_list.push_back(c);

    fs::path dir(common.out_dir);
    fs::create_directories(dir);

    RunManifest manifest;
    manifest.command = "interpret";
    manifest.seed = cfg.seed;
    manifest.config = cfg.to_kv();
    manifest.inputs = {(fs::path(probs_dir) / "prob_c00.asc").string(), pred_path,
                       truth_path};
    if (have_tiles) manifest.inputs.push_back(tiles_path);

    for (int c : class_list) {
        Grid<double> pmap = probability_map(probs, c);
        char base[48];
        std::snprintf(base, sizeof(base), "prob_map_c%02d", c);
        write_grid(pmap, dir / (std::string(base) + ".asc"));
        write_pgm(dir / (std::string(base) + ".pgm"), pmap);
        manifest.outputs.push_back((dir / (std::string(base) + ".asc")).string());
        manifest.outputs.push_back((dir / (std::string(base) + ".pgm")).string());

        TopKResult topk = top_k_tiles(probs, truth, c, top_k);
        char tk[48];
        std::snprintf(tk, sizeof(tk), "topk_c%02d.csv", c);
        write_topk_csv(dir / tk, topk);
        manifest.outputs.push_back((dir / tk).string());
        if (have_tiles) {
            for (std::size_t r = 0; r < topk.tiles.size(); ++r) {
                char tn[64];
                std::snprintf(tn, sizeof(tn), "topk_c%02d_rank%02d.pgm", c,
                              static_cast<int>(r + 1));
                write_tile_pgm(dir / tn, tiles.tile(topk.tiles[r].i, topk.tiles[r].j),
                               tiles.tile_h, tiles.tile_w, tiles.bands);
                manifest.outputs.push_back((dir / tn).string());
            }
        }
        if (topk.short_of_k)
            std::cout << "interpret: class " << c << " has only " << topk.tiles.size()
                      << " correct candidates (requested " << top_k << ")\n";
    }

    ErrorGrid errors = error_map(truth, pred);
    write_grid(errors, dir / "error.asc");
    write_ppm_diverging(dir / "error.ppm", errors);
    ErrorSummary summary = summarize_errors(errors, top_components);
    write_error_components_csv(dir / "error_components.csv", summary);
    manifest.outputs.push_back((dir / "error.asc").string());
    manifest.outputs.push_back((dir / "error.ppm").string());
    manifest.outputs.push_back((dir / "error_components.csv").string());
    write_manifest(dir, manifest);

    std::cout << "interpret: " << summary.n_over << " over / " << summary.n_under
              << " under / " << summary.n_zero << " exact cells; top component sum |e| = "
              << (summary.components.empty() ? 0LL : summary.components[0].sum_abs)
              << "\n";
}

// ----------------------------------------------------------------- info

void cmd_info(const std::string& path) {
    require_file(path);
    std::ifstream probe(path, std::ios::binary);
    char magic[4] = {};
    probe.read(magic, 4);
    probe.close();

    if (std::string_view(magic, 4) == "PGTS") {
        TileStack s = read_tiles(path);
        std::cout << "PGTS tile stack: " << s.rows << "x" << s.cols << " cells, tiles "
                  << s.tile_h << "x" << s.tile_w << "x" << s.bands << " ("
                  << s.pixels.size() << " bytes of pixels)\n";
        return;
    }
    if (std::string_view(magic, 4) == "PGNN") {
        nn::Checkpoint ckpt = nn::load_checkpoint(path);
        std::size_t n_params = 0;
        for (const auto& layer : ckpt.params)
            for (const auto& t : layer) n_params += t.size();
        std::cout << "PGNN checkpoint: preset '" << ckpt.spec.preset << "', input "
                  << ckpt.spec.in_h << "x" << ckpt.spec.in_w << "x" << ckpt.spec.in_bands
                  << ", " << ckpt.spec.n_classes << " classes, " << n_params
                  << " parameters, " << ckpt.history.size() << " epochs\n";
        if (!ckpt.history.empty()) {
            const auto& last = ckpt.history.back();
            std::cout << "  last epoch: train loss " << format_double(last.train_loss)
                      << ", val loss " << format_double(last.val_loss) << ", val top-1 "
                      << format_double(last.val_top1) << ", val top-3 "
                      << format_double(last.val_top3) << "\n";
        }
        return;
    }

    std::string ext = fs::path(path).extension().string();
    if (ext == ".asc") {
        Grid<double> g = read_raw_grid(path);
        double lo = 0;
        double hi = 0;
        bool any = false;
        bool integral = true;
        long long missing = 0;
        for (std::size_t k = 0; k < g.values.size(); ++k) {
            if (g.nodata[k]) {
                ++missing;
                continue;
            }
            double v = g.values[k];
            if (!any) {
                lo = hi = v;
                any = true;
            }
            lo = std::min(lo, v);
            hi = std::max(hi, v);
            if (v != std::floor(v)) integral = false;
        }
        std::cout << "ASC raster: " << g.geo.rows << "x" << g.geo.cols << ", cell "
                  << format_double(g.geo.cell_size) << ", xll "
                  << format_double(g.geo.origin_lon) << ", yll "
                  << format_double(g.geo.south_lat) << ", " << missing << " nodata\n";
        if (any) {
            std::cout << "  values in [" << format_double(lo) << ", " << format_double(hi)
                      << "]";
            if (integral && lo >= 0)
                std::cout << " (integer-valued; as classes K_max = "
                          << static_cast<long long>(hi) << ")";
            std::cout << "\n";
        }
        return;
    }
    if (ext == ".json" || ext == ".geojson") {
        std::ifstream in(path, std::ios::binary);
        nlohmann::json doc;
        try {
            in >> doc;
        } catch (const nlohmann::json::exception& e) {
            throw DataError("invalid JSON in " + path + ": " + e.what());
        }
        if (doc.value("type", "") == "FeatureCollection") {
            std::cout << "GeoJSON FeatureCollection: " << doc["features"].size()
                      << " counties\n";
        } else if (doc.contains("base_score")) {
            std::cout << "GBRT model: " << doc["trees"].size() << " trees, base score "
                      << doc["base_score"].dump() << ", shrinkage "
                      << doc["shrinkage"].dump() << "\n";
        } else if (doc.contains("command")) {
            std::cout << "run manifest: command '" << doc["command"].get<std::string>()
                      << "', " << doc["inputs"].size() << " inputs, "
                      << doc["outputs"].size() << " outputs\n";
        } else {
            std::cout << "JSON document with " << doc.size() << " top-level keys\n";
        }
        return;
    }
    if (ext == ".csv") {
        std::ifstream in(path, std::ios::binary);
        std::string header;
        std::getline(in, header);
        long long rows = 0;
        std::string line;
        while (std::getline(in, line))
            if (!trim(line).empty()) ++rows;
        std::cout << "CSV: header '" << trim(header) << "', " << rows << " data rows\n";
        return;
    }
    throw DataError("unrecognized artifact type: " + path);
}

}  // namespace

int run(int argc, const char* const* argv) {
    CLI::App app{std::string(kToolName) +
                 " - satellite-tile population classification pipeline"};
    app.set_version_flag("--version", std::string(kToolName) + " " + kToolVersion);
    app.require_subcommand(1);

    // synth
    auto* synth = app.add_subcommand("synth", "generate a synthetic two-year world");
    Common synth_common;
    add_common(synth, synth_common);
    int rows = 100, cols = 100, cities = 3, confusers = 4;
    int county_rows = 5, county_cols = 5;
    double peak_min = 400, peak_max = 4000, radius_min = 6, radius_max = 14;
    double growth_min = 0.4, growth_max = 2.4;
    std::optional<int> synth_tile, synth_bands;
    synth->add_option("--rows", rows, "grid rows");
    synth->add_option("--cols", cols, "grid cols");
    synth->add_option("--cities", cities, "number of Gaussian cities");
    synth->add_option("--confusers", confusers, "zero-population built-up cells");
    synth->add_option("--county-rows", county_rows, "county partition rows");
    synth->add_option("--county-cols", county_cols, "county partition cols");
    synth->add_option("--peak-min", peak_min, "min city peak population per cell");
    synth->add_option("--peak-max", peak_max, "max city peak population per cell");
    synth->add_option("--radius-min", radius_min, "min city sigma (cells)");
    synth->add_option("--radius-max", radius_max, "max city sigma (cells)");
    synth->add_option("--growth-min", growth_min, "min per-city growth factor");
    synth->add_option("--growth-max", growth_max, "max per-city growth factor");
    synth->add_option("--tile-size", synth_tile, "tile height and width (pixels)");
    synth->add_option("--bands", synth_bands, "tile band count");

    // bin
    auto* bin = app.add_subcommand("bin", "bin a population raster into log2 classes");
    Common bin_common;
    add_common(bin, bin_common);
    std::string bin_input;
    bin->add_option("--input", bin_input, "population .asc")->required();

    // sample
    auto* sample = app.add_subcommand("sample", "draw class-balanced train/val samples");
    Common sample_common;
    add_common(sample, sample_common);
    std::string sample_classes;
    std::optional<int> sample_chunk;
    std::optional<double> sample_train_frac, sample_val_frac;
    sample->add_option("--classes", sample_classes, "class .asc")->required();
    sample->add_option("--chunk-size", sample_chunk, "chunk side length (cells)");
    sample->add_option("--train-frac", sample_train_frac, "training fraction");
    sample->add_option("--val-frac", sample_val_frac, "validation fraction");

    // train
    auto* train = app.add_subcommand("train", "train one model per chunk");
    Common train_common;
    add_common(train, train_common);
    std::string train_tiles, train_classes, train_samples;
    std::optional<std::string> train_preset;
    std::optional<int> train_epochs, train_batch, train_chunk, train_nclasses;
    std::optional<double> train_alpha;
    train->add_option("--tiles", train_tiles, "PGTS tile stack")->required();
    train->add_option("--classes", train_classes, "class .asc (labels)")->required();
    train->add_option("--samples", train_samples, "samples CSV")->required();
    train->add_option("--preset", train_preset, "architecture preset");
    train->add_option("--epochs", train_epochs, "training epochs");
    train->add_option("--batch-size", train_batch, "batch size");
    train->add_option("--chunk-size", train_chunk, "chunk side length (cells)");
    train->add_option("--n-classes", train_nclasses, "output classes (0 = from data)");
    train->add_option("--adam-alpha", train_alpha, "Adam step size");

    // predict
    auto* predict = app.add_subcommand("predict", "run models over a tile stack");
    Common predict_common;
    add_common(predict, predict_common);
    std::string predict_models, predict_model_file, predict_tiles, predict_grid_path;
    predict->add_option("--models", predict_models, "directory with chunks.csv");
    predict->add_option("--model", predict_model_file, "single .pgnn checkpoint");
    predict->add_option("--tiles", predict_tiles, "PGTS tile stack")->required();
    predict->add_option("--grid", predict_grid_path, "reference .asc for geometry/mask")
        ->required();

    // aggregate
    auto* aggregate = app.add_subcommand("aggregate", "CONVRAW county estimates");
    Common aggregate_common;
    add_common(aggregate, aggregate_common);
    std::string agg_classes, agg_counties, agg_probs;
    aggregate->add_option("--classes", agg_classes, "predicted class .asc")->required();
    aggregate->add_option("--counties", agg_counties, "counties GeoJSON")->required();
    aggregate->add_option("--probs", agg_probs, "probability raster dir (emit features)");

    // convaug
    auto* conv = app.add_subcommand("convaug", "GBRT county estimates from features");
    Common conv_common;
    add_common(conv, conv_common);
    std::string conv_train_features, conv_truth, conv_truth_col = "pop_t0";
    std::string conv_test_features;
    std::optional<int> conv_rounds, conv_depth;
    std::optional<double> conv_shrinkage;
    std::optional<bool> conv_log_target, conv_cell_count;
    conv->add_option("--train-features", conv_train_features, "year-0 features CSV")
        ->required();
    conv->add_option("--truth", conv_truth, "county truth CSV")->required();
    conv->add_option("--truth-column", conv_truth_col, "truth column name");
    conv->add_option("--test-features", conv_test_features, "year-1 features CSV")
        ->required();
    conv->add_option("--rounds", conv_rounds, "boosting rounds");
    conv->add_option("--depth", conv_depth, "tree depth");
    conv->add_option("--shrinkage", conv_shrinkage, "learning rate");
    conv->add_option("--log-target", conv_log_target, "fit on log1p targets");
    conv->add_option("--cell-count-feature", conv_cell_count,
                     "append county cell count as a feature");

    // evaluate
    auto* evaluate = app.add_subcommand("evaluate", "county metrics table");
    Common evaluate_common;
    add_common(evaluate, evaluate_common);
    std::string eval_truth, eval_truth_col = "pop_t1";
    std::vector<std::string> eval_estimates;
    evaluate->add_option("--truth", eval_truth, "county truth CSV")->required();
    evaluate->add_option("--truth-column", eval_truth_col, "truth column name");
    evaluate
        ->add_option("--estimate", eval_estimates,
                     "NAME=path.csv estimate table (repeatable)")
        ->required();

    // interpret
    auto* interp = app.add_subcommand("interpret", "probability maps, top-k, error maps");
    Common interp_common;
    add_common(interp, interp_common);
    std::string int_probs, int_pred, int_truth, int_tiles;
    std::vector<int> int_classes;
    int int_topk = 8;
    int int_topcomp = 10;
    interp->add_option("--probs", int_probs, "probability raster dir")->required();
    interp->add_option("--pred", int_pred, "predicted class .asc")->required();
    interp->add_option("--truth", int_truth, "truth class .asc")->required();
    interp->add_option("--tiles", int_tiles, "PGTS stack (dump top-k tile images)");
    interp->add_option("--classes", int_classes, "class list (default: all)")
        ->delimiter(',');
    interp->add_option("--top-k", int_topk, "tiles per class");
    interp->add_option("--top-components", int_topcomp, "error components to report");

    // info
    auto* info = app.add_subcommand("info", "inspect any artifact file");
    std::string info_path;
    info->add_option("path", info_path, "artifact file")->required();

    try {
        app.parse(argc, argv);

        if (synth->parsed()) {
            Config cfg = synth_common.resolve();
            if (synth_tile) cfg.tile_h = cfg.tile_w = *synth_tile;
            if (synth_bands) cfg.bands = *synth_bands;
            cmd_synth(synth_common, cfg, rows, cols, cities, confusers, county_rows,
                      county_cols, peak_min, peak_max, radius_min, radius_max, growth_min,
                      growth_max);
        } else if (bin->parsed()) {
            cmd_bin(bin_common, bin_common.resolve(), bin_input);
        } else if (sample->parsed()) {
            Config cfg = sample_common.resolve();
            if (sample_chunk) cfg.chunk_size = *sample_chunk;
            if (sample_train_frac) cfg.train_frac = *sample_train_frac;
            if (sample_val_frac) cfg.val_frac = *sample_val_frac;
            cfg.validate();
            cmd_sample(sample_common, cfg, sample_classes);
        } else if (train->parsed()) {
            Config cfg = train_common.resolve();
            if (train_preset) cfg.preset = *train_preset;
            if (train_epochs) cfg.epochs = *train_epochs;
            if (train_batch) cfg.batch_size = *train_batch;
            if (train_chunk) cfg.chunk_size = *train_chunk;
            if (train_nclasses) cfg.n_classes = *train_nclasses;
            if (train_alpha) cfg.adam_alpha = *train_alpha;
            cfg.validate();
            cmd_train(train_common, cfg, train_tiles, train_classes, train_samples);
        } else if (predict->parsed()) {
            if (predict_models.empty() == predict_model_file.empty())
                throw UsageError("predict needs exactly one of --models or --model");
            cmd_predict(predict_common, predict_common.resolve(), predict_models,
                        predict_model_file, predict_tiles, predict_grid_path);
        } else if (aggregate->parsed()) {
            cmd_aggregate(aggregate_common, aggregate_common.resolve(), agg_classes,
                          agg_counties, agg_probs);
        } else if (conv->parsed()) {
            Config cfg = conv_common.resolve();
            if (conv_rounds) cfg.gbrt_rounds = *conv_rounds;
            if (conv_depth) cfg.gbrt_depth = *conv_depth;
            if (conv_shrinkage) cfg.gbrt_shrinkage = *conv_shrinkage;
            if (conv_log_target) cfg.gbrt_log_target = *conv_log_target;
            if (conv_cell_count) cfg.gbrt_cell_count_feature = *conv_cell_count;
            cfg.validate();
            cmd_convaug(conv_common, cfg, conv_train_features, conv_truth, conv_truth_col,
                        conv_test_features);
        } else if (evaluate->parsed()) {
            cmd_evaluate(evaluate_common, evaluate_common.resolve(), eval_truth,
                         eval_truth_col, eval_estimates);
        } else if (interp->parsed()) {
            cmd_interpret(interp_common, interp_common.resolve(), int_probs, int_pred,
                          int_truth, int_tiles, int_classes, int_topk, int_topcomp);
        } else if (info->parsed()) {
            cmd_info(info_path);
        }
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    } catch (const UsageError& e) {
        std::cerr << "error (usage): " << e.what() << "\n";
        return 1;
    } catch (const NumericError& e) {
        std::cerr << "error (numeric): " << e.what() << "\n";
        return 3;
    } catch (const DataError& e) {
        std::cerr << "error (data): " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}

int run(const std::vector<std::string>& args) {
    std::vector<std::string> full;
    full.push_back("popgrid");
    full.insert(full.end(), args.begin(), args.end());
    std::vector<const char*> argv;
    for (const auto& a : full) argv.push_back(a.c_str());
    return run(static_cast<int>(argv.size()), argv.data());
}

}  // namespace popgrid::cli
