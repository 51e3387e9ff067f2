#include "popgrid/config.hpp"

#include <fstream>

#include "popgrid/errors.hpp"
#include "popgrid/textio.hpp"

namespace popgrid {

namespace {

double need_double(const std::string& key, const std::string& value) {
    auto v = parse_double(value);
    if (!v) throw UsageError("config key '" + key + "': unparsable value '" + value + "'");
    return *v;
}

long long need_int(const std::string& key, const std::string& value) {
    auto v = parse_int(value);
    if (!v) throw UsageError("config key '" + key + "': unparsable value '" + value + "'");
    return *v;
}

bool need_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1") return true;
    if (value == "false" || value == "0") return false;
    throw UsageError("config key '" + key + "': expected true/false, got '" + value + "'");
}

}  // namespace

void apply_config_entry(Config& cfg, const std::string& key, const std::string& value) {
    if (key == "cell_size") cfg.cell_size = need_double(key, value);
    else if (key == "origin_lon") cfg.origin_lon = need_double(key, value);
    else if (key == "origin_lat") cfg.origin_lat = need_double(key, value);
    else if (key == "tile_h") cfg.tile_h = static_cast<int>(need_int(key, value));
    else if (key == "tile_w") cfg.tile_w = static_cast<int>(need_int(key, value));
    else if (key == "bands") cfg.bands = static_cast<int>(need_int(key, value));
    else if (key == "chunk_size") cfg.chunk_size = static_cast<int>(need_int(key, value));
    else if (key == "train_frac") cfg.train_frac = need_double(key, value);
    else if (key == "val_frac") cfg.val_frac = need_double(key, value);
    else if (key == "batch_size") cfg.batch_size = static_cast<int>(need_int(key, value));
    else if (key == "epochs") cfg.epochs = static_cast<int>(need_int(key, value));
    else if (key == "adam_alpha") cfg.adam_alpha = need_double(key, value);
    else if (key == "adam_beta1") cfg.adam_beta1 = need_double(key, value);
    else if (key == "adam_beta2") cfg.adam_beta2 = need_double(key, value);
    else if (key == "adam_eps") cfg.adam_eps = need_double(key, value);
    else if (key == "preset") cfg.preset = value;
    else if (key == "n_classes") cfg.n_classes = static_cast<int>(need_int(key, value));
    else if (key == "gbrt_rounds") cfg.gbrt_rounds = static_cast<int>(need_int(key, value));
    else if (key == "gbrt_depth") cfg.gbrt_depth = static_cast<int>(need_int(key, value));
    else if (key == "gbrt_shrinkage") cfg.gbrt_shrinkage = need_double(key, value);
    else if (key == "gbrt_log_target") cfg.gbrt_log_target = need_bool(key, value);
    else if (key == "gbrt_cell_count_feature")
        cfg.gbrt_cell_count_feature = need_bool(key, value);
    else if (key == "seed")
        cfg.seed = static_cast<std::uint64_t>(need_int(key, value));
    else
        throw UsageError("unknown config key '" + key + "'");
}

void Config::validate() const {
    if (!(cell_size > 0)) throw UsageError("cell_size must be positive");
    if (tile_h < 1 || tile_w < 1 || bands < 1)
        throw UsageError("tile dims and bands must be >= 1");
    if (chunk_size < 1) throw UsageError("chunk_size must be >= 1");
    if (!(train_frac > 0) || !(val_frac > 0) || train_frac + val_frac > 1.0)
        throw UsageError("require 0 < train_frac, 0 < val_frac, sum <= 1");
    if (batch_size < 1) throw UsageError("batch_size must be >= 1");
    if (epochs < 1) throw UsageError("epochs must be >= 1");
    if (!(adam_alpha > 0)) throw UsageError("adam_alpha must be positive");
    if (n_classes < 0) throw UsageError("n_classes must be >= 0 (0 = auto)");
    if (gbrt_rounds < 0 || gbrt_depth < 1 || !(gbrt_shrinkage > 0) || gbrt_shrinkage > 1.0)
        throw UsageError("gbrt: rounds >= 0, depth >= 1, shrinkage in (0, 1]");
}

Config load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw UsageError("cannot open config file: " + path.string());
    Config cfg;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        auto t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        auto eq = t.find('=');
        if (eq == std::string_view::npos)
            throw UsageError("config line " + std::to_string(line_no) +
                             ": expected key=value");
        std::string key(trim(t.substr(0, eq)));
        std::string value(trim(t.substr(eq + 1)));
        apply_config_entry(cfg, key, value);
    }
    cfg.validate();
    return cfg;
}

std::map<std::string, std::string> Config::to_kv() const {
    std::map<std::string, std::string> kv;
    kv["cell_size"] = format_double(cell_size);
    kv["origin_lon"] = format_double(origin_lon);
    kv["origin_lat"] = format_double(origin_lat);
    kv["tile_h"] = format_int(tile_h);
    kv["tile_w"] = format_int(tile_w);
    kv["bands"] = format_int(bands);
    kv["chunk_size"] = format_int(chunk_size);
    kv["train_frac"] = format_double(train_frac);
    kv["val_frac"] = format_double(val_frac);
    kv["batch_size"] = format_int(batch_size);
    kv["epochs"] = format_int(epochs);
    kv["adam_alpha"] = format_double(adam_alpha);
    kv["adam_beta1"] = format_double(adam_beta1);
    kv["adam_beta2"] = format_double(adam_beta2);
    kv["adam_eps"] = format_double(adam_eps);
    kv["preset"] = preset;
    kv["n_classes"] = format_int(n_classes);
    kv["gbrt_rounds"] = format_int(gbrt_rounds);
    kv["gbrt_depth"] = format_int(gbrt_depth);
    kv["gbrt_shrinkage"] = format_double(gbrt_shrinkage);
    kv["gbrt_log_target"] = gbrt_log_target ? "true" : "false";
    kv["gbrt_cell_count_feature"] = gbrt_cell_count_feature ? "true" : "false";
    kv["seed"] = format_int(static_cast<long long>(seed));
    return kv;
}

}  // namespace popgrid
