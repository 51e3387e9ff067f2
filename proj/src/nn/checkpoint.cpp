#include "popgrid/nn/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "popgrid/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "PGNN codec assumes a little-endian host");

namespace popgrid::nn {

using nlohmann::json;

namespace {

constexpr char kMagic[4] = {'P', 'G', 'N', 'N'};
constexpr std::uint16_t kVersion = 1;

json arch_to_json(const ArchitectureSpec& spec) {
    json layers = json::array();
    for (const auto& l : spec.layers) {
        json jl;
        jl["kind"] = layer_kind_name(l.kind);
        if (l.units) jl["units"] = l.units;
        if (l.rate != 0.0) jl["rate"] = l.rate;
        layers.push_back(std::move(jl));
    }
    return json{{"input", {spec.in_h, spec.in_w, spec.in_bands}},
                {"n_classes", spec.n_classes},
                {"preset", spec.preset},
                {"layers", std::move(layers)}};
}

ArchitectureSpec arch_from_json(const json& j) {
    ArchitectureSpec spec;
    spec.in_h = j.at("input").at(0).get<int>();
    spec.in_w = j.at("input").at(1).get<int>();
    spec.in_bands = j.at("input").at(2).get<int>();
    spec.n_classes = j.at("n_classes").get<int>();
    spec.preset = j.value("preset", "");
    for (const auto& jl : j.at("layers")) {
        LayerSpec l{layer_kind_from_name(jl.at("kind").get<std::string>()),
                    jl.value("units", 0), jl.value("rate", 0.0)};
        spec.layers.push_back(l);
    }
    return spec;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
    json header;
    header["arch"] = arch_to_json(ckpt.spec);
    header["band_min"] = ckpt.band_min;
    header["band_max"] = ckpt.band_max;
    header["seed"] = ckpt.seed;
    json hist = json::array();
    for (const auto& e : ckpt.history) {
        hist.push_back({{"epoch", e.epoch},
                        {"train_loss", e.train_loss},
                        {"val_loss", e.val_loss},
                        {"val_top1", e.val_top1},
                        {"val_top3", e.val_top3}});
    }
    header["history"] = std::move(hist);

    json tensors = json::array();
    auto record = [&tensors](const ParamSet& set, const char* role) {
        for (std::size_t li = 0; li < set.size(); ++li)
            for (const Tensor& t : set[li])
                tensors.push_back({{"layer", li}, {"role", role}, {"shape", t.shape}});
    };
    record(ckpt.params, "param");
    record(ckpt.bn_state, "state");
    header["tensors"] = std::move(tensors);

    std::string hbytes = header.dump();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open for writing: " + path.string());
    out.write(kMagic, 4);
    out.write(reinterpret_cast<const char*>(&kVersion), 2);
    std::uint64_t hlen = hbytes.size();
    out.write(reinterpret_cast<const char*>(&hlen), 8);
    out.write(hbytes.data(), static_cast<std::streamsize>(hbytes.size()));
    auto dump = [&out](const ParamSet& set) {
        for (const auto& layer : set)
            for (const Tensor& t : layer)
                out.write(reinterpret_cast<const char*>(t.data.data()),
                          static_cast<std::streamsize>(t.data.size() * sizeof(double)));
    };
    dump(ckpt.params);
    dump(ckpt.bn_state);
    if (!out) throw DataError("write failed: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open checkpoint: " + path.string());
    char magic[4] = {};
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0)
        throw ParseError(ParseError::Kind::BadMagic, 0, "not a PGNN file: " + path.string());
    std::uint16_t version = 0;
    in.read(reinterpret_cast<char*>(&version), 2);
    if (!in || version != kVersion)
        throw ParseError(ParseError::Kind::BadVersion, 0,
                         "unsupported PGNN version " + std::to_string(version));
    std::uint64_t hlen = 0;
    in.read(reinterpret_cast<char*>(&hlen), 8);
    if (!in) throw ParseError(ParseError::Kind::Truncated, 0, "truncated PGNN header");
    std::string hbytes(hlen, '\0');
    in.read(hbytes.data(), static_cast<std::streamsize>(hlen));
    if (static_cast<std::uint64_t>(in.gcount()) != hlen)
        throw ParseError(ParseError::Kind::Truncated, 0, "truncated PGNN header");

    json header;
    try {
        header = json::parse(hbytes);
    } catch (const json::exception& e) {
        throw ParseError(ParseError::Kind::MalformedHeader, 0,
                         std::string("invalid PGNN header JSON: ") + e.what());
    }

    Checkpoint ckpt;
    ckpt.spec = arch_from_json(header.at("arch"));
    ckpt.band_min = header.at("band_min").get<std::vector<double>>();
    ckpt.band_max = header.at("band_max").get<std::vector<double>>();
    ckpt.seed = header.value("seed", 0ULL);
    for (const auto& je : header.at("history")) {
        EpochStats e;
        e.epoch = je.at("epoch").get<int>();
        e.train_loss = je.at("train_loss").get<double>();
        e.val_loss = je.at("val_loss").get<double>();
        e.val_top1 = je.at("val_top1").get<double>();
        e.val_top3 = je.at("val_top3").get<double>();
        ckpt.history.push_back(e);
    }

    ckpt.params.resize(ckpt.spec.layers.size());
    ckpt.bn_state.resize(ckpt.spec.layers.size());
    for (const auto& jt : header.at("tensors")) {
        std::size_t li = jt.at("layer").get<std::size_t>();
        std::string role = jt.at("role").get<std::string>();
        Tensor t(jt.at("shape").get<std::vector<int>>());
        if (li >= ckpt.spec.layers.size())
            throw ParseError(ParseError::Kind::MalformedHeader, 0,
                             "tensor layer index out of range");
        in.read(reinterpret_cast<char*>(t.data.data()),
                static_cast<std::streamsize>(t.data.size() * sizeof(double)));
        if (static_cast<std::size_t>(in.gcount()) != t.data.size() * sizeof(double))
            throw ParseError(ParseError::Kind::Truncated, 0, "truncated PGNN payload");
        (role == "param" ? ckpt.params : ckpt.bn_state)[li].push_back(std::move(t));
    }
    in.peek();
    if (!in.eof())
        throw ParseError(ParseError::Kind::DimensionMismatch, 0,
                         "trailing bytes after PGNN payload");
    return ckpt;
}

}  // namespace popgrid::nn
