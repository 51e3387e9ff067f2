#include "popgrid/nn/arch.hpp"

#include <string>

#include "popgrid/errors.hpp"

namespace popgrid::nn {

const char* layer_kind_name(LayerKind k) {
    switch (k) {
        case LayerKind::Conv3x3: return "conv3x3";
        case LayerKind::MaxPool2x2: return "maxpool2x2";
        case LayerKind::Relu: return "relu";
        case LayerKind::Flatten: return "flatten";
        case LayerKind::Dense: return "dense";
        case LayerKind::Dropout: return "dropout";
        case LayerKind::BatchNorm: return "batchnorm";
        case LayerKind::Softmax: return "softmax";
    }
    return "?";
}

LayerKind layer_kind_from_name(const std::string& name) {
    if (name == "conv3x3") return LayerKind::Conv3x3;
    if (name == "maxpool2x2") return LayerKind::MaxPool2x2;
    if (name == "relu") return LayerKind::Relu;
    if (name == "flatten") return LayerKind::Flatten;
    if (name == "dense") return LayerKind::Dense;
    if (name == "dropout") return LayerKind::Dropout;
    if (name == "batchnorm") return LayerKind::BatchNorm;
    if (name == "softmax") return LayerKind::Softmax;
    throw DataError("unknown layer kind '" + name + "'");
}

std::vector<ActShape> trace_shapes(const ArchitectureSpec& spec) {
    auto fail = [](std::size_t layer, const std::string& msg) -> void {
        throw DataError("layer " + std::to_string(layer) + ": " + msg);
    };

    if (spec.in_h < 1 || spec.in_w < 1 || spec.in_bands < 1)
        throw DataError("architecture input dims must be >= 1");
    if (spec.n_classes < 2) throw DataError("n_classes must be >= 2");
    if (spec.layers.empty()) throw DataError("architecture has no layers");

    ActShape cur{false, spec.in_bands, spec.in_h, spec.in_w};
    std::vector<ActShape> out;
    out.reserve(spec.layers.size());

    for (std::size_t li = 0; li < spec.layers.size(); ++li) {
        const LayerSpec& layer = spec.layers[li];
        switch (layer.kind) {
            case LayerKind::Conv3x3:
                if (cur.flat) fail(li, "conv3x3 needs a spatial input");
                if (layer.units < 1) fail(li, "conv3x3 needs out_channels >= 1");
                cur = ActShape{false, layer.units, cur.h, cur.w};
                break;
            case LayerKind::MaxPool2x2:
                if (cur.flat) fail(li, "maxpool2x2 needs a spatial input");
                if (cur.h < 2 || cur.w < 2) fail(li, "maxpool2x2 input smaller than 2x2");
                cur = ActShape{false, cur.c, cur.h / 2, cur.w / 2};
                break;
            case LayerKind::Relu:
            case LayerKind::BatchNorm:
                break;  // shape preserved
            case LayerKind::Dropout:
                if (layer.rate < 0.0 || layer.rate >= 1.0)
                    fail(li, "dropout rate must be in [0, 1)");
                break;
            case LayerKind::Flatten:
                if (cur.flat) fail(li, "flatten applied to flat input");
                cur = ActShape{true, cur.c * cur.h * cur.w, 0, 0};
                break;
            case LayerKind::Dense:
                if (!cur.flat) fail(li, "dense needs a flat input (missing flatten?)");
                if (layer.units < 1) fail(li, "dense needs units >= 1");
                cur = ActShape{true, layer.units, 0, 0};
                break;
            case LayerKind::Softmax:
                if (!cur.flat) fail(li, "softmax needs a flat input");
                if (li + 1 != spec.layers.size()) fail(li, "softmax must be the final layer");
                if (cur.c != spec.n_classes)
                    fail(li, "softmax width " + std::to_string(cur.c) +
                                 " does not match n_classes " + std::to_string(spec.n_classes));
                break;
        }
        out.push_back(cur);
    }

    if (spec.layers.back().kind != LayerKind::Softmax)
        throw DataError("final layer must be softmax");
    return out;
}

ArchitectureSpec build_preset(const std::string& name, int bands, int n_classes) {
    ArchitectureSpec spec;
    spec.in_bands = bands;
    spec.n_classes = n_classes;
    spec.preset = name;

    auto block = [&spec](int channels, int convs) {
        for (int k = 0; k < convs; ++k) {
            spec.layers.push_back({LayerKind::Conv3x3, channels});
            spec.layers.push_back({LayerKind::Relu});
        }
        spec.layers.push_back({LayerKind::MaxPool2x2});
    };
    auto head = [&spec, n_classes](int units) {
        spec.layers.push_back({LayerKind::Flatten});
        spec.layers.push_back({LayerKind::Dense, units});
        spec.layers.push_back({LayerKind::Relu});
        spec.layers.push_back({LayerKind::Dense, units});
        spec.layers.push_back({LayerKind::Relu});
        spec.layers.push_back({LayerKind::Dense, n_classes});
        spec.layers.push_back({LayerKind::Softmax});
    };

    if (name == "vgg-a-paper") {
        spec.in_h = spec.in_w = 74;
        block(64, 1);
        block(128, 1);
        block(256, 2);
        block(512, 2);
        block(512, 2);
        head(4096);
    } else if (name == "micro") {
        spec.in_h = spec.in_w = 74;
        for (int ch : {8, 16, 32, 32, 32}) block(ch, 1);
        head(64);
    } else if (name == "tiny") {
        spec.in_h = spec.in_w = 18;
        block(8, 1);
        block(16, 1);
        head(32);
    } else {
        throw UsageError("unknown preset '" + name + "'");
    }

    trace_shapes(spec);  // constructor contract: presets shape-check
    return spec;
}

}  // namespace popgrid::nn
