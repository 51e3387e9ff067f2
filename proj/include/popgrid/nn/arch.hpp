#pragma once

#include <string>
#include <vector>

namespace popgrid::nn {

enum class LayerKind {
    Conv3x3,     // same padding, stride 1
    MaxPool2x2,  // stride 2, floor semantics
    Relu,
    Flatten,
    Dense,
    Dropout,
    BatchNorm,
    Softmax,
};

const char* layer_kind_name(LayerKind k);
LayerKind layer_kind_from_name(const std::string& name);

struct LayerSpec {
    LayerKind kind;
    int units = 0;      // conv output channels / dense units
    double rate = 0.0;  // dropout rate

    bool operator==(const LayerSpec&) const = default;
};

struct ArchitectureSpec {
    int in_h = 0;
    int in_w = 0;
    int in_bands = 0;
    std::vector<LayerSpec> layers;
    int n_classes = 0;
    std::string preset;

    bool operator==(const ArchitectureSpec&) const = default;
};

// Activation shape between layers: spatial (c,h,w) until Flatten, then flat.
struct ActShape {
    bool flat = false;
    int c = 0;
    int h = 0;
    int w = 0;

    int features() const { return flat ? c : c * h * w; }
    bool operator==(const ActShape&) const = default;
};

// Static shape check. Returns the output shape of every layer; throws
// DataError naming the offending layer index on any mismatch. Also enforces
// that the final layer is a softmax of width n_classes.
std::vector<ActShape> trace_shapes(const ArchitectureSpec& spec);

// Presets:
//   "vgg-a-paper": 74x74 input, conv blocks [64, 128, 256x2, 512x2, 512x2]
//                  each followed by a maxpool, then dense 4096 x2.
//   "micro":       74x74 input, blocks [8, 16, 32, 32, 32], dense 64 x2.
//   "tiny":        18x18 input, blocks [8, 16], dense 32 x2 (fast tests).
ArchitectureSpec build_preset(const std::string& name, int bands, int n_classes);

}  // namespace popgrid::nn
