#pragma once

#include <cstddef>
#include <vector>

namespace popgrid::nn {

// Dense row-major tensor of doubles. Training runs in 64-bit throughout so
// the finite-difference gradient oracle has headroom.
struct Tensor {
    std::vector<int> shape;
    std::vector<double> data;

    Tensor() = default;
    explicit Tensor(std::vector<int> s) : shape(std::move(s)) {
        std::size_t n = 1;
        for (int d : shape) n *= static_cast<std::size_t>(d);
        data.assign(n, 0.0);
    }

    std::size_t size() const { return data.size(); }

    bool operator==(const Tensor&) const = default;
};

// params[layer][tensor]; layers without parameters hold empty vectors.
using ParamSet = std::vector<std::vector<Tensor>>;

}  // namespace popgrid::nn
