#include <doctest.h>

#include <vector>

#include "popgrid/nn/kernels.hpp"
#include "popgrid/rng.hpp"

using namespace popgrid;
using namespace popgrid::nn;

namespace {

std::vector<double> random_vec(SplitMix64& rng, std::size_t n, double lo = -1.0,
                               double hi = 1.0) {
    std::vector<double> v(n);
    for (auto& x : v) x = rng.next_uniform(lo, hi);
    return v;
}

}  // namespace

// The OpenMP kernels must reproduce the serial reference bit for bit: they
// parallelize over output elements only, with identical per-element
// accumulation order.
TEST_CASE("serial and OpenMP kernels agree bit-exactly") {
    SplitMix64 rng(555);
    const int n = 3, ic = 4, h = 9, w = 7, oc = 5;
    auto in = random_vec(rng, static_cast<std::size_t>(n) * ic * h * w);
    auto weights = random_vec(rng, static_cast<std::size_t>(oc) * ic * 9);
    auto bias = random_vec(rng, oc);
    auto dout = random_vec(rng, static_cast<std::size_t>(n) * oc * h * w);

    std::vector<double> out_a(static_cast<std::size_t>(n) * oc * h * w);
    std::vector<double> out_b(out_a.size());
    kern::serial::conv3x3_forward(in.data(), weights.data(), bias.data(), out_a.data(), n,
                                  ic, h, w, oc);
    kern::omp::conv3x3_forward(in.data(), weights.data(), bias.data(), out_b.data(), n,
                               ic, h, w, oc);
    CHECK(out_a == out_b);

    std::vector<double> din_a(in.size());
    std::vector<double> din_b(in.size());
    kern::serial::conv3x3_backward_input(dout.data(), weights.data(), din_a.data(), n, ic,
                                         h, w, oc);
    kern::omp::conv3x3_backward_input(dout.data(), weights.data(), din_b.data(), n, ic, h,
                                      w, oc);
    CHECK(din_a == din_b);

    std::vector<double> dw_a(weights.size());
    std::vector<double> dw_b(weights.size());
    std::vector<double> db_a(static_cast<std::size_t>(oc));
    std::vector<double> db_b(static_cast<std::size_t>(oc));
    kern::serial::conv3x3_backward_params(dout.data(), in.data(), dw_a.data(), db_a.data(),
                                          n, ic, h, w, oc);
    kern::omp::conv3x3_backward_params(dout.data(), in.data(), dw_b.data(), db_b.data(), n,
                                       ic, h, w, oc);
    CHECK(dw_a == dw_b);
    CHECK(db_a == db_b);

    const int fin = 33, fout = 17;
    auto din2 = random_vec(rng, static_cast<std::size_t>(n) * fin);
    auto w2 = random_vec(rng, static_cast<std::size_t>(fout) * fin);
    auto b2 = random_vec(rng, fout);
    auto dout2 = random_vec(rng, static_cast<std::size_t>(n) * fout);

    std::vector<double> fo_a(static_cast<std::size_t>(n) * fout);
    std::vector<double> fo_b(fo_a.size());
    kern::serial::dense_forward(din2.data(), w2.data(), b2.data(), fo_a.data(), n, fin,
                                fout);
    kern::omp::dense_forward(din2.data(), w2.data(), b2.data(), fo_b.data(), n, fin, fout);
    CHECK(fo_a == fo_b);

    std::vector<double> dd_a(din2.size());
    std::vector<double> dd_b(din2.size());
    kern::serial::dense_backward_input(dout2.data(), w2.data(), dd_a.data(), n, fin, fout);
    kern::omp::dense_backward_input(dout2.data(), w2.data(), dd_b.data(), n, fin, fout);
    CHECK(dd_a == dd_b);

    std::vector<double> dw2_a(w2.size());
    std::vector<double> dw2_b(w2.size());
    std::vector<double> db2_a(static_cast<std::size_t>(fout));
    std::vector<double> db2_b(static_cast<std::size_t>(fout));
    kern::serial::dense_backward_params(dout2.data(), din2.data(), dw2_a.data(),
                                        db2_a.data(), n, fin, fout);
    kern::omp::dense_backward_params(dout2.data(), din2.data(), dw2_b.data(), db2_b.data(),
                                     n, fin, fout);
    CHECK(dw2_a == dw2_b);
    CHECK(db2_a == db2_b);

    // maxpool with odd dims (floor semantics)
    std::vector<double> pool_out_a(static_cast<std::size_t>(n) * ic * (h / 2) * (w / 2));
    std::vector<double> pool_out_b(pool_out_a.size());
    std::vector<std::size_t> am_a(pool_out_a.size());
    std::vector<std::size_t> am_b(pool_out_a.size());
    kern::serial::maxpool2x2_forward(in.data(), pool_out_a.data(), am_a.data(), n, ic, h, w);
    kern::omp::maxpool2x2_forward(in.data(), pool_out_b.data(), am_b.data(), n, ic, h, w);
    CHECK(pool_out_a == pool_out_b);
    CHECK(am_a == am_b);

    auto pd = random_vec(rng, pool_out_a.size());
    std::vector<double> pdin_a(in.size());
    std::vector<double> pdin_b(in.size());
    kern::serial::maxpool2x2_backward(pd.data(), am_a.data(), pdin_a.data(), n, ic, h, w);
    kern::omp::maxpool2x2_backward(pd.data(), am_b.data(), pdin_b.data(), n, ic, h, w);
    CHECK(pdin_a == pdin_b);
}

TEST_CASE("conv3x3 with an identity-delta kernel reproduces its input") {
    const int n = 2, h = 6, w = 5;
    SplitMix64 rng(9);
    auto in = random_vec(rng, static_cast<std::size_t>(n) * h * w);
    std::vector<double> weights(9, 0.0);
    weights[4] = 1.0;  // center tap
    std::vector<double> bias(1, 0.0);
    std::vector<double> out(in.size());
    kern::conv3x3_forward(in.data(), weights.data(), bias.data(), out.data(), n, 1, h, w, 1);
    CHECK(out == in);
}

TEST_CASE("maxpool floor semantics drop trailing odd rows/cols") {
    // 3x3 plane pools to 1x1 using only the top-left 2x2 window
    std::vector<double> in = {1, 2, 9, 3, 4, 9, 9, 9, 9};
    std::vector<double> out(1);
    std::vector<std::size_t> argmax(1);
    kern::maxpool2x2_forward(in.data(), out.data(), argmax.data(), 1, 1, 3, 3);
    CHECK(out[0] == 4.0);
    CHECK(argmax[0] == 4);

    // backward scatters to the argmax only
    std::vector<double> dout = {2.5};
    std::vector<double> din(in.size());
    kern::maxpool2x2_backward(dout.data(), argmax.data(), din.data(), 1, 1, 3, 3);
    for (std::size_t k = 0; k < din.size(); ++k)
        CHECK(din[k] == (k == 4 ? 2.5 : 0.0));
}

TEST_CASE("backend dispatch honors set_backend") {
    auto saved = kern::active_backend();
    kern::set_backend(kern::Backend::Serial);
    CHECK(kern::active_backend() == kern::Backend::Serial);
    if (kern::openmp_compiled()) {
        kern::set_backend(kern::Backend::OpenMP);
        CHECK(kern::active_backend() == kern::Backend::OpenMP);
    }
    kern::set_backend(saved);
}
