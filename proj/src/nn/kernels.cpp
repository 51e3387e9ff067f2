#include "popgrid/nn/kernels.hpp"

#include <atomic>

namespace popgrid::nn::kern {

namespace {

std::atomic<Backend> g_backend{
#ifdef _OPENMP
    Backend::OpenMP
#else
    Backend::Serial
#endif
};

}  // namespace

Backend active_backend() { return g_backend.load(std::memory_order_relaxed); }

void set_backend(Backend b) {
#ifndef _OPENMP
    b = Backend::Serial;
#endif
    g_backend.store(b, std::memory_order_relaxed);
}

bool openmp_compiled() {
#ifdef _OPENMP
    return true;
#else
    return false;
#endif
}

#define POPGRID_DISPATCH(fn, ...)                     \
    if (active_backend() == Backend::OpenMP) {        \
        omp::fn(__VA_ARGS__);                         \
    } else {                                          \
        serial::fn(__VA_ARGS__);                      \
    }

void conv3x3_forward(const double* in, const double* weights, const double* bias,
                     double* out, int n, int ic, int h, int w, int oc) {
    POPGRID_DISPATCH(conv3x3_forward, in, weights, bias, out, n, ic, h, w, oc)
}

void conv3x3_backward_input(const double* dout, const double* weights, double* din,
                            int n, int ic, int h, int w, int oc) {
    POPGRID_DISPATCH(conv3x3_backward_input, dout, weights, din, n, ic, h, w, oc)
}

void conv3x3_backward_params(const double* dout, const double* in, double* dweights,
                             double* dbias, int n, int ic, int h, int w, int oc) {
    POPGRID_DISPATCH(conv3x3_backward_params, dout, in, dweights, dbias, n, ic, h, w, oc)
}

void dense_forward(const double* in, const double* weights, const double* bias,
                   double* out, int n, int fin, int fout) {
    POPGRID_DISPATCH(dense_forward, in, weights, bias, out, n, fin, fout)
}

void dense_backward_input(const double* dout, const double* weights, double* din,
                          int n, int fin, int fout) {
    POPGRID_DISPATCH(dense_backward_input, dout, weights, din, n, fin, fout)
}

void dense_backward_params(const double* dout, const double* in, double* dweights,
                           double* dbias, int n, int fin, int fout) {
    POPGRID_DISPATCH(dense_backward_params, dout, in, dweights, dbias, n, fin, fout)
}

void maxpool2x2_forward(const double* in, double* out, std::size_t* argmax, int n,
                        int c, int h, int w) {
    POPGRID_DISPATCH(maxpool2x2_forward, in, out, argmax, n, c, h, w)
}

void maxpool2x2_backward(const double* dout, const std::size_t* argmax, double* din,
                         int n, int c, int h, int w) {
    POPGRID_DISPATCH(maxpool2x2_backward, dout, argmax, din, n, c, h, w)
}

#undef POPGRID_DISPATCH

}  // namespace popgrid::nn::kern
