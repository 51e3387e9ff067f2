#pragma once

#include <cstddef>

namespace popgrid::nn::kern {

// Every kernel exists twice: a plain serial reference and an OpenMP version
// that parallelizes only over independent output elements, keeping each
// element's accumulation order identical. The two backends therefore produce
// bit-identical results; tests assert this and the bench target compares
// their speed. Dispatch goes through the kern:: level functions.
enum class Backend { Serial, OpenMP };

Backend active_backend();
void set_backend(Backend b);
bool openmp_compiled();

namespace serial {

// conv 3x3, stride 1, zero ("same") padding.
// in [n, ic, h, w], weights [oc, ic, 3, 3], bias [oc], out [n, oc, h, w]
void conv3x3_forward(const double* in, const double* weights, const double* bias,
                     double* out, int n, int ic, int h, int w, int oc);
void conv3x3_backward_input(const double* dout, const double* weights, double* din,
                            int n, int ic, int h, int w, int oc);
void conv3x3_backward_params(const double* dout, const double* in, double* dweights,
                             double* dbias, int n, int ic, int h, int w, int oc);

// in [n, fin], weights [fout, fin], bias [fout], out [n, fout]
void dense_forward(const double* in, const double* weights, const double* bias,
                   double* out, int n, int fin, int fout);
void dense_backward_input(const double* dout, const double* weights, double* din,
                          int n, int fin, int fout);
void dense_backward_params(const double* dout, const double* in, double* dweights,
                           double* dbias, int n, int fin, int fout);

// 2x2 window, stride 2, floor semantics: out is [n, c, h/2, w/2]. argmax
// stores the flat input index of each window maximum (first hit wins ties).
void maxpool2x2_forward(const double* in, double* out, std::size_t* argmax, int n,
                        int c, int h, int w);
void maxpool2x2_backward(const double* dout, const std::size_t* argmax, double* din,
                         int n, int c, int h, int w);

}  // namespace serial

namespace omp {

void conv3x3_forward(const double* in, const double* weights, const double* bias,
                     double* out, int n, int ic, int h, int w, int oc);
void conv3x3_backward_input(const double* dout, const double* weights, double* din,
                            int n, int ic, int h, int w, int oc);
void conv3x3_backward_params(const double* dout, const double* in, double* dweights,
                             double* dbias, int n, int ic, int h, int w, int oc);
void dense_forward(const double* in, const double* weights, const double* bias,
                   double* out, int n, int fin, int fout);
void dense_backward_input(const double* dout, const double* weights, double* din,
                          int n, int fin, int fout);
void dense_backward_params(const double* dout, const double* in, double* dweights,
                           double* dbias, int n, int fin, int fout);
void maxpool2x2_forward(const double* in, double* out, std::size_t* argmax, int n,
                        int c, int h, int w);
void maxpool2x2_backward(const double* dout, const std::size_t* argmax, double* din,
                         int n, int c, int h, int w);

}  // namespace omp

void conv3x3_forward(const double* in, const double* weights, const double* bias,
                     double* out, int n, int ic, int h, int w, int oc);
void conv3x3_backward_input(const double* dout, const double* weights, double* din,
                            int n, int ic, int h, int w, int oc);
void conv3x3_backward_params(const double* dout, const double* in, double* dweights,
                             double* dbias, int n, int ic, int h, int w, int oc);
void dense_forward(const double* in, const double* weights, const double* bias,
                   double* out, int n, int fin, int fout);
void dense_backward_input(const double* dout, const double* weights, double* din,
                          int n, int fin, int fout);
void dense_backward_params(const double* dout, const double* in, double* dweights,
                           double* dbias, int n, int fin, int fout);
void maxpool2x2_forward(const double* in, double* out, std::size_t* argmax, int n,
                        int c, int h, int w);
void maxpool2x2_backward(const double* dout, const std::size_t* argmax, double* din,
                         int n, int c, int h, int w);

}  // namespace popgrid::nn::kern
