// Thin FFTW3 wrapper for complex transforms on std::vector buffers.
// Convention: forward() computes X_k = sum_n x_n exp(-2*pi*i*k*n/N), so a
// spectral coefficient at angular frequency w_k = 2*pi*k/(N*dt) multiplies
// exp(+i*w_k*t) in the reconstruction x_n = (1/N) sum_k X_k exp(+i w_k t_n).

#pragma once

#include <complex>
#include <vector>

namespace echomem {

using cplx = std::complex<double>;

std::vector<cplx> fft_forward(const std::vector<cplx>& in);
std::vector<cplx> fft_inverse(const std::vector<cplx>& in); // unnormalized (scale 1/N yourself)

// Angular frequency of FFT bin k for an N-point transform with step dt,
// wrapped to (-pi/dt, pi/dt].
double fft_omega(std::size_t k, std::size_t n, double dt);

} // namespace echomem
