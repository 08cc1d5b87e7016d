#include "echomem/fft.hpp"

#include <fftw3.h>

#include <mutex>
#include <numbers>

namespace echomem {

namespace {
// FFTW plan creation is not thread safe; execution of a plan is.
std::mutex& plan_mutex()
{
    static std::mutex m;
    return m;
}

std::vector<cplx> run(const std::vector<cplx>& in, int sign)
{
    std::vector<cplx> out(in.size());
    if (in.empty())
        return out;
    // FFTW_ESTIMATE does not touch the arrays, so planning on the actual
    // buffers is safe.
    fftw_plan plan;
    {
        std::lock_guard lock(plan_mutex());
        plan = fftw_plan_dft_1d(
            static_cast<int>(in.size()),
            reinterpret_cast<fftw_complex*>(const_cast<cplx*>(in.data())),
            reinterpret_cast<fftw_complex*>(out.data()),
            sign, FFTW_ESTIMATE | FFTW_PRESERVE_INPUT);
    }
    fftw_execute(plan);
    {
        std::lock_guard lock(plan_mutex());
        fftw_destroy_plan(plan);
    }
    return out;
}
} // namespace

std::vector<cplx> fft_forward(const std::vector<cplx>& in)
{
    return run(in, FFTW_FORWARD);
}

std::vector<cplx> fft_inverse(const std::vector<cplx>& in)
{
    return run(in, FFTW_BACKWARD);
}

double fft_omega(std::size_t k, std::size_t n, double dt)
{
    const double df = 1.0 / (static_cast<double>(n) * dt);
    auto ks = static_cast<long long>(k);
    const auto nn = static_cast<long long>(n);
    if (ks > nn / 2)
        ks -= nn;
    return 2.0 * std::numbers::pi * static_cast<double>(ks) * df;
}

} // namespace echomem
