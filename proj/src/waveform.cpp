#include "echomem/waveform.hpp"

#include "echomem/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace echomem {

void Waveform::validate() const
{
    if (dt <= 0.0)
        throw InvalidParameter("waveform: dt must be positive");
    if (samples.size() < 2)
        throw InvalidParameter("waveform: needs at least 2 samples");
    for (const cplx& s : samples)
        if (!std::isfinite(s.real()) || !std::isfinite(s.imag()))
            throw NumericalFailure("waveform: non-finite sample");
}

double energy(const Waveform& w)
{
    double acc = 0.0;
    for (const cplx& s : w.samples)
        acc += std::norm(s);
    return acc * w.dt;
}

Waveform scaled(Waveform w, cplx factor)
{
    for (cplx& s : w.samples)
        s *= factor;
    return w;
}

Waveform time_reversed(Waveform w)
{
    std::reverse(w.samples.begin(), w.samples.end());
    return w;
}

double best_overlap(const Waveform& a, const Waveform& b)
{
    const double ea = energy(a) / a.dt;
    const double eb = energy(b) / b.dt;
    if (ea <= 0.0 || eb <= 0.0)
        return 0.0;
    // Cross-correlate via zero-padded FFTs; the best integer lag gives the
    // mode overlap up to a timing shift.
    std::size_t n = 1;
    while (n < a.size() + b.size())
        n <<= 1;
    std::vector<cplx> fa(n, 0.0), fb(n, 0.0);
    std::copy(a.samples.begin(), a.samples.end(), fa.begin());
    std::copy(b.samples.begin(), b.samples.end(), fb.begin());
    auto Fa = fft_forward(fa);
    auto Fb = fft_forward(fb);
    for (std::size_t i = 0; i < n; ++i)
        Fa[i] = Fa[i] * std::conj(Fb[i]);
    auto corr = fft_inverse(Fa); // unnormalized; scale cancels in the ratio
    double best = 0.0;
    for (const cplx& c : corr)
        best = std::max(best, std::norm(c));
    return best / (static_cast<double>(n) * static_cast<double>(n) * ea * eb);
}

Spectrum spectrum(const Waveform& w)
{
    Spectrum s;
    s.coeff = fft_forward(w.samples);
    s.omega.resize(w.size());
    for (std::size_t k = 0; k < w.size(); ++k)
        s.omega[k] = fft_omega(k, w.size(), w.dt);
    return s;
}

double spectral_width(const Waveform& w, double fraction)
{
    const Spectrum s = spectrum(w);
    double total = 0.0;
    for (const cplx& c : s.coeff)
        total += std::norm(c);
    if (total <= 0.0)
        return 0.0;
    // Centroid, then grow a symmetric interval until `fraction` is inside.
    double centroid = 0.0;
    for (std::size_t k = 0; k < s.coeff.size(); ++k)
        centroid += s.omega[k] * std::norm(s.coeff[k]);
    centroid /= total;
    std::vector<std::pair<double, double>> byDist; // (|w - centroid|, power)
    byDist.reserve(s.coeff.size());
    for (std::size_t k = 0; k < s.coeff.size(); ++k)
        byDist.emplace_back(std::abs(s.omega[k] - centroid), std::norm(s.coeff[k]));
    std::sort(byDist.begin(), byDist.end());
    double acc = 0.0;
    for (const auto& [dist, p] : byDist) {
        acc += p;
        if (acc >= fraction * total)
            return 2.0 * dist;
    }
    return 2.0 * byDist.back().first;
}

double fit_instantaneous_frequency_slope(const Waveform& w,
                                         double energy_fraction,
                                         double min_energy)
{
    const double etot = energy(w);
    if (etot < min_energy)
        throw AnalysisFailure("chirp metric: waveform energy below threshold");

    // Contiguous window around the intensity peak holding the requested
    // energy fraction.
    std::size_t peak = 0;
    double pmax = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i)
        if (std::norm(w.samples[i]) > pmax) {
            pmax = std::norm(w.samples[i]);
            peak = i;
        }
    std::size_t lo = peak, hi = peak;
    double acc = std::norm(w.samples[peak]) * w.dt;
    while (acc < energy_fraction * etot && (lo > 0 || hi + 1 < w.size())) {
        const double left = lo > 0 ? std::norm(w.samples[lo - 1]) : -1.0;
        const double right = hi + 1 < w.size() ? std::norm(w.samples[hi + 1]) : -1.0;
        if (left >= right) {
            --lo;
            acc += left * w.dt;
        } else {
            ++hi;
            acc += right * w.dt;
        }
    }
    if (hi - lo < 4)
        throw AnalysisFailure("chirp metric: too few samples in energy window");

    // Instantaneous frequency from phase increments between neighboring
    // samples, weighted by local intensity; weighted least squares for the
    // slope.
    double sw = 0, st = 0, stt = 0, sf = 0, stf = 0;
    for (std::size_t i = lo; i < hi; ++i) {
        const cplx prod = w.samples[i + 1] * std::conj(w.samples[i]);
        const double weight = std::abs(prod);
        if (weight <= 0.0)
            continue;
        const double freq = std::arg(prod) / w.dt;
        const double t = w.time_at(i) + 0.5 * w.dt;
        sw += weight;
        st += weight * t;
        stt += weight * t * t;
        sf += weight * freq;
        stf += weight * t * freq;
    }
    const double det = sw * stt - st * st;
    if (sw <= 0.0 || std::abs(det) < 1e-300)
        throw AnalysisFailure("chirp metric: degenerate fit");
    return (sw * stf - st * sf) / det;
}

namespace {
Waveform blank(double window, double dt, double carrier)
{
    if (dt <= 0.0 || window <= dt)
        throw InvalidParameter("pulse generator: window and dt must be positive, window > dt");
    Waveform w;
    w.dt = dt;
    w.carrier = carrier;
    w.samples.assign(static_cast<std::size_t>(std::llround(window / dt)), cplx{0.0, 0.0});
    return w;
}
} // namespace

Waveform make_gaussian_pulse(double t_center, double fwhm, cplx amplitude,
                             double window, double dt, double carrier)
{
    if (fwhm <= 0.0)
        throw InvalidParameter("gaussian pulse: fwhm must be positive");
    Waveform w = blank(window, dt, carrier);
    const double sigma = fwhm / (2.0 * std::sqrt(2.0 * std::numbers::ln2));
    for (std::size_t i = 0; i < w.size(); ++i) {
        const double x = (w.time_at(i) - t_center) / sigma;
        w.samples[i] = amplitude * std::exp(-0.5 * x * x);
    }
    return w;
}

Waveform make_square_pulse(double t_center, double width, cplx amplitude,
                           double window, double dt, double carrier)
{
    if (width <= 0.0)
        throw InvalidParameter("square pulse: width must be positive");
    Waveform w = blank(window, dt, carrier);
    for (std::size_t i = 0; i < w.size(); ++i) {
        const double t = w.time_at(i);
        if (t >= t_center - 0.5 * width && t < t_center + 0.5 * width)
            w.samples[i] = amplitude;
    }
    return w;
}

Waveform superpose(const Waveform& a, const Waveform& b)
{
    if (a.size() != b.size() || a.dt != b.dt)
        throw InvalidParameter("superpose: mismatched time grids");
    Waveform out = a;
    for (std::size_t i = 0; i < out.size(); ++i)
        out.samples[i] += b.samples[i];
    return out;
}

Waveform phase_ramped(Waveform w, double ramp, double quad)
{
    const double tc = w.t0 + 0.5 * w.duration();
    for (std::size_t i = 0; i < w.size(); ++i) {
        const double t = w.time_at(i) - tc;
        w.samples[i] *= std::exp(cplx{0.0, ramp * t + 0.5 * quad * t * t});
    }
    return w;
}

} // namespace echomem
