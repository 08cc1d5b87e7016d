// Complex slowly-varying envelopes sampled on a uniform time grid.
// The optical carrier exp(i*(w0*t -+ k*z)) is metadata: `carrier` holds w0
// and `carrier_phase` accumulates deterministic phase (w0 * storage time)
// that an envelope cannot represent.

#pragma once

#include "echomem/fft.hpp"

#include <complex>
#include <cstddef>
#include <optional>
#include <vector>

namespace echomem {

enum class Direction { forward, backward };

struct Waveform {
    std::vector<cplx> samples;
    double dt = 0.0;           // sample spacing [s]
    double t0 = 0.0;           // time of samples[0] [s]
    double carrier = 0.0;      // w0 [rad/s], metadata only
    Direction direction = Direction::forward;
    double carrier_phase = 0.0; // accumulated carrier phase, mod 2*pi [rad]

    std::size_t size() const { return samples.size(); }
    double time_at(std::size_t i) const { return t0 + dt * static_cast<double>(i); }
    double duration() const { return dt * static_cast<double>(samples.size()); }

    void validate() const; // dt > 0, >= 2 samples, finite energy
};

// sum |E|^2 dt  [field-energy units]
double energy(const Waveform& w);

Waveform scaled(Waveform w, cplx factor);

// Reverses the sample order in place about the window midpoint (no
// conjugation; the carrier bookkeeping lives in metadata).
Waveform time_reversed(Waveform w);

// Normalized overlap |<a|b>|^2 / (|a|^2 |b|^2) maximized over integer lags.
double best_overlap(const Waveform& a, const Waveform& b);

// Spectral description: coefficient k multiplies exp(+i*omega[k]*t).
struct Spectrum {
    std::vector<double> omega; // [rad/s], FFT order
    std::vector<cplx> coeff;
};
Spectrum spectrum(const Waveform& w);

// Full width of the centered interval holding `fraction` of spectral energy.
double spectral_width(const Waveform& w, double fraction = 0.99);

// Least-squares slope of the instantaneous frequency (phase derivative)
// over the contiguous window around the peak holding `energy_fraction`
// of the total energy. Throws AnalysisFailure below `min_energy`.
double fit_instantaneous_frequency_slope(const Waveform& w,
                                         double energy_fraction = 0.80,
                                         double min_energy = 1e-30);

// Tagged pulse generators used by scenarios and tests.
Waveform make_gaussian_pulse(double t_center, double fwhm, cplx amplitude,
                             double window, double dt, double carrier = 0.0);
Waveform make_square_pulse(double t_center, double width, cplx amplitude,
                           double window, double dt, double carrier = 0.0);

// a + b on a's grid (grids must match).
Waveform superpose(const Waveform& a, const Waveform& b);

// Multiply by exp(i*(ramp*t + quad*t^2/2)) relative to the window center.
Waveform phase_ramped(Waveform w, double ramp, double quad);

} // namespace echomem
