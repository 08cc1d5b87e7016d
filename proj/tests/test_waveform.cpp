#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "echomem/errors.hpp"
#include "echomem/mb_solver.hpp"
#include "echomem/waveform.hpp"

#include <cmath>
#include <numbers>

using namespace echomem;

TEST_CASE("energy and overlap basics")
{
    const Waveform g = make_gaussian_pulse(5e-6, 2e-6, {1.0, 0.0}, 10e-6, 10e-9);
    // Gaussian |E|^2 integral: amp^2 * fwhm * sqrt(pi / (8 ln 2))
    const double expected = 2e-6 * std::sqrt(std::numbers::pi / (8.0 * std::numbers::ln2));
    CHECK(energy(g) == doctest::Approx(expected).epsilon(1e-4));

    // Overlap of a pulse with a shifted copy of itself is 1 at the best lag.
    const Waveform shiftedPulse = make_gaussian_pulse(6.5e-6, 2e-6, {0.0, 0.7}, 10e-6, 10e-9);
    CHECK(best_overlap(g, shiftedPulse) == doctest::Approx(1.0).epsilon(1e-6));

    const Waveform sq = make_square_pulse(5e-6, 2e-6, {1.0, 0.0}, 10e-6, 10e-9);
    CHECK(best_overlap(g, sq) < 0.95);

    CHECK(energy(scaled(g, {0.0, 2.0})) == doctest::Approx(4.0 * energy(g)).epsilon(1e-12));
}

TEST_CASE("time reversal reverses sample order")
{
    Waveform w = make_gaussian_pulse(2e-6, 1e-6, {1.0, 0.0}, 10e-6, 10e-9);
    const Waveform r = time_reversed(w);
    CHECK(r.samples.front() == w.samples.back());
    CHECK(best_overlap(w, r) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("spectral width tracks the transform limit")
{
    const Waveform g = make_gaussian_pulse(10e-6, 4e-6, {1.0, 0.0}, 20e-6, 10e-9);
    // Spectral FWHM of a 4 us gaussian: 2 ln2 / (pi * 4 us) = 110 kHz; the
    // 99% energy width is about twice that.
    const double w99 = spectral_width(g, 0.99);
    CHECK(w99 / (2.0 * std::numbers::pi) > 1.0e5);
    CHECK(w99 / (2.0 * std::numbers::pi) < 4.0e5);
}

TEST_CASE("chirp metric recovers an imposed linear frequency ramp")
{
    const double quad = 2.0 * std::numbers::pi * 2e10; // rad/s^2
    Waveform g = make_gaussian_pulse(10e-6, 4e-6, {1.0, 0.0}, 20e-6, 5e-9);
    g = phase_ramped(std::move(g), 2.0 * std::numbers::pi * 5e4, quad);
    CHECK(chirp_metric(g) == doctest::Approx(quad).epsilon(0.02));

    // Transform-limited pulse: no chirp.
    const Waveform flat = make_gaussian_pulse(10e-6, 4e-6, {1.0, 0.0}, 20e-6, 5e-9);
    CHECK(std::abs(chirp_metric(flat)) < 0.01 * quad);

    Waveform tiny;
    tiny.dt = 1e-9;
    tiny.samples.assign(64, {0.0, 0.0});
    CHECK_THROWS_AS(chirp_metric(tiny), AnalysisFailure);
}

TEST_CASE("waveform validation")
{
    Waveform bad;
    bad.dt = -1.0;
    bad.samples.assign(8, {1.0, 0.0});
    CHECK_THROWS_AS(bad.validate(), InvalidParameter);
    bad.dt = 1e-9;
    bad.samples[3] = {std::nan(""), 0.0};
    CHECK_THROWS_AS(bad.validate(), NumericalFailure);
}
