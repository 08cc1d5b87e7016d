#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "echomem/detuning_grid.hpp"
#include "echomem/errors.hpp"
#include "echomem/line_shape.hpp"
#include "echomem/mb_solver.hpp"
#include "echomem/medium.hpp"

#include <cmath>
#include <numbers>
#include <random>

using namespace echomem;

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
double mhz(double f) { return kTwoPi * 1e6 * f; }

// Independent check: dense trapezoid integral of density().
double trapezoid_area(const LineShape& line, double halfSpan, int n)
{
    const double c = line.center();
    const double h = 2.0 * halfSpan / n;
    double acc = 0.5 * (line.density(c - halfSpan) + line.density(c + halfSpan));
    for (int i = 1; i < n; ++i)
        acc += line.density(c - halfSpan + i * h);
    return acc * h;
}
} // namespace

TEST_CASE("normalized primitive line shapes")
{
    const LineShape g = build_line_shape(LineKind::gaussian, 0.0, mhz(1.0));
    const LineShape l = build_line_shape(LineKind::lorentzian, 0.0, 2.0); // fwhm = 2*gamma, gamma = 1
    const LineShape f = build_line_shape(LineKind::flat_top, 0.0, mhz(1.0));

    // Lorentzian peak is 1/(pi*gamma).
    CHECK(l.density(0.0) == doctest::Approx(1.0 / std::numbers::pi).epsilon(1e-12));
    // Flat top is 1/width inside the band, zero outside.
    CHECK(f.density(0.3 * mhz(1.0)) == doctest::Approx(1.0 / mhz(1.0)).epsilon(1e-12));
    CHECK(f.density(0.6 * mhz(1.0)) == 0.0);
    // Unit area, checked against an independent quadrature.
    CHECK(trapezoid_area(g, 8.0 * mhz(1.0), 40000) == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(trapezoid_area(f, 0.75 * mhz(1.0), 60000) == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(g.fwhm() == doctest::Approx(mhz(1.0)).epsilon(1e-12));

    CHECK_THROWS_AS(build_line_shape(LineKind::gaussian, 0.0, -1.0), InvalidParameter);
    CHECK_THROWS_AS(build_line_shape(LineKind::gaussian, 0.0, 0.0), InvalidParameter);
}

TEST_CASE("spectral hole burning carves a pit with a narrow spike")
{
    const LineShape base = build_line_shape(LineKind::gaussian, 0.0, mhz(4.0));
    const LineShape prepared = prepare_spike(base, mhz(4.0), mhz(0.2));

    // Spike feature of the requested FWHM at center, restoring the parent
    // density there.
    CHECK(prepared.fwhm() == doctest::Approx(mhz(0.2)).epsilon(0.02));
    CHECK(prepared.density(0.0) == doctest::Approx(base.density(0.0)).epsilon(1e-12));

    // Pit region away from the spike: only faint Lorentzian wings remain.
    CHECK(prepared.density(mhz(1.0)) < 0.02 * prepared.density(0.0));
    CHECK(prepared.density(mhz(1.6)) < 0.02 * prepared.density(0.0));
    // Outside the pit the original line survives.
    CHECK(prepared.density(mhz(2.5)) == doctest::Approx(base.density(mhz(2.5))).epsilon(1e-12));

    // Hole burning only removes population.
    std::mt19937 rng(77);
    std::uniform_real_distribution<double> pick(-mhz(8.0), mhz(8.0));
    for (int i = 0; i < 20000; ++i) {
        const double d = pick(rng);
        CHECK(prepared.density(d) <= base.density(d) * (1.0 + 1e-12));
    }
    CHECK(prepared.area() < 1.0);
    // CDF consistent with the dense quadrature.
    CHECK(trapezoid_area(prepared, mhz(12.0), 200000)
          == doctest::Approx(prepared.area()).epsilon(1e-5));

    CHECK_THROWS_AS(prepare_spike(base, mhz(1.0), mhz(1.0)), InvalidParameter);
    CHECK_THROWS_AS(prepare_spike(base, mhz(1.0), mhz(2.0)), InvalidParameter);
}

TEST_CASE("wide spike limit retains most of the line inside the pit")
{
    const LineShape base = build_line_shape(LineKind::gaussian, 0.0, mhz(4.0));
    const LineShape prepared = prepare_spike(base, mhz(1.0), mhz(1.0) / 1.0001);
    // The Lorentzian antihole mask cannot literally reproduce the parent
    // inside the pit, but the edit must become weak in this limit.
    const double kept = prepared.area()
        - (base.cdf(-mhz(0.5)) + 1.0 - base.cdf(mhz(0.5)));
    const double pitMass = base.cdf(mhz(0.5)) - base.cdf(-mhz(0.5));
    CHECK(kept / pitMass > 0.5);
    CHECK(prepared.density(0.0) == doctest::Approx(base.density(0.0)).epsilon(1e-9));
}

TEST_CASE("residual spike sets the field-free decay scale")
{
    const LineShape base = build_line_shape(LineKind::gaussian, 0.0, mhz(4.0));
    const LineShape prepared = prepare_spike(base, mhz(4.0), mhz(0.2));
    // Lorentzian antihole of 200 kHz FWHM: |FID| = exp(-pi * 200 kHz * tau),
    // 1/e at 1.59 us. Fit the decay over the Fig.-13-like delay range.
    const double t1 = 1.0e-6, t2 = 3.0e-6;
    const double k1 = std::abs(residual_dephasing_factor(prepared, t1));
    const double k2 = std::abs(residual_dephasing_factor(prepared, t2));
    const double tauFit = (t2 - t1) / std::log(k1 / k2);
    CHECK(tauFit == doctest::Approx(1.0 / (std::numbers::pi * 0.2e6)).epsilon(0.04));
    CHECK(std::abs(residual_dephasing_factor(prepared, 0.0)) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("transverse broadening smears the spike and conserves weight")
{
    const LineShape base = build_line_shape(LineKind::gaussian, 0.0, mhz(4.0));
    const LineShape prepared = prepare_spike(base, mhz(4.0), mhz(0.2));

    BroadeningControl ctrl;
    ctrl.mode = BroadeningMode::transverse;
    ctrl.magnitude = mhz(1.0);
    const SpectralMap map = apply_broadening(prepared, ctrl);

    CHECK(map.effective.fwhm() / mhz(1.0) == doctest::Approx(1.05).epsilon(0.2));
    const double reduction = prepared.density(0.0) / map.effective.density(0.0);
    CHECK(reduction > 3.0);
    CHECK(reduction < 5.5);

    // Integrated spectral weight is conserved.
    CHECK(map.effective.area() == doctest::Approx(prepared.area()).epsilon(1e-12));
    CHECK(trapezoid_area(map.effective, mhz(12.0), 200000)
          == doctest::Approx(prepared.area()).epsilon(1e-4));

    // Zero magnitude is the identity.
    BroadeningControl none;
    none.magnitude = 0.0;
    const SpectralMap same = apply_broadening(prepared, none);
    CHECK(same.effective.density(mhz(0.13)) == prepared.density(mhz(0.13)));

    BroadeningControl bad;
    bad.transfer_efficiency = 1.5;
    CHECK_THROWS_AS(apply_broadening(prepared, bad), InvalidParameter);
}

TEST_CASE("longitudinal map shifts the narrow line along z")
{
    const LineShape spike = build_line_shape(LineKind::lorentzian, 0.0, mhz(0.2));
    BroadeningControl ctrl;
    ctrl.mode = BroadeningMode::longitudinal;
    ctrl.magnitude = mhz(1.0); // chi, per unit length with L = 1
    const SpectralMap map = apply_broadening(spike, ctrl);

    CHECK(map.slice_center(0.0, 1.0) == doctest::Approx(-mhz(0.5)));
    CHECK(map.slice_center(1.0, 1.0) == doctest::Approx(mhz(0.5)));
    CHECK(map.slice_density(0.0, 1.0, -mhz(0.5))
          == doctest::Approx(spike.density(0.0)).epsilon(1e-12));
}

TEST_CASE("detuning grids reproduce the line integrals")
{
    const LineShape g = build_line_shape(LineKind::gaussian, 0.0, mhz(1.0));
    const DetuningGrid grid = discretize(g, 400, 5.0);

    double sum = 0.0, second = 0.0;
    for (std::size_t j = 0; j < grid.size(); ++j) {
        sum += grid.weights[j] * g.normalized_density(grid.nodes[j]);
        second += grid.weights[j] * g.normalized_density(grid.nodes[j])
            * grid.nodes[j] * grid.nodes[j];
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-10));
    const double sigma2 = mhz(1.0) * mhz(1.0) / (8.0 * std::numbers::ln2);
    CHECK(second == doctest::Approx(sigma2).epsilon(1e-3));

    // Flat top with any covering cutoff: rectangle rule on a constant.
    const LineShape f = build_line_shape(LineKind::flat_top, 0.0, mhz(1.0));
    const DetuningGrid fg = discretize(f, 64, 3.0);
    double fsum = 0.0;
    for (std::size_t j = 0; j < fg.size(); ++j)
        fsum += fg.weights[j] * f.normalized_density(fg.nodes[j]);
    CHECK(fsum == doctest::Approx(1.0).epsilon(1e-12));

    // All four kinds meet the 1e-4 normalization contract.
    const LineShape prepared = prepare_spike(
        build_line_shape(LineKind::gaussian, 0.0, mhz(4.0)), mhz(4.0), mhz(0.2));
    for (const LineShape& line :
         {g, f, build_line_shape(LineKind::lorentzian, 0.0, mhz(1.0)), prepared}) {
        const DetuningGrid dg = discretize(line, 400, 5.0);
        double s = 0.0;
        for (std::size_t j = 0; j < dg.size(); ++j)
            s += dg.weights[j] * line.normalized_density(dg.nodes[j]);
        CHECK(s == doctest::Approx(1.0).epsilon(1e-4));
        CHECK(dg.symmetric_about_zero());
    }

    CHECK_THROWS_AS(discretize(g, 8, 5.0), InvalidParameter);
    CHECK_THROWS_AS(discretize(g, 64, 2.0), InvalidParameter);
}

TEST_CASE("flip is an exact involution")
{
    const LineShape spike = build_line_shape(LineKind::lorentzian, 0.0, mhz(0.05));
    BroadeningControl ctrl;
    ctrl.mode = BroadeningMode::longitudinal;
    ctrl.magnitude = mhz(2.0);
    const Medium m = make_medium(apply_broadening(spike, ctrl), 0.8, 1.0, GridSpec{256, 4.0, 32});

    const Medium flipped = flip_detunings(m);
    CHECK(flipped.flipped);
    CHECK(flipped.slice_centers.front() == doctest::Approx(-m.slice_centers.front()));

    // Node multiset unchanged under the flip.
    auto sortedNodes = [](const Medium& mm) {
        auto n = mm.grid.nodes;
        std::sort(n.begin(), n.end());
        return n;
    };
    CHECK(sortedNodes(flipped) == sortedNodes(m));

    const Medium twice = flip_detunings(flipped);
    CHECK(twice.grid.nodes == m.grid.nodes);
    CHECK(twice.grid.weights == m.grid.weights);
    CHECK(twice.slice_centers == m.slice_centers);
    CHECK(twice.slice_density == m.slice_density);
    CHECK(twice.flipped == m.flipped);

    // Asymmetric (shifted-line) grids refuse to flip.
    const LineShape shifted = build_line_shape(LineKind::gaussian, mhz(3.0), mhz(1.0));
    const Medium ms = make_medium(apply_broadening(shifted, BroadeningControl{}), 1.0, 1.0,
                                  GridSpec{128, 4.0, 8});
    CHECK_THROWS_AS(flip_detunings(ms), InvariantViolation);
}
