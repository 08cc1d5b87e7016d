#include "echomem/acceptance.hpp"

#include "echomem/echo_lab.hpp"
#include "echomem/mb_solver.hpp"
#include "echomem/repeater.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace echomem {

namespace {
constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * kPi;
double mhz(double f) { return kTwoPi * 1e6 * f; }

struct Criterion {
    bool pass = false;
    std::string detail;
};

struct Check {
    bool ok = true;
    std::ostringstream detail;

    void require(bool cond, const std::string& what)
    {
        ok = ok && cond;
        if (!cond)
            detail << " [FAILED: " << what << "]";
    }
};

double rel_rms(const std::vector<cplx>& a, const std::vector<cplx>& b)
{
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        num += std::norm(a[i] - b[i]);
        den += std::norm(b[i]);
    }
    return den > 0.0 ? std::sqrt(num / den) : 0.0;
}

// Shared transverse CRIB scenario: flat line so every in-band spectral
// component sees the same depth, narrowband probe pulse.
CribScenario transverse_scenario(double depth, Direction dir, double scale)
{
    CribScenario sc;
    sc.line = build_line_shape(LineKind::flat_top, 0.0, mhz(1.0));
    sc.depth = depth;
    sc.grid = GridSpec{400, 5.0, 200}.scaled(scale);
    sc.input = make_gaussian_pulse(4.5e-6, 3e-6, {1.0, 0.0}, 9e-6, 15e-9 / scale);
    sc.storage_time = 1e-6;
    sc.recall_direction = dir;
    sc.recall_window = 14e-6;
    return sc;
}

// Narrow gaussian slice against a wide gradient: the finite slice width is
// the leading correction to the ideal gradient-echo formula, so keep
// slice/span small.
CribScenario gem_scenario(double depth, Direction dir, double scale)
{
    CribScenario sc;
    sc.line = build_line_shape(LineKind::gaussian, 0.0, mhz(0.015));
    sc.broadening.mode = BroadeningMode::longitudinal;
    sc.broadening.magnitude = mhz(3.0); // chi with L = 1
    sc.depth = depth;
    sc.grid = GridSpec{1536, 5.0, 300}.scaled(scale);
    sc.input = make_gaussian_pulse(3.5e-6, 2.5e-6, {1.0, 0.0}, 7e-6, 22e-9 / scale);
    sc.storage_time = 1e-6;
    sc.recall_direction = dir;
    sc.recall_window = 16e-6;
    return sc;
}

Criterion c1_transverse_backward(double scale)
{
    Check chk;
    double maxErr = 0.0;
    double err1 = 0.0; // at aL = 2, reused by the refinement check
    for (const double depth : {0.5, 1.0, 2.0, 4.0}) {
        const CribResult res = run_crib(transverse_scenario(depth, Direction::backward, scale));
        const double want = efficiency_formula(EfficiencyKind::transverse_backward, depth);
        const double err = std::abs(res.efficiency - want);
        maxErr = std::max(maxErr, err);
        if (depth == 2.0)
            err1 = err;
        chk.require(err <= 0.02, "aL=" + std::to_string(depth) + " err " + std::to_string(err));
        chk.require(res.grid_converged, "grid not converged at aL=" + std::to_string(depth));
    }
    // Grid refinement at the midpoint depth: the error must at least halve.
    const double err2 = std::abs(
        run_crib(transverse_scenario(2.0, Direction::backward, 2.0 * scale)).efficiency
        - efficiency_formula(EfficiencyKind::transverse_backward, 2.0));
    chk.require(err2 <= 0.6 * err1 + 2e-4, "refinement err " + std::to_string(err1) + " -> "
                                               + std::to_string(err2));
    chk.detail << "max |eff - (1-e^-aL)^2| = " << maxErr << " (tol 0.02); scale-2: " << err1
               << " -> " << err2;
    return {chk.ok, chk.detail.str()};
}

Criterion c2_transverse_forward_maximum(double scale)
{
    Check chk;
    const std::vector<double> depths{1.6, 1.8, 1.9, 2.0, 2.1, 2.2, 2.4};
    std::vector<double> eff;
    for (const double d : depths)
        eff.push_back(run_crib(transverse_scenario(d, Direction::forward, scale)).efficiency);
    // Quadratic fit around the maximum locates the vertex.
    double s0 = 0, s1 = 0, s2 = 0, s3 = 0, s4 = 0, sy = 0, sxy = 0, sx2y = 0;
    for (std::size_t i = 0; i < depths.size(); ++i) {
        const double x = depths[i] - 2.0;
        const double y = eff[i];
        s0 += 1; s1 += x; s2 += x * x; s3 += x * x * x; s4 += x * x * x * x;
        sy += y; sxy += x * y; sx2y += x * x * y;
    }
    // Solve [s0 s1 s2; s1 s2 s3; s2 s3 s4] (c b a)^T = (sy sxy sx2y)^T.
    const double m[3][3] = {{s0, s1, s2}, {s1, s2, s3}, {s2, s3, s4}};
    const double r[3] = {sy, sxy, sx2y};
    auto det3 = [](const double a[3][3]) {
        return a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1])
             - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
             + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]);
    };
    const double det = det3(m);
    double sol[3];
    for (int k = 0; k < 3; ++k) {
        double mk[3][3];
        std::copy(&m[0][0], &m[0][0] + 9, &mk[0][0]);
        for (int row = 0; row < 3; ++row)
            mk[row][k] = r[row];
        sol[k] = det3(mk) / det;
    }
    const double vertex = 2.0 - sol[1] / (2.0 * sol[2]);
    const double effAt2 = eff[3];
    chk.require(sol[2] < 0.0, "no interior maximum");
    chk.require(std::abs(vertex - 2.0) <= 0.1, "maximum at aL=" + std::to_string(vertex));
    chk.require(std::abs(effAt2 - 0.5413) <= 0.011,
                "eff(2) = " + std::to_string(effAt2));
    chk.detail << "maximum at aL = " << vertex << " (2 +- 0.1); eff(2) = " << effAt2
               << " (0.541 +- 0.011)";
    return {chk.ok, chk.detail.str()};
}

Criterion c3_longitudinal(double scale)
{
    Check chk;
    double maxErr = 0.0, maxAsym = 0.0;
    for (const double depth : {0.4, 0.8, 2.0}) {
        const CribResult fwd = run_crib(gem_scenario(depth, Direction::forward, scale));
        const CribResult bwd = run_crib(gem_scenario(depth, Direction::backward, scale));
        const double want = efficiency_formula(EfficiencyKind::longitudinal, depth);
        const double err = std::max(std::abs(fwd.efficiency - want),
                                    std::abs(bwd.efficiency - want));
        const double asym = std::abs(fwd.efficiency - bwd.efficiency);
        maxErr = std::max(maxErr, err);
        maxAsym = std::max(maxAsym, asym / std::max(fwd.efficiency, bwd.efficiency));
        chk.require(err <= 0.02, "depth " + std::to_string(depth) + " err " + std::to_string(err));
        chk.require(asym <= 0.01 * std::max(fwd.efficiency, bwd.efficiency) + 0.002,
                    "fwd/bwd asymmetry " + std::to_string(asym));
    }
    // Forward-recall chirp flips sign with the gradient; "nonzero" means
    // clearly above the 1%-of-bandwidth/duration noise floor used for
    // transform-limited pulses.
    CribScenario plus = gem_scenario(2.0, Direction::forward, scale);
    CribScenario minus = plus;
    minus.invert_gradient = true;
    const CribResult rp = run_crib(plus);
    const CribResult rm = run_crib(minus);
    chk.require(rp.chirp_defined && rm.chirp_defined, "chirp undefined");
    const double bw = spectral_width(plus.input, 0.99);
    const double floorChirp = 0.01 * bw / 2.5e-6;
    chk.require(std::abs(rp.chirp) > 2.0 * floorChirp, "forward chirp too small");
    chk.require(rp.chirp * rm.chirp < 0.0, "chirp does not flip sign with chi");
    chk.detail << "max |eff - formula| = " << maxErr << "; max fwd/bwd asymmetry = "
               << maxAsym * 100.0 << "%; chirp " << rp.chirp << " vs " << rm.chirp
               << " rad/s^2";
    return {chk.ok, chk.detail.str()};
}

Criterion c4_oracle(double scale)
{
    Check chk;
    const LineShape line = build_line_shape(LineKind::gaussian, 0.0, mhz(1.0));
    const Medium medium = make_medium(apply_broadening(line, BroadeningControl{}), 2.0, 1.0,
                                      GridSpec{400, 5.0, 200}.scaled(scale));
    const double dt = 7e-9 / scale;
    const Waveform gauss = make_gaussian_pulse(8e-6, 6e-6, {1.0, 0.0}, 20e-6, dt);
    const Waveform square = make_square_pulse(8e-6, 5e-6, {1.0, 0.0}, 20e-6, dt);
    const Waveform doubleBin = superpose(
        make_gaussian_pulse(6e-6, 2e-6, {0.8, 0.0}, 20e-6, dt),
        make_gaussian_pulse(11e-6, 2e-6, {0.0, 0.6}, 20e-6, dt));
    const char* names[3] = {"gaussian", "square", "double-bin"};
    const Waveform* shapes[3] = {&gauss, &square, &doubleBin};
    chk.detail << "relative RMS:";
    for (int i = 0; i < 3; ++i) {
        const AbsorbResult sim = absorb(*shapes[i], medium);
        const Waveform oracle = linear_transfer_oracle(*shapes[i], medium);
        const double rms = rel_rms(sim.transmitted.samples, oracle.samples);
        chk.require(rms <= 1e-2, std::string(names[i]) + " rms " + std::to_string(rms));
        chk.detail << " " << names[i] << " " << rms;
    }
    chk.detail << " (tol 1e-2)";
    return {chk.ok, chk.detail.str()};
}

Criterion c5_timebin(double scale)
{
    Check chk;
    std::mt19937_64 rng(20240817);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    double minFid = 1.0, maxSwapErr = 0.0, maxPhaseErr = 0.0;
    const double carrier = kTwoPi * 1.0e8;
    for (int trial = 0; trial < 20; ++trial) {
        TimeBinState q;
        const double theta = std::acos(1.0 - 2.0 * uni(rng));
        q.alpha = std::cos(0.5 * theta);
        q.beta = std::sin(0.5 * theta);
        q.phi = kTwoPi * uni(rng);
        q.bin_separation = 2.2e-6;
        q.shape.fwhm = 0.5e-6;
        q.carrier = carrier;

        CribScenario sc;
        sc.line = build_line_shape(LineKind::flat_top, 0.0, mhz(3.0));
        sc.depth = 8.0;
        sc.grid = GridSpec{512, 3.0, 128}.scaled(scale);
        const double storage = 0.5e-6 + 1e-6 * uni(rng);
        Waveform input = encode_timebin(q, 2.5e-6, 8e-6, 12e-9 / scale);
        input.carrier = carrier;
        sc.input = std::move(input);
        sc.storage_time = storage;
        sc.recall_window = 13e-6;

        const CribResult res = run_crib(sc);
        const double hint = 8e-6 + storage - 2.5e-6;
        const TimeBinAnalysis an = analyze_timebin(res.recalled, q, storage, hint);
        minFid = std::min(minFid, an.fidelity);
        maxSwapErr = std::max({maxSwapErr, std::abs(an.alpha - q.beta),
                               std::abs(an.beta - q.alpha)});
        double phaseErr = std::abs(res.recalled.carrier_phase
                                   - std::fmod(carrier * storage, kTwoPi));
        phaseErr = std::min(phaseErr, kTwoPi - phaseErr);
        maxPhaseErr = std::max(maxPhaseErr, phaseErr);
    }
    chk.require(minFid >= 0.999, "min fidelity " + std::to_string(minFid));
    chk.require(maxSwapErr <= 0.02, "bin swap amplitude error " + std::to_string(maxSwapErr));
    chk.require(maxPhaseErr <= 1e-3, "carrier phase error " + std::to_string(maxPhaseErr));
    chk.detail << "20 random states: min fidelity " << minFid << "; max swap err "
               << maxSwapErr << "; max carrier phase err " << maxPhaseErr << " rad";
    return {chk.ok, chk.detail.str()};
}

Criterion c6_copy_property(double scale)
{
    Check chk;
    const double dt = 10e-9 / scale;
    const double window = 14e-6;
    const Waveform wr = make_gaussian_pulse(0.5e-6, 0.03e-6, {1.0, 0.0}, window, dt);
    const Waveform data = superpose(
        make_gaussian_pulse(2.0e-6, 0.4e-6, {0.9, 0.0}, window, dt),
        make_gaussian_pulse(3.1e-6, 0.4e-6, {0.0, 0.43}, window, dt));
    const Waveform rd = make_gaussian_pulse(8e-6, 0.03e-6, {1.0, 0.0}, window, dt);
    const Waveform echo = spectral_echo_oracle(wr, data, rd);
    const double corr = best_overlap(echo, data);
    chk.require(corr >= 0.99, "echo/data correlation " + std::to_string(corr));

    // The Bloch simulation agrees with the spectral oracle.
    const LineShape line = build_line_shape(LineKind::gaussian, 0.0, mhz(12.0));
    PulseSequence seq;
    seq.pulses.push_back({0.2e-6, 0.0, kPi / 2.0, 0.0, PulseRole::write});
    seq.pulses.push_back({2e-6, 0.5e-6, 0.05, 0.0, PulseRole::data});
    seq.pulses.push_back({8e-6, 0.0, kPi / 2.0, 0.0, PulseRole::read});
    TraceParams params;
    params.t_start = 9.0e-6;
    params.t_end = 10.8e-6;
    params.dt = 8e-9 / scale;
    params.bins = static_cast<int>(1536 * scale);
    params.cutoff = 3.0;
    const EchoTrace sim = stimulated_echo(seq, line, 0.0, params);
    const Waveform wrO = make_gaussian_pulse(0.2e-6, 0.02e-6, {1.0, 0.0}, 12e-6, params.dt);
    const Waveform dataO = make_gaussian_pulse(2e-6, 0.5e-6, {1.0, 0.0}, 12e-6, params.dt);
    const Waveform rdO = make_gaussian_pulse(8e-6, 0.02e-6, {1.0, 0.0}, 12e-6, params.dt);
    const double simCorr = best_overlap(sim.window_waveform(9.0e-6, 10.8e-6),
                                        spectral_echo_oracle(wrO, dataO, rdO));
    chk.require(simCorr >= 0.98, "sim/oracle correlation " + std::to_string(simCorr));
    chk.detail << "echo/data correlation " << corr << " (>= 0.99); sim/oracle " << simCorr
               << " (>= 0.98)";
    return {chk.ok, chk.detail.str()};
}

Criterion c7_two_pulse(double scale)
{
    Check chk;
    const LineShape line = build_line_shape(LineKind::gaussian, 0.0, mhz(2.0));
    chk.detail << "peak offsets [samples]:";
    for (const double tau : {0.4e-6, 0.8e-6, 1.6e-6, 4.0e-6}) {
        TraceParams params;
        params.bins = static_cast<int>(512 * scale);
        params.dt = tau / (400.0 * scale);
        params.t_start = 1.5 * tau;
        params.t_end = 2.5 * tau;
        const EchoTrace tr = two_pulse_echo(tau, kPi / 2.0, kPi, line, 0.0, params);
        const double offset = std::abs(tr.time_at(tr.peak_index()) - 2.0 * tau);
        chk.require(offset <= params.dt,
                    "tau " + std::to_string(tau * 1e6) + "us offset " + std::to_string(offset));
        chk.detail << " " << offset / params.dt;
    }
    TraceParams params;
    params.bins = static_cast<int>(512 * scale);
    const double tau = 2e-6;
    const EchoTrace noRephase = two_pulse_echo(tau, kPi / 2.0, 0.0, line, 0.0, params);
    const double echoEnergy = noRephase.window_energy(1.8 * tau, 2.2 * tau);
    const double fidEnergy = noRephase.window_energy(0.0, 0.4 * tau);
    chk.require(echoEnergy < 1e-9 * fidEnergy, "echo without rephasing pulse");
    chk.detail << "; theta2=0 echo/fid = " << (fidEnergy > 0 ? echoEnergy / fidEnergy : 0.0);
    return {chk.ok, chk.detail.str()};
}

Criterion c8_visibility(double scale)
{
    Check chk;
    DualMemoryConfig cfg;
    cfg.line_a = build_line_shape(LineKind::gaussian, 0.0, mhz(2.0));
    cfg.line_b = cfg.line_a;
    cfg.t2_a = cfg.t2_b = 10e-6;
    cfg.trace.bins = static_cast<int>(384 * scale);
    cfg.trace.dt = 10e-9 / scale;

    FringeParams mc;
    mc.points = 24;
    mc.shots = 800;
    mc.sigma_phase = std::sqrt(-2.0 * std::log(0.915));
    mc.seed = 7;

    std::vector<double> vis, energies;
    for (const double tau : {1e-6, 5e-6, 10e-6, 20e-6}) { // [0.1, 2] x T2
        cfg.tau = tau;
        mc.seed += 1; // independent noise draws per point
        const FringeScan scan = dual_memory_fringe(cfg, mc);
        vis.push_back(scan.visibility);
        energies.push_back(scan.mean_intensity);
    }
    const double vmax = *std::max_element(vis.begin(), vis.end());
    const double vmin = *std::min_element(vis.begin(), vis.end());
    const double vmean = 0.25 * (vis[0] + vis[1] + vis[2] + vis[3]);
    chk.require((vmax - vmin) <= 0.02 * vmean, "visibility drift " + std::to_string(vmax - vmin));
    chk.require(energies.front() / energies.back() >= 50.0,
                "echo energy ratio " + std::to_string(energies.front() / energies.back()));
    chk.require(std::abs(vmean - 0.915) <= 0.005, "calibrated V " + std::to_string(vmean));
    const double fid = 0.5 * (1.0 + vmean);
    chk.require(std::abs(fid - 0.9575) <= 0.0025, "F " + std::to_string(fid));
    chk.detail << "V over [0.1,2]xT2: " << vmin << ".." << vmax << " (mean " << vmean
               << ", target 0.915); F = " << fid << "; echo energy drop x"
               << energies.front() / energies.back();
    return {chk.ok, chk.detail.str()};
}

Criterion c9_closed_forms(double /*scale*/)
{
    Check chk;
    const double p50 = channel_transmission(0.2, 50.0);
    const double p100 = channel_transmission(0.2, 100.0);
    const double p1000 = channel_transmission(0.2, 1000.0);
    chk.require(std::abs(p50 - 0.1) <= 1e-12, "P(50 km)");
    chk.require(std::abs(p100 - 0.01) <= 1e-13, "P(100 km)");
    chk.require(std::abs(p1000 - 1e-20) <= 1e-32, "P(1000 km)");

    const double e40 = min_efficiency(0.2, 40.0);
    const double e150 = min_efficiency(0.2, 150.0);
    chk.require(std::abs(e40 - 0.398) <= 0.5e-3, "eps_min(40 km) 3 s.f.");
    chk.require(std::abs(e150 - 0.0316) <= 0.5e-4, "eps_min(150 km) 3 s.f.");

    const double tau = min_storage_time(150.0, 2e5);
    chk.require(std::abs(tau - 0.75e-3) <= 1e-15, "tau_min(150 km)");
    chk.detail << "P = {" << p50 << ", " << p100 << ", " << p1000 << "}; eps_min = {" << e40
               << ", " << e150 << "}; tau_min = " << tau * 1e3
               << " ms (the ~1 ms in the literature rounds this up)";
    return {chk.ok, chk.detail.str()};
}

Criterion c10_monte_carlo(double /*scale*/)
{
    Check chk;
    RepeaterConfig cfg;
    cfg.channel.attenuation_db_per_km = 0.2;
    cfg.channel.segment_km = 50.0;
    cfg.channel.speed_km_per_s = 2e5;
    cfg.modes = 1;
    cfg.segments = 1;
    cfg.ideal_bsm = true;

    const int trials = 100000;
    const RepeaterSummary s = summarize(cfg, simulate_repeater(cfg, 1234, trials));
    const double p = cfg.p_link();
    const double sigma = std::sqrt((1.0 - p) / (p * p) / trials);
    chk.require(std::abs(s.mean_rounds - 1.0 / p) <= 3.0 * sigma,
                "mean rounds " + std::to_string(s.mean_rounds));

    RepeaterConfig manyModes = cfg;
    manyModes.modes = 16;
    const RepeaterSummary s2 = summarize(manyModes, simulate_repeater(manyModes, 77, trials));
    double chi2 = 0.0;
    const double expect = s2.successes / 4.0;
    for (const int c : s2.bell_counts)
        chi2 += (c - expect) * (c - expect) / expect;
    chk.require(chi2 < 11.345, "bell chi^2 " + std::to_string(chi2));
    chk.detail << "mean rounds " << s.mean_rounds << " vs 1/p = " << 1.0 / p << " (3 sigma = "
               << 3.0 * sigma << "); bell chi^2 = " << chi2 << " (1% critical 11.345)";
    return {chk.ok, chk.detail.str()};
}

} // namespace

int run_acceptance(const AcceptanceOptions& options)
{
    struct Entry {
        const char* title;
        std::function<Criterion(double)> fn;
    };
    const std::vector<Entry> entries = {
        {"transverse backward recall matches (1-exp(-aL))^2", c1_transverse_backward},
        {"transverse forward recall peaks at 54% for aL=2", c2_transverse_forward_maximum},
        {"longitudinal recall: fwd = bwd, matches formula, chirp flips with chi", c3_longitudinal},
        {"time-domain absorption matches the frequency-domain oracle", c4_oracle},
        {"time-bin storage: fidelity, bin swap, carrier phase", c5_timebin},
        {"stimulated echo copies the data pulse", c6_copy_property},
        {"two-pulse echo timing and theta2=0 null", c7_two_pulse},
        {"dual-memory visibility independent of storage time", c8_visibility},
        {"repeater closed forms", c9_closed_forms},
        {"repeater Monte Carlo vs geometric law and Bell uniformity", c10_monte_carlo},
    };

    bool allPass = true;
    int index = 0;
    for (const Entry& e : entries) {
        ++index;
        const auto start = std::chrono::steady_clock::now();
        Criterion result;
        try {
            result = e.fn(options.grid_scale);
        } catch (const std::exception& ex) {
            result.pass = false;
            result.detail = std::string("exception: ") + ex.what();
        }
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        allPass = allPass && result.pass;
        if (options.quiet)
            std::printf("[%s] %2d. %s\n", result.pass ? "PASS" : "FAIL", index, e.title);
        else
            std::printf("[%s] %2d. %s — %s (%.1f s)\n", result.pass ? "PASS" : "FAIL", index,
                        e.title, result.detail.c_str(), secs);
        std::fflush(stdout);
    }
    std::printf("%s\n", allPass ? "acceptance: all criteria passed"
                                : "acceptance: FAILURES present");
    return allPass ? 0 : 4;
}

} // namespace echomem
