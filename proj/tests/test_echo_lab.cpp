#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "echomem/echo_lab.hpp"
#include "echomem/errors.hpp"
#include "echomem/mb_solver.hpp"

#include <cmath>
#include <numbers>
#include <random>

using namespace echomem;

namespace {
constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * kPi;
double mhz(double f) { return kTwoPi * 1e6 * f; }
} // namespace

TEST_CASE("two-pulse echo peaks at 2 tau")
{
    const LineShape line = build_line_shape(LineKind::gaussian, 0.0, mhz(2.0));
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> pickTau(0.5e-6, 5e-6);
    for (int trial = 0; trial < 6; ++trial) {
        const double tau = pickTau(rng);
        TraceParams params;
        params.bins = 512;
        const EchoTrace tr = two_pulse_echo(tau, kPi / 2.0, kPi, line, 0.0, params);
        // Skip the excitation instants; look after the rephasing pulse.
        std::size_t best = tr.size();
        for (std::size_t i = 0; i < tr.size(); ++i) {
            if (tr.time_at(i) <= 1.2 * tau)
                continue;
            if (best == tr.size() || tr.intensity[i] > tr.intensity[best])
                best = i;
        }
        REQUIRE(best < tr.size());
        CHECK(std::abs(tr.time_at(best) - 2.0 * tau) <= tr.dt);
    }
}

TEST_CASE("no rephasing pulse, no echo")
{
    const LineShape line = build_line_shape(LineKind::gaussian, 0.0, mhz(2.0));
    const double tau = 2e-6;
    const EchoTrace tr = two_pulse_echo(tau, kPi / 2.0, 0.0, line, 0.0, TraceParams{});
    // Free induction decays within ~1/linewidth; around 2 tau nothing
    // coherent remains.
    const double echoWindow = tr.window_energy(1.8 * tau, 2.2 * tau);
    const double fid = tr.window_energy(0.0, 0.4 * tau);
    CHECK(echoWindow < 1e-10 * fid);
}

TEST_CASE("echo intensity decays as exp(-4 tau / T2)")
{
    const LineShape line = build_line_shape(LineKind::gaussian, 0.0, mhz(2.0));
    const double t2 = 4e-6;
    std::vector<double> taus{1e-6, 1.5e-6, 2e-6, 2.5e-6, 3e-6};
    std::vector<double> logPeak;
    for (const double tau : taus) {
        TraceParams params;
        params.bins = 512;
        params.dt = 2e-9;
        params.t_start = 1.6 * tau;
        params.t_end = 2.4 * tau;
        const EchoTrace tr = two_pulse_echo(tau, kPi / 2.0, kPi, line, t2, params);
        logPeak.push_back(std::log(tr.intensity[tr.peak_index()]));
    }
    // Least-squares slope of ln I vs tau against -4 / T2.
    double st = 0, sy = 0, stt = 0, sty = 0;
    for (std::size_t i = 0; i < taus.size(); ++i) {
        st += taus[i];
        sy += logPeak[i];
        stt += taus[i] * taus[i];
        sty += taus[i] * logPeak[i];
    }
    const double n = static_cast<double>(taus.size());
    const double slope = (n * sty - st * sy) / (n * stt - st * st);
    CHECK(slope == doctest::Approx(-4.0 / t2).epsilon(0.03));
}

TEST_CASE("bloch vectors stay inside the unit ball")
{
    const LineShape line = build_line_shape(LineKind::gaussian, 0.0, mhz(1.0));
    std::mt19937 rng(23);
    std::uniform_real_distribution<double> pickArea(0.0, kPi);
    std::uniform_real_distribution<double> pickPhase(0.0, kTwoPi);
    for (int trial = 0; trial < 4; ++trial) {
        PulseSequence seq;
        double t = 0.0;
        for (int p = 0; p < 4; ++p) {
            seq.pulses.push_back({t, 0.0, pickArea(rng), pickPhase(rng), PulseRole::data});
            t += 1e-6;
        }
        TraceParams params;
        params.t_start = 0.0;
        params.t_end = t + 2e-6;
        params.dt = 20e-9;
        params.bins = 128;
        const bool decay = trial % 2 == 0;
        const EchoTrace tr = stimulated_echo(seq, line, decay ? 3e-6 : 0.0, params);
        for (const BlochVector& b : tr.final_bloch) {
            CHECK(b.norm2() <= 1.0 + 1e-9);
            if (!decay)
                CHECK(b.norm2() == doctest::Approx(1.0).epsilon(1e-9));
        }
    }
}

TEST_CASE("stimulated echo appears at the write-data separation after the read")
{
    const LineShape line = build_line_shape(LineKind::gaussian, 0.0, mhz(5.0));
    PulseSequence seq;
    seq.pulses.push_back({0.0, 0.0, kPi / 2.0, 0.0, PulseRole::write});
    seq.pulses.push_back({2e-6, 0.0, 0.05, 0.0, PulseRole::data});
    seq.pulses.push_back({8e-6, 0.0, kPi / 2.0, 0.0, PulseRole::read});
    TraceParams params;
    params.t_start = 9e-6;
    params.t_end = 11e-6;
    params.dt = 4e-9;
    params.bins = 1024;
    const EchoTrace tr = stimulated_echo(seq, line, 0.0, params);
    CHECK(std::abs(tr.time_at(tr.peak_index()) - 10e-6) <= 2.0 * params.dt);

    // Echo amplitude is linear in the weak data area.
    auto peakAmp = [&](double area) {
        PulseSequence s = seq;
        s.pulses[1].area = area;
        const EchoTrace t = stimulated_echo(s, line, 0.0, params);
        return std::abs(t.amplitude[t.peak_index()]);
    };
    const double a1 = peakAmp(0.02);
    const double a2 = peakAmp(0.10);
    CHECK(a2 / a1 == doctest::Approx(5.0).epsilon(0.01));

    PulseSequence overlap = seq;
    overlap.pulses.push_back({8e-6, 0.0, 1.0, 0.0, PulseRole::read});
    CHECK_THROWS_AS(stimulated_echo(overlap, line, 0.0, params), InvalidParameter);
    PulseSequence negative = seq;
    negative.pulses[1].area = -0.1;
    CHECK_THROWS_AS(stimulated_echo(negative, line, 0.0, params), InvalidParameter);
}

TEST_CASE("two read pulses produce three output slots")
{
    const LineShape line = build_line_shape(LineKind::gaussian, 0.0, mhz(5.0));
    const double sep = 1.5e-6;
    PulseSequence seq;
    seq.pulses.push_back({0.0, 0.0, kPi / 2.0, 0.0, PulseRole::write});
    seq.pulses.push_back({2e-6, 0.0, 0.04, 0.0, PulseRole::data});
    seq.pulses.push_back({2e-6 + sep, 0.0, 0.04, 0.0, PulseRole::data});
    seq.pulses.push_back({9e-6, 0.0, std::atan(2.0), 0.0, PulseRole::read});
    seq.pulses.push_back({9e-6 + sep, 0.0, kPi / 2.0, 0.0, PulseRole::read});
    TraceParams params;
    params.t_start = 10.2e-6;
    params.t_end = 10.2e-6 + 3.0 * sep + 1e-6;
    params.dt = 5e-9;
    params.bins = 1024;
    const EchoTrace tr = stimulated_echo(seq, line, 0.0, params);
    const double slot0 = 11e-6;
    const double e0 = tr.window_energy(slot0 - 0.4 * sep, slot0 + 0.4 * sep);
    const double e1 = tr.window_energy(slot0 + sep - 0.4 * sep, slot0 + sep + 0.4 * sep);
    const double e2 = tr.window_energy(slot0 + 2 * sep - 0.4 * sep, slot0 + 2 * sep + 0.4 * sep);
    CHECK(e0 > 0.0);
    CHECK(e1 > 0.0);
    CHECK(e2 > 0.0);
    // The central slot interferes: flipping the second read phase by pi
    // swings it between constructive and destructive.
    PulseSequence flippedSeq = seq;
    flippedSeq.pulses.back().phase = kPi;
    const EchoTrace tr2 = stimulated_echo(flippedSeq, line, 0.0, params);
    const double e1Flipped =
        tr2.window_energy(slot0 + sep - 0.4 * sep, slot0 + sep + 0.4 * sep);
    const double e0Flipped = tr2.window_energy(slot0 - 0.4 * sep, slot0 + 0.4 * sep);
    CHECK(std::abs(e1 - e1Flipped) > 0.5 * std::max(e1, e1Flipped));
    CHECK(e0Flipped == doctest::Approx(e0).epsilon(1e-6));
}

TEST_CASE("spectral oracle copies the data pulse under flat write/read spectra")
{
    const double dt = 10e-9;
    const double window = 14e-6;
    const Waveform wr = make_gaussian_pulse(0.5e-6, 0.03e-6, {1.0, 0.0}, window, dt);
    Waveform data = superpose(
        make_gaussian_pulse(2.0e-6, 0.4e-6, {0.9, 0.0}, window, dt),
        make_gaussian_pulse(3.1e-6, 0.4e-6, {0.0, 0.43}, window, dt));
    const Waveform rd = make_gaussian_pulse(8e-6, 0.03e-6, {1.0, 0.0}, window, dt);

    const Waveform echo = spectral_echo_oracle(wr, data, rd);
    CHECK(best_overlap(echo, data) >= 0.99);

    // Zero data, zero echo.
    Waveform zero = data;
    for (cplx& s : zero.samples)
        s = 0.0;
    const Waveform nothing = spectral_echo_oracle(wr, zero, rd);
    CHECK(energy(nothing) == 0.0);

    Waveform mismatched = make_gaussian_pulse(2e-6, 0.4e-6, {1.0, 0.0}, window, 2.0 * dt);
    CHECK_THROWS_AS(spectral_echo_oracle(wr, mismatched, rd), InvalidParameter);
}

TEST_CASE("spectral oracle matches the Bloch simulation for weak pulses")
{
    const LineShape line = build_line_shape(LineKind::gaussian, 0.0, mhz(12.0));
    PulseSequence seq;
    seq.pulses.push_back({0.2e-6, 0.0, kPi / 2.0, 0.0, PulseRole::write});
    seq.pulses.push_back({2e-6, 0.5e-6, 0.05, 0.0, PulseRole::data});
    seq.pulses.push_back({8e-6, 0.0, kPi / 2.0, 0.0, PulseRole::read});
    TraceParams params;
    params.t_start = 9.0e-6;
    params.t_end = 10.8e-6;
    params.dt = 8e-9;
    params.bins = 1536;
    params.cutoff = 3.0;
    const EchoTrace sim = stimulated_echo(seq, line, 0.0, params);
    const Waveform simEcho = sim.window_waveform(9.0e-6, 10.8e-6);

    const double dt = 8e-9;
    const double window = 12e-6;
    const Waveform wr = make_gaussian_pulse(0.2e-6, 0.02e-6, {1.0, 0.0}, window, dt);
    const Waveform data = make_gaussian_pulse(2e-6, 0.5e-6, {1.0, 0.0}, window, dt);
    const Waveform rd = make_gaussian_pulse(8e-6, 0.02e-6, {1.0, 0.0}, window, dt);
    const Waveform oracleEcho = spectral_echo_oracle(wr, data, rd);

    CHECK(best_overlap(simEcho, oracleEcho) >= 0.98);
}

TEST_CASE("time-bin encoding")
{
    TimeBinState q;
    q.alpha = 1.0 / std::sqrt(2.0);
    q.beta = 1.0 / std::sqrt(2.0);
    q.phi = kPi;
    q.bin_separation = 2.5e-6;
    q.shape.fwhm = 0.5e-6;
    const Waveform w = encode_timebin(q, 3e-6, 10e-6, 10e-9);
    const double early = [&] {
        double acc = 0.0;
        for (std::size_t i = 0; i < w.size(); ++i)
            if (w.time_at(i) < 4.25e-6)
                acc += std::norm(w.samples[i]) * w.dt;
        return acc;
    }();
    const double late = energy(w) - early;
    CHECK(early == doctest::Approx(late).epsilon(1e-6));

    TimeBinState single;
    single.alpha = 1.0;
    single.beta = 0.0;
    single.bin_separation = 2.5e-6;
    single.shape.fwhm = 0.5e-6;
    const Waveform s = encode_timebin(single, 3e-6, 10e-6, 10e-9);
    CHECK(energy(s) > 0.0);
    for (std::size_t i = 0; i < s.size(); ++i)
        if (s.time_at(i) > 4.5e-6)
            CHECK(std::abs(s.samples[i]) < 1e-6);

    TimeBinState bad = q;
    bad.alpha = 0.9;
    CHECK_THROWS_AS(encode_timebin(bad, 3e-6, 10e-6, 10e-9), InvalidParameter);
    TimeBinState overlapping = q;
    overlapping.bin_separation = 0.4e-6;
    CHECK_THROWS_AS(encode_timebin(overlapping, 3e-6, 10e-6, 10e-9), InvalidParameter);
}

namespace {
CribScenario timebin_crib(const Waveform& input, double storage)
{
    CribScenario sc;
    sc.line = build_line_shape(LineKind::flat_top, 0.0, mhz(3.0));
    sc.depth = 8.0;
    sc.grid = GridSpec{384, 3.0, 128};
    sc.input = input;
    sc.storage_time = storage;
    sc.recall_direction = Direction::backward;
    sc.recall_window = 16e-6;
    sc.recall_dt = input.dt;
    return sc;
}
} // namespace

TEST_CASE("ideal CRIB recall swaps the bins and advances the carrier phase")
{
    TimeBinState q;
    q.alpha = 0.6;
    q.beta = 0.8;
    q.phi = 1.234;
    q.bin_separation = 2.5e-6;
    q.shape.fwhm = 0.5e-6;
    q.carrier = kTwoPi * 1e8;

    // omega0 * tau = pi/3 (mod 2 pi)
    const double storage = (1.0 / 6.0 + 150.0) / 1e8;
    Waveform input = encode_timebin(q, 3e-6, 10e-6, 12e-9);
    input.carrier = q.carrier;
    CribScenario sc = timebin_crib(input, storage);
    const CribResult res = run_crib(sc);

    // Mirror instant: absorption window end + storage.
    const double hint = 10e-6 + storage - 3e-6;
    const TimeBinAnalysis an = analyze_timebin(res.recalled, q, storage, hint);

    CHECK(an.fidelity >= 0.999);
    // Uncorrected amplitudes come out swapped.
    CHECK(an.alpha == doctest::Approx(q.beta).epsilon(0.01));
    CHECK(an.beta == doctest::Approx(q.alpha).epsilon(0.01));
    CHECK(an.phi_corrected == doctest::Approx(q.phi).epsilon(0.01));
    CHECK(res.recalled.carrier_phase
          == doctest::Approx(std::fmod(q.carrier * storage, kTwoPi)).epsilon(1e-9));
}

TEST_CASE("phase-reference states read out the storage phase omega0 tau")
{
    TimeBinState q;
    q.alpha = 1.0 / std::sqrt(2.0);
    q.beta = 1.0 / std::sqrt(2.0);
    q.phi = 0.0;
    q.bin_separation = 2.5e-6;
    q.shape.fwhm = 0.5e-6;
    q.carrier = kTwoPi * 1e8;
    const double storage = (1.0 / 6.0 + 150.0) / 1e8; // omega0 tau = pi/3 mod 2pi

    Waveform input = encode_timebin(q, 3e-6, 10e-6, 12e-9);
    input.carrier = q.carrier;
    const CribResult res = run_crib(timebin_crib(input, storage));
    const double hint = 10e-6 + storage - 3e-6;
    const TimeBinAnalysis an = analyze_timebin(res.recalled, q, storage, hint);
    CHECK(an.phi == doctest::Approx(kPi / 3.0).epsilon(0.002));
}

TEST_CASE("single-bin input recalls into the other slot")
{
    TimeBinState q;
    q.alpha = 1.0;
    q.beta = 0.0;
    q.bin_separation = 2.5e-6;
    q.shape.fwhm = 0.5e-6;
    Waveform input = encode_timebin(q, 3e-6, 10e-6, 12e-9);
    const CribResult res = run_crib(timebin_crib(input, 1e-6));
    const double hint = 10e-6 + 1e-6 - 3e-6;
    const TimeBinAnalysis an = analyze_timebin(res.recalled, q, 1e-6, hint);
    CHECK(an.alpha < 0.02);
    CHECK(an.beta > 0.999);
}

TEST_CASE("fringe fit recovers injected visibility")
{
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> pickV(0.05, 1.0);
    for (int trial = 0; trial < 8; ++trial) {
        const double v = pickV(rng);
        std::vector<double> phases, intensities;
        for (int i = 0; i < 32; ++i) {
            const double th = kTwoPi * i / 32.0;
            phases.push_back(th);
            intensities.push_back(2.7 * (1.0 + v * std::cos(th - 0.4)));
        }
        const FringeScan fit = fit_fringe(phases, intensities);
        CHECK(fit.visibility == doctest::Approx(v).epsilon(1e-3));
        CHECK(fit.fidelity == doctest::Approx(0.5 * (1.0 + v)).epsilon(1e-3));
    }
    CHECK_THROWS_AS(fit_fringe({0.0, 1.0}, {1.0, 1.0}), AnalysisFailure);
}

namespace {
StimulatedEchoConfig fringe_cfg()
{
    StimulatedEchoConfig cfg;
    cfg.line = build_line_shape(LineKind::gaussian, 0.0, mhz(5.0));
    cfg.data_time = 2e-6;
    cfg.read_time = 9e-6;
    cfg.weak_area = 0.05;
    cfg.trace.bins = 768;
    cfg.trace.dt = 20e-9;
    return cfg;
}

TimeBinState equal_state(double phi)
{
    TimeBinState q;
    q.alpha = 1.0 / std::sqrt(2.0);
    q.beta = 1.0 / std::sqrt(2.0);
    q.phi = phi;
    q.bin_separation = 1.5e-6;
    q.shape.fwhm = 0.3e-6;
    return q;
}
} // namespace

TEST_CASE("noiseless equal-amplitude fringe has near-unit visibility")
{
    FringeParams mc;
    mc.points = 16;
    mc.shots = 1;
    const FringeScan scan = fringe_scan(equal_state(0.0), ReadPhases{}, fringe_cfg(), mc);
    CHECK(scan.visibility > 0.97);
    CHECK(scan.fidelity == doctest::Approx(0.5 * (1.0 + scan.visibility)).epsilon(1e-12));
}

TEST_CASE("single-bin states show no interference")
{
    FringeParams mc;
    mc.points = 16;
    mc.shots = 1;
    TimeBinState q = equal_state(0.0);
    q.alpha = 1.0;
    q.beta = 0.0;
    const FringeScan scan = fringe_scan(q, ReadPhases{}, fringe_cfg(), mc);
    CHECK(scan.visibility < 0.02);
    CHECK(scan.fidelity == doctest::Approx(0.5).epsilon(0.02));
}

TEST_CASE("dual-memory visibility is set by phase noise, not storage time")
{
    DualMemoryConfig cfg;
    cfg.line_a = build_line_shape(LineKind::gaussian, 0.0, mhz(2.0));
    cfg.line_b = cfg.line_a;
    cfg.t2_a = cfg.t2_b = 10e-6;
    cfg.trace.bins = 384;
    cfg.trace.dt = 10e-9;

    FringeParams mc;
    mc.points = 24;
    mc.shots = 500;
    mc.sigma_phase = std::sqrt(-2.0 * std::log(0.915));
    mc.seed = 42;

    std::vector<double> vis;
    std::vector<double> energies;
    for (const double tau : {1e-6, 5e-6, 10e-6, 20e-6}) {
        cfg.tau = tau;
        const FringeScan scan = dual_memory_fringe(cfg, mc);
        vis.push_back(scan.visibility);
        energies.push_back(scan.mean_intensity);
    }
    const double vmax = *std::max_element(vis.begin(), vis.end());
    const double vmin = *std::min_element(vis.begin(), vis.end());
    CHECK((vmax - vmin) / vmax < 0.02);
    CHECK(energies.front() / energies.back() > 50.0);
    // Calibrated phase noise reproduces the 91.5% visibility.
    CHECK(vis.front() == doctest::Approx(0.915).epsilon(0.01));
}

TEST_CASE("unequal arms reduce visibility as 2 sqrt(e1 e2) / (e1 + e2)")
{
    DualMemoryConfig cfg;
    cfg.line_a = build_line_shape(LineKind::gaussian, 0.0, mhz(2.0));
    cfg.line_b = cfg.line_a;
    cfg.t2_a = cfg.t2_b = 0.0;
    cfg.tau = 3e-6;
    cfg.scale_a = 1.0;
    cfg.scale_b = 0.5; // energy ratio 4:1
    cfg.trace.bins = 384;
    cfg.trace.dt = 10e-9;
    FringeParams mc;
    mc.points = 24;
    mc.shots = 1;
    const FringeScan scan = dual_memory_fringe(cfg, mc);
    const double e1 = 1.0, e2 = 0.25;
    CHECK(scan.visibility
          == doctest::Approx(2.0 * std::sqrt(e1 * e2) / (e1 + e2)).epsilon(1e-3));
}

TEST_CASE("collective enhancement signal-to-noise")
{
    // N = 1e6, tau = T2: (1e6 e^-2)^2 / (1e6 (1 - e^-2)) = 2.118e4.
    const CollectiveSnr s = collective_snr(1e6, 1.0, 1.0);
    CHECK_FALSE(s.noise_free);
    CHECK(s.snr == doctest::Approx(21182.0).epsilon(2e-4));
    CHECK(s.snr == doctest::Approx(2.1e4).epsilon(0.01));

    CHECK(collective_snr(1e6, 0.0, 1.0).noise_free);
    CHECK(collective_snr(1e6, 50.0, 1.0).snr < 1e-30);
    CHECK_THROWS_AS(collective_snr(0.5, 1.0, 1.0), InvalidParameter);
    CHECK_THROWS_AS(collective_snr(1e6, 1.0, 0.0), InvalidParameter);
}

TEST_CASE("matched filter reads back the four reference phases")
{
    // The (0,0), (0,pi/2), (0,pi), (0,3pi/2) preparation set.
    for (const double phi : {0.0, kPi / 2.0, kPi, 1.5 * kPi}) {
        TimeBinState q;
        q.alpha = 1.0 / std::sqrt(2.0);
        q.beta = 1.0 / std::sqrt(2.0);
        q.phi = phi;
        q.bin_separation = 2.5e-6;
        q.shape.fwhm = 0.5e-6;
        const Waveform w = encode_timebin(q, 3e-6, 10e-6, 10e-9);
        const TimeBinAnalysis an = analyze_timebin(w, q, 0.0, 5.5e-6);
        CHECK(an.alpha == doctest::Approx(q.alpha).epsilon(1e-6));
        CHECK(an.beta == doctest::Approx(q.beta).epsilon(1e-6));
        double dphi = std::abs(an.phi - phi);
        dphi = std::min(dphi, 2.0 * kPi - dphi);
        CHECK(dphi < 1e-9);
    }
}

TEST_CASE("error paths: bad separation, unresolvable bins")
{
    const LineShape line = build_line_shape(LineKind::gaussian, 0.0, mhz(2.0));
    CHECK_THROWS_AS(two_pulse_echo(0.0, kPi / 2.0, kPi, line, 0.0, TraceParams{}),
                    InvalidParameter);
    CHECK_THROWS_AS(two_pulse_echo(-1e-6, kPi / 2.0, kPi, line, 0.0, TraceParams{}),
                    InvalidParameter);

    // Bins closer than the template can separate: analysis refuses.
    TimeBinState q;
    q.alpha = 1.0 / std::sqrt(2.0);
    q.beta = 1.0 / std::sqrt(2.0);
    q.bin_separation = 1.1e-6;
    q.shape.fwhm = 1.0e-6;
    Waveform w = make_gaussian_pulse(3e-6, 1e-6, {1.0, 0.0}, 10e-6, 10e-9);
    CHECK_THROWS_AS(analyze_timebin(w, q, 0.0, std::nullopt), AnalysisFailure);
}
