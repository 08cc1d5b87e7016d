#include "echomem/echo_lab.hpp"

#include "echomem/detuning_grid.hpp"
#include "echomem/errors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

namespace echomem {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr cplx kI{0.0, 1.0};

struct RotationEvent {
    double time;
    double theta;
    double phase;
};

// r' = cos(th) r + (1-cos(th)) (n.r) n + sin(th) (n x r),  n = (cos p, sin p, 0)
void rotate(BlochVector& b, double theta, double phase)
{
    const double nx = std::cos(phase);
    const double ny = std::sin(phase);
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    const double dot = nx * b.u + ny * b.v; // n has no z component
    const double cu = ny * b.w;
    const double cv = -nx * b.w;
    const double cw = nx * b.v - ny * b.u;
    const double u = c * b.u + (1.0 - c) * dot * nx + s * cu;
    const double v = c * b.v + (1.0 - c) * dot * ny + s * cv;
    const double w = c * b.w + s * cw;
    b.u = u;
    b.v = v;
    b.w = w;
}

std::vector<RotationEvent> expand_pulses(const PulseSequence& seq)
{
    std::vector<RotationEvent> events;
    for (const Pulse& p : seq.pulses) {
        if (p.role != PulseRole::data || p.duration <= 0.0) {
            events.push_back({p.start + 0.5 * p.duration, p.area, p.phase});
            continue;
        }
        // Shaped weak pulse: gaussian envelope sampled as micro-rotations.
        constexpr int kSub = 64;
        const double half = 1.5 * p.duration;
        const double sigma = p.duration / (2.0 * std::sqrt(2.0 * std::numbers::ln2));
        const double center = p.start + 0.5 * p.duration;
        double norm = 0.0;
        std::array<double, kSub> env{};
        for (int i = 0; i < kSub; ++i) {
            const double t = -half + (i + 0.5) * (2.0 * half / kSub);
            env[i] = std::exp(-0.5 * (t / sigma) * (t / sigma));
            norm += env[i];
        }
        for (int i = 0; i < kSub; ++i) {
            const double t = center - half + (i + 0.5) * (2.0 * half / kSub);
            events.push_back({t, p.area * env[i] / norm, p.phase});
        }
    }
    std::sort(events.begin(), events.end(),
              [](const RotationEvent& a, const RotationEvent& b) { return a.time < b.time; });
    return events;
}

EchoTrace run_sequence(const PulseSequence& seq, const LineShape& line, double t2,
                       const TraceParams& params)
{
    seq.validate();
    if (params.dt <= 0.0 || params.t_end <= params.t_start)
        throw InvalidParameter("echo trace: bad time grid");

    const DetuningGrid grid = discretize(line, params.bins, params.cutoff);
    const std::size_t nb = grid.size();
    std::vector<BlochVector> bloch(nb);
    std::vector<double> wg(nb);
    for (std::size_t j = 0; j < nb; ++j) {
        bloch[j].detuning = grid.nodes[j];
        wg[j] = grid.weights[j] * line.normalized_density(grid.nodes[j]);
    }

    const auto events = expand_pulses(seq);
    const auto nt = static_cast<std::size_t>(
        std::llround((params.t_end - params.t_start) / params.dt));

    EchoTrace trace;
    trace.t0 = params.t_start;
    trace.dt = params.dt;
    trace.amplitude.assign(nt, cplx{0.0, 0.0});
    trace.intensity.assign(nt, 0.0);

    // March atoms through events and trace samples in time order; free
    // evolution is exact, c = u - i v rotates as exp(-i Delta dt) and decays
    // as exp(-dt / T2).
    double now = params.t_start;
    std::size_t nextSample = 0;
    std::size_t nextEvent = 0;
    // Advance atoms to the first relevant instant.
    auto evolve = [&](double dt) {
        if (dt <= 0.0)
            return;
        const double decay = t2 > 0.0 ? std::exp(-dt / t2) : 1.0;
        for (std::size_t j = 0; j < nb; ++j) {
            const cplx c = (cplx{bloch[j].u, -bloch[j].v}) * std::exp(-kI * bloch[j].detuning * dt) * decay;
            bloch[j].u = c.real();
            bloch[j].v = -c.imag();
        }
    };
    // Events before the trace window.
    const double first = std::min(params.t_start, events.empty() ? params.t_start : events.front().time);
    if (first < now) {
        // rewind: start the simulation at the earliest event instead
        now = first;
    }
    while (nextSample < nt || nextEvent < events.size()) {
        const double tSample = nextSample < nt
            ? params.t_start + params.dt * static_cast<double>(nextSample)
            : std::numeric_limits<double>::infinity();
        const double tEvent = nextEvent < events.size()
            ? events[nextEvent].time
            : std::numeric_limits<double>::infinity();
        if (tEvent <= tSample) {
            evolve(tEvent - now);
            now = tEvent;
            for (std::size_t j = 0; j < nb; ++j)
                rotate(bloch[j], events[nextEvent].theta, events[nextEvent].phase);
            ++nextEvent;
        } else {
            if (!std::isfinite(tSample))
                break;
            evolve(tSample - now);
            now = tSample;
            cplx amp{0.0, 0.0};
            for (std::size_t j = 0; j < nb; ++j)
                amp += wg[j] * cplx{bloch[j].u, -bloch[j].v};
            trace.amplitude[nextSample] = amp;
            ++nextSample;
        }
    }
    // Detection model: coherent |A|^2 plus incoherent background.
    for (std::size_t k = 0; k < nt; ++k) {
        double bg = 0.0;
        if (params.background_b > 0.0 && t2 > 0.0) {
            const double t = trace.time_at(k) - params.t_start;
            const double nInc = params.n_atoms * (1.0 - std::exp(-2.0 * std::max(0.0, t) / t2));
            bg = params.background_b * nInc;
        }
        trace.intensity[k] = std::norm(trace.amplitude[k]) + bg;
    }
    trace.final_bloch = std::move(bloch);
    return trace;
}

} // namespace

void PulseSequence::validate() const
{
    std::vector<std::pair<double, double>> spans;
    for (const Pulse& p : pulses) {
        if (p.area < 0.0)
            throw InvalidParameter("pulse sequence: areas must be >= 0");
        if (p.duration < 0.0)
            throw InvalidParameter("pulse sequence: durations must be >= 0");
        spans.emplace_back(p.start, p.start + std::max(p.duration, 0.0));
    }
    std::sort(spans.begin(), spans.end());
    for (std::size_t i = 1; i < spans.size(); ++i)
        if (spans[i].first < spans[i - 1].second || spans[i].first == spans[i - 1].first)
            throw InvalidParameter("pulse sequence: pulses overlap in time");
}

std::size_t EchoTrace::peak_index() const
{
    std::size_t best = 0;
    for (std::size_t i = 1; i < intensity.size(); ++i)
        if (intensity[i] > intensity[best])
            best = i;
    return best;
}

double EchoTrace::window_energy(double t_lo, double t_hi) const
{
    double acc = 0.0;
    for (std::size_t i = 0; i < amplitude.size(); ++i) {
        const double t = time_at(i);
        if (t >= t_lo && t < t_hi)
            acc += std::norm(amplitude[i]) * dt;
    }
    return acc;
}

Waveform EchoTrace::window_waveform(double t_lo, double t_hi) const
{
    Waveform w;
    w.dt = dt;
    w.t0 = std::max(t_lo, t0);
    for (std::size_t i = 0; i < amplitude.size(); ++i) {
        const double t = time_at(i);
        if (t >= t_lo && t < t_hi)
            w.samples.push_back(amplitude[i]);
    }
    return w;
}

EchoTrace two_pulse_echo(double tau, double theta1, double theta2,
                         const LineShape& line, double t2, const TraceParams& params)
{
    if (tau <= 0.0)
        throw InvalidParameter("two_pulse_echo: pulse separation must be positive");
    PulseSequence seq;
    seq.pulses.push_back({0.0, 0.0, theta1, 0.0, PulseRole::write});
    seq.pulses.push_back({tau, 0.0, theta2, 0.0, PulseRole::read});
    TraceParams p = params;
    if (p.t_end <= p.t_start) {
        p.t_start = 0.0;
        p.t_end = 3.2 * tau;
    }
    if (p.dt <= 0.0)
        p.dt = tau / 200.0;
    return run_sequence(seq, line, t2, p);
}

EchoTrace stimulated_echo(const PulseSequence& seq, const LineShape& line, double t2,
                          const TraceParams& params)
{
    return run_sequence(seq, line, t2, params);
}

Waveform spectral_echo_oracle(const Waveform& write, const Waveform& data,
                              const Waveform& read)
{
    if (write.size() != data.size() || data.size() != read.size()
        || write.dt != data.dt || data.dt != read.dt)
        throw InvalidParameter("spectral_echo_oracle: waveforms must share one grid");
    const std::vector<cplx> fw = fft_forward(write.samples);
    const std::vector<cplx> fd = fft_forward(data.samples);
    const std::vector<cplx> fr = fft_forward(read.samples);
    std::vector<cplx> prod(fw.size());
    for (std::size_t k = 0; k < fw.size(); ++k)
        prod[k] = std::conj(fw[k]) * fd[k] * fr[k];
    std::vector<cplx> echo = fft_inverse(prod);
    double peak = 0.0;
    for (const cplx& c : echo)
        peak = std::max(peak, std::abs(c));
    Waveform out;
    out.dt = data.dt;
    out.t0 = data.t0;
    out.carrier = data.carrier;
    out.samples = std::move(echo);
    if (peak > 0.0)
        for (cplx& c : out.samples)
            c /= peak;
    return out;
}

void TimeBinState::validate() const
{
    if (std::abs(alpha * alpha + beta * beta - 1.0) > 1e-9)
        throw InvalidParameter("time-bin state: alpha^2 + beta^2 must be 1");
    if (shape.fwhm <= 0.0)
        throw InvalidParameter("time-bin state: wavepacket width must be positive");
    if (bin_separation <= shape.fwhm)
        throw InvalidParameter("time-bin state: bins overlap (separation <= shape duration)");
}

Waveform encode_timebin(const TimeBinState& state, double first_bin_time,
                        double window, double dt)
{
    state.validate();
    Waveform early = make_gaussian_pulse(first_bin_time, state.shape.fwhm,
                                         {state.alpha, 0.0}, window, dt, state.carrier);
    const cplx lateAmp = state.beta * std::exp(kI * state.phi);
    const Waveform late = make_gaussian_pulse(first_bin_time + state.bin_separation,
                                              state.shape.fwhm, lateAmp, window, dt,
                                              state.carrier);
    return superpose(early, late);
}

namespace {
double wrap_phase(double phi)
{
    phi = std::fmod(phi, kTwoPi);
    if (phi < 0.0)
        phi += kTwoPi;
    return phi;
}
} // namespace

TimeBinAnalysis analyze_timebin(const Waveform& recalled, const TimeBinState& reference,
                                double storage_time, std::optional<double> late_bin_hint)
{
    reference.validate();
    recalled.validate();
    // Template overlap between the two bins must be negligible for the bins
    // to be separable.
    const double sigma = reference.shape.fwhm / (2.0 * std::sqrt(2.0 * std::numbers::ln2));
    const double sep = reference.bin_separation;
    if (std::exp(-sep * sep / (8.0 * sigma * sigma)) > 1e-3)
        throw AnalysisFailure("analyze_timebin: bins not resolvable against the template");

    // Matched filter against the (time-symmetric) basic wavepacket.
    const auto nt = recalled.size();
    const auto half = static_cast<long long>(std::llround(4.0 * sigma / recalled.dt));
    std::vector<cplx> filt(nt, cplx{0.0, 0.0});
    double tnorm = 0.0;
    for (long long s = -half; s <= half; ++s)
        tnorm += std::exp(-(static_cast<double>(s) * recalled.dt)
                          * (static_cast<double>(s) * recalled.dt) / (2.0 * sigma * sigma));
    for (std::size_t i = 0; i < nt; ++i) {
        cplx acc{0.0, 0.0};
        for (long long s = -half; s <= half; ++s) {
            const long long k = static_cast<long long>(i) + s;
            if (k < 0 || k >= static_cast<long long>(nt))
                continue;
            const double u = static_cast<double>(s) * recalled.dt;
            acc += recalled.samples[static_cast<std::size_t>(k)]
                * std::exp(-u * u / (2.0 * sigma * sigma));
        }
        filt[i] = acc / tnorm;
    }

    const auto sepSamples = static_cast<long long>(std::llround(sep / recalled.dt));
    std::size_t lateIdx;
    if (late_bin_hint) {
        lateIdx = static_cast<std::size_t>(std::clamp<long long>(
            std::llround((*late_bin_hint - recalled.t0) / recalled.dt), 0,
            static_cast<long long>(nt) - 1));
        // refine to the local filter maximum
        for (int pass = 0; pass < 4; ++pass) {
            if (lateIdx > 0 && std::abs(filt[lateIdx - 1]) > std::abs(filt[lateIdx]))
                --lateIdx;
            else if (lateIdx + 1 < nt && std::abs(filt[lateIdx + 1]) > std::abs(filt[lateIdx]))
                ++lateIdx;
        }
    } else {
        std::size_t peak = 0;
        for (std::size_t i = 1; i < nt; ++i)
            if (std::abs(filt[i]) > std::abs(filt[peak]))
                peak = i;
        // partner bin on whichever side carries more amplitude
        const long long before = static_cast<long long>(peak) - sepSamples;
        const long long after = static_cast<long long>(peak) + sepSamples;
        const double ampBefore = before >= 0 ? std::abs(filt[static_cast<std::size_t>(before)]) : -1.0;
        const double ampAfter = after < static_cast<long long>(nt)
            ? std::abs(filt[static_cast<std::size_t>(after)]) : -1.0;
        lateIdx = ampBefore >= ampAfter ? peak : static_cast<std::size_t>(after);
    }
    const long long earlyIdxRaw = static_cast<long long>(lateIdx) - sepSamples;
    if (earlyIdxRaw < 0)
        throw AnalysisFailure("analyze_timebin: early bin falls outside the waveform");
    const auto earlyIdx = static_cast<std::size_t>(earlyIdxRaw);

    TimeBinAnalysis out;
    out.early_amp = filt[earlyIdx];
    out.late_amp = filt[lateIdx];
    out.early_time = recalled.time_at(earlyIdx);
    out.late_time = recalled.time_at(lateIdx);
    const double norm = std::sqrt(std::norm(out.early_amp) + std::norm(out.late_amp));
    if (norm <= 0.0)
        throw AnalysisFailure("analyze_timebin: no amplitude in either bin");

    out.alpha = std::abs(out.early_amp) / norm;
    out.beta = std::abs(out.late_amp) / norm;
    out.phi = wrap_phase(std::arg(out.late_amp * std::conj(out.early_amp))
                         + recalled.carrier_phase);

    // Deterministic corrections: undo the bin swap; the carrier phase is a
    // global factor in this representation, so it drops out of the overlap.
    const cplx amp0 = out.late_amp / norm;
    const cplx amp1 = out.early_amp / norm;
    out.alpha_corrected = std::abs(amp0);
    out.beta_corrected = std::abs(amp1);
    out.phi_corrected = wrap_phase(std::arg(amp1 * std::conj(amp0)));
    const cplx refEarly{reference.alpha, 0.0};
    const cplx refLate = reference.beta * std::exp(kI * reference.phi);
    out.fidelity = std::norm(std::conj(refEarly) * amp0 + std::conj(refLate) * amp1);
    (void)storage_time;
    return out;
}

FringeScan fit_fringe(const std::vector<double>& phases, const std::vector<double>& intensities)
{
    if (phases.size() != intensities.size() || phases.size() < 3)
        throw AnalysisFailure("fringe fit: need at least 3 points");
    // Least squares for I(th) = a0 + ac cos th + as sin th.
    double s1 = 0, sc = 0, ss = 0, scc = 0, sss = 0, scs = 0, sy = 0, syc = 0, sys = 0;
    const auto n = static_cast<double>(phases.size());
    for (std::size_t i = 0; i < phases.size(); ++i) {
        const double c = std::cos(phases[i]);
        const double s = std::sin(phases[i]);
        const double y = intensities[i];
        s1 += 1.0; sc += c; ss += s; scc += c * c; sss += s * s; scs += c * s;
        sy += y; syc += y * c; sys += y * s;
    }
    // Solve the 3x3 normal equations by Cramer's rule.
    const double m[3][3] = {{s1, sc, ss}, {sc, scc, scs}, {ss, scs, sss}};
    const double rhs[3] = {sy, syc, sys};
    auto det3 = [](const double a[3][3]) {
        return a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1])
             - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
             + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]);
    };
    const double det = det3(m);
    if (std::abs(det) < 1e-12 * std::max(1.0, n * n * n))
        throw AnalysisFailure("fringe fit: singular design matrix");
    double sol[3];
    for (int k = 0; k < 3; ++k) {
        double mk[3][3];
        std::copy(&m[0][0], &m[0][0] + 9, &mk[0][0]);
        for (int r = 0; r < 3; ++r)
            mk[r][k] = rhs[r];
        sol[k] = det3(mk) / det;
    }
    const double mean = sol[0];
    const double contrast = std::hypot(sol[1], sol[2]);
    if (mean <= 0.0)
        throw AnalysisFailure("fringe fit: non-positive mean intensity");

    FringeScan out;
    out.phases = phases;
    out.intensities = intensities;
    out.mean_intensity = mean;
    out.visibility = contrast / mean;
    out.fidelity = 0.5 * (1.0 + out.visibility);
    double res = 0.0;
    for (std::size_t i = 0; i < phases.size(); ++i) {
        const double model = sol[0] + sol[1] * std::cos(phases[i]) + sol[2] * std::sin(phases[i]);
        res += (intensities[i] - model) * (intensities[i] - model);
    }
    out.fit_residual = std::sqrt(res / n) / mean;
    return out;
}

FringeScan fringe_scan(const TimeBinState& stored, const ReadPhases& read,
                       const StimulatedEchoConfig& cfg, const FringeParams& mc)
{
    stored.validate();
    if (mc.points < 3 || mc.shots < 1)
        throw InvalidParameter("fringe_scan: need at least 3 phase points and 1 shot");

    const double sep = stored.bin_separation;
    const double slotCenter = cfg.read_time + cfg.data_time + sep;
    const double slotHalf = 0.35 * sep;

    TraceParams trace = cfg.trace;
    trace.t_start = slotCenter - slotHalf;
    trace.t_end = slotCenter + slotHalf;
    if (trace.dt <= 0.0)
        trace.dt = stored.shape.fwhm / 10.0;

    std::mt19937_64 rng(mc.seed);
    std::normal_distribution<double> noise(0.0, mc.sigma_phase);

    std::vector<double> phases(mc.points), intensities(mc.points, 0.0);
    for (int ip = 0; ip < mc.points; ++ip) {
        const double theta = kTwoPi * ip / mc.points;
        phases[ip] = theta;
        double acc = 0.0;
        for (int shot = 0; shot < mc.shots; ++shot) {
            const double jitter = mc.sigma_phase > 0.0 ? noise(rng) : 0.0;
            const double a4 = read.scan_second ? read.alpha4 : theta + jitter;
            const double a5 = read.scan_second ? theta + jitter : read.alpha5;
            PulseSequence seq;
            seq.pulses.push_back({0.0, 0.0, std::numbers::pi / 2.0, 0.0, PulseRole::write});
            seq.pulses.push_back({cfg.data_time, stored.shape.fwhm,
                                  cfg.weak_area * stored.alpha, 0.0, PulseRole::data});
            seq.pulses.push_back({cfg.data_time + sep, stored.shape.fwhm,
                                  cfg.weak_area * stored.beta, stored.phi, PulseRole::data});
            seq.pulses.push_back({cfg.read_time, 0.0, cfg.first_read_area, a4, PulseRole::read});
            seq.pulses.push_back({cfg.read_time + sep, 0.0, cfg.second_read_area, a5, PulseRole::read});
            const EchoTrace tr = stimulated_echo(seq, cfg.line, cfg.t2, trace);
            acc += tr.window_energy(slotCenter - slotHalf, slotCenter + slotHalf);
        }
        intensities[ip] = acc / mc.shots;
    }
    return fit_fringe(phases, intensities);
}

FringeScan dual_memory_fringe(const DualMemoryConfig& cfg, const FringeParams& mc)
{
    if (mc.points < 3 || mc.shots < 1)
        throw InvalidParameter("dual_memory_fringe: need at least 3 phase points and 1 shot");
    // Each arm stores and recalls independently; only the recombination
    // phase fluctuates shot to shot.
    const EchoTrace armA =
        two_pulse_echo(cfg.tau, cfg.data_area, cfg.read_area, cfg.line_a, cfg.t2_a, cfg.trace);
    const EchoTrace armB =
        two_pulse_echo(cfg.tau, cfg.data_area, cfg.read_area, cfg.line_b, cfg.t2_b, cfg.trace);

    const double tLo = 1.6 * cfg.tau;
    const double tHi = 2.4 * cfg.tau;
    double eaa = 0.0, ebb = 0.0;
    cplx cross{0.0, 0.0};
    for (std::size_t i = 0; i < armA.size(); ++i) {
        const double t = armA.time_at(i);
        if (t < tLo || t >= tHi)
            continue;
        const cplx a = cfg.scale_a * armA.amplitude[i];
        const cplx b = cfg.scale_b * armB.amplitude[i];
        eaa += std::norm(a) * armA.dt;
        ebb += std::norm(b) * armA.dt;
        cross += a * std::conj(b) * armA.dt;
    }

    std::mt19937_64 rng(mc.seed);
    std::normal_distribution<double> noise(0.0, mc.sigma_phase);
    std::vector<double> phases(mc.points), intensities(mc.points, 0.0);
    for (int ip = 0; ip < mc.points; ++ip) {
        const double theta = kTwoPi * ip / mc.points;
        phases[ip] = theta;
        double acc = 0.0;
        for (int shot = 0; shot < mc.shots; ++shot) {
            const double phi = theta + (mc.sigma_phase > 0.0 ? noise(rng) : 0.0);
            acc += 0.25 * (eaa + ebb + 2.0 * std::real(cross * std::exp(-kI * phi)));
        }
        intensities[ip] = acc / mc.shots;
    }
    return fit_fringe(phases, intensities);
}

CollectiveSnr collective_snr(double n_atoms, double tau, double t2)
{
    if (n_atoms < 1.0)
        throw InvalidParameter("collective_snr: need at least one atom");
    if (t2 <= 0.0)
        throw InvalidParameter("collective_snr: T2 must be positive");
    if (tau < 0.0)
        throw InvalidParameter("collective_snr: tau must be >= 0");
    const double nCoh = n_atoms * std::exp(-2.0 * tau / t2);
    const double nInc = n_atoms - nCoh;
    if (nInc <= 0.0)
        return {std::numeric_limits<double>::infinity(), true};
    return {nCoh * nCoh / nInc, false};
}

} // namespace echomem
