#include "echomem/mb_solver.hpp"

#include "echomem/errors.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <sstream>

namespace echomem {

namespace {
constexpr double kPi = std::numbers::pi;
constexpr cplx kI{0.0, 1.0};

cplx phi1(cplx x)
{
    if (std::abs(x) < 1e-4)
        return 1.0 + x * (0.5 + x * (1.0 / 6.0 + x / 24.0));
    return (std::exp(x) - 1.0) / x;
}

struct StepCoeffs {
    // split real/imag layout so the time loop vectorizes
    std::vector<double> ar, ai; // exp(-i Delta dt)
    std::vector<double> br, bi; // i dt phi1(-i Delta dt)
};

StepCoeffs step_coeffs(const Medium& medium, double dt)
{
    StepCoeffs c;
    const std::size_t nb = medium.bins();
    c.ar.resize(nb);
    c.ai.resize(nb);
    c.br.resize(nb);
    c.bi.resize(nb);
    for (std::size_t j = 0; j < nb; ++j) {
        const cplx x = -kI * medium.grid.nodes[j] * dt;
        const cplx a = std::exp(x);
        const cplx b = kI * dt * phi1(x);
        c.ar[j] = a.real();
        c.ai[j] = a.imag();
        c.br[j] = b.real();
        c.bi[j] = b.imag();
    }
    return c;
}

// One slice: evolve the coherence row under the field samples, collecting
// the polarization sum_j w_j g_j sigma_j at each sample (before the update,
// so field and polarization are aligned in time).
void integrate_slice(const StepCoeffs& coeffs, const std::vector<double>& wg,
                     const std::vector<cplx>& field,
                     std::vector<double>& sigRe, std::vector<double>& sigIm,
                     std::vector<cplx>& polarization)
{
    const std::size_t nb = wg.size();
    const std::size_t nt = field.size();
    const double* __restrict ar = coeffs.ar.data();
    const double* __restrict ai = coeffs.ai.data();
    const double* __restrict br = coeffs.br.data();
    const double* __restrict bi = coeffs.bi.data();
    const double* __restrict w = wg.data();
    double* __restrict sr = sigRe.data();
    double* __restrict si = sigIm.data();
    for (std::size_t k = 0; k < nt; ++k) {
        const double er = field[k].real();
        const double ei = field[k].imag();
        double pr = 0.0, pi = 0.0;
        for (std::size_t j = 0; j < nb; ++j) {
            pr += w[j] * sr[j];
            pi += w[j] * si[j];
            const double nr = ar[j] * sr[j] - ai[j] * si[j] + br[j] * er - bi[j] * ei;
            const double ni = ar[j] * si[j] + ai[j] * sr[j] + br[j] * ei + bi[j] * er;
            sr[j] = nr;
            si[j] = ni;
        }
        polarization[k] = {pr, pi};
    }
}

struct PropagateResult {
    std::vector<cplx> field;
    std::vector<cplx> sigma; // nz x bins
};

// Retarded-frame transport dE/dz = i c0 sum w g sigma, explicit midpoint in
// z, traversal order set by the propagation direction.
PropagateResult propagate(const Medium& medium, const std::vector<cplx>& input,
                          double dt, const std::vector<cplx>* sigma0,
                          Direction direction)
{
    const std::size_t nb = medium.bins();
    const std::size_t nt = input.size();
    const std::size_t nzz = static_cast<std::size_t>(medium.nz);
    const double dz = medium.dz();
    const cplx srcHalf = kI * medium.coupling * 0.5 * dz;
    const cplx srcFull = kI * medium.coupling * dz;

    const StepCoeffs coeffs = step_coeffs(medium, dt);

    PropagateResult out;
    out.field = input;
    out.sigma.assign(nzz * nb, cplx{0.0, 0.0});

    std::vector<double> wg(nb);
    std::vector<double> sigRe(nb), sigIm(nb), sigRe2(nb), sigIm2(nb);
    std::vector<cplx> polA(nt), polB(nt), fieldMid(nt);

    for (std::size_t step = 0; step < nzz; ++step) {
        const std::size_t iz = direction == Direction::forward ? step : nzz - 1 - step;
        const double* g = medium.g_row(static_cast<int>(iz));
        for (std::size_t j = 0; j < nb; ++j)
            wg[j] = medium.grid.weights[j] * g[j];

        if (sigma0) {
            const cplx* s0 = sigma0->data() + iz * nb;
            for (std::size_t j = 0; j < nb; ++j) {
                sigRe[j] = s0[j].real();
                sigIm[j] = s0[j].imag();
            }
        } else {
            std::fill(sigRe.begin(), sigRe.end(), 0.0);
            std::fill(sigIm.begin(), sigIm.end(), 0.0);
        }
        sigRe2 = sigRe;
        sigIm2 = sigIm;

        integrate_slice(coeffs, wg, out.field, sigRe, sigIm, polA);
        for (std::size_t k = 0; k < nt; ++k)
            fieldMid[k] = out.field[k] + srcHalf * polA[k];
        integrate_slice(coeffs, wg, fieldMid, sigRe2, sigIm2, polB);
        for (std::size_t k = 0; k < nt; ++k)
            out.field[k] += srcFull * polB[k];
        cplx* dst = out.sigma.data() + iz * nb;
        for (std::size_t j = 0; j < nb; ++j)
            dst[j] = {sigRe2[j], sigIm2[j]};

        const cplx probe = out.field[nt / 2];
        if (!std::isfinite(probe.real()) || !std::isfinite(probe.imag())) {
            std::ostringstream msg;
            msg << "mb solver: non-finite field at slice " << iz << " (nz=" << medium.nz
                << ", bins=" << nb << ", dt=" << dt << ", coupling=" << medium.coupling << ")";
            throw NumericalFailure(msg.str());
        }
    }
    return out;
}

// Transverse-equivalent absorption profile (for longitudinal media the
// slice line swept across the gradient span).
LineShape transmission_profile(const Medium& medium)
{
    if (!medium.map.longitudinal())
        return medium.map.effective;
    return apply_broadening(medium.map.source,
                            BroadeningControl{BroadeningMode::transverse,
                                              std::abs(medium.map.control.magnitude) * medium.length,
                                              0.0, 1.0, BroadeningKernel::flat})
        .effective;
}

void check_bandwidth(const Waveform& input, const Medium& medium)
{
    const double width = spectral_width(input, 0.99);
    const double span = medium.grid.span_max() - medium.grid.span_min();
    if (width > span) {
        std::ostringstream msg;
        msg << "absorb: input 99% bandwidth " << width << " rad/s exceeds grid span " << span
            << " rad/s";
        throw SpectralLeakage(msg.str());
    }
    // Spectral components mapping to detunings outside the grid see no
    // modeled atoms; estimate the absorption such components would suffer
    // from the analytic profile and refuse when it is non-negligible.
    if (medium.depth == 0.0)
        return;
    const LineShape profile = transmission_profile(medium);
    const double sign = medium.flipped ? -1.0 : 1.0;
    const double peak = profile.normalized_density(profile.center());
    const Spectrum spec = spectrum(input);
    double total = 0.0, unmodeled = 0.0;
    for (std::size_t k = 0; k < spec.coeff.size(); ++k) {
        const double p = std::norm(spec.coeff[k]);
        total += p;
        const double detuning = sign * (-spec.omega[k]);
        if (detuning < medium.grid.span_min() || detuning > medium.grid.span_max())
            unmodeled += p * (1.0 - std::exp(-medium.depth * profile.normalized_density(detuning) / peak));
    }
    if (total > 0.0 && unmodeled / total > 1e-3) {
        std::ostringstream msg;
        msg << "absorb: " << unmodeled / total * 100.0
            << "% of the input power would be absorbed outside the detuning grid";
        throw SpectralLeakage(msg.str());
    }
}

} // namespace

AbsorbResult absorb(const Waveform& input, const Medium& medium)
{
    input.validate();
    if (input.direction != Direction::forward)
        throw InvalidParameter("absorb: input must propagate forward");
    check_bandwidth(input, medium);

    AbsorbResult res;
    res.state.nz = medium.nz;
    res.state.bins = medium.bins();
    res.state.direction = Direction::forward;
    res.state.timestamp = input.t0 + input.duration();
    res.state.medium_parity = medium.flipped;

    if (medium.depth == 0.0) {
        // Empty medium: nothing absorbs.
        res.transmitted = input;
        res.state.sigma.assign(static_cast<std::size_t>(medium.nz) * medium.bins(), cplx{0.0, 0.0});
        return res;
    }

    PropagateResult prop = propagate(medium, input.samples, input.dt, nullptr, Direction::forward);
    res.transmitted = input;
    res.transmitted.samples = std::move(prop.field);
    res.state.sigma = std::move(prop.sigma);
    return res;
}

EnsembleState mode_match(EnsembleState state, double eta_m)
{
    if (eta_m < 0.0 || eta_m > 1.0)
        throw InvalidParameter("mode_match: transfer efficiency must lie in [0,1]");
    if (state.direction != Direction::forward)
        throw ProtocolOrderError("mode_match: state already transferred to the backward mode");
    for (cplx& s : state.sigma)
        s *= eta_m;
    state.direction = Direction::backward;
    return state;
}

EnsembleState wait_interval(EnsembleState state, const Medium& medium, double tau,
                            double t2, cplx residual_factor)
{
    if (tau < 0.0)
        throw InvalidParameter("wait_interval: storage time must be >= 0");
    const std::size_t nb = medium.bins();
    if (state.bins != nb || state.nz != medium.nz)
        throw InvalidParameter("wait_interval: state does not match medium grid");
    std::vector<cplx> phase(nb);
    const double homo = t2 > 0.0 ? std::exp(-tau / t2) : 1.0;
    for (std::size_t j = 0; j < nb; ++j)
        phase[j] = std::exp(-kI * medium.grid.nodes[j] * tau) * residual_factor * homo;
    for (int iz = 0; iz < state.nz; ++iz)
        for (std::size_t j = 0; j < nb; ++j)
            state.at(iz, j) *= phase[j];
    state.timestamp += tau;
    return state;
}

cplx residual_dephasing_factor(const LineShape& prepared_line, double tau)
{
    const double pitHalf = prepared_line.pit_halfwidth();
    if (pitHalf <= 0.0)
        return cplx{1.0, 0.0};
    // FID kernel of the spike region only; the unshifted wings outside the
    // pit do not belong to the storage feature.
    const int n = 4096;
    const double c = prepared_line.center();
    const double h = 2.0 * pitHalf / n;
    cplx acc{0.0, 0.0};
    double norm = 0.0;
    for (int i = 0; i < n; ++i) {
        const double d = -pitHalf + (i + 0.5) * h;
        const double rho = prepared_line.density(c + d);
        acc += rho * std::exp(-kI * d * tau);
        norm += rho;
    }
    if (norm <= 0.0)
        return cplx{1.0, 0.0};
    return acc / norm;
}

RecallResult recall_full(const EnsembleState& state, const Medium& medium,
                         std::size_t n_samples, double dt)
{
    if (medium.flipped == state.medium_parity)
        throw ProtocolOrderError("recall: medium must be flipped relative to absorption");
    if (state.bins != medium.bins() || state.nz != medium.nz)
        throw InvalidParameter("recall: state does not match medium grid");
    if (n_samples < 2 || dt <= 0.0)
        throw InvalidParameter("recall: need n_samples >= 2 and dt > 0");

    std::vector<cplx> empty(n_samples, cplx{0.0, 0.0});
    PropagateResult prop = propagate(medium, empty, dt, &state.sigma, state.direction);

    RecallResult res;
    res.emitted.samples = std::move(prop.field);
    res.emitted.dt = dt;
    res.emitted.t0 = 0.0;
    res.emitted.direction = state.direction;
    res.state = state;
    res.state.sigma = std::move(prop.sigma);
    res.state.timestamp += static_cast<double>(n_samples) * dt;
    return res;
}

Waveform recall(const EnsembleState& state, const Medium& medium,
                std::size_t n_samples, double dt)
{
    return recall_full(state, medium, n_samples, dt).emitted;
}

double stored_excitation(const EnsembleState& state, const Medium& medium)
{
    const std::size_t nb = medium.bins();
    double acc = 0.0;
    for (int iz = 0; iz < state.nz; ++iz) {
        const double* g = medium.g_row(iz);
        for (std::size_t j = 0; j < nb; ++j)
            acc += medium.grid.weights[j] * g[j] * std::norm(state.at(iz, j));
    }
    return acc * medium.coupling * medium.dz();
}

Waveform linear_transfer_oracle(const Waveform& input, const Medium& medium)
{
    input.validate();
    check_bandwidth(input, medium);
    if (medium.depth == 0.0)
        return input;

    const double sign = medium.flipped ? -1.0 : 1.0;
    const double xLo = medium.grid.span_min();
    const double xHi = medium.grid.span_max();

    // Effective absorption profile, normalized the way the medium is: per
    // slice over the covered detuning range. For longitudinal media this is
    // the slice line swept across the gradient (an average over slice
    // centers); evaluation stays analytic in the detuning axis, so the
    // oracle shares no discretization with the time-domain solver.
    std::function<double(double)> effDensity;
    if (medium.map.longitudinal()) {
        const LineShape& src = medium.map.source;
        const auto nzz = static_cast<std::size_t>(medium.nz);
        std::vector<double> invMass(nzz);
        for (std::size_t iz = 0; iz < nzz; ++iz) {
            // In-span weight of the (possibly mirrored) slice line, matching
            // the per-slice normalization of the medium.
            const double c = medium.slice_centers[iz];
            const double hi = sign > 0 ? xHi - c : c - xLo;
            const double lo = sign > 0 ? xLo - c : c - xHi;
            const double mass = src.cdf(hi) - src.cdf(lo);
            invMass[iz] = mass > 0.0 ? 1.0 / mass : 0.0;
        }
        effDensity = [&medium, &src, invMass, sign](double delta) {
            const auto nzz = static_cast<std::size_t>(medium.nz);
            double acc = 0.0;
            for (std::size_t iz = 0; iz < nzz; ++iz)
                acc += src.density(sign * delta - sign * medium.slice_centers[iz]) * invMass[iz];
            return acc / static_cast<double>(nzz);
        };
    } else {
        const LineShape profile = transmission_profile(medium);
        effDensity = [profile, sign](double delta) {
            return profile.normalized_density(sign * delta);
        };
    }

    // Quadrature set for the principal-value (dispersion) integral; reuse
    // the medium grid nodes so both paths see the same truncated range.
    const std::size_t nb = medium.bins();
    std::vector<double> dens(nb);
    for (std::size_t j = 0; j < nb; ++j)
        dens[j] = effDensity(medium.grid.nodes[j]);

    // Zero-pad to keep the causal tail from wrapping.
    std::size_t n = 1;
    while (n < 2 * input.size())
        n <<= 1;
    std::vector<cplx> padded(n, cplx{0.0, 0.0});
    std::copy(input.samples.begin(), input.samples.end(), padded.begin());
    std::vector<cplx> freq = fft_forward(padded);

    const double prefactor = medium.coupling * medium.length;
    for (std::size_t k = 0; k < n; ++k) {
        const double w = fft_omega(k, n, input.dt);
        const double absorbDens = effDensity(-w);
        const double atten = kPi * prefactor * absorbDens;
        // Subtracted-singularity quadrature: the G(-w) part integrates to a
        // log exactly, the remainder is smooth at Delta = -w.
        double pv = 0.0;
        const double tiny = 1e-12 * (xHi - xLo);
        for (std::size_t j = 0; j < nb; ++j) {
            const double denom = medium.grid.nodes[j] + w;
            if (std::abs(denom) < tiny)
                continue;
            pv += medium.grid.weights[j] * (dens[j] - absorbDens) / denom;
        }
        const double lo = xLo + w;
        const double hi = xHi + w;
        if (std::abs(lo) > tiny && std::abs(hi) > tiny)
            pv += absorbDens * std::log(std::abs(hi / lo));
        const double phase = prefactor * pv;
        freq[k] *= std::exp(cplx{-atten, phase});
    }
    std::vector<cplx> back = fft_inverse(freq);
    Waveform out = input;
    for (std::size_t i = 0; i < input.size(); ++i)
        out.samples[i] = back[i] / static_cast<double>(n);
    return out;
}

double efficiency_formula(EfficiencyKind kind, double depth)
{
    if (depth < 0.0)
        throw InvalidParameter("efficiency_formula: depth must be >= 0");
    switch (kind) {
    case EfficiencyKind::transverse_backward:
    case EfficiencyKind::longitudinal: {
        const double f = 1.0 - std::exp(-depth);
        return f * f;
    }
    case EfficiencyKind::transverse_forward:
        return depth * depth * std::exp(-depth);
    }
    return 0.0;
}

double chirp_metric(const Waveform& w)
{
    return fit_instantaneous_frequency_slope(w);
}

namespace {
double relative_rms(const std::vector<cplx>& a, const std::vector<cplx>& b)
{
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        num += std::norm(a[i] - b[i]);
        den += std::norm(b[i]);
    }
    return den > 0.0 ? std::sqrt(num / den) : 0.0;
}
} // namespace

CribResult run_crib(const CribScenario& sc)
{
    sc.broadening.validate();
    LineShape prepared = sc.prepare
        ? prepare_spike(sc.line, sc.prepare->first, sc.prepare->second)
        : sc.line;
    SpectralMap map = apply_broadening(prepared, sc.broadening);
    Medium medium = make_medium(map, sc.depth, sc.length, sc.grid);
    if (sc.invert_gradient)
        medium = flip_detunings(medium);

    AbsorbResult abs = absorb(sc.input, medium);

    const cplx residual = sc.prepare
        ? residual_dephasing_factor(prepared, sc.storage_time)
        : cplx{1.0, 0.0};
    EnsembleState state =
        wait_interval(std::move(abs.state), medium, sc.storage_time, sc.t2, residual);
    if (sc.recall_direction == Direction::backward)
        state = mode_match(std::move(state), sc.broadening.transfer_efficiency);

    Medium recallMedium = flip_detunings(medium);

    const double dt = sc.recall_dt > 0.0 ? sc.recall_dt : sc.input.dt;
    const double window = sc.recall_window > 0.0
        ? sc.recall_window
        : 2.0 * sc.input.duration() + sc.storage_time;
    const auto samples = static_cast<std::size_t>(std::llround(window / dt));

    RecallResult rec = recall_full(state, recallMedium, std::max<std::size_t>(samples, 2), dt);
    rec.emitted.carrier = sc.input.carrier;
    rec.emitted.carrier_phase =
        std::fmod(sc.input.carrier_phase + sc.input.carrier * sc.storage_time, 2.0 * kPi);

    CribResult out;
    out.transmitted = std::move(abs.transmitted);
    out.recalled = std::move(rec.emitted);

    const double ein = energy(sc.input);
    out.efficiency = ein > 0.0 ? energy(out.recalled) / ein : 0.0;
    out.overlap_fidelity = best_overlap(out.recalled, time_reversed(sc.input));
    try {
        out.chirp = chirp_metric(out.recalled);
        out.chirp_defined = true;
    } catch (const AnalysisFailure&) {
        out.chirp = 0.0;
        out.chirp_defined = false;
    }

    const Waveform oracle = linear_transfer_oracle(sc.input, medium);
    out.oracle_rms = relative_rms(out.transmitted.samples, oracle.samples);
    const double stored = stored_excitation(rec.state, recallMedium);
    out.energy_balance =
        ein > 0.0 ? (energy(out.transmitted) + energy(out.recalled) + stored) / ein : 0.0;
    // Coherent phases accumulate across the whole protocol, so the
    // spurious-recurrence budget covers absorption + storage + recall.
    const double recurrence = medium.recurrence_time();
    out.recurrence_margin =
        (sc.input.duration() + sc.storage_time + window) / recurrence;
    out.grid_converged = out.recurrence_margin < 0.8;
    return out;
}

} // namespace echomem
