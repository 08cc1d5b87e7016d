// Classical photon-echo experiments in the thin-sample regime: pulses act
// as exact Bloch rotations, the emitted field is the summed single-atom
// polarization (no propagation back-action). Includes the spectral
// (four-wave-mixing) oracle, time-bin encoding / analysis, interference
// fringe scans and the collective-enhancement noise model.

#pragma once

#include "echomem/line_shape.hpp"
#include "echomem/waveform.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace echomem {

struct BlochVector {
    double u = 0.0;
    double v = 0.0;
    double w = -1.0;
    double detuning = 0.0; // [rad/s]

    double norm2() const { return u * u + v * v + w * w; }
};

enum class PulseRole { write, data, read };

struct Pulse {
    double start = 0.0;    // [s]
    double duration = 0.0; // [s]; 0 = instantaneous rotation at `start`
    double area = 0.0;     // [rad]
    double phase = 0.0;    // rotation axis angle in the uv plane [rad]
    PulseRole role = PulseRole::data;
};

struct PulseSequence {
    std::vector<Pulse> pulses;
    void validate() const; // non-overlapping in time, areas >= 0
};

struct TraceParams {
    double t_start = 0.0;
    double t_end = 0.0;
    double dt = 0.0;
    int bins = 256;
    double cutoff = 4.0;
    double n_atoms = 1e6;      // detection model: background ~ N_inc * b
    double background_b = 0.0; // per-atom incoherent emission constant
};

struct EchoTrace {
    double t0 = 0.0;
    double dt = 0.0;
    std::vector<cplx> amplitude;   // sum_j w_j G_j (u_j - i v_j)
    std::vector<double> intensity; // |amplitude|^2 + incoherent background
    std::vector<BlochVector> final_bloch;

    std::size_t size() const { return amplitude.size(); }
    double time_at(std::size_t i) const { return t0 + dt * static_cast<double>(i); }
    std::size_t peak_index() const;
    double window_energy(double t_lo, double t_hi) const; // sum |A|^2 dt
    Waveform window_waveform(double t_lo, double t_hi) const;
};

// theta1 at t = 0, theta2 at t = tau; the echo forms at t = 2 tau.
EchoTrace two_pulse_echo(double tau, double theta1, double theta2,
                         const LineShape& line, double t2, const TraceParams& params);

// General pulse-sequence run (write/data/read). Weak data pulses with a
// duration are applied as distributed micro-rotations sampling a gaussian
// envelope, which is exact in the linear regime.
EchoTrace stimulated_echo(const PulseSequence& seq, const LineShape& line, double t2,
                          const TraceParams& params);

// E_echo(t) ~ int E_write*(w) E_data(w) E_read(w) exp(iwt) dw, normalized
// to unit peak. All three waveforms must share one time grid.
Waveform spectral_echo_oracle(const Waveform& write, const Waveform& data,
                              const Waveform& read);

struct WavepacketShape {
    double fwhm = 0.0; // gaussian basic wavepacket S(y) [s]
};

struct TimeBinState {
    double alpha = 1.0;
    double beta = 0.0;
    double phi = 0.0;
    double bin_separation = 0.0; // [s]
    WavepacketShape shape;
    double carrier = 0.0; // omega0 [rad/s]

    void validate() const; // alpha^2 + beta^2 = 1 within 1e-9, bins resolvable
};

// alpha S(t - t_first) + beta e^{i phi} S(t - t_first - bin_separation)
Waveform encode_timebin(const TimeBinState& state, double first_bin_time,
                        double window, double dt);

struct TimeBinAnalysis {
    // Uncorrected read-out as a fresh time-bin state; phi folds in the
    // carrier-phase metadata the envelope cannot carry.
    double alpha = 0.0, beta = 0.0, phi = 0.0;
    // After the deterministic corrections (bin swap, carrier phase).
    double alpha_corrected = 0.0, beta_corrected = 0.0, phi_corrected = 0.0;
    double fidelity = 0.0; // |<reference|corrected>|^2
    cplx early_amp{0.0, 0.0}, late_amp{0.0, 0.0};
    double early_time = 0.0, late_time = 0.0;
};

// Matched-filter extraction against the basic wavepacket template. The
// optional hint pins the expected late-bin time when only one bin carries
// amplitude (single-bin inputs are otherwise ambiguous in time).
TimeBinAnalysis analyze_timebin(const Waveform& recalled, const TimeBinState& reference,
                                double storage_time,
                                std::optional<double> late_bin_hint = std::nullopt);

struct FringeScan {
    std::vector<double> phases;
    std::vector<double> intensities;
    double visibility = 0.0;
    double fidelity = 0.0; // (1 + V) / 2
    double mean_intensity = 0.0;
    double fit_residual = 0.0; // rms residual / mean intensity
};

// Linear least squares on {1, cos, sin}; throws AnalysisFailure when the
// fringe is degenerate.
FringeScan fit_fringe(const std::vector<double>& phases, const std::vector<double>& intensities);

struct FringeParams {
    int points = 24;
    int shots = 400;
    double sigma_phase = 0.0; // gaussian phase noise per shot [rad]
    std::uint64_t seed = 1;
};

struct ReadPhases {
    double alpha4 = 0.0;
    double alpha5 = 0.0;
    bool scan_second = true; // scan alpha5, else alpha4
};

struct StimulatedEchoConfig {
    LineShape line;
    double t2 = 0.0;        // <= 0: no decay
    double data_time = 0.0; // first data bin center; write pulse sits at 0
    double read_time = 0.0; // R1 center; R2 follows at + bin separation
    double weak_area = 0.05;
    // Balanced partial recalls: the first echo flies through the second
    // read pulse, so equal pathway amplitudes need tan(theta1) = 2 when the
    // second read is pi/2. A plain pi/2 first read leaves no grating at all.
    double first_read_area = 1.1071487177940904; // atan(2)
    double second_read_area = 3.14159265358979323846 / 2.0;
    TraceParams trace;      // detection grid; slot window derived internally
};

// Fig.-7c style scan: write W, data bins D1/D2, reads R1/R2 one bin apart;
// the central output slot interferes D2-via-R1 with D1-via-R2.
FringeScan fringe_scan(const TimeBinState& stored, const ReadPhases& read,
                       const StimulatedEchoConfig& cfg, const FringeParams& mc);

struct DualMemoryConfig {
    LineShape line_a, line_b;
    double t2_a = 0.0, t2_b = 0.0;
    double scale_a = 1.0, scale_b = 1.0; // arm emission amplitude scales
    double data_area = 0.1;
    double read_area = 3.14159265358979323846;
    double tau = 0.0; // storage (data-to-read separation)
    TraceParams trace;
};

// Echoes from two independently stored copies recombine on a beam splitter;
// intensity vs interferometer phase gives the fringe.
FringeScan dual_memory_fringe(const DualMemoryConfig& cfg, const FringeParams& mc);

struct CollectiveSnr {
    double snr = 0.0;
    bool noise_free = false; // tau = 0: no incoherent sub-ensemble yet
};

// N_coh = N exp(-2 tau / T2), N_inc = N - N_coh, SNR = N_coh^2 / N_inc.
CollectiveSnr collective_snr(double n_atoms, double tau, double t2);

} // namespace echomem
