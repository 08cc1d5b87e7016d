// Link budget of the simplified multimode quantum repeater: channel
// transmission, the minimum storage-time and efficiency requirements, and a
// Monte Carlo of heralded entanglement distribution across a node chain.

#pragma once

#include <cstdint>
#include <vector>

namespace echomem {

struct ChannelSpec {
    double attenuation_db_per_km = 0.2;
    double segment_km = 50.0;      // L0, node spacing
    double total_km = 0.0;         // L, end-to-end (0: derived from segments)
    double speed_km_per_s = 2.0e5; // signal speed in the medium

    void validate() const;
};

// P = 10^(-a L / 10)
double channel_transmission(double attenuation_db_per_km, double length_km);

// tau_min = L0 / c
double min_storage_time(double segment_km, double speed_km_per_s);

// eps_min = 10^(-a L0 / 20): memory read-out must beat the transmission
// from a node to the midpoint.
double min_efficiency(double attenuation_db_per_km, double segment_km);

struct UsefulnessResult {
    bool useful = false;
    double margin = 0.0; // eps^2 / 10^(-a L0 / 10)
};
UsefulnessResult memory_usefulness(double efficiency, double attenuation_db_per_km,
                                   double segment_km);

// 1 - (1 - p_link)^N: at least one of N parallel mode pairs connects.
double segment_success_prob(double p_link, int modes);

struct RepeaterConfig {
    ChannelSpec channel;
    int modes = 1;                 // N mode pairs per segment
    double memory_efficiency = 1.0; // eps
    double memory_lifetime = -1.0;  // [s]; < 0 means unlimited
    double p_swap = 1.0;            // success of each final Bell-state measurement
    int segments = 1;
    double p_pair = 1.0;     // photon-pair emission probability per attempt
    double p_bsm_mid = 0.5;  // midpoint Bell-state measurement (linear-optics bound)
    bool ideal_bsm = false; // final swaps always succeed, ideal midpoint BSM

    void validate() const;
    double round_time() const; // L0 / c: travel to midpoint + heralding return
    double p_link() const;     // per-mode, per-round entangling probability
};

enum class BellLabel { phi_plus, phi_minus, psi_plus, psi_minus };

struct RepeaterOutcome {
    double time = 0.0; // multiple of the round time
    int rounds = 0;
    bool success = false;
    BellLabel label = BellLabel::phi_plus; // meaningful only on success
};

struct RepeaterSummary {
    int trials = 0;
    int successes = 0;
    double success_fraction = 0.0;
    double mean_time = 0.0;   // over successful trials [s]
    double median_time = 0.0; // over successful trials [s]
    double mean_rounds = 0.0;
    double rate_per_s = 0.0;  // successes / total simulated time
    std::vector<int> bell_counts = {0, 0, 0, 0};
};

// Per-round segment attempts with heralding, memory expiry and re-attempt,
// then the final swap chain ((segments - 1) nodes, eps^2 readout each).
// Trials use per-trial seeds derived from the root seed, so results do not
// depend on execution order.
std::vector<RepeaterOutcome> simulate_repeater(const RepeaterConfig& cfg,
                                               std::uint64_t seed, int trials);

RepeaterSummary summarize(const RepeaterConfig& cfg,
                          const std::vector<RepeaterOutcome>& outcomes);

} // namespace echomem
