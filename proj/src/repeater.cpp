#include "echomem/repeater.hpp"

#include "echomem/errors.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace echomem {

void ChannelSpec::validate() const
{
    if (attenuation_db_per_km < 0.0)
        throw InvalidParameter("channel: attenuation must be >= 0");
    if (segment_km <= 0.0)
        throw InvalidParameter("channel: segment length must be positive");
    if (total_km > 0.0 && total_km < segment_km)
        throw InvalidParameter("channel: total length shorter than one segment");
    if (speed_km_per_s <= 0.0)
        throw InvalidParameter("channel: signal speed must be positive");
}

double channel_transmission(double attenuation_db_per_km, double length_km)
{
    if (attenuation_db_per_km < 0.0 || length_km < 0.0)
        throw InvalidParameter("channel_transmission: negative inputs");
    return std::pow(10.0, -attenuation_db_per_km * length_km / 10.0);
}

double min_storage_time(double segment_km, double speed_km_per_s)
{
    if (segment_km < 0.0 || speed_km_per_s <= 0.0)
        throw InvalidParameter("min_storage_time: need L0 >= 0 and c > 0");
    return segment_km / speed_km_per_s;
}

double min_efficiency(double attenuation_db_per_km, double segment_km)
{
    if (attenuation_db_per_km < 0.0 || segment_km < 0.0)
        throw InvalidParameter("min_efficiency: negative inputs");
    return std::pow(10.0, -attenuation_db_per_km * segment_km / 20.0);
}

UsefulnessResult memory_usefulness(double efficiency, double attenuation_db_per_km,
                                   double segment_km)
{
    if (efficiency < 0.0 || efficiency > 1.0)
        throw InvalidParameter("memory_usefulness: efficiency must lie in [0,1]");
    const double direct = channel_transmission(attenuation_db_per_km, segment_km);
    UsefulnessResult res;
    res.margin = direct > 0.0 ? efficiency * efficiency / direct : 0.0;
    res.useful = efficiency * efficiency > direct; // strict: the boundary does not help
    return res;
}

double segment_success_prob(double p_link, int modes)
{
    if (p_link < 0.0 || p_link > 1.0)
        throw InvalidParameter("segment_success_prob: p_link must lie in [0,1]");
    if (modes < 1)
        throw InvalidParameter("segment_success_prob: need at least one mode");
    return 1.0 - std::pow(1.0 - p_link, modes);
}

void RepeaterConfig::validate() const
{
    channel.validate();
    if (modes < 1)
        throw InvalidParameter("repeater: need at least one mode");
    if (memory_efficiency < 0.0 || memory_efficiency > 1.0)
        throw InvalidParameter("repeater: memory efficiency must lie in [0,1]");
    if (p_swap < 0.0 || p_swap > 1.0 || p_pair < 0.0 || p_pair > 1.0
        || p_bsm_mid < 0.0 || p_bsm_mid > 1.0)
        throw InvalidParameter("repeater: probabilities must lie in [0,1]");
    if (segments < 1)
        throw InvalidParameter("repeater: need at least one segment");
}

double RepeaterConfig::round_time() const
{
    return channel.segment_km / channel.speed_km_per_s;
}

double RepeaterConfig::p_link() const
{
    // Both photons reach the midpoint (half a segment each) and the
    // midpoint Bell-state measurement fires.
    const double half = channel_transmission(channel.attenuation_db_per_km,
                                             0.5 * channel.segment_km);
    const double bsm = ideal_bsm ? 1.0 : p_bsm_mid;
    return p_pair * half * half * bsm;
}

namespace {
// splitmix64: decorrelates per-trial streams from one root seed.
std::uint64_t mix(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}
} // namespace

std::vector<RepeaterOutcome> simulate_repeater(const RepeaterConfig& cfg,
                                               std::uint64_t seed, int trials)
{
    cfg.validate();
    if (trials < 1)
        throw InvalidParameter("simulate_repeater: need at least one trial");

    const double pSeg = segment_success_prob(cfg.p_link(), cfg.modes);
    const double swapProb = (cfg.ideal_bsm ? 1.0 : cfg.p_swap)
        * cfg.memory_efficiency * cfg.memory_efficiency;
    const double roundTime = cfg.round_time();
    const long long lifetimeRounds = cfg.memory_lifetime < 0.0
        ? -1
        : static_cast<long long>(std::floor(cfg.memory_lifetime / roundTime));
    constexpr long long kMaxRounds = 100000000;

    std::vector<RepeaterOutcome> out(static_cast<std::size_t>(trials));
    for (int trial = 0; trial < trials; ++trial) {
        std::mt19937_64 rng(mix(seed + static_cast<std::uint64_t>(trial)));
        std::uniform_real_distribution<double> uni(0.0, 1.0);
        RepeaterOutcome& o = out[static_cast<std::size_t>(trial)];

        if (pSeg <= 0.0) {
            // Reported as an unsuccessful outcome, not an exception.
            o.success = false;
            o.rounds = 0;
            o.time = 0.0;
            continue;
        }

        std::vector<long long> readyAt(static_cast<std::size_t>(cfg.segments), -1);
        long long round = 0;
        bool allReady = false;
        while (!allReady && round < kMaxRounds) {
            ++round;
            allReady = true;
            for (auto& r : readyAt) {
                if (r >= 0 && lifetimeRounds >= 0 && round - r > lifetimeRounds)
                    r = -1; // memory expired, segment starts over
                if (r < 0 && uni(rng) < pSeg)
                    r = round;
                allReady = allReady && r >= 0;
            }
        }
        o.rounds = static_cast<int>(std::min(round, kMaxRounds));
        o.time = static_cast<double>(o.rounds) * roundTime;
        if (!allReady) {
            o.success = false;
            continue;
        }
        bool swapsOk = true;
        for (int node = 0; node + 1 < cfg.segments; ++node)
            swapsOk = swapsOk && (uni(rng) < swapProb);
        o.success = swapsOk;
        if (o.success)
            o.label = static_cast<BellLabel>(static_cast<int>(uni(rng) * 4.0) & 3);
    }
    return out;
}

RepeaterSummary summarize(const RepeaterConfig& cfg,
                          const std::vector<RepeaterOutcome>& outcomes)
{
    RepeaterSummary s;
    s.trials = static_cast<int>(outcomes.size());
    std::vector<double> times;
    double total = 0.0;
    double rounds = 0.0;
    for (const RepeaterOutcome& o : outcomes) {
        total += o.time;
        if (!o.success)
            continue;
        ++s.successes;
        times.push_back(o.time);
        rounds += o.rounds;
        s.bell_counts[static_cast<std::size_t>(o.label)] += 1;
    }
    s.success_fraction = s.trials > 0 ? static_cast<double>(s.successes) / s.trials : 0.0;
    if (!times.empty()) {
        double sum = 0.0;
        for (const double t : times)
            sum += t;
        s.mean_time = sum / static_cast<double>(times.size());
        s.mean_rounds = rounds / static_cast<double>(times.size());
        std::sort(times.begin(), times.end());
        s.median_time = times[times.size() / 2];
    }
    s.rate_per_s = total > 0.0 ? static_cast<double>(s.successes) / total : 0.0;
    (void)cfg;
    return s;
}

} // namespace echomem
