#include "echomem/scenario.hpp"

#include "echomem/echo_lab.hpp"
#include "echomem/errors.hpp"
#include "echomem/mb_solver.hpp"
#include "echomem/repeater.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

namespace echomem {

namespace {
constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * kPi;

double mhz_to_rad(double f) { return kTwoPi * 1e6 * f; }
double us_to_s(double t) { return 1e-6 * t; }

[[noreturn]] void fail(const std::string& path, const std::string& what)
{
    throw ValidationError("scenario: " + path + ": " + what);
}

const Json& child(const Json& j, const std::string& path, const std::string& key)
{
    if (!j.contains(key))
        fail(path + "." + key, "missing required key");
    return j.at(key);
}

void check_keys(const Json& j, const std::string& path, const std::set<std::string>& allowed)
{
    if (!j.is_object())
        fail(path, "expected an object");
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!allowed.count(it.key()))
            fail(path + "." + it.key(), "unknown key");
}

double num(const Json& j, const std::string& path, const std::string& key)
{
    const Json& v = child(j, path, key);
    if (!v.is_number())
        fail(path + "." + key, "expected a number");
    return v.get<double>();
}

double num_or(const Json& j, const std::string& path, const std::string& key, double dflt)
{
    if (!j.contains(key))
        return dflt;
    return num(j, path, key);
}

long long integer_or(const Json& j, const std::string& path, const std::string& key, long long dflt)
{
    if (!j.contains(key))
        return dflt;
    const Json& v = j.at(key);
    if (!v.is_number_integer() && !v.is_number_unsigned())
        fail(path + "." + key, "expected an integer");
    return v.get<long long>();
}

std::string str(const Json& j, const std::string& path, const std::string& key)
{
    const Json& v = child(j, path, key);
    if (!v.is_string())
        fail(path + "." + key, "expected a string");
    return v.get<std::string>();
}

std::string str_or(const Json& j, const std::string& path, const std::string& key,
                   const std::string& dflt)
{
    if (!j.contains(key))
        return dflt;
    return str(j, path, key);
}

bool bool_or(const Json& j, const std::string& path, const std::string& key, bool dflt)
{
    if (!j.contains(key))
        return dflt;
    const Json& v = j.at(key);
    if (!v.is_boolean())
        fail(path + "." + key, "expected a boolean");
    return v.get<bool>();
}

LineKind parse_line_kind(const std::string& s, const std::string& path)
{
    if (s == "gaussian")
        return LineKind::gaussian;
    if (s == "lorentzian")
        return LineKind::lorentzian;
    if (s == "flat_top")
        return LineKind::flat_top;
    fail(path, "unknown line kind '" + s + "' (gaussian | lorentzian | flat_top)");
}

LineShape parse_line(const Json& j, const std::string& path)
{
    check_keys(j, path, {"kind", "fwhm_mhz", "center_mhz"});
    const LineKind kind = parse_line_kind(str(j, path, "kind"), path + ".kind");
    return build_line_shape(kind, mhz_to_rad(num_or(j, path, "center_mhz", 0.0)),
                            mhz_to_rad(num(j, path, "fwhm_mhz")));
}

BroadeningControl parse_broadening(const Json& j, const std::string& path)
{
    check_keys(j, path, {"mode", "magnitude_mhz", "eta_m", "kernel", "switch_time_us"});
    BroadeningControl ctrl;
    const std::string mode = str_or(j, path, "mode", "transverse");
    if (mode == "transverse")
        ctrl.mode = BroadeningMode::transverse;
    else if (mode == "longitudinal")
        ctrl.mode = BroadeningMode::longitudinal;
    else
        fail(path + ".mode", "unknown mode '" + mode + "'");
    ctrl.magnitude = mhz_to_rad(num_or(j, path, "magnitude_mhz", 0.0));
    ctrl.transfer_efficiency = num_or(j, path, "eta_m", 1.0);
    ctrl.switch_time = us_to_s(num_or(j, path, "switch_time_us", 0.0));
    const std::string kernel = str_or(j, path, "kernel", "flat");
    if (kernel == "flat")
        ctrl.kernel = BroadeningKernel::flat;
    else if (kernel == "gaussian")
        ctrl.kernel = BroadeningKernel::gaussian;
    else
        fail(path + ".kernel", "unknown kernel '" + kernel + "'");
    return ctrl;
}

GridSpec parse_grid(const Json& j, const std::string& path, double scale)
{
    GridSpec spec;
    if (j.contains("grid")) {
        const Json& g = j.at("grid");
        const std::string p = path + ".grid";
        check_keys(g, p, {"bins", "cutoff", "nz"});
        spec.bins = static_cast<int>(integer_or(g, p, "bins", spec.bins));
        spec.cutoff = num_or(g, p, "cutoff", spec.cutoff);
        spec.nz = static_cast<int>(integer_or(g, p, "nz", spec.nz));
    }
    return spec.scaled(scale);
}

Waveform parse_input(const Json& j, const std::string& path, double scale, double carrier)
{
    check_keys(j, path,
               {"shape", "center_us", "fwhm_us", "window_us", "dt_ns", "amplitude",
                "alpha", "beta", "phi_rad", "bin_separation_us", "first_bin_us"});
    const std::string shape = str_or(j, path, "shape", "gaussian");
    const double window = us_to_s(num(j, path, "window_us"));
    const double dt = 1e-9 * num(j, path, "dt_ns") / scale;
    const double amp = num_or(j, path, "amplitude", 1.0);
    if (shape == "gaussian") {
        Waveform w = make_gaussian_pulse(us_to_s(num(j, path, "center_us")),
                                         us_to_s(num(j, path, "fwhm_us")), {amp, 0.0},
                                         window, dt, carrier);
        return w;
    }
    if (shape == "square") {
        return make_square_pulse(us_to_s(num(j, path, "center_us")),
                                 us_to_s(num(j, path, "fwhm_us")), {amp, 0.0}, window, dt,
                                 carrier);
    }
    if (shape == "timebin") {
        TimeBinState q;
        q.alpha = num(j, path, "alpha");
        q.beta = num(j, path, "beta");
        q.phi = num_or(j, path, "phi_rad", 0.0);
        q.bin_separation = us_to_s(num(j, path, "bin_separation_us"));
        q.shape.fwhm = us_to_s(num(j, path, "fwhm_us"));
        q.carrier = carrier;
        Waveform w = encode_timebin(q, us_to_s(num(j, path, "first_bin_us")), window, dt);
        w = scaled(std::move(w), {amp, 0.0});
        return w;
    }
    fail(path + ".shape", "unknown shape '" + shape + "' (gaussian | square | timebin)");
}

struct CribParse {
    CribScenario scenario;
    EfficiencyKind formula_kind = EfficiencyKind::transverse_backward;
};

CribParse parse_crib(const Json& j, const std::string& path, double scale,
                     bool with_input = true)
{
    check_keys(j, path,
               {"line", "prepare", "broadening", "depth", "input", "carrier_mhz",
                "storage_us", "t2_us", "recall", "grid", "chi_sign"});
    CribParse out;
    CribScenario& sc = out.scenario;
    sc.line = parse_line(child(j, path, "line"), path + ".line");
    if (j.contains("prepare")) {
        const Json& p = j.at("prepare");
        check_keys(p, path + ".prepare", {"pit_mhz", "spike_mhz"});
        sc.prepare = {{mhz_to_rad(num(p, path + ".prepare", "pit_mhz")),
                       mhz_to_rad(num(p, path + ".prepare", "spike_mhz"))}};
    }
    if (j.contains("broadening"))
        sc.broadening = parse_broadening(j.at("broadening"), path + ".broadening");
    sc.depth = num(j, path, "depth");
    sc.grid = parse_grid(j, path, scale);
    sc.storage_time = us_to_s(num_or(j, path, "storage_us", 0.0));
    sc.t2 = us_to_s(num_or(j, path, "t2_us", 0.0));
    sc.invert_gradient = integer_or(j, path, "chi_sign", 1) < 0;

    const double carrier = mhz_to_rad(num_or(j, path, "carrier_mhz", 0.0));
    if (with_input)
        sc.input = parse_input(child(j, path, "input"), path + ".input", scale, carrier);

    if (j.contains("recall")) {
        const Json& r = j.at("recall");
        const std::string p = path + ".recall";
        check_keys(r, p, {"direction", "window_us", "dt_ns"});
        const std::string dir = str_or(r, p, "direction", "backward");
        if (dir == "backward")
            sc.recall_direction = Direction::backward;
        else if (dir == "forward")
            sc.recall_direction = Direction::forward;
        else
            fail(p + ".direction", "unknown direction '" + dir + "'");
        sc.recall_window = us_to_s(num_or(r, p, "window_us", 0.0));
        const double dtn = num_or(r, p, "dt_ns", 0.0);
        sc.recall_dt = dtn > 0.0 ? 1e-9 * dtn / scale : 0.0;
    }
    out.formula_kind = sc.broadening.mode == BroadeningMode::longitudinal
        ? EfficiencyKind::longitudinal
        : (sc.recall_direction == Direction::backward ? EfficiencyKind::transverse_backward
                                                      : EfficiencyKind::transverse_forward);
    return out;
}

Json crib_result_json(const CribScenario& sc, const CribResult& res, EfficiencyKind kind)
{
    Json j;
    j["efficiency"] = res.efficiency;
    j["efficiency_formula_reference"] = efficiency_formula(kind, sc.depth);
    j["efficiency_abs_diff"] =
        std::abs(res.efficiency - efficiency_formula(kind, sc.depth));
    j["overlap_fidelity"] = res.overlap_fidelity;
    if (res.chirp_defined)
        j["chirp_rad_per_s2"] = res.chirp;
    else
        j["chirp_rad_per_s2"] = nullptr;
    j["carrier_phase_rad"] = res.recalled.carrier_phase;
    Json diag;
    diag["oracle_rms"] = res.oracle_rms;
    diag["energy_balance"] = res.energy_balance;
    diag["recurrence_margin"] = res.recurrence_margin;
    diag["grid_converged"] = res.grid_converged;
    j["diagnostics"] = diag;
    return j;
}

struct Emitter {
    std::filesystem::path dir;
    bool quiet = false;
    std::vector<std::string> files;

    std::filesystem::path target(const std::string& name)
    {
        files.push_back(name);
        return dir / name;
    }

    void cleanup() const
    {
        for (const std::string& f : files) {
            std::error_code ec;
            std::filesystem::remove(dir / f, ec);
            std::filesystem::remove(dir / (f + ".tmp"), ec);
        }
    }
};

// ---- experiment runners ------------------------------------------------

void run_crib_kind(const Json& body, const std::string& name, double scale,
                   std::uint64_t /*seed*/, Emitter& em, Json& summary)
{
    const CribParse parsed = parse_crib(body, "crib", scale);
    const CribResult res = run_crib(parsed.scenario);
    summary = crib_result_json(parsed.scenario, res, parsed.formula_kind);
    write_waveform_csv(em.target(name + "_input.csv"), parsed.scenario.input);
    write_waveform_csv(em.target(name + "_transmitted.csv"), res.transmitted);
    write_waveform_csv(em.target(name + "_recalled.csv"), res.recalled);
}

void run_echo_kind(const Json& body, const std::string& name, double scale,
                   std::uint64_t /*seed*/, Emitter& em, Json& summary)
{
    check_keys(body, "echo",
               {"variant", "line", "t2_us", "tau_us", "theta1_pi", "theta2_pi", "pulses",
                "trace"});
    const LineShape line = parse_line(child(body, "echo", "line"), "echo.line");
    const double t2 = us_to_s(num_or(body, "echo", "t2_us", 0.0));
    TraceParams params;
    if (body.contains("trace")) {
        const Json& t = body.at("trace");
        check_keys(t, "echo.trace", {"start_us", "end_us", "dt_ns", "bins", "cutoff"});
        params.t_start = us_to_s(num_or(t, "echo.trace", "start_us", 0.0));
        params.t_end = us_to_s(num_or(t, "echo.trace", "end_us", 0.0));
        params.dt = 1e-9 * num_or(t, "echo.trace", "dt_ns", 0.0);
        params.bins = static_cast<int>(integer_or(t, "echo.trace", "bins", params.bins));
        params.cutoff = num_or(t, "echo.trace", "cutoff", params.cutoff);
    }
    params.bins = static_cast<int>(std::lround(params.bins * scale));
    if (params.dt > 0.0)
        params.dt /= scale;

    const std::string variant = str_or(body, "echo", "variant", "two_pulse");
    EchoTrace trace;
    if (variant == "two_pulse") {
        trace = two_pulse_echo(us_to_s(num(body, "echo", "tau_us")),
                               kPi * num(body, "echo", "theta1_pi"),
                               kPi * num(body, "echo", "theta2_pi"), line, t2, params);
    } else if (variant == "stimulated") {
        PulseSequence seq;
        const Json& pulses = child(body, "echo", "pulses");
        if (!pulses.is_array() || pulses.empty())
            fail("echo.pulses", "expected a non-empty array");
        for (std::size_t i = 0; i < pulses.size(); ++i) {
            const std::string p = "echo.pulses[" + std::to_string(i) + "]";
            check_keys(pulses[i], p, {"t_us", "duration_us", "area_pi", "phase_rad", "role"});
            Pulse pulse;
            pulse.start = us_to_s(num(pulses[i], p, "t_us"));
            pulse.duration = us_to_s(num_or(pulses[i], p, "duration_us", 0.0));
            pulse.area = kPi * num(pulses[i], p, "area_pi");
            pulse.phase = num_or(pulses[i], p, "phase_rad", 0.0);
            const std::string role = str_or(pulses[i], p, "role", "data");
            pulse.role = role == "write" ? PulseRole::write
                : role == "read"         ? PulseRole::read
                                          : PulseRole::data;
            seq.pulses.push_back(pulse);
        }
        trace = stimulated_echo(seq, line, t2, params);
    } else {
        fail("echo.variant", "unknown variant '" + variant + "'");
    }

    const std::size_t peak = trace.peak_index();
    summary["peak_time_us"] = trace.time_at(peak) * 1e6;
    summary["peak_intensity"] = trace.intensity[peak];
    summary["trace_samples"] = trace.size();
    write_trace_csv(em.target(name + "_trace.csv"), trace);
}

void run_timebin_kind(const Json& body, const std::string& name, double scale,
                      std::uint64_t /*seed*/, Emitter& em, Json& summary)
{
    check_keys(body, "timebin",
               {"state", "bin_separation_us", "shape_fwhm_us", "first_bin_us", "window_us",
                "dt_ns", "carrier_mhz", "crib"});
    TimeBinState q;
    const Json& st = child(body, "timebin", "state");
    check_keys(st, "timebin.state", {"alpha", "beta", "phi_rad"});
    q.alpha = num(st, "timebin.state", "alpha");
    q.beta = num(st, "timebin.state", "beta");
    q.phi = num_or(st, "timebin.state", "phi_rad", 0.0);
    q.bin_separation = us_to_s(num(body, "timebin", "bin_separation_us"));
    q.shape.fwhm = us_to_s(num(body, "timebin", "shape_fwhm_us"));
    q.carrier = mhz_to_rad(num_or(body, "timebin", "carrier_mhz", 0.0));

    const double firstBin = us_to_s(num(body, "timebin", "first_bin_us"));
    const double window = us_to_s(num(body, "timebin", "window_us"));
    const double dt = 1e-9 * num(body, "timebin", "dt_ns") / scale;

    CribParse parsed = parse_crib(child(body, "timebin", "crib"), "timebin.crib", scale,
                                  /*with_input=*/false);
    Waveform input = encode_timebin(q, firstBin, window, dt);
    input.carrier = q.carrier;
    parsed.scenario.input = std::move(input);

    const CribResult res = run_crib(parsed.scenario);
    const double hint =
        parsed.scenario.input.duration() + parsed.scenario.storage_time - firstBin;
    const TimeBinAnalysis an =
        analyze_timebin(res.recalled, q, parsed.scenario.storage_time, hint);

    summary["fidelity"] = an.fidelity;
    Json unc;
    unc["alpha"] = an.alpha;
    unc["beta"] = an.beta;
    unc["phi_rad"] = an.phi;
    summary["uncorrected"] = unc;
    Json corr;
    corr["alpha"] = an.alpha_corrected;
    corr["beta"] = an.beta_corrected;
    corr["phi_rad"] = an.phi_corrected;
    summary["corrected"] = corr;
    summary["carrier_phase_rad"] = res.recalled.carrier_phase;
    summary["efficiency"] = res.efficiency;
    write_waveform_csv(em.target(name + "_input.csv"), parsed.scenario.input);
    write_waveform_csv(em.target(name + "_recalled.csv"), res.recalled);
}

void run_fringe_kind(const Json& body, const std::string& name, double scale,
                     std::uint64_t seed, Emitter& em, Json& summary)
{
    check_keys(body, "fringe",
               {"variant", "state", "bin_separation_us", "shape_fwhm_us", "line", "t2_us",
                "data_time_us", "read_time_us", "weak_area", "alpha4_rad", "alpha5_rad",
                "scan", "sigma_phase_rad", "points", "shots", "tau_us", "scale_a",
                "scale_b", "data_area", "read_area_pi", "trace"});
    FringeParams mc;
    mc.points = static_cast<int>(integer_or(body, "fringe", "points", 24));
    mc.shots = static_cast<int>(integer_or(body, "fringe", "shots", 400));
    mc.sigma_phase = num_or(body, "fringe", "sigma_phase_rad", 0.0);
    mc.seed = seed;

    TraceParams trace;
    if (body.contains("trace")) {
        const Json& t = body.at("trace");
        check_keys(t, "fringe.trace", {"dt_ns", "bins", "cutoff"});
        trace.dt = 1e-9 * num_or(t, "fringe.trace", "dt_ns", 0.0);
        trace.bins = static_cast<int>(integer_or(t, "fringe.trace", "bins", trace.bins));
        trace.cutoff = num_or(t, "fringe.trace", "cutoff", trace.cutoff);
    }
    trace.bins = static_cast<int>(std::lround(trace.bins * scale));

    FringeScan scan;
    const std::string variant = str_or(body, "fringe", "variant", "single");
    if (variant == "single") {
        TimeBinState q;
        const Json& st = child(body, "fringe", "state");
        check_keys(st, "fringe.state", {"alpha", "beta", "phi_rad"});
        q.alpha = num(st, "fringe.state", "alpha");
        q.beta = num(st, "fringe.state", "beta");
        q.phi = num_or(st, "fringe.state", "phi_rad", 0.0);
        q.bin_separation = us_to_s(num(body, "fringe", "bin_separation_us"));
        q.shape.fwhm = us_to_s(num(body, "fringe", "shape_fwhm_us"));

        StimulatedEchoConfig cfg;
        cfg.line = parse_line(child(body, "fringe", "line"), "fringe.line");
        cfg.t2 = us_to_s(num_or(body, "fringe", "t2_us", 0.0));
        cfg.data_time = us_to_s(num(body, "fringe", "data_time_us"));
        cfg.read_time = us_to_s(num(body, "fringe", "read_time_us"));
        cfg.weak_area = num_or(body, "fringe", "weak_area", 0.05);
        cfg.trace = trace;

        ReadPhases phases;
        phases.alpha4 = num_or(body, "fringe", "alpha4_rad", 0.0);
        phases.alpha5 = num_or(body, "fringe", "alpha5_rad", 0.0);
        const std::string scanned = str_or(body, "fringe", "scan", "alpha5");
        if (scanned == "alpha5")
            phases.scan_second = true;
        else if (scanned == "alpha4")
            phases.scan_second = false;
        else
            fail("fringe.scan", "expected 'alpha4' or 'alpha5'");
        scan = fringe_scan(q, phases, cfg, mc);
    } else if (variant == "dual") {
        DualMemoryConfig cfg;
        cfg.line_a = parse_line(child(body, "fringe", "line"), "fringe.line");
        cfg.line_b = cfg.line_a;
        cfg.t2_a = cfg.t2_b = us_to_s(num_or(body, "fringe", "t2_us", 0.0));
        cfg.tau = us_to_s(num(body, "fringe", "tau_us"));
        cfg.scale_a = num_or(body, "fringe", "scale_a", 1.0);
        cfg.scale_b = num_or(body, "fringe", "scale_b", 1.0);
        cfg.data_area = num_or(body, "fringe", "data_area", 0.1);
        cfg.read_area = kPi * num_or(body, "fringe", "read_area_pi", 1.0);
        cfg.trace = trace;
        scan = dual_memory_fringe(cfg, mc);
    } else {
        fail("fringe.variant", "unknown variant '" + variant + "'");
    }

    summary["visibility"] = scan.visibility;
    summary["fidelity"] = scan.fidelity;
    summary["mean_intensity"] = scan.mean_intensity;
    summary["fit_residual"] = scan.fit_residual;
    summary["phases"] = scan.phases;
    summary["intensities"] = scan.intensities;
    write_fringe_csv(em.target(name + "_fringe.csv"), scan);
}

void run_repeater_kind(const Json& body, const std::string& name, double /*scale*/,
                       std::uint64_t seed, Emitter& em, Json& summary)
{
    check_keys(body, "repeater",
               {"attenuation_db_per_km", "segment_km", "speed_km_per_s", "segments",
                "modes", "efficiency", "lifetime_ms", "p_swap", "p_pair", "p_bsm_mid",
                "ideal_bsm", "trials"});
    RepeaterConfig cfg;
    cfg.channel.attenuation_db_per_km = num_or(body, "repeater", "attenuation_db_per_km", 0.2);
    cfg.channel.segment_km = num(body, "repeater", "segment_km");
    cfg.channel.speed_km_per_s = num_or(body, "repeater", "speed_km_per_s", 2e5);
    cfg.segments = static_cast<int>(integer_or(body, "repeater", "segments", 1));
    cfg.channel.total_km = cfg.channel.segment_km * cfg.segments;
    cfg.modes = static_cast<int>(integer_or(body, "repeater", "modes", 1));
    cfg.memory_efficiency = num_or(body, "repeater", "efficiency", 1.0);
    const double lifetimeMs = num_or(body, "repeater", "lifetime_ms", -1.0);
    cfg.memory_lifetime = lifetimeMs < 0.0 ? -1.0 : lifetimeMs * 1e-3;
    cfg.p_swap = num_or(body, "repeater", "p_swap", 1.0);
    cfg.p_pair = num_or(body, "repeater", "p_pair", 1.0);
    cfg.p_bsm_mid = num_or(body, "repeater", "p_bsm_mid", 0.5);
    cfg.ideal_bsm = bool_or(body, "repeater", "ideal_bsm", false);
    const int trials = static_cast<int>(integer_or(body, "repeater", "trials", 100000));

    const auto outcomes = simulate_repeater(cfg, seed, trials);
    const RepeaterSummary s = summarize(cfg, outcomes);

    summary["trials"] = s.trials;
    summary["successes"] = s.successes;
    summary["success_fraction"] = s.success_fraction;
    summary["mean_time_s"] = s.mean_time;
    summary["median_time_s"] = s.median_time;
    summary["mean_rounds"] = s.mean_rounds;
    summary["rate_per_s"] = s.rate_per_s;
    Json bell;
    bell["phi_plus"] = s.bell_counts[0];
    bell["phi_minus"] = s.bell_counts[1];
    bell["psi_plus"] = s.bell_counts[2];
    bell["psi_minus"] = s.bell_counts[3];
    summary["bell_counts"] = bell;
    Json forms;
    forms["round_time_s"] = cfg.round_time();
    forms["p_link"] = cfg.p_link();
    forms["segment_success_prob"] = segment_success_prob(cfg.p_link(), cfg.modes);
    forms["channel_transmission_total"] = channel_transmission(
        cfg.channel.attenuation_db_per_km, cfg.channel.total_km);
    forms["min_storage_time_s"] =
        min_storage_time(cfg.channel.segment_km, cfg.channel.speed_km_per_s);
    forms["min_efficiency"] =
        min_efficiency(cfg.channel.attenuation_db_per_km, cfg.channel.segment_km);
    const UsefulnessResult useful = memory_usefulness(
        cfg.memory_efficiency, cfg.channel.attenuation_db_per_km, cfg.channel.segment_km);
    forms["memory_useful"] = useful.useful;
    forms["memory_margin"] = useful.margin;
    summary["closed_forms"] = forms;

    // Histogram of time to entanglement in rounds.
    std::map<int, int> hist;
    for (const auto& o : outcomes)
        if (o.success)
            ++hist[o.rounds];
    std::vector<std::vector<double>> rows;
    for (const auto& [rounds, count] : hist)
        rows.push_back({static_cast<double>(rounds), rounds * cfg.round_time(),
                        static_cast<double>(count)});
    write_table_csv(em.target(name + "_histogram.csv"), {"rounds", "time_s", "count"}, rows);
}

// Kind-specific sweep table columns pulled from the summary JSON.
std::vector<std::pair<std::string, std::string>> sweep_columns(const std::string& kind)
{
    if (kind == "crib")
        return {{"efficiency", "efficiency"},
                {"efficiency_formula", "efficiency_formula_reference"},
                {"abs_diff", "efficiency_abs_diff"},
                {"overlap_fidelity", "overlap_fidelity"},
                {"oracle_rms", "/diagnostics/oracle_rms"}};
    if (kind == "timebin")
        return {{"fidelity", "fidelity"}, {"efficiency", "efficiency"}};
    if (kind == "fringe")
        return {{"visibility", "visibility"},
                {"fidelity", "fidelity"},
                {"mean_intensity", "mean_intensity"}};
    if (kind == "repeater")
        return {{"mean_time_s", "mean_time_s"},
                {"rate_per_s", "rate_per_s"},
                {"success_fraction", "success_fraction"},
                {"min_efficiency", "/closed_forms/min_efficiency"}};
    if (kind == "echo")
        return {{"peak_time_us", "peak_time_us"}, {"peak_intensity", "peak_intensity"}};
    return {};
}

double summary_value(const Json& summary, const std::string& key)
{
    if (!key.empty() && key.front() == '/')
        return summary.at(Json::json_pointer(key)).get<double>();
    return summary.at(key).get<double>();
}

Json run_kind(const std::string& kind, const Json& body, const std::string& name,
              double scale, std::uint64_t seed, Emitter& em);

void run_sweep_kind(const Json& body, const std::string& name, double scale,
                    std::uint64_t seed, Emitter& em, Json& summary)
{
    check_keys(body, "sweep", {"parameter", "values", "base"});
    const std::string param = str(body, "sweep", "parameter");
    const Json& values = child(body, "sweep", "values");
    if (!values.is_array() || values.empty())
        fail("sweep.values", "expected a non-empty array");
    for (const auto& v : values)
        if (!v.is_number())
            fail("sweep.values", "sweep axis must be numeric");
    const Json& base = child(body, "sweep", "base");
    const std::string baseKind = str(base, "sweep.base", "kind");
    if (baseKind == "sweep")
        fail("sweep.base.kind", "nested sweeps are not supported");
    check_keys(base, "sweep.base", {"name", "kind", "seed", "grid_scale", baseKind});

    // Dotted path -> JSON pointer into the base scenario, e.g. "crib.depth".
    std::string pointer = "/" + param;
    for (char& c : pointer)
        if (c == '.')
            c = '/';
    const std::string parentPath = pointer.substr(0, pointer.rfind('/'));

    const auto columns = sweep_columns(baseKind);
    std::vector<std::string> header{param};
    for (const auto& [label, key] : columns)
        header.push_back(label);

    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < values.size(); ++i) {
        Json point = base;
        try {
            // The parent object must already exist; this catches typos while
            // still allowing sweeps over keys the base leaves at defaults.
            if (!parentPath.empty()
                && !point.at(Json::json_pointer(parentPath)).is_object())
                fail("sweep.parameter", "path '" + param + "' has no parent object");
            point[Json::json_pointer(pointer)] = values[i];
        } catch (const Json::exception&) {
            fail("sweep.parameter", "path '" + param + "' not found in base scenario");
        }
        Emitter pointEm;
        pointEm.dir = em.dir;
        pointEm.quiet = true;
        const std::string pointName = name + "_pt" + std::to_string(i);
        // A point's own top-level grid_scale composes with the run scale,
        // so grid-refinement sweeps work like any other axis.
        const double pointScale = scale * num_or(point, "sweep.base", "grid_scale", 1.0);
        Json pointSummary;
        try {
            pointSummary = run_kind(baseKind, point.at(baseKind), pointName, pointScale,
                                    seed + i, pointEm);
        } catch (...) {
            // Hand the point's files to the outer emitter so the failure
            // cleanup removes every partial output.
            for (const std::string& f : pointEm.files)
                em.files.push_back(f);
            throw;
        }
        for (const std::string& f : pointEm.files)
            em.files.push_back(f);
        std::vector<double> row{values[i].get<double>()};
        for (const auto& [label, key] : columns)
            row.push_back(summary_value(pointSummary, key));
        rows.push_back(std::move(row));
    }
    write_table_csv(em.target(name + "_sweep.csv"), header, rows);
    summary["points"] = values.size();
    summary["parameter"] = param;
}

Json run_kind(const std::string& kind, const Json& body, const std::string& name,
              double scale, std::uint64_t seed, Emitter& em)
{
    Json summary;
    if (kind == "crib")
        run_crib_kind(body, name, scale, seed, em, summary);
    else if (kind == "echo")
        run_echo_kind(body, name, scale, seed, em, summary);
    else if (kind == "timebin")
        run_timebin_kind(body, name, scale, seed, em, summary);
    else if (kind == "fringe")
        run_fringe_kind(body, name, scale, seed, em, summary);
    else if (kind == "repeater")
        run_repeater_kind(body, name, scale, seed, em, summary);
    else if (kind == "sweep")
        run_sweep_kind(body, name, scale, seed, em, summary);
    else
        fail("kind", "unknown experiment kind '" + kind + "'");
    return summary;
}

} // namespace

std::vector<std::string> run_scenario_json(const Json& scenario, const RunOptions& options,
                                           const std::string& source_hash)
{
    check_keys(scenario, "(root)",
               {"name", "kind", "seed", "grid_scale", "crib", "echo", "timebin", "fringe",
                "repeater", "sweep"});
    const std::string name = str(scenario, "(root)", "name");
    const std::string kind = str(scenario, "(root)", "kind");
    const double scale =
        options.grid_scale * num_or(scenario, "(root)", "grid_scale", 1.0);
    if (scale <= 0.0)
        fail("grid_scale", "must be positive");
    const std::uint64_t seed = options.seed_override
        ? *options.seed_override
        : static_cast<std::uint64_t>(integer_or(scenario, "(root)", "seed", 1));
    if (!scenario.contains(kind))
        fail(kind, "missing the parameter block for kind '" + kind + "'");

    std::filesystem::create_directories(options.out_dir);
    Emitter em;
    em.dir = options.out_dir;
    em.quiet = options.quiet;

    try {
        const Json summary = run_kind(kind, scenario.at(kind), name, scale, seed, em);

        Json top;
        top["name"] = name;
        top["kind"] = kind;
        top["seed"] = seed;
        top["grid_scale"] = scale;
        top["results"] = summary;
        write_json_file(em.dir / (name + "_result.json"), top);
        em.files.push_back(name + "_result.json");

        Json manifest;
        manifest["generator"] = "echomem";
        manifest["version"] = kVersion;
        manifest["scenario_hash"] = source_hash;
        manifest["name"] = name;
        manifest["kind"] = kind;
        manifest["seed"] = seed;
        manifest["grid_scale"] = scale;
        // Per-trial / per-point random streams derive from the root seed,
        // so results do not depend on execution order.
        manifest["order_independent"] = true;
        manifest["outputs"] = em.files;
        write_json_file(em.dir / (name + "_manifest.json"), manifest);
        em.files.push_back(name + "_manifest.json");

        if (!options.quiet) {
            std::printf("%s: wrote %zu files to %s\n", name.c_str(), em.files.size(),
                        em.dir.string().c_str());
        }
        return em.files;
    } catch (...) {
        // Partial outputs are removed on failure.
        em.cleanup();
        throw;
    }
}

std::vector<std::string> run_scenario_file(const RunOptions& options)
{
    std::ifstream f(options.scenario_path, std::ios::binary);
    if (!f)
        throw ValidationError("scenario: cannot read file " + options.scenario_path.string());
    std::stringstream buffer;
    buffer << f.rdbuf();
    const std::string bytes = buffer.str();
    Json scenario;
    try {
        scenario = Json::parse(bytes);
    } catch (const Json::exception& e) {
        throw ValidationError(std::string("scenario: JSON parse error: ") + e.what());
    }
    return run_scenario_json(scenario, options, fnv1a_hex(bytes));
}

} // namespace echomem
