// SPDX-License-Identifier: Apache-2.0
#include "twotone/scenario.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <limits>
#include <mutex>
#include <sstream>

#include "twotone/errors.hpp"
#include "twotone/iq_file.hpp"
#include "twotone/parallel.hpp"
#include "twotone/spectrum.hpp"

namespace twotone {

using nlohmann::json;

std::size_t default_workers()
{
    if (const char* env = std::getenv("TWOTONE_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && v > 0)
            return static_cast<std::size_t>(v);
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

namespace {

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

const char* to_string(HopPhaseMode m)
{
    return m == HopPhaseMode::Random ? "random" : "continuous";
}

const char* to_string(InterfererKind k)
{
    switch (k) {
    case InterfererKind::Swept:
        return "swept";
    case InterfererKind::PulsedCw:
        return "pulsed_cw";
    case InterfererKind::Cw:
        break;
    }
    return "cw";
}

json optional_number(const std::optional<double>& v)
{
    if (!v)
        return nullptr;
    if (std::isinf(*v))
        return *v < 0 ? "-inf" : "inf";
    return *v;
}

json follower_json(const ReceiverChainConfig& f)
{
    return {
        {"front_bpf",
         {{"enabled", f.front_bpf.enabled},
          {"center_hz", f.front_bpf.center_hz},
          {"bw_hz", f.front_bpf.bw_hz},
          {"num_taps", f.front_bpf.num_taps}}},
        {"lna", {{"gain_db", f.lna.gain_db}, {"noise_figure_db", f.lna.noise_figure_db}}},
        {"mixer_loss_db", f.mixer_loss_db},
        {"ref_bpf", {{"center_hz", f.ref_bpf.center_hz}, {"bw_hz", f.ref_bpf.bw_hz}, {"num_taps", f.ref_bpf.num_taps}}},
        {"agc",
         {{"target_rms", f.agc.target_rms},
          {"loop_gain", f.agc.loop_gain},
          {"rms_time_constant_s", f.agc.rms_time_constant_s},
          {"max_gain_db", f.agc.max_gain_db}}},
        {"follower_ppm", f.follower_ppm},
        {"lna_before_bpf", f.lna_before_bpf},
    };
}

json interferer_json(const Interferer& i)
{
    return {
        {"kind", to_string(i.kind)},
        {"freq_hz", i.freq_hz},
        {"power_rel_db", optional_number(i.power_rel_db)},
        {"sweep_rate_hz_per_s", i.sweep_rate_hz_per_s},
        {"duty_cycle", i.duty_cycle},
        {"period_s", i.period_s},
        {"phase_seed", i.phase_seed},
    };
}

// ---------------------------------------------------------------------------
// Strict overlay of user JSON on defaults
// ---------------------------------------------------------------------------

std::string join(const std::string& path, const std::string& key)
{
    return path.empty() ? key : path + "." + key;
}

json overlay(const json& defaults, const json& user, const std::string& path)
{
    if (defaults.is_null())
        return user;
    if (defaults.is_object()) {
        if (!user.is_object())
            throw ConfigError(path + ": expected an object");
        json out = defaults;
        for (const auto& [key, value] : user.items()) {
            if (!defaults.contains(key))
                throw ConfigError(join(path, key) + ": unknown key");
            out[key] = overlay(defaults[key], value, join(path, key));
        }
        return out;
    }
    if (defaults.is_array()) {
        if (!user.is_array())
            throw ConfigError(path + ": expected an array");
        json element_default;
        if (path == "followers")
            element_default = follower_json(ReceiverChainConfig{});
        else if (path == "interferers")
            element_default = interferer_json(Interferer{});
        else
            return user;
        json out = json::array();
        for (std::size_t i = 0; i < user.size(); ++i)
            out.push_back(overlay(element_default, user[i], join(path, std::to_string(i))));
        return out;
    }
    return user;
}

// ---------------------------------------------------------------------------
// Typed decoding with field paths
// ---------------------------------------------------------------------------

class Reader
{
  public:
    Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {}

    Reader at(const std::string& key) const { return Reader(j_.at(key), join(path_, key)); }
    Reader at(std::size_t index) const { return Reader(j_.at(index), join(path_, std::to_string(index))); }

    const json& raw() const { return j_; }
    const std::string& path() const { return path_; }
    bool is_null() const { return j_.is_null(); }
    std::size_t size() const { return j_.size(); }

    double number() const
    {
        if (j_.is_string()) {
            const auto s = j_.get<std::string>();
            if (s == "-inf")
                return -std::numeric_limits<double>::infinity();
            if (s == "inf")
                return std::numeric_limits<double>::infinity();
        }
        if (!j_.is_number())
            throw ConfigError(path_ + ": expected a number");
        return j_.get<double>();
    }

    std::optional<double> optional_number() const
    {
        if (j_.is_null())
            return std::nullopt;
        return number();
    }

    int integer() const
    {
        if (!j_.is_number_integer())
            throw ConfigError(path_ + ": expected an integer");
        return j_.get<int>();
    }

    std::uint64_t unsigned64() const
    {
        if (j_.is_number_unsigned())
            return j_.get<std::uint64_t>();
        if (j_.is_number_integer() && j_.get<std::int64_t>() >= 0)
            return static_cast<std::uint64_t>(j_.get<std::int64_t>());
        throw ConfigError(path_ + ": expected a non-negative integer");
    }

    bool boolean() const
    {
        if (!j_.is_boolean())
            throw ConfigError(path_ + ": expected true or false");
        return j_.get<bool>();
    }

    std::string string() const
    {
        if (!j_.is_string())
            throw ConfigError(path_ + ": expected a string");
        return j_.get<std::string>();
    }

    [[noreturn]] void fail(const std::string& what) const { throw ConfigError(path_ + ": " + what); }

  private:
    const json& j_;
    std::string path_;
};

ReceiverChainConfig read_follower(const Reader& r)
{
    ReceiverChainConfig f;
    const auto fb = r.at("front_bpf");
    f.front_bpf.enabled = fb.at("enabled").boolean();
    f.front_bpf.center_hz = fb.at("center_hz").number();
    f.front_bpf.bw_hz = fb.at("bw_hz").number();
    f.front_bpf.num_taps = fb.at("num_taps").integer();
    f.lna.gain_db = r.at("lna").at("gain_db").number();
    f.lna.noise_figure_db = r.at("lna").at("noise_figure_db").number();
    f.mixer_loss_db = r.at("mixer_loss_db").number();
    const auto rb = r.at("ref_bpf");
    f.ref_bpf.center_hz = rb.at("center_hz").number();
    f.ref_bpf.bw_hz = rb.at("bw_hz").number();
    f.ref_bpf.num_taps = rb.at("num_taps").integer();
    const auto a = r.at("agc");
    f.agc.target_rms = a.at("target_rms").number();
    f.agc.loop_gain = a.at("loop_gain").number();
    f.agc.rms_time_constant_s = a.at("rms_time_constant_s").number();
    f.agc.max_gain_db = a.at("max_gain_db").number();
    f.follower_ppm = r.at("follower_ppm").number();
    f.lna_before_bpf = r.at("lna_before_bpf").boolean();
    return f;
}

Interferer read_interferer(const Reader& r)
{
    Interferer i;
    const auto kind = r.at("kind").string();
    if (kind == "cw")
        i.kind = InterfererKind::Cw;
    else if (kind == "swept")
        i.kind = InterfererKind::Swept;
    else if (kind == "pulsed_cw")
        i.kind = InterfererKind::PulsedCw;
    else
        r.at("kind").fail("expected \"cw\", \"swept\" or \"pulsed_cw\", got \"" + kind + "\"");
    i.freq_hz = r.at("freq_hz").number();
    const auto power = r.at("power_rel_db").optional_number();
    i.power_rel_db = power ? *power : -std::numeric_limits<double>::infinity();
    i.sweep_rate_hz_per_s = r.at("sweep_rate_hz_per_s").number();
    i.duty_cycle = r.at("duty_cycle").number();
    i.period_s = r.at("period_s").number();
    i.phase_seed = r.at("phase_seed").unsigned64();
    return i;
}

Scenario decode(const json& merged)
{
    const Reader root(merged, "");
    Scenario s;
    s.master_seed = root.at("master_seed").unsigned64();
    s.rate_hz = root.at("rate_hz").number();
    s.sim_center_hz = root.at("sim_center_hz").number();
    s.duration_s = root.at("duration_s").number();

    const auto tt = root.at("two_tone");
    s.two_tone.delta_f_hz = tt.at("delta_f_hz").number();
    s.two_tone.tone_amplitude = tt.at("tone_amplitude").number();
    s.two_tone.pa_gain_db = tt.at("pa_gain_db").number();
    const auto sat = tt.at("pa_saturation");
    if (!sat.is_null()) {
        if (!sat.raw().is_object())
            sat.fail("expected null or {\"output_ceiling\": <number>}");
        for (const auto& [key, value] : sat.raw().items())
            if (key != "output_ceiling")
                throw ConfigError(join(sat.path(), key) + ": unknown key");
        if (!sat.raw().contains("output_ceiling"))
            sat.fail("missing output_ceiling");
        s.two_tone.pa_output_ceiling = sat.at("output_ceiling").number();
    }
    const auto mode = tt.at("hop_phase_mode").string();
    if (mode == "continuous")
        s.two_tone.hop_phase_mode = HopPhaseMode::Continuous;
    else if (mode == "random")
        s.two_tone.hop_phase_mode = HopPhaseMode::Random;
    else
        tt.at("hop_phase_mode").fail("expected \"continuous\" or \"random\", got \"" + mode + "\"");
    s.two_tone.sim_center_hz = s.sim_center_hz;

    const auto osc = root.at("leader_oscillator");
    s.leader_oscillator.ppm_offset = osc.at("ppm_offset").number();
    s.leader_oscillator.drift_ppm_per_s = osc.at("drift_ppm_per_s").number();
    s.leader_oscillator.phase_noise_diffusion = osc.at("phase_noise_diffusion").number();
    s.leader_oscillator.initial_phase_rad = osc.at("initial_phase_rad").number();

    const auto hops = root.at("hops");
    const auto centers = hops.at("centers_hz");
    if (!centers.raw().is_array())
        centers.fail("expected an array of frequencies");
    s.hops.centers_hz.clear();
    for (std::size_t i = 0; i < centers.size(); ++i)
        s.hops.centers_hz.push_back(centers.at(i).number());
    s.hops.dwell_s = hops.at("dwell_s").number();
    const auto pattern = hops.at("pattern");
    const auto kind = pattern.at("kind").string();
    const auto seed = pattern.at("seed");
    if (!seed.is_null())
        s.hop_seed = seed.unsigned64();
    const auto indices = pattern.at("indices");
    if (!indices.raw().is_array())
        indices.fail("expected an array of center indices");
    if (kind == "random") {
        s.hops.pattern = RandomPattern{};
    } else if (kind == "fixed_sequence") {
        FixedSequence fixed;
        for (std::size_t i = 0; i < indices.size(); ++i)
            fixed.indices.push_back(static_cast<std::size_t>(indices.at(i).unsigned64()));
        s.hops.pattern = fixed;
    } else {
        pattern.at("kind").fail("expected \"random\" or \"fixed_sequence\", got \"" + kind + "\"");
    }
    s.hops.total_duration_s = s.duration_s;

    const auto ch = root.at("channel");
    s.channel.distance_m = ch.at("distance_m").number();
    s.channel.carrier_for_fspl_hz = ch.at("carrier_for_fspl_hz").number();
    s.channel.noise_density_dbm_hz = ch.at("noise_density_dbm_hz").optional_number();
    s.channel.target_snr_db = ch.at("target_snr_db").optional_number();
    s.channel.extra_loss_db = ch.at("extra_loss_db").number();
    s.channel.snr_reference_bw_hz = ch.at("snr_reference_bw_hz").number();

    const auto intfs = root.at("interferers");
    if (!intfs.raw().is_array())
        intfs.fail("expected an array");
    for (std::size_t i = 0; i < intfs.size(); ++i)
        s.interferers.push_back(read_interferer(intfs.at(i)));

    const auto fols = root.at("followers");
    if (!fols.raw().is_array())
        fols.fail("expected an array");
    s.followers.clear();
    for (std::size_t i = 0; i < fols.size(); ++i)
        s.followers.push_back(read_follower(fols.at(i)));

    const auto an = root.at("analysis");
    s.analysis.f_nominal_hz = an.at("f_nominal_hz").number();
    s.analysis.lp_bw_hz = an.at("lp_bw_hz").number();
    s.analysis.decim = an.at("decim").integer();
    s.analysis.gate_multiplier = an.at("gate_multiplier").number();
    s.analysis.window_s = an.at("window_s").number();
    s.analysis.settle_band = an.at("settle_band").number();
    return s;
}

std::string prefixed(const std::string& prefix, const std::exception& e)
{
    return prefix + e.what();
}

} // namespace

json to_json(const Scenario& s)
{
    json pattern;
    if (const auto* fixed = std::get_if<FixedSequence>(&s.hops.pattern)) {
        pattern["kind"] = "fixed_sequence";
        pattern["indices"] = fixed->indices;
    } else {
        pattern["kind"] = "random";
        pattern["indices"] = json::array();
    }
    pattern["seed"] = s.hop_seed ? json(*s.hop_seed) : json(nullptr);

    json followers = json::array();
    for (const auto& f : s.followers)
        followers.push_back(follower_json(f));
    json interferers = json::array();
    for (const auto& i : s.interferers)
        interferers.push_back(interferer_json(i));

    return {
        {"master_seed", s.master_seed},
        {"rate_hz", s.rate_hz},
        {"sim_center_hz", s.sim_center_hz},
        {"duration_s", s.duration_s},
        {"two_tone",
         {{"delta_f_hz", s.two_tone.delta_f_hz},
          {"tone_amplitude", s.two_tone.tone_amplitude},
          {"pa_gain_db", s.two_tone.pa_gain_db},
          {"pa_saturation",
           s.two_tone.pa_output_ceiling ? json{{"output_ceiling", *s.two_tone.pa_output_ceiling}} : json(nullptr)},
          {"hop_phase_mode", to_string(s.two_tone.hop_phase_mode)}}},
        {"leader_oscillator",
         {{"ppm_offset", s.leader_oscillator.ppm_offset},
          {"drift_ppm_per_s", s.leader_oscillator.drift_ppm_per_s},
          {"phase_noise_diffusion", s.leader_oscillator.phase_noise_diffusion},
          {"initial_phase_rad", s.leader_oscillator.initial_phase_rad}}},
        {"hops", {{"centers_hz", s.hops.centers_hz}, {"dwell_s", s.hops.dwell_s}, {"pattern", pattern}}},
        {"channel",
         {{"distance_m", s.channel.distance_m},
          {"carrier_for_fspl_hz", s.channel.carrier_for_fspl_hz},
          {"noise_density_dbm_hz", optional_number(s.channel.noise_density_dbm_hz)},
          {"target_snr_db", optional_number(s.channel.target_snr_db)},
          {"extra_loss_db", s.channel.extra_loss_db},
          {"snr_reference_bw_hz", s.channel.snr_reference_bw_hz}}},
        {"interferers", interferers},
        {"followers", followers},
        {"analysis",
         {{"f_nominal_hz", s.analysis.f_nominal_hz},
          {"lp_bw_hz", s.analysis.lp_bw_hz},
          {"decim", s.analysis.decim},
          {"gate_multiplier", s.analysis.gate_multiplier},
          {"window_s", s.analysis.window_s},
          {"settle_band", s.analysis.settle_band}}},
    };
}

void validate(const Scenario& s)
{
    if (!(s.rate_hz > 0.0))
        throw ConfigError("rate_hz: must be positive");
    if (!(s.duration_s > 0.0))
        throw ConfigError("duration_s: must be positive");
    if (s.hops.centers_hz.empty())
        throw ConfigError("hops.centers_hz: must not be empty");
    if (!(s.hops.dwell_s > 0.0))
        throw ConfigError("hops.dwell_s: must be positive");
    if (!(s.duration_s >= s.hops.dwell_s))
        throw ConfigError("duration_s: must be at least hops.dwell_s");
    if (const auto* fixed = std::get_if<FixedSequence>(&s.hops.pattern)) {
        if (fixed->indices.empty())
            throw ConfigError("hops.pattern.indices: must not be empty for a fixed sequence");
        for (std::size_t idx : fixed->indices)
            if (idx >= s.hops.centers_hz.size())
                throw ConfigError("hops.pattern.indices: index " + std::to_string(idx) + " out of range");
    }
    if (!(s.two_tone.tone_amplitude > 0.0))
        throw ConfigError("two_tone.tone_amplitude: must be positive");
    if (s.two_tone.pa_output_ceiling && !(*s.two_tone.pa_output_ceiling > 0.0))
        throw ConfigError("two_tone.pa_saturation.output_ceiling: must be positive");
    if (!(s.two_tone.delta_f_hz > 0.0))
        throw ConfigError("two_tone.delta_f_hz: must be positive");
    {
        TwoToneConfig tt = s.two_tone;
        tt.sim_center_hz = s.sim_center_hz;
        try {
            check_tone_plan(tt, s.hops.centers_hz, s.rate_hz);
        } catch (const ConfigError& e) {
            throw ConfigError(prefixed("two_tone.delta_f_hz / hops.centers_hz: ", e));
        }
    }
    if (s.leader_oscillator.phase_noise_diffusion < 0.0)
        throw ConfigError("leader_oscillator.phase_noise_diffusion: must be >= 0");

    validate(s.channel);

    const double nyquist = 0.5 * s.rate_hz;
    for (std::size_t i = 0; i < s.interferers.size(); ++i) {
        const auto& intf = s.interferers[i];
        const std::string p = "interferers." + std::to_string(i);
        const double f0 = intf.freq_hz - s.sim_center_hz;
        const double f1 = intf.kind == InterfererKind::Swept ? f0 + intf.sweep_rate_hz_per_s * s.duration_s : f0;
        if (!(std::abs(f0) < nyquist) || !(std::abs(f1) < nyquist))
            throw ConfigError(p + ".freq_hz: interferer leaves the simulated band (Nyquist " + std::to_string(nyquist) +
                              " Hz around sim_center_hz)");
        if (intf.kind == InterfererKind::PulsedCw) {
            if (!(intf.period_s > 0.0))
                throw ConfigError(p + ".period_s: must be positive");
            if (!(intf.duty_cycle >= 0.0 && intf.duty_cycle <= 1.0))
                throw ConfigError(p + ".duty_cycle: must lie in [0, 1]");
        }
    }

    if (s.followers.empty())
        throw ConfigError("followers: need at least one follower");
    const auto& an = s.analysis;
    if (an.decim < 1)
        throw ConfigError("analysis.decim: must be >= 1");
    if (!(an.lp_bw_hz > 0.0) || !(an.lp_bw_hz < s.rate_hz / (2.0 * an.decim)))
        throw ConfigError("analysis.lp_bw_hz: must lie in (0, rate_hz / (2 decim))");
    if (!(an.gate_multiplier >= 0.0))
        throw ConfigError("analysis.gate_multiplier: must be >= 0");
    if (!(an.settle_band > 0.0 && an.settle_band < 1.0))
        throw ConfigError("analysis.settle_band: must lie in (0, 1)");

    for (std::size_t i = 0; i < s.followers.size(); ++i) {
        const auto& f = s.followers[i];
        const std::string p = "followers." + std::to_string(i) + ".";
        try {
            validate(f, s.rate_hz, s.sim_center_hz);
        } catch (const ConfigError& e) {
            throw ConfigError(prefixed(p, e));
        }
        if (f.ref_bpf.center_hz != s.two_tone.delta_f_hz)
            throw ConfigError(p + "ref_bpf.center_hz: must equal two_tone.delta_f_hz");
        const double lo = f.ref_bpf.center_hz - 0.5 * f.ref_bpf.bw_hz;
        const double hi = f.ref_bpf.center_hz + 0.5 * f.ref_bpf.bw_hz;
        if (!(an.f_nominal_hz > lo && an.f_nominal_hz < hi))
            throw ConfigError("analysis.f_nominal_hz: outside the reference band of follower " + std::to_string(i));
        const double group_delay = static_cast<double>(f.ref_bpf.num_taps - 1) / (2.0 * s.rate_hz);
        if (!(an.window_s >= 5.0 * group_delay))
            throw ConfigError("analysis.window_s: must cover at least 5x the reference BPF group delay (" +
                              std::to_string(5.0 * group_delay) + " s)");
    }
}

Scenario scenario_from_json(const json& j)
{
    if (!j.is_object())
        throw ConfigError("scenario: expected a JSON object");
    const json merged = overlay(to_json(Scenario{}), j, "");
    Scenario s = decode(merged);
    validate(s);
    return s;
}

Scenario load_scenario(const std::filesystem::path& path)
{
    std::ifstream is(path);
    if (!is)
        throw ConfigError("cannot open scenario " + path.string());
    json j;
    try {
        j = json::parse(is);
    } catch (const json::parse_error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    return scenario_from_json(j);
}

std::string scenario_digest(const Scenario& s)
{
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << fnv1a64(to_json(s).dump());
    return os.str();
}

namespace {

void collect_paths(const json& j, const std::string& path, std::vector<std::string>& out)
{
    if (j.is_object()) {
        for (const auto& [key, value] : j.items())
            collect_paths(value, join(path, key), out);
    } else if (j.is_array()) {
        for (std::size_t i = 0; i < j.size(); ++i)
            collect_paths(j[i], join(path, std::to_string(i)), out);
    } else if (j.is_number() || j.is_null() || (j.is_string() && (j == "-inf" || j == "inf"))) {
        out.push_back(path);
    }
}

} // namespace

std::vector<std::string> scalar_paths(const Scenario& s)
{
    std::vector<std::string> out;
    collect_paths(to_json(s), "", out);
    return out;
}

Scenario with_param(const Scenario& base, const std::string& param_path, double value)
{
    json j = to_json(base);
    json* node = &j;
    std::istringstream parts(param_path);
    std::string part;
    bool ok = !param_path.empty();
    while (ok && std::getline(parts, part, '.')) {
        if (node->is_object() && node->contains(part)) {
            node = &(*node)[part];
        } else if (node->is_array() && !part.empty() && part.find_first_not_of("0123456789") == std::string::npos &&
                   std::stoul(part) < node->size()) {
            node = &(*node)[std::stoul(part)];
        } else {
            ok = false;
        }
    }
    const std::vector<std::string> valid = scalar_paths(base);
    if (!ok || std::find(valid.begin(), valid.end(), param_path) == valid.end()) {
        std::string msg = "sweep: \"" + param_path + "\" is not a scalar scenario field; valid paths:";
        for (const auto& p : valid)
            msg += "\n  " + p;
        throw ConfigError(msg);
    }
    if (node->is_number_integer() || node->is_number_unsigned()) {
        if (value != std::floor(value))
            throw ConfigError(param_path + ": expected an integer value");
        if (node->is_number_unsigned() || value >= 0)
            *node = static_cast<std::uint64_t>(value);
        else
            *node = static_cast<std::int64_t>(value);
    } else {
        *node = value;
    }
    return scenario_from_json(j);
}

// ---------------------------------------------------------------------------
// Orchestration
// ---------------------------------------------------------------------------

namespace {

struct FollowerOutputs
{
    FollowerResult result;
    RealBuffer clock_head;
    Psd spectrum;
    PhaseSeries phase;
};

template <typename E> [[noreturn]] void rethrow_tagged(const E& e, std::size_t follower, const char* stage)
{
    throw E("follower " + std::to_string(follower) + ", stage " + stage + ": " + e.what());
}

} // namespace

json metrics_json(const RunReport& report)
{
    json followers = json::array();
    for (const auto& f : report.followers) {
        json transients = json::array();
        for (const auto& ev : f.metrics.transient_events)
            transients.push_back({{"hop_time_s", ev.hop_time_s},
                                  {"dip_depth", ev.dip_depth},
                                  {"settling_time_s", ev.settling_time_s},
                                  {"disturbed", ev.disturbed},
                                  {"flagged", ev.flagged}});
        followers.push_back({{"id", f.id},
                             {"f_hat_hz", f.metrics.f_hat_hz},
                             {"phi0_hat_rad", f.metrics.phi0_hat_rad},
                             {"residual_rms_rad", f.metrics.residual_rms_rad},
                             {"gated_fraction", f.metrics.gated_fraction},
                             {"samples_used", f.metrics.samples_used},
                             {"disturbed_fraction", f.disturbed_fraction},
                             {"agc_clamped", f.agc_clamped},
                             {"transients", transients}});
    }
    return {
        {"scenario_digest", report.scenario_digest},
        {"hop_instants_s", report.hop_instants_s},
        {"followers", followers},
        {"pairwise", report.pairwise_hz},
        {"max_pairwise_hz", report.pairwise_hz.empty() ? 0.0 : max_abs_pairwise(report.pairwise_hz)},
    };
}

RunReport run(const Scenario& scenario, const RunOptions& options)
{
    validate(scenario);
    const auto t_begin = std::chrono::steady_clock::now();
    const Scenario& s = scenario;

    RunReport report;
    report.scenario_digest = scenario_digest(s);

    const Rng master(s.master_seed);
    HopSchedule schedule = s.hops;
    schedule.total_duration_s = s.duration_s;
    Rng hop_rng = s.hop_seed ? Rng(*s.hop_seed) : master.substream("hops");
    const HopSequence hops = generate_hop_sequence(schedule, hop_rng);
    report.hop_instants_s = hops.hop_instants();

    TwoToneConfig tt = s.two_tone;
    tt.sim_center_hz = s.sim_center_hz;
    Rng leader_rng = master.substream("leader");
    const ComplexBuffer tx = apply_pa(synthesize_two_tone(tt, hops, s.leader_oscillator, s.rate_hz, leader_rng), tt);
    const double tx_tone_amplitude = tt.tone_amplitude * std::pow(10.0, tt.pa_gain_db / 20.0);
    const double rx_tone_amplitude = received_tone_amplitude(s.channel, tx_tone_amplitude);
    const Rng channel_rng = master.substream("channel");

    if (options.out_dir)
        std::filesystem::create_directories(*options.out_dir);
    std::mutex io_mutex;
    if (options.out_dir && options.export_iq) {
        write_iq(*options.out_dir / "leader.iq", tx);
        IqHeader header;
        header.rate_hz = s.rate_hz;
        header.sim_center_hz = s.sim_center_hz;
        header.start_time_s = tx.start_time_s;
        header.hop_instants_s = report.hop_instants_s;
        write_header(*options.out_dir / "leader.json", header);
        report.artifacts.push_back((*options.out_dir / "leader.iq").string());
    }

    const std::size_t n_followers = s.followers.size();
    std::vector<FollowerOutputs> outputs(n_followers);
    const std::size_t workers = options.workers == 0 ? default_workers() : options.workers;

    parallel_for(n_followers, workers, [&](std::size_t i) {
        const ReceiverChainConfig& fcfg = s.followers[i];
        const char* stage = "propagate";
        try {
            ExtractedClock clk;
            {
                ComplexBuffer rx = propagate_one(tx, s.channel, i, channel_rng, tx_tone_amplitude);
                stage = "interferers";
                for (const auto& intf : s.interferers)
                    rx = add_interferer(rx, intf, s.sim_center_hz, rx_tone_amplitude);
                stage = "extract_reference";
                clk = extract_reference(rx, fcfg, s.sim_center_hz, report.hop_instants_s,
                                        master.substream("follower." + std::to_string(i)), static_cast<int>(i));
            }

            stage = "analysis";
            const double ref_delay = static_cast<double>(fcfg.ref_bpf.num_taps - 1) / (2.0 * s.rate_hz);
            const FrequencyBand band{fcfg.ref_bpf.center_hz - 0.5 * fcfg.ref_bpf.bw_hz,
                                     fcfg.ref_bpf.center_hz + 0.5 * fcfg.ref_bpf.bw_hz};
            PhaseSeries ps = demodulate_phase(clk, s.analysis.f_nominal_hz, s.analysis.lp_bw_hz, s.analysis.decim, band);
            const auto gates = default_gates(ps, clk.hop_instants_s, s.analysis.gate_multiplier * ref_delay);
            ClockMetrics metrics = fit_frequency(ps, gates);
            metrics.transient_events =
                transient_metrics(ps, clk.hop_instants_s, {s.analysis.window_s, s.analysis.settle_band, ref_delay});

            FollowerOutputs& out = outputs[i];
            out.result.id = static_cast<int>(i);
            out.result.metrics = std::move(metrics);
            out.result.disturbed_fraction =
                disturbed_fraction(out.result.metrics.transient_events, s.hops.dwell_s, s.duration_s);
            out.result.agc_clamped = clk.agc_clamped;

            if (options.out_dir) {
                stage = "outputs";
                const std::size_t settle = std::min(clk.signal.settling_samples, clk.signal.size() - 1);
                const std::span<const double> settled(clk.signal.samples.data() + settle, clk.signal.size() - settle);
                out.spectrum = welch_psd(settled, clk.signal.rate_hz);
                out.clock_head.rate_hz = clk.signal.rate_hz;
                out.clock_head.start_time_s = clk.signal.time_at(settle);
                const std::size_t count = std::min(options.clock_csv_samples, settled.size());
                out.clock_head.samples.assign(settled.begin(), settled.begin() + static_cast<std::ptrdiff_t>(count));
                if (options.phase_csv)
                    out.phase = std::move(ps);
                if (options.export_iq) {
                    std::lock_guard lock(io_mutex);
                    const auto base = *options.out_dir / ("clock_" + std::to_string(i));
                    write_iq(base.string() + ".iq", clk.signal);
                    IqHeader header{clk.signal.rate_hz, s.sim_center_hz, clk.signal.start_time_s, SignalKind::Real,
                                    clk.follower_ppm, clk.hop_instants_s, clk.signal.settling_samples};
                    write_header(base.string() + ".json", header);
                }
            }
        } catch (const ConfigError& e) {
            rethrow_tagged(e, i, stage);
        } catch (const AnalysisError& e) {
            rethrow_tagged(e, i, stage);
        }
    });

    for (auto& out : outputs)
        report.followers.push_back(out.result);
    if (n_followers >= 2) {
        std::vector<ClockMetrics> all;
        for (const auto& f : report.followers)
            all.push_back(f.metrics);
        report.pairwise_hz = pairwise_differences(all);
    }

    if (options.out_dir) {
        const auto& dir = *options.out_dir;
        for (std::size_t i = 0; i < n_followers; ++i) {
            const auto id = std::to_string(i);
            write_clock_csv(dir / ("clock_" + id + ".csv"), outputs[i].clock_head);
            write_spectrum_csv(dir / ("spectrum_" + id + ".csv"), outputs[i].spectrum);
            report.artifacts.push_back((dir / ("clock_" + id + ".csv")).string());
            report.artifacts.push_back((dir / ("spectrum_" + id + ".csv")).string());
            if (options.phase_csv) {
                write_phase_csv(dir / ("phase_" + id + ".csv"), outputs[i].phase);
                report.artifacts.push_back((dir / ("phase_" + id + ".csv")).string());
            }
            if (options.export_iq)
                report.artifacts.push_back((dir / ("clock_" + id + ".iq")).string());
        }
        report.artifacts.push_back((dir / "metrics.json").string());
    }

    report.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_begin).count();

    if (options.out_dir) {
        const auto& dir = *options.out_dir;
        std::ofstream(dir / "metrics.json") << metrics_json(report).dump(2) << '\n';
        json info = {{"wall_time_s", report.wall_time_s}, {"workers", workers}, {"artifacts", report.artifacts}};
        std::ofstream(dir / "run_info.json") << info.dump(2) << '\n';
    }
    return report;
}

std::vector<RunReport> sweep(const Scenario& base, const std::string& param_path, const std::vector<double>& values,
                             const RunOptions& options)
{
    if (values.empty())
        throw ConfigError("sweep: no values given");
    std::vector<Scenario> points;
    for (std::size_t i = 0; i < values.size(); ++i) {
        Scenario sc = with_param(base, param_path, values[i]);
        sc.master_seed = base.master_seed ^ static_cast<std::uint64_t>(i);
        points.push_back(std::move(sc));
    }

    std::vector<RunReport> reports;
    for (std::size_t i = 0; i < points.size(); ++i) {
        RunOptions opts = options;
        if (options.out_dir)
            opts.out_dir = *options.out_dir / ("run_" + std::to_string(i));
        reports.push_back(run(points[i], opts));
    }

    if (options.out_dir) {
        std::ofstream os(*options.out_dir / "sweep.csv");
        const std::size_t nf = base.followers.size();
        os << "value";
        for (std::size_t f = 0; f < nf; ++f)
            os << ",f_hat_" << f;
        os << ",disturbed_fraction,max_pairwise_hz\n" << std::setprecision(17);
        for (std::size_t i = 0; i < reports.size(); ++i) {
            const auto& r = reports[i];
            os << values[i];
            double disturbed = 0.0;
            for (const auto& f : r.followers) {
                os << ',' << f.metrics.f_hat_hz;
                disturbed += f.disturbed_fraction;
            }
            disturbed /= static_cast<double>(r.followers.size());
            os << ',' << disturbed << ',' << (r.pairwise_hz.empty() ? 0.0 : max_abs_pairwise(r.pairwise_hz)) << '\n';
        }
    }
    return reports;
}

} // namespace twotone
