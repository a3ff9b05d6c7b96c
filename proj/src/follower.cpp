// SPDX-License-Identifier: Apache-2.0
#include "twotone/follower.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "twotone/errors.hpp"

namespace twotone {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kRmsFloor = 1e-30;

// Multiplies by e^{j 2 pi sign f t}; used to move the front filter passband.
void rotate(ComplexBuffer& buf, double freq_hz, double sign)
{
    for (std::size_t n = 0; n < buf.size(); ++n) {
        const double c = freq_hz * static_cast<double>(n) / buf.rate_hz;
        buf.samples[n] *= std::polar(1.0, sign * kTwoPi * (c - std::nearbyint(c)));
    }
}

ComplexBuffer apply_front_filter(const ComplexBuffer& x, const FrontBpfConfig& cfg, double sim_center_hz)
{
    if (!cfg.enabled)
        return x;
    const FirFilter lp = design_front_filter(cfg, x.rate_hz, sim_center_hz);
    const double offset = cfg.center_hz - sim_center_hz;
    if (offset == 0.0)
        return filter(x, lp);
    ComplexBuffer shifted = x;
    rotate(shifted, offset, -1.0);
    ComplexBuffer out = filter(shifted, lp);
    rotate(out, offset, 1.0);
    return out;
}

ComplexBuffer apply_lna(const ComplexBuffer& x, const LnaConfig& cfg, double reference_variance, const Rng& rng)
{
    ComplexBuffer out = x;
    const double gain = std::pow(10.0, cfg.gain_db / 20.0);
    const double factor = std::pow(10.0, cfg.noise_figure_db / 10.0);
    const double added = (factor - 1.0) * reference_variance;
    if (added > 0.0) {
        Rng noise = rng.substream("lna");
        const double sigma = std::sqrt(0.5 * added);
        for (auto& s : out.samples) {
            const auto [g0, g1] = noise.gaussian_pair();
            s += cdouble(sigma * g0, sigma * g1);
        }
    }
    if (gain != 1.0)
        for (auto& s : out.samples)
            s *= gain;
    out.noise_variance = (x.noise_variance + added) * gain * gain;
    return out;
}

} // namespace

FirFilter design_front_filter(const FrontBpfConfig& cfg, double rate_hz, double sim_center_hz)
{
    const double offset = cfg.center_hz - sim_center_hz;
    if (!(std::abs(offset) + 0.5 * cfg.bw_hz < 0.5 * rate_hz))
        throw ConfigError("front_bpf: passband " + std::to_string(cfg.center_hz) + " +/- " +
                          std::to_string(0.5 * cfg.bw_hz) + " Hz exceeds the simulated band");
    return design_lowpass(0.5 * cfg.bw_hz, cfg.num_taps, rate_hz);
}

FirFilter design_ref_filter(const RefBpfConfig& cfg, double rate_hz)
{
    return design_bandpass(cfg.center_hz, cfg.bw_hz, cfg.num_taps, rate_hz);
}

void validate(const ReceiverChainConfig& cfg, double rate_hz, double sim_center_hz)
{
    if (cfg.front_bpf.enabled) {
        if (!(cfg.front_bpf.bw_hz > 0.0))
            throw ConfigError("front_bpf.bw_hz: must be positive");
        design_front_filter(cfg.front_bpf, rate_hz, sim_center_hz);
    }
    if (cfg.lna.noise_figure_db < 0.0)
        throw ConfigError("lna.noise_figure_db: must be >= 0");
    design_ref_filter(cfg.ref_bpf, rate_hz);
    if (!(cfg.agc.target_rms > 0.0))
        throw ConfigError("agc.target_rms: must be positive");
    if (!(cfg.agc.loop_gain > 0.0))
        throw ConfigError("agc.loop_gain: must be positive");
    if (!(cfg.agc.rms_time_constant_s * rate_hz >= 1.0))
        throw ConfigError("agc.rms_time_constant_s: must span at least one sample");
}

ComplexBuffer front_stage(const ComplexBuffer& rx, const ReceiverChainConfig& cfg, double sim_center_hz,
                          const Rng& rng)
{
    require_valid(rx, "front_stage");
    const double reference = rx.noise_variance;
    if (cfg.lna_before_bpf)
        return apply_front_filter(apply_lna(rx, cfg.lna, reference, rng), cfg.front_bpf, sim_center_hz);
    return apply_lna(apply_front_filter(rx, cfg.front_bpf, sim_center_hz), cfg.lna, reference, rng);
}

RealBuffer square_law_mix(const ComplexBuffer& x, double mixer_loss_db)
{
    require_valid(x, "square_law_mix");
    const double scale = 0.5 * std::pow(10.0, -mixer_loss_db / 10.0);
    RealBuffer y;
    y.rate_hz = x.rate_hz;
    y.start_time_s = x.start_time_s;
    y.settling_samples = x.settling_samples;
    y.samples.resize(x.size());
    for (std::size_t n = 0; n < x.size(); ++n)
        y.samples[n] = scale * std::norm(x.samples[n]);
    return y;
}

RealBuffer ref_stage(const RealBuffer& y, const ReceiverChainConfig& cfg)
{
    require_valid(y, "ref_stage");
    return filter(y, design_ref_filter(cfg.ref_bpf, y.rate_hz));
}

AgcOutput agc(const RealBuffer& z, const AgcConfig& cfg)
{
    require_valid(z, "agc");
    if (!(cfg.target_rms > 0.0) || !(cfg.loop_gain > 0.0) || !(cfg.rms_time_constant_s > 0.0))
        throw ConfigError("agc: target_rms, loop_gain and rms_time_constant_s must be positive");

    const double alpha = std::min(1.0, 1.0 / (z.rate_hz * cfg.rms_time_constant_s));
    const double log_target = std::log(cfg.target_rms);
    const double max_gain = std::pow(10.0, cfg.max_gain_db / 20.0);
    const double log_floor = std::log(kRmsFloor);

    AgcOutput out;
    out.signal.rate_hz = z.rate_hz;
    out.signal.start_time_s = z.start_time_s;
    out.signal.settling_samples = z.settling_samples;
    out.signal.samples.resize(z.size());

    // Start from the gain that would be correct for the first settled RMS
    // window; adaptation starts after the settling prefix. Without this the
    // loop overshoots into the gain ceiling while the filters fill.
    const std::size_t settle = std::min(z.settling_samples, z.size());
    const std::size_t window = std::max<std::size_t>(1, static_cast<std::size_t>(z.rate_hz * cfg.rms_time_constant_s));
    const std::size_t init_end = std::min(z.size(), settle + window);
    double acc = 0.0;
    for (std::size_t n = settle; n < init_end; ++n)
        acc += z.samples[n] * z.samples[n];
    const double init_rms = init_end > settle ? std::sqrt(acc / static_cast<double>(init_end - settle)) : 0.0;
    double gain = init_rms > kRmsFloor ? std::min(cfg.target_rms / init_rms, max_gain) : max_gain;

    double power = cfg.target_rms * cfg.target_rms;
    for (std::size_t n = 0; n < z.size(); ++n) {
        if (n < settle) {
            out.signal.samples[n] = gain * z.samples[n];
            continue;
        }
        const double pre = gain * z.samples[n];
        power = (1.0 - alpha) * power + alpha * pre * pre;
        const double log_rms = power > 0.0 ? std::max(0.5 * std::log(power), log_floor) : log_floor;
        gain *= std::exp(cfg.loop_gain * (log_target - log_rms));
        if (gain > max_gain) {
            gain = max_gain;
            out.gain_clamped = true;
        }
        out.signal.samples[n] = gain * z.samples[n];
    }
    return out;
}

AgcOutput run_chain(const ComplexBuffer& rx, const ReceiverChainConfig& cfg, double sim_center_hz, const Rng& rng)
{
    validate(cfg, rx.rate_hz, sim_center_hz);
    RealBuffer beat = [&] {
        const ComplexBuffer front = front_stage(rx, cfg, sim_center_hz, rng);
        return square_law_mix(front, cfg.mixer_loss_db);
    }();
    return agc(ref_stage(beat, cfg), cfg.agc);
}

ExtractedClock extract_reference(const ComplexBuffer& rx, const ReceiverChainConfig& cfg, double sim_center_hz,
                                 std::vector<double> hop_instants_s, const Rng& rng, int follower_id)
{
    AgcOutput chain = run_chain(rx, cfg, sim_center_hz, rng);
    ExtractedClock clk;
    clk.signal = std::move(chain.signal);
    clk.agc_clamped = chain.gain_clamped;
    clk.hop_instants_s = std::move(hop_instants_s);
    clk.follower_id = follower_id;
    clk.follower_ppm = cfg.follower_ppm;
    return clk;
}

RealBuffer to_square_wave(const ExtractedClock& clk, double hysteresis)
{
    const RealBuffer& in = clk.signal;
    require_valid(in, "to_square_wave");
    if (!(hysteresis > 0.0))
        throw ConfigError("to_square_wave: hysteresis must be positive");

    RealBuffer out;
    out.rate_hz = in.rate_hz;
    out.start_time_s = in.start_time_s;
    out.settling_samples = in.settling_samples;
    out.samples.resize(in.size());
    double state = in.samples.front() >= 0.0 ? 1.0 : -1.0;
    for (std::size_t n = 0; n < in.size(); ++n) {
        const double v = in.samples[n];
        if (v > hysteresis)
            state = 1.0;
        else if (v < -hysteresis)
            state = -1.0;
        out.samples[n] = state;
    }
    return out;
}

} // namespace twotone
