// SPDX-License-Identifier: Apache-2.0
#include "twotone/channel.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "twotone/errors.hpp"

namespace twotone {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

} // namespace

double fspl_db(double distance_m, double freq_hz)
{
    return 20.0 * std::log10(4.0 * std::numbers::pi * distance_m * freq_hz / kSpeedOfLight);
}

double link_loss_db(const ChannelConfig& cfg)
{
    return fspl_db(cfg.distance_m, cfg.carrier_for_fspl_hz) + cfg.extra_loss_db;
}

double received_tone_amplitude(const ChannelConfig& cfg, double tx_tone_amplitude)
{
    return tx_tone_amplitude * std::pow(10.0, -link_loss_db(cfg) / 20.0);
}

void validate(const ChannelConfig& cfg)
{
    if (!(cfg.distance_m > 0.0))
        throw ConfigError("channel.distance_m: must be positive");
    if (!(cfg.carrier_for_fspl_hz > 0.0))
        throw ConfigError("channel.carrier_for_fspl_hz: must be positive");
    if (cfg.noise_density_dbm_hz.has_value() == cfg.target_snr_db.has_value())
        throw ConfigError("channel: exactly one of noise_density_dbm_hz and target_snr_db must be set");
    if (cfg.target_snr_db && !std::isfinite(*cfg.target_snr_db))
        throw ConfigError("channel.target_snr_db: must be finite");
    if (cfg.noise_density_dbm_hz && std::isnan(*cfg.noise_density_dbm_hz))
        throw ConfigError("channel.noise_density_dbm_hz: must be a number or -inf");
    if (!(cfg.snr_reference_bw_hz > 0.0))
        throw ConfigError("channel.snr_reference_bw_hz: must be positive");
}

double noise_variance(const ChannelConfig& cfg, double rate_hz, double tx_tone_amplitude)
{
    validate(cfg);
    double density_mw_hz = 0.0;
    if (cfg.noise_density_dbm_hz) {
        if (std::isinf(*cfg.noise_density_dbm_hz) && *cfg.noise_density_dbm_hz < 0.0)
            return 0.0;
        density_mw_hz = std::pow(10.0, *cfg.noise_density_dbm_hz / 10.0);
    } else {
        const double a = received_tone_amplitude(cfg, tx_tone_amplitude);
        density_mw_hz = a * a / (std::pow(10.0, *cfg.target_snr_db / 10.0) * cfg.snr_reference_bw_hz);
    }
    return density_mw_hz * rate_hz;
}

ComplexBuffer propagate_one(const ComplexBuffer& tx, const ChannelConfig& cfg, std::size_t follower,
                            const Rng& rng, double tx_tone_amplitude)
{
    require_valid(tx, "propagate");
    const double variance = noise_variance(cfg, tx.rate_hz, tx_tone_amplitude);
    const double scale = std::pow(10.0, -link_loss_db(cfg) / 20.0);

    ComplexBuffer rx;
    rx.rate_hz = tx.rate_hz;
    rx.start_time_s = tx.start_time_s;
    rx.settling_samples = tx.settling_samples;
    rx.noise_variance = tx.noise_variance * scale * scale + variance;
    rx.samples.resize(tx.size());
    for (std::size_t n = 0; n < tx.size(); ++n)
        rx.samples[n] = tx.samples[n] * scale;

    if (variance > 0.0) {
        Rng noise = rng.substream("channel.noise." + std::to_string(follower));
        const double sigma = std::sqrt(0.5 * variance);
        for (auto& s : rx.samples) {
            const auto [g0, g1] = noise.gaussian_pair();
            s += cdouble(sigma * g0, sigma * g1);
        }
    }
    return rx;
}

std::vector<ComplexBuffer> propagate(const ComplexBuffer& tx, const ChannelConfig& cfg, std::size_t n_followers,
                                     const Rng& rng, double tx_tone_amplitude)
{
    if (n_followers == 0)
        throw ConfigError("propagate: need at least one follower");
    std::vector<ComplexBuffer> out;
    out.reserve(n_followers);
    for (std::size_t i = 0; i < n_followers; ++i)
        out.push_back(propagate_one(tx, cfg, i, rng, tx_tone_amplitude));
    return out;
}

ComplexBuffer add_interferer(const ComplexBuffer& rx, const Interferer& intf, double sim_center_hz,
                             double ref_tone_amplitude)
{
    require_valid(rx, "add_interferer");
    const double nyquist = 0.5 * rx.rate_hz;
    const double f0 = intf.freq_hz - sim_center_hz;
    const double t_end = rx.duration_s();
    const double f1 = intf.kind == InterfererKind::Swept ? f0 + intf.sweep_rate_hz_per_s * t_end : f0;
    if (!(std::abs(f0) < nyquist) || !(std::abs(f1) < nyquist))
        throw ConfigError("interferer: frequency " + std::to_string(intf.freq_hz) +
                          " Hz leaves the simulated band around " + std::to_string(sim_center_hz) + " Hz");
    if (intf.kind == InterfererKind::PulsedCw) {
        if (!(intf.period_s > 0.0))
            throw ConfigError("interferer.period_s: must be positive");
        if (!(intf.duty_cycle >= 0.0 && intf.duty_cycle <= 1.0))
            throw ConfigError("interferer.duty_cycle: must lie in [0, 1]");
    }

    ComplexBuffer out = rx;
    const double amp = ref_tone_amplitude * std::pow(10.0, intf.power_rel_db / 20.0);
    if (!(amp > 0.0))
        return out;

    Rng phase_rng(intf.phase_seed);
    const double phase0 = phase_rng.uniform();
    for (std::size_t n = 0; n < out.size(); ++n) {
        // Time relative to the buffer start; the interferer is switched on with it.
        const double t = static_cast<double>(n) / rx.rate_hz;
        double cycles = f0 * t;
        if (intf.kind == InterfererKind::Swept)
            cycles += 0.5 * intf.sweep_rate_hz_per_s * t * t;
        if (intf.kind == InterfererKind::PulsedCw) {
            // Fraction of the period elapsed, snapped so exact edges are not
            // decided by rounding.
            const double periods = t / intf.period_s;
            const double frac = periods - std::floor(periods + 1e-9);
            if (!(frac < intf.duty_cycle - 1e-9))
                continue;
        }
        cycles += phase0;
        out.samples[n] += std::polar(amp, kTwoPi * (cycles - std::nearbyint(cycles)));
    }
    return out;
}

} // namespace twotone
