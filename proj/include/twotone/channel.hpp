// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "twotone/rng.hpp"
#include "twotone/signal.hpp"

namespace twotone {

inline constexpr double kSpeedOfLight = 299792458.0;

/// Flat line-of-sight link from the leader to every follower.
///
/// Sample power is in mW (|x|^2 = 1 is 0 dBm). Exactly one of the two noise
/// settings must be present; a density of -inf selects the noiseless channel.
struct ChannelConfig
{
    double distance_m = 3.0;
    double carrier_for_fspl_hz = 9e8;
    std::optional<double> noise_density_dbm_hz;
    std::optional<double> target_snr_db = 20.0;
    double extra_loss_db = 0.0;
    // SNR is per-tone power over the noise power in this bandwidth (the
    // reference BPF width).
    double snr_reference_bw_hz = 2e6;
};

enum class InterfererKind { Cw, Swept, PulsedCw };

struct Interferer
{
    InterfererKind kind = InterfererKind::Cw;
    double freq_hz = 905e6;       // absolute RF; start frequency for swept
    double power_rel_db = 0.0;    // J/S per received tone
    double sweep_rate_hz_per_s = 0.0;
    double duty_cycle = 1.0;
    double period_s = 1e-3;
    std::uint64_t phase_seed = 0;
};

// 20 log10(4 pi d f / c)
double fspl_db(double distance_m, double freq_hz);

// Total link loss FSPL + extra, in dB.
double link_loss_db(const ChannelConfig& cfg);

// Received amplitude of one tone transmitted with amplitude tx_tone_amplitude.
double received_tone_amplitude(const ChannelConfig& cfg, double tx_tone_amplitude);

// E|n|^2 per complex sample at rate_hz; 0 for the noiseless channel.
double noise_variance(const ChannelConfig& cfg, double rate_hz, double tx_tone_amplitude);

void validate(const ChannelConfig& cfg);

/// One follower's received signal: tx scaled by the link loss plus complex
/// AWGN from rng.substream("channel.noise.<follower>").
ComplexBuffer propagate_one(const ComplexBuffer& tx, const ChannelConfig& cfg, std::size_t follower,
                            const Rng& rng, double tx_tone_amplitude);

/// propagate_one for followers 0 .. n_followers-1.
std::vector<ComplexBuffer> propagate(const ComplexBuffer& tx, const ChannelConfig& cfg, std::size_t n_followers,
                                     const Rng& rng, double tx_tone_amplitude);

/// Adds a complex exponential at freq_hz - sim_center_hz with amplitude
/// ref_tone_amplitude * 10^(power_rel_db/20). The starting phase is drawn from
/// Rng(phase_seed).
ComplexBuffer add_interferer(const ComplexBuffer& rx, const Interferer& intf, double sim_center_hz,
                             double ref_tone_amplitude);

} // namespace twotone
