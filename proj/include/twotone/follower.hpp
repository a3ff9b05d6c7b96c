// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "twotone/fir.hpp"
#include "twotone/rng.hpp"
#include "twotone/signal.hpp"

namespace twotone {

// Band-limiting filter ahead of the mixer. Realized at baseband as a low-pass
// of half-width bw/2 translated to center_hz - sim_center_hz.
struct FrontBpfConfig
{
    bool enabled = true;
    double center_hz = 9e8;
    double bw_hz = 3.2e7;
    int num_taps = 101;
};

struct LnaConfig
{
    double gain_db = 20.0;
    double noise_figure_db = 3.0;
};

struct RefBpfConfig
{
    double center_hz = 1e7;
    double bw_hz = 2e6;
    int num_taps = 201;
};

struct AgcConfig
{
    double target_rms = 1.0;
    double loop_gain = 0.05;
    double rms_time_constant_s = 1e-4;
    double max_gain_db = 60.0;
};

/// Parameters of one follower's reference-extraction chain. Nothing in here
/// describes the leader's hop pattern: the chain works without it.
struct ReceiverChainConfig
{
    FrontBpfConfig front_bpf;
    LnaConfig lna;
    double mixer_loss_db = 6.0;
    RefBpfConfig ref_bpf;
    AgcConfig agc;
    double follower_ppm = 0.0; // applied by analysis as a timebase scale only
    bool lna_before_bpf = false;
};

struct AgcOutput
{
    RealBuffer signal;
    bool gain_clamped = false; // gain hit max_gain_db at some point
};

struct ExtractedClock
{
    RealBuffer signal;
    std::vector<double> hop_instants_s; // analysis gating only
    int follower_id = 0;
    double follower_ppm = 0.0;
    bool agc_clamped = false;
};

FirFilter design_front_filter(const FrontBpfConfig& cfg, double rate_hz, double sim_center_hz);
FirFilter design_ref_filter(const RefBpfConfig& cfg, double rate_hz);

// Throws ConfigError when a band leaves Nyquist or parameters are out of range.
void validate(const ReceiverChainConfig& cfg, double rate_hz, double sim_center_hz);

/// Front BPF then LNA (or the reverse with lna_before_bpf). The LNA adds
/// complex white noise of variance (F - 1) * rx.noise_variance referred to its
/// input, F = 10^(NF/10), drawn from rng.substream("lna").
ComplexBuffer front_stage(const ComplexBuffer& rx, const ReceiverChainConfig& cfg, double sim_center_hz,
                          const Rng& rng);

/// Ideal squarer standing in for splitter + mixer: y = 0.5 * L * |s|^2 with
/// L = 10^(-mixer_loss_db/10). The 2 f_c image of the real passband square is
/// out of band and dropped.
RealBuffer square_law_mix(const ComplexBuffer& x, double mixer_loss_db);

// Reference BPF around the tone spacing.
RealBuffer ref_stage(const RealBuffer& y, const ReceiverChainConfig& cfg);

/// Log-domain AGC. Per sample, with the output RMS estimate tracked through a
/// one-pole average (alpha = 1 / (rate * tau)):
///   rms^2 <- (1 - alpha) rms^2 + alpha (g z[n])^2
///   g     <- g * exp(loop_gain * (ln target - ln max(rms, floor)))
///   out[n] = g z[n]
/// Gain starts at target / (input RMS over the first settled window) and
/// adapts after the settling prefix; clamped at max_gain_db.
AgcOutput agc(const RealBuffer& z, const AgcConfig& cfg);

/// The full chain front_stage -> square_law_mix -> ref_stage -> agc.
AgcOutput run_chain(const ComplexBuffer& rx, const ReceiverChainConfig& cfg, double sim_center_hz, const Rng& rng);

/// run_chain plus bookkeeping. hop_instants_s is copied into the result for
/// analysis gating and is never read by the signal path.
ExtractedClock extract_reference(const ComplexBuffer& rx, const ReceiverChainConfig& cfg, double sim_center_hz,
                                 std::vector<double> hop_instants_s, const Rng& rng, int follower_id = 0);

/// Comparator with symmetric hysteresis: +1 above +h, -1 below -h, otherwise
/// holds. The initial state is the sign of the first sample.
RealBuffer to_square_wave(const ExtractedClock& clk, double hysteresis);

} // namespace twotone
