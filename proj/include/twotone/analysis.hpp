// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "twotone/follower.hpp"

namespace twotone {

/// Unwrapped phase and envelope of an extracted clock relative to a nominal
/// frequency, on the follower's local timebase t_local = t * (1 + ppm 1e-6).
struct PhaseSeries
{
    std::vector<double> times_s;
    std::vector<double> phase_rad;
    std::vector<double> envelope; // sinusoid amplitude (2 |low-passed product|)
    double decimated_rate_hz = 0.0;
    double f_nominal_hz = 0.0;
    double timebase_scale = 1.0;   // local seconds per global second
    double settled_from_s = 0.0;   // local time of the first sample free of filter history
    double lp_half_span_s = 0.0;   // half the demodulator low-pass length, local seconds

    std::size_t size() const { return times_s.size(); }
};

struct FrequencyBand
{
    double lo_hz = 0.0;
    double hi_hz = 0.0;
};

struct Gate
{
    enum class Kind { Settling, Hop };
    double start_s = 0.0;
    double end_s = 0.0;
    Kind kind = Kind::Hop;
};

struct TransientEvent
{
    double hop_time_s = 0.0;
    double dip_depth = 0.0;       // 1 - min(window) / median(outside windows), in [0, 1]
    double settling_time_s = 0.0; // 0 when the envelope never left the band
    bool disturbed = false;       // envelope left +/- settle_band within the window
    bool flagged = false;         // window overlaps the next hop; settling saturated at the dwell
};

struct ClockMetrics
{
    double f_hat_hz = 0.0;
    double phi0_hat_rad = 0.0;
    double residual_rms_rad = 0.0;
    double gated_fraction = 0.0;
    std::size_t samples_used = 0;
    std::vector<TransientEvent> transient_events;
};

struct TransientOptions
{
    double window_s = 1e-4;
    double settle_band = 0.1;
    double hold_s = 2.5e-6; // in-band time required to count as settled
};

// Odd tap count of the demodulator low-pass for a given cutoff.
int demod_lowpass_taps(double lp_bw_hz, double rate_hz);

/// Mix the clock down by f_nominal (on the local timebase), low-pass with a
/// Hamming windowed sinc of cutoff lp_bw_hz, keep every decim-th output, and
/// take the unwrapped argument. Only outputs whose low-pass window lies
/// entirely inside the buffer are produced, and each is time-stamped at the
/// centre of its window.
PhaseSeries demodulate_phase(const ExtractedClock& clk, double f_nominal_hz, double lp_bw_hz, int decim,
                             FrequencyBand valid_band);

// Unwrap so no step exceeds pi; unwrapped[k] = wrapped[k] + 2 pi m_k, m_k integer.
std::vector<double> unwrap(const std::vector<double>& wrapped);

/// Settling prefix gate plus one gate per hop instant (global time) covering
/// [hop, hop + hop_gate_s], widened on both sides by the demodulator smear.
std::vector<Gate> default_gates(const PhaseSeries& ps, const std::vector<double>& hop_instants_s, double hop_gate_s);

/// Ordinary least squares of phase against local time over ungated samples:
/// f_hat = f_nominal + slope / 2 pi, phi0_hat = intercept mod 2 pi.
/// Throws AnalysisError with fewer than 100 ungated samples.
ClockMetrics fit_frequency(const PhaseSeries& ps, const std::vector<Gate>& gates);

// D[i][j] = f_hat_i - f_hat_j. Needs at least two clocks.
std::vector<std::vector<double>> pairwise_differences(const std::vector<ClockMetrics>& metrics);

double max_abs_pairwise(const std::vector<std::vector<double>>& d);

/// Envelope disturbance after each hop instant (global time).
std::vector<TransientEvent> transient_metrics(const PhaseSeries& ps, const std::vector<double>& hop_instants_s,
                                              const TransientOptions& opts);

// Sum of settling times over total_s, each capped at dwell_s, clamped to [0, 1].
double disturbed_fraction(const std::vector<TransientEvent>& events, double dwell_s, double total_s);

} // namespace twotone
