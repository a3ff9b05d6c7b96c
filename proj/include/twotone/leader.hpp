// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <variant>
#include <vector>

#include "twotone/oscillator.hpp"
#include "twotone/rng.hpp"
#include "twotone/signal.hpp"

namespace twotone {

enum class HopPhaseMode {
    Continuous, // tone phase accumulators carry across hops (baseband NCO retune)
    Random,     // each tone's phase is redrawn at every hop (worst-case retune)
};

struct TwoToneConfig
{
    double delta_f_hz = 1e7;
    double sim_center_hz = 9e8;
    double tone_amplitude = 1.0;
    double pa_gain_db = 10.0;
    std::optional<double> pa_output_ceiling; // tanh soft clip when set
    HopPhaseMode hop_phase_mode = HopPhaseMode::Continuous;
};

struct RandomPattern
{
};

struct FixedSequence
{
    std::vector<std::size_t> indices;
};

using HopPattern = std::variant<RandomPattern, FixedSequence>;

struct HopSchedule
{
    std::vector<double> centers_hz{890e6, 895e6, 900e6, 905e6, 910e6};
    double dwell_s = 1.0;
    HopPattern pattern = RandomPattern{};
    double total_duration_s = 1.0;
};

struct HopSegment
{
    double start_s = 0.0;
    double center_hz = 0.0;
};

struct HopSequence
{
    std::vector<HopSegment> segments;
    double total_duration_s = 0.0;

    // Segment starts after the first: the instants at which the pair hops.
    std::vector<double> hop_instants() const;
};

// Sample index of time t: floor(t * rate), with products within 1e-9 of an
// integer snapped to it so exact multiples of the dwell land on their sample.
std::size_t sample_index(double t_s, double rate_hz);

/// ceil(total/dwell) dwell segments. Random patterns draw
/// rng.next() % centers.size() per segment; fixed sequences cycle.
HopSequence generate_hop_sequence(const HopSchedule& schedule, Rng& rng);

// Phase state of both tones at the start of one dwell segment.
struct SegmentPhase
{
    std::size_t first_sample = 0;
    std::size_t end_sample = 0;               // one past the last sample
    double center_hz = 0.0;
    std::array<double, 2> offset_hz{};        // nominal baseband offsets of f1, f2
    std::array<double, 2> start_cycles{};     // accumulator value at first_sample, in [-0.5, 0.5)
};

// Per-segment accumulator plan used by synthesize_two_tone. In Continuous mode
// start_cycles[k+1] equals start_cycles[k] plus the cycles elapsed over
// segment k (wrapped); Random mode replaces it with draws from rng.
std::vector<SegmentPhase> plan_tone_phases(const TwoToneConfig& cfg, const HopSequence& hops,
                                           const OscillatorModel& leader_osc, double rate_hz, Rng& rng);

/// Frequency-hopped two-tone complex baseband waveform,
///   s(t) = A e^{j(2 pi f1' t + theta(t))} + A e^{j(2 pi f2' t + theta(t))},
/// f1,2' = (center -/+ delta_f/2 - sim_center) scaled by the leader oscillator,
/// theta the shared oscillator phase path.
///
/// rng feeds the phase-noise path ("leader.phase_noise") and, in Random hop
/// mode, the per-hop phase draws ("leader.hop_phase"), both as substreams.
ComplexBuffer synthesize_two_tone(const TwoToneConfig& cfg, const HopSequence& hops,
                                  const OscillatorModel& leader_osc, double rate_hz, Rng& rng);

// Throws ConfigError if any tone of any center falls outside the Nyquist band.
void check_tone_plan(const TwoToneConfig& cfg, const std::vector<double>& centers_hz, double rate_hz);

// Linear gain, then optional magnitude soft clip m -> c tanh(m / c).
ComplexBuffer apply_pa(const ComplexBuffer& buffer, const TwoToneConfig& cfg);

} // namespace twotone
