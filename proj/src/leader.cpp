// SPDX-License-Identifier: Apache-2.0
#include "twotone/leader.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "twotone/errors.hpp"

namespace twotone {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double wrap_cycles(double c)
{
    return c - std::nearbyint(c);
}

} // namespace

std::vector<double> HopSequence::hop_instants() const
{
    std::vector<double> out;
    for (std::size_t k = 1; k < segments.size(); ++k)
        out.push_back(segments[k].start_s);
    return out;
}

std::size_t sample_index(double t_s, double rate_hz)
{
    const double x = t_s * rate_hz;
    const double nearest = std::nearbyint(x);
    if (std::abs(x - nearest) < 1e-9)
        return static_cast<std::size_t>(nearest);
    return static_cast<std::size_t>(std::floor(x));
}

HopSequence generate_hop_sequence(const HopSchedule& schedule, Rng& rng)
{
    if (schedule.centers_hz.empty())
        throw ConfigError("hops.centers_hz: must not be empty");
    if (!(schedule.dwell_s > 0.0))
        throw ConfigError("hops.dwell_s: must be positive");
    if (!(schedule.total_duration_s >= schedule.dwell_s))
        throw ConfigError("hops: total duration must be at least one dwell");

    const double ratio = schedule.total_duration_s / schedule.dwell_s;
    const auto count = static_cast<std::size_t>(std::ceil(ratio - 1e-9));
    const std::size_t n_centers = schedule.centers_hz.size();

    HopSequence seq;
    seq.total_duration_s = schedule.total_duration_s;
    seq.segments.reserve(count);
    for (std::size_t k = 0; k < count; ++k) {
        std::size_t index = 0;
        if (const auto* fixed = std::get_if<FixedSequence>(&schedule.pattern)) {
            if (fixed->indices.empty())
                throw ConfigError("hops.pattern.indices: must not be empty");
            index = fixed->indices[k % fixed->indices.size()];
            if (index >= n_centers)
                throw ConfigError("hops.pattern.indices: index " + std::to_string(index) + " out of range");
        } else {
            index = static_cast<std::size_t>(rng.next() % n_centers);
        }
        seq.segments.push_back({static_cast<double>(k) * schedule.dwell_s, schedule.centers_hz[index]});
    }
    return seq;
}

void check_tone_plan(const TwoToneConfig& cfg, const std::vector<double>& centers_hz, double rate_hz)
{
    if (!(cfg.delta_f_hz > 0.0))
        throw ConfigError("two_tone.delta_f_hz: must be positive");
    if (!(rate_hz > 0.0))
        throw ConfigError("rate_hz: must be positive");
    const double nyquist = 0.5 * rate_hz;
    for (double c : centers_hz) {
        const double edge = std::abs(c - cfg.sim_center_hz) + 0.5 * cfg.delta_f_hz;
        if (!(edge < nyquist))
            throw ConfigError("two_tone: Nyquist violation, center " + std::to_string(c) + " Hz puts a tone " +
                              std::to_string(edge) + " Hz from sim center, Nyquist is " + std::to_string(nyquist) +
                              " Hz");
    }
}

std::vector<SegmentPhase> plan_tone_phases(const TwoToneConfig& cfg, const HopSequence& hops,
                                           const OscillatorModel& leader_osc, double rate_hz, Rng& rng)
{
    const std::size_t total = sample_index(hops.total_duration_s, rate_hz);
    std::vector<SegmentPhase> plan;
    plan.reserve(hops.segments.size());
    std::array<double, 2> cycles{0.0, 0.0};

    for (std::size_t k = 0; k < hops.segments.size(); ++k) {
        const auto& seg = hops.segments[k];
        SegmentPhase sp;
        sp.first_sample = sample_index(seg.start_s, rate_hz);
        sp.end_sample = k + 1 < hops.segments.size() ? sample_index(hops.segments[k + 1].start_s, rate_hz) : total;
        sp.end_sample = std::min(sp.end_sample, total);
        sp.center_hz = seg.center_hz;
        sp.offset_hz = {seg.center_hz - 0.5 * cfg.delta_f_hz - cfg.sim_center_hz,
                        seg.center_hz + 0.5 * cfg.delta_f_hz - cfg.sim_center_hz};

        if (k > 0) {
            const auto& prev = plan.back();
            const double t0 = static_cast<double>(prev.first_sample) / rate_hz;
            const double t1 = static_cast<double>(sp.first_sample) / rate_hz;
            for (int i = 0; i < 2; ++i) {
                if (cfg.hop_phase_mode == HopPhaseMode::Random)
                    cycles[i] = wrap_cycles(rng.uniform());
                else
                    cycles[i] = wrap_cycles(prev.start_cycles[i] + leader_osc.elapsed_cycles(prev.offset_hz[i], t0, t1));
            }
        }
        sp.start_cycles = cycles;
        plan.push_back(sp);
    }
    return plan;
}

ComplexBuffer synthesize_two_tone(const TwoToneConfig& cfg, const HopSequence& hops,
                                  const OscillatorModel& leader_osc, double rate_hz, Rng& rng)
{
    if (hops.segments.empty())
        throw ConfigError("synthesize_two_tone: empty hop sequence");
    if (!(cfg.tone_amplitude > 0.0))
        throw ConfigError("two_tone.tone_amplitude: must be positive");
    std::vector<double> centers;
    for (const auto& seg : hops.segments)
        centers.push_back(seg.center_hz);
    check_tone_plan(cfg, centers, rate_hz);

    const std::size_t total = sample_index(hops.total_duration_s, rate_hz);
    if (total == 0)
        throw ConfigError("synthesize_two_tone: duration shorter than one sample");

    Rng noise_rng = rng.substream("leader.phase_noise");
    Rng hop_rng = rng.substream("leader.hop_phase");
    const auto theta = oscillator_phase(leader_osc, total, rate_hz, noise_rng);
    const auto plan = plan_tone_phases(cfg, hops, leader_osc, rate_hz, hop_rng);

    ComplexBuffer out;
    out.rate_hz = rate_hz;
    out.start_time_s = 0.0;
    out.samples.resize(total);

    const double amp = cfg.tone_amplitude;
    for (const auto& sp : plan) {
        const double t0 = static_cast<double>(sp.first_sample) / rate_hz;
        for (std::size_t n = sp.first_sample; n < sp.end_sample; ++n) {
            const double t = static_cast<double>(n) / rate_hz;
            cdouble acc{0.0, 0.0};
            for (int i = 0; i < 2; ++i) {
                const double c = wrap_cycles(sp.start_cycles[i] + leader_osc.elapsed_cycles(sp.offset_hz[i], t0, t));
                acc += std::polar(amp, kTwoPi * c + theta[n]);
            }
            out.samples[n] = acc;
        }
    }
    return out;
}

ComplexBuffer apply_pa(const ComplexBuffer& buffer, const TwoToneConfig& cfg)
{
    ComplexBuffer out = buffer;
    const double gain = std::pow(10.0, cfg.pa_gain_db / 20.0);
    if (gain != 1.0)
        for (auto& s : out.samples)
            s *= gain;
    if (cfg.pa_output_ceiling) {
        const double ceiling = *cfg.pa_output_ceiling;
        if (!(ceiling > 0.0))
            throw ConfigError("two_tone.pa_saturation.output_ceiling: must be positive");
        for (auto& s : out.samples) {
            const double m = std::abs(s);
            if (m > 0.0)
                s *= ceiling * std::tanh(m / ceiling) / m;
        }
    }
    return out;
}

} // namespace twotone
