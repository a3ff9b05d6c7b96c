// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "twotone/errors.hpp"
#include "twotone/leader.hpp"
#include "twotone/spectrum.hpp"

using namespace twotone;

namespace {

constexpr double kRate = 4e7;

HopSequence single_center(double center, double total)
{
    HopSequence seq;
    seq.segments.push_back({0.0, center});
    seq.total_duration_s = total;
    return seq;
}

} // namespace

TEST_CASE("hop sequence from a singleton set")
{
    HopSchedule s;
    s.centers_hz = {900e6};
    s.dwell_s = 0.01;
    s.total_duration_s = 0.1;
    Rng rng(99);
    const auto seq = generate_hop_sequence(s, rng);
    CHECK(seq.segments.size() == 10);
    for (const auto& seg : seq.segments)
        CHECK(seg.center_hz == 900e6);
}

TEST_CASE("random hop indices follow the generator stream")
{
    HopSchedule s;
    s.dwell_s = 0.1;
    s.total_duration_s = 0.4;
    Rng rng(1);
    const auto seq = generate_hop_sequence(s, rng);
    // SplitMix64(1) outputs mod 5
    const std::size_t expected[] = {0, 4, 0, 0};
    REQUIRE(seq.segments.size() == 4);
    for (std::size_t k = 0; k < 4; ++k)
        CHECK(seq.segments[k].center_hz == s.centers_hz[expected[k]]);
}

TEST_CASE("segment starts are exact dwell multiples")
{
    HopSchedule s;
    s.dwell_s = 0.1;
    s.total_duration_s = 0.5;
    s.pattern = FixedSequence{{2, 0}};
    Rng rng(0);
    const auto seq = generate_hop_sequence(s, rng);
    REQUIRE(seq.segments.size() == 5);
    for (std::size_t k = 0; k < 5; ++k)
        CHECK(seq.segments[k].start_s == doctest::Approx(0.1 * static_cast<double>(k)).epsilon(1e-15));
    CHECK(seq.segments[0].center_hz == 900e6);
    CHECK(seq.segments[1].center_hz == 890e6);
    CHECK(seq.segments[2].center_hz == 900e6);
    CHECK(seq.hop_instants().size() == 4);
    CHECK(sample_index(0.3, kRate) == 12000000);

    s.centers_hz.clear();
    CHECK_THROWS_AS(generate_hop_sequence(s, rng), ConfigError);
}

TEST_CASE("centered two-tone is a real cosine")
{
    TwoToneConfig cfg;
    Rng rng(3);
    const auto s = synthesize_two_tone(cfg, single_center(900e6, 1e-4), OscillatorModel{}, kRate, rng);
    REQUIRE(s.size() == 4000);
    for (std::size_t n = 0; n < s.size(); ++n) {
        const double expected = 2.0 * std::cos(2.0 * std::numbers::pi * 5e6 * static_cast<double>(n) / kRate);
        CHECK(s.samples[n].imag() == doctest::Approx(0.0).epsilon(1e-12));
        CHECK(std::abs(s.samples[n].real() - expected) < 1e-11);
    }
}

TEST_CASE("two-tone spectrum has two dominant peaks at +/-5 MHz")
{
    TwoToneConfig cfg;
    Rng rng(3);
    const std::size_t n = 1 << 16;
    const auto s = synthesize_two_tone(cfg, single_center(900e6, static_cast<double>(n) / kRate), OscillatorModel{},
                                       kRate, rng);
    REQUIRE(s.size() == n);
    const auto p = power_spectrum(s.samples);
    std::vector<double> sorted = p;
    std::nth_element(sorted.begin(), sorted.begin() + n / 2, sorted.end());
    const double median = sorted[n / 2];
    const std::size_t bin_pos = static_cast<std::size_t>(std::lround(5e6 / kRate * n));
    const std::size_t bin_neg = n - bin_pos;
    CHECK(10.0 * std::log10(p[bin_pos] / median) >= 60.0);
    CHECK(10.0 * std::log10(p[bin_neg] / median) >= 60.0);
    for (std::size_t k = 0; k < n; ++k)
        if (k != bin_pos && k != bin_neg)
            CHECK(p[k] < 1e-6 * p[bin_pos]);
}

TEST_CASE("leader ppm scales the beat")
{
    OscillatorModel osc;
    osc.ppm_offset = 1.0;
    const double beat = osc.elapsed_cycles(5e6, 0.0, 1.0) - osc.elapsed_cycles(-5e6, 0.0, 1.0);
    CHECK(beat == doctest::Approx(10000010.0).epsilon(1e-14));
}

TEST_CASE("continuous hops keep the beat phase continuous")
{
    TwoToneConfig cfg;
    HopSequence seq;
    seq.segments = {{0.0, 890e6}, {1e-4, 910e6}, {2e-4, 900e6}};
    seq.total_duration_s = 3e-4;
    Rng rng(5);
    const auto plan = plan_tone_phases(cfg, seq, OscillatorModel{}, kRate, rng);
    REQUIRE(plan.size() == 3);
    for (std::size_t k = 1; k < plan.size(); ++k) {
        const auto& a = plan[k - 1];
        const auto& b = plan[k];
        const double span = static_cast<double>(b.first_sample - a.first_sample) / kRate;
        for (int i = 0; i < 2; ++i) {
            const double carried = a.start_cycles[i] + a.offset_hz[i] * span;
            const double diff = b.start_cycles[i] - carried;
            CHECK(std::abs(diff - std::nearbyint(diff)) < 1e-9);
        }
    }

    cfg.hop_phase_mode = HopPhaseMode::Random;
    Rng rng2(5);
    const auto random_plan = plan_tone_phases(cfg, seq, OscillatorModel{}, kRate, rng2);
    CHECK(random_plan[1].start_cycles[0] != plan[1].start_cycles[0]);
}

TEST_CASE("tone plan outside Nyquist is rejected")
{
    TwoToneConfig cfg;
    cfg.delta_f_hz = 3e7;
    try {
        check_tone_plan(cfg, {890e6, 910e6}, kRate);
        FAIL("expected a Nyquist error");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("Nyquist") != std::string::npos);
    }
    cfg.delta_f_hz = 1e7;
    CHECK_NOTHROW(check_tone_plan(cfg, {890e6, 910e6}, kRate));
}

TEST_CASE("power amplifier")
{
    ComplexBuffer in;
    in.rate_hz = kRate;
    in.samples = {{1.0, 0.0}, {0.0, -2.0}, {3.0, 4.0}, {10.0, 0.0}};

    TwoToneConfig cfg;
    cfg.pa_gain_db = 0.0;
    CHECK(apply_pa(in, cfg).samples == in.samples);

    cfg.pa_gain_db = 20.0;
    const auto amp = apply_pa(in, cfg);
    for (std::size_t k = 0; k < in.size(); ++k)
        CHECK(std::abs(amp.samples[k] - 10.0 * in.samples[k]) < 1e-12);

    cfg.pa_gain_db = 0.0;
    cfg.pa_output_ceiling = 1.0;
    const auto clipped = apply_pa(in, cfg);
    CHECK(std::abs(clipped.samples[3]) == doctest::Approx(0.99999997).epsilon(1e-7));
    CHECK(std::abs(clipped.samples[3]) == doctest::Approx(std::tanh(10.0)));
    // phase preserved
    CHECK(std::arg(clipped.samples[2]) == doctest::Approx(std::arg(in.samples[2])));
}

TEST_CASE("oscillator phase noise variance grows linearly")
{
    OscillatorModel osc;
    osc.phase_noise_diffusion = 100.0;
    const std::size_t n = 1000;
    const double rate = 1e4;
    double acc = 0.0;
    const int trials = 400;
    for (int t = 0; t < trials; ++t) {
        Rng rng(1000 + t);
        const auto theta = oscillator_phase(osc, n, rate, rng);
        CHECK(theta[0] == 0.0);
        acc += theta.back() * theta.back();
    }
    // Var = D * (n - 1) / rate
    CHECK(acc / trials == doctest::Approx(100.0 * 999.0 / rate).epsilon(0.15));
}
