// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "twotone/analysis.hpp"
#include "twotone/errors.hpp"
#include "twotone/follower.hpp"

using namespace twotone;

namespace {

constexpr double kRate = 4e7;
constexpr double kTwoPi = 2.0 * std::numbers::pi;
const FrequencyBand kBand{9e6, 11e6};

ExtractedClock clean_clock(double f, double duration, double ppm = 0.0, double phase = 0.0)
{
    ExtractedClock clk;
    clk.signal.rate_hz = kRate;
    const auto n = static_cast<std::size_t>(duration * kRate);
    clk.signal.samples.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double c = f * static_cast<double>(k) / kRate;
        clk.signal.samples[k] = std::cos(kTwoPi * (c - std::floor(c)) + phase);
    }
    clk.follower_ppm = ppm;
    return clk;
}

double fit(const ExtractedClock& clk)
{
    const auto ps = demodulate_phase(clk, 1e7, 1e5, 40, kBand);
    return fit_frequency(ps, default_gates(ps, {}, 0.0)).f_hat_hz;
}

PhaseSeries synthetic(std::size_t n, double rate, double slope_hz, double phi0, double sigma, Rng* rng)
{
    PhaseSeries ps;
    ps.decimated_rate_hz = rate;
    ps.f_nominal_hz = 1e7;
    for (std::size_t k = 0; k < n; ++k) {
        const double t = static_cast<double>(k) / rate;
        double p = kTwoPi * slope_hz * t + phi0;
        if (rng)
            p += sigma * rng->gaussian_pair().first;
        ps.times_s.push_back(t);
        ps.phase_rad.push_back(p);
        ps.envelope.push_back(1.0);
    }
    return ps;
}

} // namespace

TEST_CASE("demodulated phase of a clean clock")
{
    const auto on = demodulate_phase(clean_clock(1e7, 1e-3), 1e7, 1e5, 40, kBand);
    REQUIRE(on.size() > 900);
    CHECK(on.size() == on.phase_rad.size());
    CHECK(on.size() == on.envelope.size());
    CHECK(on.decimated_rate_hz == 1e6);
    const auto m = fit_frequency(on, default_gates(on, {}, 0.0));
    CHECK(std::abs(m.f_hat_hz - 1e7) < 1e-6);
    for (double e : on.envelope)
        CHECK(e == doctest::Approx(1.0).epsilon(1e-3));

    CHECK(fit(clean_clock(1e7 + 100.0, 1e-3)) == doctest::Approx(1e7 + 100.0).epsilon(1e-9));
}

TEST_CASE("follower timebase error scales the reading")
{
    const double f10 = fit(clean_clock(1e7, 1e-3, 10.0));
    CHECK(std::abs(f10 - 1e7 / (1.0 + 1e-5)) < 0.01);
    CHECK(std::abs(f10 - 9999900.0) < 0.01);

    // (1 + e)(1 - e) symmetry holds to second order
    const double f0 = fit(clean_clock(1e7, 1e-3));
    const double fp = fit(clean_clock(1e7, 1e-3, 1.0));
    const double fm = fit(clean_clock(1e7, 1e-3, -1.0));
    CHECK(std::abs(fp * fm / (f0 * f0) - 1.0) < 1e-10);
}

TEST_CASE("nominal frequency outside the reference band")
{
    CHECK_THROWS_AS(demodulate_phase(clean_clock(1e7, 1e-4), 1.2e7, 1e5, 40, kBand), ConfigError);
    CHECK_THROWS_AS(demodulate_phase(clean_clock(1e7, 1e-4), 1e7, 6e5, 40, kBand), ConfigError);
}

TEST_CASE("unwrap")
{
    std::vector<double> truth, wrapped;
    for (int k = 0; k < 2000; ++k) {
        const double p = 0.37 * k - 1e-4 * k * k;
        truth.push_back(p);
        wrapped.push_back(std::remainder(p, kTwoPi));
    }
    const auto u = unwrap(wrapped);
    for (std::size_t k = 1; k < u.size(); ++k) {
        CHECK(std::abs(u[k] - u[k - 1]) <= std::numbers::pi);
        const double m = (u[k] - wrapped[k]) / kTwoPi;
        CHECK(std::abs(m - std::nearbyint(m)) < 1e-9);
        CHECK(std::remainder(u[k], kTwoPi) == doctest::Approx(wrapped[k]).epsilon(1e-12));
        CHECK(u[k] - u[0] == doctest::Approx(truth[k] - truth[0]).epsilon(1e-12));
    }
}

TEST_CASE("least squares is exact on a noiseless ramp")
{
    const auto ps = synthetic(5000, 1e6, 250.0, 0.3, 0.0, nullptr);
    const auto m = fit_frequency(ps, {});
    CHECK(m.f_hat_hz - 1e7 == doctest::Approx(250.0).epsilon(1e-9));
    CHECK(m.phi0_hat_rad == doctest::Approx(0.3).epsilon(1e-9));
    CHECK(m.residual_rms_rad < 1e-9);
    CHECK(m.gated_fraction == 0.0);
}

TEST_CASE("gates are accounted exactly")
{
    // Power-of-two rate so every gate edge is exact.
    const double rate = 1048576.0;
    auto ps = synthetic(10240, rate, 0.0, 0.0, 0.0, nullptr);
    ps.settled_from_s = 1024.0 / rate;
    const auto gates = default_gates(ps, {4096.0 / rate, 8192.0 / rate}, 512.0 / rate);
    const auto m = fit_frequency(ps, gates);
    CHECK(m.samples_used == 10240 - 1024 - 512 - 512);
    CHECK(m.gated_fraction == doctest::Approx(0.2));

    try {
        fit_frequency(ps, {{-1.0, 10200.0 / rate, Gate::Kind::Hop}});
        FAIL("expected an analysis error");
    } catch (const AnalysisError& e) {
        CHECK(std::string(e.what()).find("hop gate") != std::string::npos);
    }
    try {
        fit_frequency(ps, {{-1.0, 10200.0 / rate, Gate::Kind::Settling}});
        FAIL("expected an analysis error");
    } catch (const AnalysisError& e) {
        CHECK(std::string(e.what()).find("settling") != std::string::npos);
    }
}

TEST_CASE("slope variance matches the closed form")
{
    // sigma = 0.1 rad, T = 10 ms at 1 MHz
    const double sigma = 0.1, rate = 1e6, T = 0.01;
    const auto n = static_cast<std::size_t>(T * rate);
    const double predicted = sigma * std::sqrt(12.0 / (static_cast<double>(n) * T * T)) / kTwoPi;
    double acc = 0.0;
    const int trials = 100;
    Rng master(2024);
    for (int t = 0; t < trials; ++t) {
        Rng rng = master.substream("trial." + std::to_string(t));
        const auto m = fit_frequency(synthetic(n, rate, 0.0, 0.0, sigma, &rng), {});
        acc += (m.f_hat_hz - 1e7) * (m.f_hat_hz - 1e7);
    }
    CHECK(std::sqrt(acc / trials) == doctest::Approx(predicted).epsilon(0.2));
}

TEST_CASE("estimator error falls as T^-1.5")
{
    const double sigma = 0.1, rate = 1e6;
    std::vector<double> lx, ly;
    Rng master(77);
    for (double T : {5e-3, 10e-3, 20e-3, 40e-3}) {
        const auto n = static_cast<std::size_t>(T * rate);
        double acc = 0.0;
        const int trials = 200;
        for (int t = 0; t < trials; ++t) {
            Rng rng = master.substream("T" + std::to_string(n) + "." + std::to_string(t));
            const auto m = fit_frequency(synthetic(n, rate, 0.0, 0.0, sigma, &rng), {});
            acc += (m.f_hat_hz - 1e7) * (m.f_hat_hz - 1e7);
        }
        lx.push_back(std::log(T));
        ly.push_back(0.5 * std::log(acc / trials));
    }
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        mx += lx[i] / 4.0;
        my += ly[i] / 4.0;
    }
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        sxy += (lx[i] - mx) * (ly[i] - my);
        sxx += (lx[i] - mx) * (lx[i] - mx);
    }
    CHECK(sxy / sxx == doctest::Approx(-1.5).epsilon(0.2));
}

TEST_CASE("pairwise differences")
{
    ClockMetrics a, b;
    a.f_hat_hz = 1e7 + 0.3;
    b.f_hat_hz = 1e7 - 0.2;
    const auto d = pairwise_differences({a, b});
    CHECK(d[0][1] == doctest::Approx(0.5));
    CHECK(d[1][0] == doctest::Approx(-0.5));
    CHECK(d[0][0] == 0.0);
    CHECK(max_abs_pairwise(d) == doctest::Approx(0.5));
    const auto z = pairwise_differences({a, a});
    CHECK(max_abs_pairwise(z) == 0.0);
    CHECK_THROWS_AS(pairwise_differences({a}), AnalysisError);
}

TEST_CASE("no hops, no transient events")
{
    const auto ps = demodulate_phase(clean_clock(1e7, 1e-3), 1e7, 1e5, 40, kBand);
    CHECK(transient_metrics(ps, {}, {}).empty());
}

TEST_CASE("phase reversal through the reference BPF dips deeply")
{
    const double hop = 1e-3;
    ExtractedClock raw = clean_clock(1e7, 2e-3);
    const auto k_hop = static_cast<std::size_t>(hop * kRate);
    for (std::size_t k = k_hop; k < raw.signal.size(); ++k)
        raw.signal.samples[k] = -raw.signal.samples[k];
    ExtractedClock clk;
    clk.signal = ref_stage(raw.signal, ReceiverChainConfig{});
    const auto ps = demodulate_phase(clk, 1e7, 1e5, 40, kBand);
    const auto ev = transient_metrics(ps, {hop}, {1e-4, 0.1, 2.5e-6});
    REQUIRE(ev.size() == 1);
    CHECK(ev[0].dip_depth >= 0.5);
    CHECK(ev[0].disturbed);
    CHECK(ev[0].settling_time_s > 0.0);
    CHECK(ev[0].settling_time_s < 1e-4);
    CHECK_FALSE(ev[0].flagged);
}

TEST_CASE("overlapping hop windows are flagged and saturated")
{
    ExtractedClock clk = clean_clock(1e7, 2e-3);
    const auto ps = demodulate_phase(clk, 1e7, 1e5, 40, kBand);
    const auto ev = transient_metrics(ps, {0.5e-3, 0.55e-3, 1.5e-3}, {1e-4, 0.1, 2.5e-6});
    REQUIRE(ev.size() == 3);
    CHECK(ev[0].flagged);
    CHECK(ev[0].settling_time_s == doctest::Approx(0.05e-3));
    CHECK_FALSE(ev[2].flagged);
    CHECK(ev[2].dip_depth <= 0.05);
}

TEST_CASE("disturbed fraction")
{
    CHECK(disturbed_fraction({}, 0.01, 0.1) == 0.0);
    std::vector<TransientEvent> ev(5);
    for (auto& e : ev)
        e.settling_time_s = 2e-3;
    CHECK(disturbed_fraction(ev, 0.02, 0.1) == doctest::Approx(0.10));
    ev[0].settling_time_s = 1.0;
    CHECK(disturbed_fraction(ev, 0.02, 0.1) == doctest::Approx(0.28));
    CHECK(disturbed_fraction(ev, 0.0, 0.1) == 1.0);
    CHECK_THROWS_AS(disturbed_fraction(ev, 0.02, 0.0), ConfigError);
}
