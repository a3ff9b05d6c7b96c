// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "twotone/errors.hpp"
#include "twotone/fir.hpp"

using namespace twotone;

namespace {

// Direct DTFT of arbitrary taps, independent of FirFilter::response.
double dtft_db(const std::vector<double>& h, double f, double rate)
{
    double re = 0.0, im = 0.0;
    for (std::size_t k = 0; k < h.size(); ++k) {
        const double w = 2.0 * std::numbers::pi * f * static_cast<double>(k) / rate;
        re += h[k] * std::cos(w);
        im -= h[k] * std::sin(w);
    }
    return 10.0 * std::log10(re * re + im * im);
}

} // namespace

TEST_CASE("band-pass taps match a reference windowed-sinc design")
{
    // scipy.signal.firwin(201, [9e6, 11e6], pass_zero=False, fs=4e7, window="hamming")
    const auto f = design_bandpass(1e7, 2e6, 201, 4e7);
    REQUIRE(f.size() == 201);
    CHECK(f.taps[50] == doctest::Approx(-0.0068586931284030728).epsilon(1e-12));
    CHECK(f.taps[100] == doctest::Approx(0.099755647895453201).epsilon(1e-12));
    CHECK(std::abs(f.taps[0]) < 1e-15);
    for (std::size_t k = 0; k < f.size(); ++k)
        CHECK(f.taps[k] == f.taps[f.size() - 1 - k]);
}

TEST_CASE("band-pass response against direct evaluation")
{
    const auto f = design_bandpass(1e7, 2e6, 201, 4e7);
    CHECK(f.response_db(1e7) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(f.response_db(1.05e7) == doctest::Approx(-0.014396).epsilon(1e-3));
    CHECK(f.response_db(1.2e7) == doctest::Approx(-62.645904).epsilon(1e-4));
    CHECK(f.response_db(1.5e7) == doctest::Approx(-75.874806).epsilon(1e-4));
    CHECK(f.response_db(5e6) < -60.0);
    for (double freq = 0.0; freq < 2e7; freq += 3.7e5)
        CHECK(std::abs(f.response_db(freq) - dtft_db(f.taps, freq, 4e7)) < 0.1);
}

TEST_CASE("low-pass has unity DC gain and matches the reference design")
{
    // firwin(1321, 1e5, fs=4e7, window="hamming")
    const auto lp = design_lowpass(1e5, 1321, 4e7);
    CHECK(lp.taps[660] == doctest::Approx(0.0049946971726250299).epsilon(1e-12));
    CHECK(lp.taps[0] == doctest::Approx(-3.1181211222587596e-05).epsilon(1e-9));
    double sum = 0.0;
    for (double t : lp.taps)
        sum += t;
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(lp.group_delay_s() == doctest::Approx(660.0 / 4e7));
}

TEST_CASE("+25 MHz tone is rejected by the front filter at 80 MS/s")
{
    const auto lp = design_lowpass(1.6e7, 101, 8e7);
    CHECK(lp.response_db(2.5e7) <= -40.0);
    CHECK(std::abs(lp.response_db(1.0e7)) < 0.1);
}

TEST_CASE("invalid designs are rejected")
{
    CHECK_THROWS_AS(design_bandpass(1e7, 2e6, 200, 4e7), ConfigError);
    CHECK_THROWS_AS(design_bandpass(1e7, 2e6, 9, 4e7), ConfigError);
    CHECK_THROWS_AS(design_bandpass(1.95e7, 2e6, 201, 4e7), ConfigError);
    CHECK_THROWS_AS(design_bandpass(5e5, 2e6, 201, 4e7), ConfigError);
}

TEST_CASE("convolution matches the direct sum and tracks settling")
{
    std::vector<double> x(5000);
    for (std::size_t n = 0; n < x.size(); ++n)
        x[n] = std::sin(0.01 * static_cast<double>(n * n % 977));
    const auto f = design_bandpass(1e7, 2e6, 61, 4e7);
    std::vector<double> y(x.size());
    convolve(x, f.taps, y);
    for (std::size_t n : {0ul, 30ul, 2047ul, 2048ul, 2100ul, 4999ul}) {
        double acc = 0.0;
        for (std::size_t k = 0; k < f.size() && k <= n; ++k)
            acc += f.taps[k] * x[n - k];
        CHECK(y[n] == doctest::Approx(acc).epsilon(1e-12));
    }

    RealBuffer buf;
    buf.rate_hz = 4e7;
    buf.samples = x;
    buf.settling_samples = 7;
    const auto out = filter(buf, f);
    CHECK(out.settling_samples == 7 + 60);
    CHECK(out.samples == y);

    ComplexBuffer cb;
    cb.rate_hz = 4e7;
    for (double v : x)
        cb.samples.emplace_back(v, -2.0 * v);
    const auto cout = filter(cb, f);
    for (std::size_t n = 0; n < x.size(); n += 97) {
        CHECK(cout.samples[n].real() == y[n]);
        CHECK(cout.samples[n].imag() == doctest::Approx(-2.0 * y[n]).epsilon(1e-15));
    }

    buf.rate_hz = 8e7;
    CHECK_THROWS_AS(filter(buf, f), ConfigError);
}
