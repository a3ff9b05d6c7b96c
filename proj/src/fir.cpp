// SPDX-License-Identifier: Apache-2.0
#include "twotone/fir.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>

#include "twotone/errors.hpp"

namespace twotone {

namespace {

constexpr double kPi = std::numbers::pi;

double sinc(double x)
{
    if (x == 0.0)
        return 1.0;
    return std::sin(kPi * x) / (kPi * x);
}

// Ideal low-pass impulse response, cutoff normalized to the sample rate.
std::vector<double> ideal_lowpass(double cutoff_norm, int num_taps)
{
    std::vector<double> h(static_cast<std::size_t>(num_taps));
    const double mid = 0.5 * (num_taps - 1);
    for (int n = 0; n < num_taps; ++n)
        h[n] = 2.0 * cutoff_norm * sinc(2.0 * cutoff_norm * (n - mid));
    return h;
}

void check_taps(int num_taps, const char* what)
{
    if (num_taps < 11)
        throw ConfigError(std::string(what) + ": num_taps must be >= 11, got " + std::to_string(num_taps));
    if (num_taps % 2 == 0)
        throw ConfigError(std::string(what) + ": num_taps must be odd, got " + std::to_string(num_taps));
}

// Force exact symmetry; the two halves are computed independently above and
// can differ in the last ulp.
void symmetrize(std::vector<double>& taps)
{
    const std::size_t n = taps.size();
    for (std::size_t k = 0; k < n / 2; ++k) {
        const double avg = 0.5 * (taps[k] + taps[n - 1 - k]);
        taps[k] = avg;
        taps[n - 1 - k] = avg;
    }
}

} // namespace

std::complex<double> FirFilter::response(double freq_hz) const
{
    std::complex<double> acc{0.0, 0.0};
    const double w = -2.0 * kPi * freq_hz / rate_hz;
    for (std::size_t k = 0; k < taps.size(); ++k)
        acc += taps[k] * std::polar(1.0, w * static_cast<double>(k));
    return acc;
}

double FirFilter::response_db(double freq_hz) const
{
    return 20.0 * std::log10(std::abs(response(freq_hz)));
}

std::vector<double> hamming_window(std::size_t length)
{
    std::vector<double> w(length, 1.0);
    if (length < 2)
        return w;
    const double denom = static_cast<double>(length - 1);
    for (std::size_t n = 0; n < length; ++n)
        w[n] = 0.54 - 0.46 * std::cos(2.0 * kPi * static_cast<double>(n) / denom);
    return w;
}

FirFilter design_bandpass(double center_hz, double bw_hz, int num_taps, double rate_hz)
{
    check_taps(num_taps, "design_bandpass");
    if (!(rate_hz > 0.0))
        throw ConfigError("design_bandpass: rate must be positive");
    if (!(bw_hz > 0.0))
        throw ConfigError("design_bandpass: bandwidth must be positive");
    const double lo = center_hz - 0.5 * bw_hz;
    const double hi = center_hz + 0.5 * bw_hz;
    if (!(lo > 0.0))
        throw ConfigError("design_bandpass: lower band edge " + std::to_string(lo) + " Hz must be above 0");
    if (!(hi < 0.5 * rate_hz))
        throw ConfigError("design_bandpass: upper band edge " + std::to_string(hi) + " Hz exceeds Nyquist " +
                          std::to_string(0.5 * rate_hz) + " Hz");

    const auto upper = ideal_lowpass(hi / rate_hz, num_taps);
    const auto lower = ideal_lowpass(lo / rate_hz, num_taps);
    const auto window = hamming_window(static_cast<std::size_t>(num_taps));

    FirFilter filt;
    filt.taps.resize(static_cast<std::size_t>(num_taps));
    for (std::size_t k = 0; k < filt.taps.size(); ++k)
        filt.taps[k] = (upper[k] - lower[k]) * window[k];
    filt.design_center_hz = center_hz;
    filt.design_bw_hz = bw_hz;
    filt.rate_hz = rate_hz;

    const double gain = std::abs(filt.response(center_hz));
    for (double& t : filt.taps)
        t /= gain;
    symmetrize(filt.taps);
    return filt;
}

FirFilter design_lowpass(double cutoff_hz, int num_taps, double rate_hz)
{
    check_taps(num_taps, "design_lowpass");
    if (!(rate_hz > 0.0))
        throw ConfigError("design_lowpass: rate must be positive");
    if (!(cutoff_hz > 0.0) || !(cutoff_hz < 0.5 * rate_hz))
        throw ConfigError("design_lowpass: cutoff " + std::to_string(cutoff_hz) + " Hz must lie in (0, Nyquist)");

    auto taps = ideal_lowpass(cutoff_hz / rate_hz, num_taps);
    const auto window = hamming_window(taps.size());
    double sum = 0.0;
    for (std::size_t k = 0; k < taps.size(); ++k) {
        taps[k] *= window[k];
        sum += taps[k];
    }
    for (double& t : taps)
        t /= sum;
    symmetrize(taps);

    FirFilter filt;
    filt.taps = std::move(taps);
    filt.design_center_hz = 0.0;
    filt.design_bw_hz = 2.0 * cutoff_hz;
    filt.rate_hz = rate_hz;
    return filt;
}

namespace {

constexpr std::size_t kBlock = 2048;

// Blocked direct form: each block's history window stays in cache and the
// inner loop runs over contiguous outputs, which vectorizes. load(i) returns
// input sample i; store(i, acc) receives output sample i.
template <typename Load, typename Store>
void convolve_blocked(std::size_t n, std::span<const double> taps, Load load, Store store)
{
    const std::size_t ntaps = taps.size();
    std::vector<double> window(kBlock + ntaps - 1);
    std::array<double, kBlock> acc;

    for (std::size_t start = 0; start < n; start += kBlock) {
        const std::size_t len = std::min(kBlock, n - start);
        // window[i] holds x[start + i - (ntaps - 1)], zero before x[0].
        for (std::size_t i = 0; i < len + ntaps - 1; ++i) {
            const std::size_t pos = start + i;
            window[i] = pos < ntaps - 1 ? 0.0 : load(pos - (ntaps - 1));
        }
        std::fill(acc.begin(), acc.begin() + len, 0.0);
        for (std::size_t k = 0; k < ntaps; ++k) {
            const double tap = taps[k];
            const double* src = window.data() + (ntaps - 1 - k);
            for (std::size_t i = 0; i < len; ++i)
                acc[i] += tap * src[i];
        }
        for (std::size_t i = 0; i < len; ++i)
            store(start + i, acc[i]);
    }
}

} // namespace

void convolve(std::span<const double> x, std::span<const double> taps, std::span<double> y)
{
    if (y.size() != x.size())
        throw ConfigError("convolve: output length must equal input length");
    if (taps.empty())
        throw ConfigError("convolve: empty tap vector");
    convolve_blocked(
        x.size(), taps, [&](std::size_t i) { return x[i]; }, [&](std::size_t i, double v) { y[i] = v; });
}

namespace {

void check_rates(double buffer_rate, const FirFilter& filt)
{
    if (buffer_rate != filt.rate_hz)
        throw ConfigError("filter: buffer rate " + std::to_string(buffer_rate) + " Hz does not match filter rate " +
                          std::to_string(filt.rate_hz) + " Hz");
}

} // namespace

RealBuffer filter(const RealBuffer& buffer, const FirFilter& filt)
{
    check_rates(buffer.rate_hz, filt);
    RealBuffer out;
    out.rate_hz = buffer.rate_hz;
    out.start_time_s = buffer.start_time_s;
    out.settling_samples = buffer.settling_samples + filt.size() - 1;
    out.noise_variance = buffer.noise_variance;
    out.samples.resize(buffer.size());
    convolve(buffer.samples, filt.taps, out.samples);
    return out;
}

ComplexBuffer filter(const ComplexBuffer& buffer, const FirFilter& filt)
{
    check_rates(buffer.rate_hz, filt);
    const std::size_t n = buffer.size();
    const auto& in = buffer.samples;

    ComplexBuffer out;
    out.rate_hz = buffer.rate_hz;
    out.start_time_s = buffer.start_time_s;
    out.settling_samples = buffer.settling_samples + filt.size() - 1;
    out.noise_variance = buffer.noise_variance;
    out.samples.resize(n);
    auto& y = out.samples;
    // Real taps act on I and Q independently.
    convolve_blocked(
        n, filt.taps, [&](std::size_t i) { return in[i].real(); },
        [&](std::size_t i, double v) { y[i].real(v); });
    convolve_blocked(
        n, filt.taps, [&](std::size_t i) { return in[i].imag(); },
        [&](std::size_t i, double v) { y[i].imag(v); });
    return out;
}

} // namespace twotone
