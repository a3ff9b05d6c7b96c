// SPDX-License-Identifier: Apache-2.0
#include "twotone/spectrum.hpp"

#include <fftw3.h>

#include <cmath>
#include <mutex>
#include <numbers>

#include "twotone/errors.hpp"

namespace twotone {

namespace {

// FFTW's planner is not thread-safe.
std::mutex& planner_mutex()
{
    static std::mutex m;
    return m;
}

std::size_t floor_pow2(std::size_t v)
{
    std::size_t p = 1;
    while (p * 2 <= v)
        p *= 2;
    return p;
}

} // namespace

std::vector<double> power_spectrum(std::span<const std::complex<double>> x)
{
    const int n = static_cast<int>(x.size());
    if (n == 0)
        return {};
    auto* in = fftw_alloc_complex(x.size());
    auto* out = fftw_alloc_complex(x.size());
    fftw_plan plan;
    {
        std::lock_guard lock(planner_mutex());
        plan = fftw_plan_dft_1d(n, in, out, FFTW_FORWARD, FFTW_ESTIMATE);
    }
    for (std::size_t i = 0; i < x.size(); ++i) {
        in[i][0] = x[i].real();
        in[i][1] = x[i].imag();
    }
    fftw_execute(plan);
    std::vector<double> power(x.size());
    for (std::size_t i = 0; i < x.size(); ++i)
        power[i] = out[i][0] * out[i][0] + out[i][1] * out[i][1];
    {
        std::lock_guard lock(planner_mutex());
        fftw_destroy_plan(plan);
    }
    fftw_free(in);
    fftw_free(out);
    return power;
}

Psd welch_psd(std::span<const double> x, double rate_hz, std::size_t max_segment)
{
    constexpr std::size_t kSegments = 8;
    if (x.size() < 18)
        throw AnalysisError("welch_psd: need at least 18 samples");
    const std::size_t seg = floor_pow2(std::min(2 * x.size() / 9, max_segment));
    const std::size_t hop = seg / 2;

    std::vector<double> window(seg);
    double window_power = 0.0;
    for (std::size_t i = 0; i < seg; ++i) {
        window[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(seg));
        window_power += window[i] * window[i];
    }

    const std::size_t bins = seg / 2 + 1;
    double* in = fftw_alloc_real(seg);
    fftw_complex* out = fftw_alloc_complex(bins);
    fftw_plan plan;
    {
        std::lock_guard lock(planner_mutex());
        plan = fftw_plan_dft_r2c_1d(static_cast<int>(seg), in, out, FFTW_ESTIMATE);
    }

    std::vector<double> acc(bins, 0.0);
    for (std::size_t s = 0; s < kSegments; ++s) {
        const std::size_t offset = s * hop;
        for (std::size_t i = 0; i < seg; ++i)
            in[i] = x[offset + i] * window[i];
        fftw_execute(plan);
        for (std::size_t b = 0; b < bins; ++b)
            acc[b] += out[b][0] * out[b][0] + out[b][1] * out[b][1];
    }
    {
        std::lock_guard lock(planner_mutex());
        fftw_destroy_plan(plan);
    }
    fftw_free(in);
    fftw_free(out);

    Psd psd;
    psd.segment_length = seg;
    psd.freq_hz.resize(bins);
    psd.power_db.resize(bins);
    const double norm = 1.0 / (kSegments * rate_hz * window_power);
    for (std::size_t b = 0; b < bins; ++b) {
        // One-sided: double everything except DC and Nyquist.
        const double factor = (b == 0 || b == bins - 1) ? 1.0 : 2.0;
        psd.freq_hz[b] = static_cast<double>(b) * rate_hz / static_cast<double>(seg);
        psd.power_db[b] = 10.0 * std::log10(std::max(acc[b] * norm * factor, 1e-300));
    }
    return psd;
}

} // namespace twotone
