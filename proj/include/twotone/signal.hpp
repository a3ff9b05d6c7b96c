// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <complex>
#include <cstddef>
#include <string>
#include <type_traits>
#include <vector>

#include "twotone/errors.hpp"

namespace twotone {

using cdouble = std::complex<double>;

enum class SignalKind { ComplexBaseband, Real };

/// Uniformly sampled signal passed between simulator stages.
///
/// Complex buffers are complex envelopes relative to the scenario's
/// simulation center frequency; that center lives in the scenario, not here.
/// Real buffers never carry a center frequency.
template <typename T> struct SampleBuffer
{
    double rate_hz = 0.0;
    double start_time_s = 0.0;
    std::vector<T> samples;

    // Leading samples still influenced by zero filter history. Accumulates
    // through every FIR stage; analysis must gate them.
    std::size_t settling_samples = 0;

    // Variance per sample of the white noise already present (complex
    // buffers: E|n|^2). The LNA model refers its added noise to this.
    double noise_variance = 0.0;

    static constexpr SignalKind kind()
    {
        if constexpr (std::is_same_v<T, cdouble>)
            return SignalKind::ComplexBaseband;
        else
            return SignalKind::Real;
    }

    std::size_t size() const { return samples.size(); }
    double duration_s() const { return static_cast<double>(samples.size()) / rate_hz; }
    double time_at(std::size_t n) const { return start_time_s + static_cast<double>(n) / rate_hz; }
};

using ComplexBuffer = SampleBuffer<cdouble>;
using RealBuffer = SampleBuffer<double>;

// Throws ConfigError unless rate > 0 and the buffer holds samples.
template <typename T> void require_valid(const SampleBuffer<T>& buffer, const char* what)
{
    if (!(buffer.rate_hz > 0.0))
        throw ConfigError(std::string(what) + ": sample rate must be positive");
    if (buffer.samples.empty())
        throw ConfigError(std::string(what) + ": empty sample buffer");
}

} // namespace twotone
