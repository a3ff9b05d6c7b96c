// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <complex>
#include <span>
#include <vector>

#include "twotone/signal.hpp"

namespace twotone {

/// Linear-phase FIR with odd, symmetric real taps.
struct FirFilter
{
    std::vector<double> taps;
    double design_center_hz = 0.0; // 0 for low-pass designs
    double design_bw_hz = 0.0;     // full two-sided width of the passband
    double rate_hz = 0.0;

    std::size_t size() const { return taps.size(); }
    double group_delay_s() const { return static_cast<double>(taps.size() - 1) / (2.0 * rate_hz); }

    // H(f) = sum_k taps[k] e^{-j 2 pi f k / rate}
    std::complex<double> response(double freq_hz) const;
    double response_db(double freq_hz) const;
};

std::vector<double> hamming_window(std::size_t length);

/// Hamming-windowed sinc band-pass built as the difference of two low-pass
/// prototypes, scaled to exactly unity gain at center_hz.
///
/// Requires 0 < center - bw/2, center + bw/2 < rate/2, num_taps odd and >= 11.
FirFilter design_bandpass(double center_hz, double bw_hz, int num_taps, double rate_hz);

/// Hamming-windowed sinc low-pass, unity DC gain. Passband is [-cutoff, cutoff]
/// so design_bw_hz = 2 * cutoff.
FirFilter design_lowpass(double cutoff_hz, int num_taps, double rate_hz);

// y[n] = sum_k taps[k] x[n-k] with zero history before x[0]. y.size() == x.size().
void convolve(std::span<const double> x, std::span<const double> taps, std::span<double> y);

/// Same-length FIR filtering; output settling prefix grows by len(taps)-1.
RealBuffer filter(const RealBuffer& buffer, const FirFilter& filt);
ComplexBuffer filter(const ComplexBuffer& buffer, const FirFilter& filt);

} // namespace twotone
