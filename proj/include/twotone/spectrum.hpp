// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <complex>
#include <span>
#include <vector>

namespace twotone {

struct Psd
{
    std::vector<double> freq_hz;
    std::vector<double> power_db; // 10 log10 of the averaged periodogram, per Hz
    std::size_t segment_length = 0;
};

/// Welch averaged periodogram over exactly 8 Hann-windowed segments with 50%
/// overlap. Segment length is the largest power of two not above
/// min(2 N / 9, max_segment); the segments cover the first 4.5 segment lengths
/// of the input. Real input yields the one-sided spectrum.
Psd welch_psd(std::span<const double> x, double rate_hz, std::size_t max_segment = 65536);

// Plain |DFT|^2 of x (unwindowed), bins 0 .. N-1, computed with FFTW.
std::vector<double> power_spectrum(std::span<const std::complex<double>> x);

} // namespace twotone
