// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "twotone/rng.hpp"

namespace twotone {

/// Clock source imperfections: fractional frequency error, linear drift and a
/// Wiener phase-noise process. Every frequency derived from one oscillator is
/// scaled by the same factor, so ratios between them are preserved exactly.
struct OscillatorModel
{
    double ppm_offset = 0.0;
    double drift_ppm_per_s = 0.0;
    double phase_noise_diffusion = 0.0; // rad^2/s
    double initial_phase_rad = 0.0;

    // Instantaneous scale applied to a nominal frequency at time t.
    double frequency_scale(double t_s) const { return 1.0 + (ppm_offset + drift_ppm_per_s * t_s) * 1e-6; }

    // Cycles accumulated by a nominal frequency between t0 and t1.
    double elapsed_cycles(double nominal_hz, double t0_s, double t1_s) const;

    bool is_ideal() const
    {
        return ppm_offset == 0.0 && drift_ppm_per_s == 0.0 && phase_noise_diffusion == 0.0;
    }
};

// initial_phase + omega[n], omega a random walk with per-sample increment
// variance phase_noise_diffusion / rate_hz and omega[0] = 0.
std::vector<double> oscillator_phase(const OscillatorModel& model, std::size_t n_samples, double rate_hz,
                                     Rng& rng);

} // namespace twotone
