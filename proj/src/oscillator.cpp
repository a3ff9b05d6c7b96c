// SPDX-License-Identifier: Apache-2.0
#include "twotone/oscillator.hpp"

#include <cmath>

#include "twotone/errors.hpp"

namespace twotone {

double OscillatorModel::elapsed_cycles(double nominal_hz, double t0_s, double t1_s) const
{
    const double dt = t1_s - t0_s;
    const double fractional = (ppm_offset * dt + 0.5 * drift_ppm_per_s * (t1_s * t1_s - t0_s * t0_s)) * 1e-6;
    return nominal_hz * dt + nominal_hz * fractional;
}

std::vector<double> oscillator_phase(const OscillatorModel& model, std::size_t n_samples, double rate_hz,
                                     Rng& rng)
{
    if (n_samples == 0)
        throw ConfigError("oscillator_phase: n_samples must be >= 1");
    if (!(rate_hz > 0.0))
        throw ConfigError("oscillator_phase: rate must be positive");
    if (model.phase_noise_diffusion < 0.0)
        throw ConfigError("oscillator_phase: phase_noise_diffusion must be >= 0");

    std::vector<double> phase(n_samples, model.initial_phase_rad);
    if (model.phase_noise_diffusion == 0.0)
        return phase;

    const double sigma = std::sqrt(model.phase_noise_diffusion / rate_hz);
    double walk = 0.0;
    std::size_t n = 1;
    while (n < n_samples) {
        const auto [g0, g1] = rng.gaussian_pair();
        walk += sigma * g0;
        phase[n++] = model.initial_phase_rad + walk;
        if (n < n_samples) {
            walk += sigma * g1;
            phase[n++] = model.initial_phase_rad + walk;
        }
    }
    return phase;
}

} // namespace twotone
