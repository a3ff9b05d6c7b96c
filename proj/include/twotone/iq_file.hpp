// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include "twotone/analysis.hpp"
#include "twotone/signal.hpp"
#include "twotone/spectrum.hpp"

namespace twotone {

/// Sidecar JSON for a binary recording. Required keys: rate_hz,
/// sim_center_hz, start_time_s. Optional: kind ("complex" | "real"),
/// follower_ppm, hop_instants_s, settling_samples.
struct IqHeader
{
    double rate_hz = 0.0;
    double sim_center_hz = 0.0;
    double start_time_s = 0.0;
    SignalKind kind = SignalKind::ComplexBaseband;
    double follower_ppm = 0.0;
    std::vector<double> hop_instants_s;
    std::size_t settling_samples = 0;
};

// Interleaved I/Q, 32-bit IEEE float, little-endian. Real buffers are written
// with Q = 0.
void write_iq(const std::filesystem::path& data, const ComplexBuffer& buffer);
void write_iq(const std::filesystem::path& data, const RealBuffer& buffer);
std::vector<cdouble> read_iq(const std::filesystem::path& data);

void write_header(const std::filesystem::path& path, const IqHeader& header);
IqHeader read_header(const std::filesystem::path& path);

// time_s,value for the first max_samples samples (all when 0).
void write_clock_csv(const std::filesystem::path& path, const RealBuffer& clock, std::size_t max_samples = 0);
// time_s,phase_rad,envelope
void write_phase_csv(const std::filesystem::path& path, const PhaseSeries& ps);
// freq_hz,psd_db
void write_spectrum_csv(const std::filesystem::path& path, const Psd& psd);

} // namespace twotone
