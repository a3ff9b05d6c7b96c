// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "twotone/analysis.hpp"
#include "twotone/channel.hpp"
#include "twotone/follower.hpp"
#include "twotone/leader.hpp"
#include "twotone/oscillator.hpp"

namespace twotone {

struct AnalysisConfig
{
    double f_nominal_hz = 1e7;
    double lp_bw_hz = 1e5;
    int decim = 40;
    double gate_multiplier = 3.0; // hop gate width in units of the ref BPF group delay
    double window_s = 1e-4;
    double settle_band = 0.1;
};

/// A complete simulation run. Defaults reproduce the demonstration setup:
/// five centers 890-910 MHz, 10 MHz tone spacing, 1 s dwell, 3 m link,
/// three followers.
struct Scenario
{
    std::uint64_t master_seed = 1;
    double rate_hz = 4e7;
    double sim_center_hz = 9e8;
    double duration_s = 1.0;
    TwoToneConfig two_tone;
    OscillatorModel leader_oscillator{0.0, 0.0, 1.0, 0.0};
    HopSchedule hops;
    std::optional<std::uint64_t> hop_seed; // random pattern seed; derived from master_seed when absent
    ChannelConfig channel;
    std::vector<Interferer> interferers;
    std::vector<ReceiverChainConfig> followers{3};
    AnalysisConfig analysis;
};

// Canonical JSON form: every key present, object keys sorted.
nlohmann::json to_json(const Scenario& s);

/// Overlays `j` on the defaults and validates. Unknown keys and type errors
/// raise ConfigError naming the dotted field path.
Scenario scenario_from_json(const nlohmann::json& j);
Scenario load_scenario(const std::filesystem::path& path);

// Cross-field checks (Nyquist, filter bands, gate widths). Called by
// scenario_from_json; exposed for programmatically built scenarios.
void validate(const Scenario& s);

// 16 hex digits of FNV-1a over the canonical JSON dump.
std::string scenario_digest(const Scenario& s);

// Dotted paths of every scalar leaf in the canonical form, e.g. "hops.dwell_s".
std::vector<std::string> scalar_paths(const Scenario& s);

struct FollowerResult
{
    int id = 0;
    ClockMetrics metrics;
    double disturbed_fraction = 0.0;
    bool agc_clamped = false;
};

struct RunReport
{
    std::string scenario_digest;
    std::vector<double> hop_instants_s;
    std::vector<FollowerResult> followers;
    std::vector<std::vector<double>> pairwise_hz; // empty with a single follower
    double wall_time_s = 0.0;
    std::vector<std::string> artifacts;
};

struct RunOptions
{
    std::size_t workers = 0; // 0: default_workers()
    std::optional<std::filesystem::path> out_dir;
    std::size_t clock_csv_samples = 20000;
    bool export_iq = false;
    bool phase_csv = false;
};

/// synthesize -> PA -> propagate -> interferers -> per-follower extraction ->
/// analysis. Results depend only on the scenario, never on the worker count.
/// Errors are rethrown with the failing stage and follower prefixed.
RunReport run(const Scenario& scenario, const RunOptions& options = {});

// metrics.json contents (no wall time, so reruns are byte-identical).
nlohmann::json metrics_json(const RunReport& report);

/// One run per value with param_path set and master_seed XOR index. Writes
/// sweep.csv (and each run's outputs under run_<index>/) when out_dir is set.
std::vector<RunReport> sweep(const Scenario& base, const std::string& param_path, const std::vector<double>& values,
                             const RunOptions& options = {});

// Scenario with one scalar field replaced; ConfigError lists valid paths on a bad path.
Scenario with_param(const Scenario& base, const std::string& param_path, double value);

} // namespace twotone
