// SPDX-License-Identifier: Apache-2.0
// Command-line front end: run, sweep and analyze.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "twotone/errors.hpp"
#include "twotone/iq_file.hpp"
#include "twotone/scenario.hpp"

namespace fs = std::filesystem;
using namespace twotone;

namespace {

std::vector<double> parse_values(const std::string& csv)
{
    std::vector<double> out;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(item, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != item.size())
            throw ConfigError("--values: cannot parse \"" + item + "\" as a number");
        out.push_back(v);
    }
    if (out.empty())
        throw ConfigError("--values: empty list");
    return out;
}

Scenario scenario_or_default(const std::string& path)
{
    return path.empty() ? scenario_from_json(nlohmann::json::object()) : load_scenario(path);
}

void print_summary(const RunReport& r)
{
    std::printf("scenario %s, %zu hops, %.2f s\n", r.scenario_digest.c_str(), r.hop_instants_s.size(), r.wall_time_s);
    for (const auto& f : r.followers)
        std::printf("  follower %d: f_hat = %.6f Hz, residual %.4f rad, gated %.3f, disturbed %.4f%s\n", f.id,
                    f.metrics.f_hat_hz, f.metrics.residual_rms_rad, f.metrics.gated_fraction, f.disturbed_fraction,
                    f.agc_clamped ? " (AGC clamped)" : "");
    if (!r.pairwise_hz.empty())
        std::printf("  max pairwise |df| = %.6f Hz\n", max_abs_pairwise(r.pairwise_hz));
}

int analyze_file(const fs::path& input, const fs::path& header_path, const fs::path& out, const std::string& scenario_path)
{
    const Scenario sc = scenario_or_default(scenario_path);
    const IqHeader header = read_header(header_path);
    const auto iq = read_iq(input);

    ExtractedClock clk;
    clk.signal.rate_hz = header.rate_hz;
    clk.signal.start_time_s = header.start_time_s;
    clk.signal.settling_samples = header.settling_samples;
    clk.signal.samples.reserve(iq.size());
    for (const auto& z : iq)
        clk.signal.samples.push_back(z.real());
    clk.hop_instants_s = header.hop_instants_s;
    clk.follower_ppm = header.follower_ppm;

    const auto& ref = sc.followers.front().ref_bpf;
    const auto& an = sc.analysis;
    const double ref_delay = static_cast<double>(ref.num_taps - 1) / (2.0 * header.rate_hz);
    const FrequencyBand band{ref.center_hz - 0.5 * ref.bw_hz, ref.center_hz + 0.5 * ref.bw_hz};
    if (!(an.lp_bw_hz < header.rate_hz / (2.0 * an.decim)))
        throw ConfigError("analysis.lp_bw_hz: must be below rate_hz / (2 decim) of the recording");

    const PhaseSeries ps = demodulate_phase(clk, an.f_nominal_hz, an.lp_bw_hz, an.decim, band);
    ClockMetrics metrics = fit_frequency(ps, default_gates(ps, clk.hop_instants_s, an.gate_multiplier * ref_delay));
    metrics.transient_events = transient_metrics(ps, clk.hop_instants_s, {an.window_s, an.settle_band, ref_delay});

    RunReport report;
    report.scenario_digest = scenario_digest(sc);
    report.hop_instants_s = clk.hop_instants_s;
    FollowerResult fr;
    fr.metrics = metrics;
    const double total = clk.signal.duration_s();
    double dwell = total;
    for (std::size_t i = 1; i < clk.hop_instants_s.size(); ++i)
        dwell = std::min(dwell, clk.hop_instants_s[i] - clk.hop_instants_s[i - 1]);
    fr.disturbed_fraction = disturbed_fraction(metrics.transient_events, dwell, total);
    report.followers.push_back(fr);

    fs::create_directories(out);
    std::ofstream(out / "metrics.json") << metrics_json(report).dump(2) << '\n';
    write_phase_csv(out / "phase_0.csv", ps);
    print_summary(report);
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Frequency-hopped two-tone clock distribution simulator"};
    app.require_subcommand(1);

    std::string scenario_path;
    std::string out_dir;
    std::optional<std::uint64_t> seed;
    std::size_t threads = 0;
    bool export_iq = false;
    bool phase_csv = false;

    auto* run_cmd = app.add_subcommand("run", "Simulate one scenario");
    run_cmd->add_option("--scenario", scenario_path, "Scenario JSON (defaults when omitted)");
    run_cmd->add_option("--out", out_dir, "Output directory")->required();
    run_cmd->add_option("--seed", seed, "Override master_seed");
    run_cmd->add_option("--threads", threads, "Worker threads (default TWOTONE_THREADS or all cores)");
    run_cmd->add_flag("--export-iq", export_iq, "Also write float32 IQ recordings");
    run_cmd->add_flag("--phase-csv", phase_csv, "Also write demodulated phase series");

    std::string param;
    std::string values;
    auto* sweep_cmd = app.add_subcommand("sweep", "Run one scenario per parameter value");
    sweep_cmd->add_option("--scenario", scenario_path, "Scenario JSON (defaults when omitted)");
    sweep_cmd->add_option("--param", param, "Dotted scalar path, e.g. hops.dwell_s")->required();
    sweep_cmd->add_option("--values", values, "Comma-separated values")->required();
    sweep_cmd->add_option("--out", out_dir, "Output directory")->required();
    sweep_cmd->add_option("--threads", threads, "Worker threads");

    std::string input;
    std::string header;
    auto* analyze_cmd = app.add_subcommand("analyze", "Re-analyze a recorded clock");
    analyze_cmd->add_option("--input", input, "float32 IQ recording")->required();
    analyze_cmd->add_option("--header", header, "Sidecar JSON header")->required();
    analyze_cmd->add_option("--out", out_dir, "Output directory")->required();
    analyze_cmd->add_option("--scenario", scenario_path, "Scenario supplying analysis settings");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*run_cmd) {
            Scenario sc = scenario_or_default(scenario_path);
            if (seed)
                sc.master_seed = *seed;
            RunOptions opts;
            opts.workers = threads;
            opts.out_dir = fs::path(out_dir);
            opts.export_iq = export_iq;
            opts.phase_csv = phase_csv;
            print_summary(run(sc, opts));
        } else if (*sweep_cmd) {
            const Scenario sc = scenario_or_default(scenario_path);
            RunOptions opts;
            opts.workers = threads;
            opts.out_dir = fs::path(out_dir);
            const auto vals = parse_values(values);
            const auto reports = sweep(sc, param, vals, opts);
            for (std::size_t i = 0; i < reports.size(); ++i) {
                std::printf("%s = %g\n", param.c_str(), vals[i]);
                print_summary(reports[i]);
            }
        } else if (*analyze_cmd) {
            return analyze_file(input, header, out_dir, scenario_path);
        }
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "configuration error: %s\n", e.what());
        return 2;
    } catch (const AnalysisError& e) {
        std::fprintf(stderr, "analysis error: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
