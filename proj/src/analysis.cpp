// SPDX-License-Identifier: Apache-2.0
#include "twotone/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "twotone/errors.hpp"
#include "twotone/fir.hpp"

namespace twotone {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * kPi;

double median_of(std::vector<double> v)
{
    if (v.empty())
        return 0.0;
    const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
    std::nth_element(v.begin(), mid, v.end());
    if (v.size() % 2 == 1)
        return *mid;
    const double upper = *mid;
    const double lower = *std::max_element(v.begin(), mid);
    return 0.5 * (lower + upper);
}

std::size_t first_at_or_after(const std::vector<double>& times, double t)
{
    return static_cast<std::size_t>(std::lower_bound(times.begin(), times.end(), t) - times.begin());
}

} // namespace

int demod_lowpass_taps(double lp_bw_hz, double rate_hz)
{
    // Hamming transition width is about 3.3 rate / N; make it equal the cutoff.
    int n = static_cast<int>(std::ceil(3.3 * rate_hz / lp_bw_hz));
    n = std::max(n, 11);
    return n % 2 == 0 ? n + 1 : n;
}

std::vector<double> unwrap(const std::vector<double>& wrapped)
{
    std::vector<double> out(wrapped.size());
    if (wrapped.empty())
        return out;
    double turns = 0.0;
    out[0] = wrapped[0];
    for (std::size_t k = 1; k < wrapped.size(); ++k) {
        const double step = wrapped[k] - wrapped[k - 1];
        turns -= std::nearbyint(step / kTwoPi);
        out[k] = wrapped[k] + kTwoPi * turns;
    }
    return out;
}

PhaseSeries demodulate_phase(const ExtractedClock& clk, double f_nominal_hz, double lp_bw_hz, int decim,
                             FrequencyBand valid_band)
{
    const RealBuffer& x = clk.signal;
    require_valid(x, "demodulate_phase");
    if (decim < 1)
        throw ConfigError("analysis.decim: must be >= 1");
    if (!(f_nominal_hz > valid_band.lo_hz && f_nominal_hz < valid_band.hi_hz))
        throw ConfigError("analysis.f_nominal_hz: " + std::to_string(f_nominal_hz) + " Hz lies outside the band [" +
                          std::to_string(valid_band.lo_hz) + ", " + std::to_string(valid_band.hi_hz) + "] Hz");
    if (!(lp_bw_hz > 0.0) || !(lp_bw_hz < x.rate_hz / (2.0 * decim)))
        throw ConfigError("analysis.lp_bw_hz: must lie in (0, rate / (2 decim)) = (0, " +
                          std::to_string(x.rate_hz / (2.0 * decim)) + ") Hz");

    const int ntaps = demod_lowpass_taps(lp_bw_hz, x.rate_hz);
    if (static_cast<std::size_t>(ntaps) > x.size())
        throw AnalysisError("demodulate_phase: capture of " + std::to_string(x.size()) +
                            " samples is shorter than the " + std::to_string(ntaps) + "-tap demodulator low-pass");
    const FirFilter lp = design_lowpass(lp_bw_hz, ntaps, x.rate_hz);

    const double scale = 1.0 + clk.follower_ppm * 1e-6;
    const double nco_hz = f_nominal_hz * scale; // nominal frequency as seen on the global timebase

    // LP(x e^{-j phi})[n] = e^{-j phi(n)} sum_m h[m] e^{+j 2 pi nco m / rate} x[n - m],
    // so the oscillator only needs evaluating at the kept outputs.
    const std::size_t len = lp.size();
    std::vector<double> tap_re(len), tap_im(len);
    for (std::size_t m = 0; m < len; ++m) {
        const double c = nco_hz * static_cast<double>(m) / x.rate_hz;
        const double a = kTwoPi * (c - std::nearbyint(c));
        tap_re[m] = lp.taps[m] * std::cos(a);
        tap_im[m] = lp.taps[m] * std::sin(a);
    }

    const double delay = 0.5 * static_cast<double>(len - 1);
    PhaseSeries ps;
    ps.decimated_rate_hz = x.rate_hz / decim;
    ps.f_nominal_hz = f_nominal_hz;
    ps.timebase_scale = scale;
    ps.lp_half_span_s = delay / x.rate_hz * scale;
    ps.settled_from_s = (x.start_time_s + (static_cast<double>(x.settling_samples) + delay) / x.rate_hz) * scale;

    std::vector<double> wrapped;
    const std::size_t count = (x.size() - len) / static_cast<std::size_t>(decim) + 1;
    wrapped.reserve(count);
    ps.times_s.reserve(count);
    ps.envelope.reserve(count);
    for (std::size_t n = len - 1; n < x.size(); n += static_cast<std::size_t>(decim)) {
        const double* src = x.samples.data() + (n - (len - 1));
        double re = 0.0, im = 0.0;
        // Reversed index: tap m multiplies x[n - m] = src[len - 1 - m].
        for (std::size_t m = 0; m < len; ++m) {
            const double v = src[len - 1 - m];
            re += tap_re[m] * v;
            im += tap_im[m] * v;
        }
        const double t_sample = x.start_time_s + static_cast<double>(n) / x.rate_hz;
        const double c = nco_hz * t_sample;
        const cdouble z = cdouble(re, im) * std::polar(1.0, -kTwoPi * (c - std::nearbyint(c)));
        wrapped.push_back(std::arg(z));
        ps.envelope.push_back(2.0 * std::abs(z));
        ps.times_s.push_back((x.start_time_s + (static_cast<double>(n) - delay) / x.rate_hz) * scale);
    }
    ps.phase_rad = unwrap(wrapped);
    return ps;
}

std::vector<Gate> default_gates(const PhaseSeries& ps, const std::vector<double>& hop_instants_s, double hop_gate_s)
{
    std::vector<Gate> gates;
    const double begin = ps.times_s.empty() ? 0.0 : ps.times_s.front();
    gates.push_back({std::min(begin, ps.settled_from_s) - 1.0, ps.settled_from_s, Gate::Kind::Settling});
    for (double h : hop_instants_s) {
        const double local = h * ps.timebase_scale;
        gates.push_back({local - ps.lp_half_span_s, local + hop_gate_s * ps.timebase_scale + ps.lp_half_span_s,
                         Gate::Kind::Hop});
    }
    return gates;
}

ClockMetrics fit_frequency(const PhaseSeries& ps, const std::vector<Gate>& gates)
{
    const std::size_t n = ps.size();
    if (ps.phase_rad.size() != n)
        throw AnalysisError("fit_frequency: times and phases differ in length");

    std::vector<char> keep(n, 1);
    std::size_t removed_settling = 0, removed_hop = 0;
    for (const Gate& g : gates) {
        const std::size_t lo = first_at_or_after(ps.times_s, g.start_s);
        const std::size_t hi = first_at_or_after(ps.times_s, g.end_s);
        for (std::size_t k = lo; k < hi; ++k) {
            if (!keep[k])
                continue;
            keep[k] = 0;
            (g.kind == Gate::Kind::Settling ? removed_settling : removed_hop)++;
        }
    }
    const std::size_t used = n - removed_settling - removed_hop;
    if (used < 100) {
        std::ostringstream msg;
        msg << "fit_frequency: only " << used << " of " << n << " samples ungated (need 100); ";
        if (removed_hop >= removed_settling)
            msg << "hop gates remove " << removed_hop << " samples, dwell too short for the hop gate width";
        else
            msg << "settling gate removes " << removed_settling << " samples, capture shorter than filter settling";
        throw AnalysisError(msg.str());
    }

    // Centered sums keep the normal equations well conditioned.
    double t_mean = 0.0, p_mean = 0.0;
    for (std::size_t k = 0; k < n; ++k)
        if (keep[k]) {
            t_mean += ps.times_s[k];
            p_mean += ps.phase_rad[k];
        }
    t_mean /= static_cast<double>(used);
    p_mean /= static_cast<double>(used);
    double stt = 0.0, stp = 0.0;
    for (std::size_t k = 0; k < n; ++k)
        if (keep[k]) {
            const double dt = ps.times_s[k] - t_mean;
            stt += dt * dt;
            stp += dt * (ps.phase_rad[k] - p_mean);
        }
    if (!(stt > 0.0))
        throw AnalysisError("fit_frequency: ungated samples span zero time");
    const double slope = stp / stt;
    const double intercept = p_mean - slope * t_mean;

    double sse = 0.0;
    for (std::size_t k = 0; k < n; ++k)
        if (keep[k]) {
            const double r = ps.phase_rad[k] - (intercept + slope * ps.times_s[k]);
            sse += r * r;
        }

    ClockMetrics m;
    m.f_hat_hz = ps.f_nominal_hz + slope / kTwoPi;
    m.phi0_hat_rad = intercept - kTwoPi * std::floor(intercept / kTwoPi);
    m.residual_rms_rad = std::sqrt(sse / static_cast<double>(used));
    m.gated_fraction = static_cast<double>(n - used) / static_cast<double>(n);
    m.samples_used = used;
    return m;
}

std::vector<std::vector<double>> pairwise_differences(const std::vector<ClockMetrics>& metrics)
{
    if (metrics.size() < 2)
        throw AnalysisError("pairwise_differences: need at least two followers, got " +
                            std::to_string(metrics.size()));
    const std::size_t n = metrics.size();
    std::vector<std::vector<double>> d(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            d[i][j] = metrics[i].f_hat_hz - metrics[j].f_hat_hz;
    return d;
}

double max_abs_pairwise(const std::vector<std::vector<double>>& d)
{
    double worst = 0.0;
    for (const auto& row : d)
        for (double v : row)
            worst = std::max(worst, std::abs(v));
    return worst;
}

std::vector<TransientEvent> transient_metrics(const PhaseSeries& ps, const std::vector<double>& hop_instants_s,
                                              const TransientOptions& opts)
{
    std::vector<TransientEvent> events;
    if (hop_instants_s.empty() || ps.size() == 0)
        return events;
    if (!(opts.window_s > 0.0) || !(opts.settle_band > 0.0))
        throw ConfigError("transient_metrics: window_s and settle_band must be positive");

    const double scale = ps.timebase_scale;
    const double window = opts.window_s * scale;
    std::vector<double> hops;
    for (double h : hop_instants_s)
        hops.push_back(h * scale);
    std::sort(hops.begin(), hops.end());

    // Reference level: median envelope away from every hop window.
    std::vector<char> in_window(ps.size(), 0);
    for (double h : hops) {
        const std::size_t lo = first_at_or_after(ps.times_s, h);
        const std::size_t hi = first_at_or_after(ps.times_s, h + window);
        std::fill(in_window.begin() + static_cast<std::ptrdiff_t>(lo), in_window.begin() + static_cast<std::ptrdiff_t>(hi), 1);
    }
    std::vector<double> quiet;
    for (std::size_t k = 0; k < ps.size(); ++k)
        if (!in_window[k] && ps.times_s[k] >= ps.settled_from_s)
            quiet.push_back(ps.envelope[k]);
    if (quiet.empty())
        for (std::size_t k = 0; k < ps.size(); ++k)
            if (ps.times_s[k] >= ps.settled_from_s)
                quiet.push_back(ps.envelope[k]);
    const double ref = median_of(std::move(quiet));
    if (!(ref > 0.0))
        throw AnalysisError("transient_metrics: envelope reference level is zero");

    const double lo_band = ref * (1.0 - opts.settle_band);
    const double hi_band = ref * (1.0 + opts.settle_band);
    const auto in_band = [&](std::size_t k) { return ps.envelope[k] >= lo_band && ps.envelope[k] <= hi_band; };
    const auto hold = static_cast<std::size_t>(std::ceil(opts.hold_s * scale * ps.decimated_rate_hz - 1e-9));
    const double t_end = ps.times_s.back();

    for (std::size_t i = 0; i < hops.size(); ++i) {
        const double h = hops[i];
        const double next = i + 1 < hops.size() ? hops[i + 1] : std::max(t_end, h + window);
        const double dwell = next - h;

        TransientEvent ev;
        ev.hop_time_s = h / scale;
        ev.flagged = dwell < window;

        const std::size_t w_lo = first_at_or_after(ps.times_s, h);
        const std::size_t w_hi = first_at_or_after(ps.times_s, std::min(h + window, next));
        const std::size_t stop = first_at_or_after(ps.times_s, next);
        if (w_lo >= w_hi) {
            events.push_back(ev);
            continue;
        }

        double lowest = ps.envelope[w_lo];
        std::size_t first_out = w_hi;
        for (std::size_t k = w_lo; k < w_hi; ++k) {
            lowest = std::min(lowest, ps.envelope[k]);
            if (first_out == w_hi && !in_band(k))
                first_out = k;
        }
        ev.dip_depth = std::clamp(1.0 - lowest / ref, 0.0, 1.0);

        if (first_out < w_hi) {
            ev.disturbed = true;
            // First in-band sample after the excursion that stays in band for hold samples.
            std::size_t settled = stop;
            std::size_t run = 0;
            for (std::size_t k = first_out; k < stop; ++k) {
                if (in_band(k)) {
                    if (++run > hold) {
                        settled = k - hold;
                        break;
                    }
                } else {
                    run = 0;
                }
            }
            if (settled < stop)
                ev.settling_time_s = (ps.times_s[settled] - h) / scale;
            else
                ev.settling_time_s = dwell / scale;
        }
        if (ev.flagged)
            ev.settling_time_s = dwell / scale;
        events.push_back(ev);
    }
    return events;
}

double disturbed_fraction(const std::vector<TransientEvent>& events, double dwell_s, double total_s)
{
    if (!(total_s > 0.0))
        throw ConfigError("disturbed_fraction: total duration must be positive");
    double sum = 0.0;
    for (const auto& ev : events)
        sum += dwell_s > 0.0 ? std::min(ev.settling_time_s, dwell_s) : ev.settling_time_s;
    return std::clamp(sum / total_s, 0.0, 1.0);
}

} // namespace twotone
