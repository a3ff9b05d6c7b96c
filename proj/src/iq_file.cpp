// SPDX-License-Identifier: Apache-2.0
#include "twotone/iq_file.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <fstream>
#include <iomanip>

#include <json.hpp>

#include "twotone/errors.hpp"

namespace twotone {

namespace {

using nlohmann::json;

void put_f32(std::ostream& os, double v)
{
    const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(v));
    const std::array<char, 4> bytes{static_cast<char>(bits & 0xff), static_cast<char>((bits >> 8) & 0xff),
                                    static_cast<char>((bits >> 16) & 0xff), static_cast<char>((bits >> 24) & 0xff)};
    os.write(bytes.data(), 4);
}

std::ofstream open_out(const std::filesystem::path& path, std::ios::openmode mode = std::ios::out)
{
    std::ofstream os(path, mode);
    if (!os)
        throw ConfigError("cannot open " + path.string() + " for writing");
    return os;
}

template <typename T> void write_iq_impl(const std::filesystem::path& data, const SampleBuffer<T>& buffer)
{
    auto os = open_out(data, std::ios::out | std::ios::binary);
    for (const auto& s : buffer.samples) {
        if constexpr (std::is_same_v<T, cdouble>) {
            put_f32(os, s.real());
            put_f32(os, s.imag());
        } else {
            put_f32(os, s);
            put_f32(os, 0.0);
        }
    }
}

} // namespace

void write_iq(const std::filesystem::path& data, const ComplexBuffer& buffer)
{
    write_iq_impl(data, buffer);
}

void write_iq(const std::filesystem::path& data, const RealBuffer& buffer)
{
    write_iq_impl(data, buffer);
}

std::vector<cdouble> read_iq(const std::filesystem::path& data)
{
    std::ifstream is(data, std::ios::binary);
    if (!is)
        throw ConfigError("cannot open " + data.string());
    std::vector<unsigned char> raw((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    if (raw.size() % 8 != 0)
        throw ConfigError(data.string() + ": size is not a whole number of float32 I/Q pairs");
    const auto get = [&](std::size_t off) {
        const std::uint32_t bits = static_cast<std::uint32_t>(raw[off]) | (static_cast<std::uint32_t>(raw[off + 1]) << 8) |
                                   (static_cast<std::uint32_t>(raw[off + 2]) << 16) |
                                   (static_cast<std::uint32_t>(raw[off + 3]) << 24);
        return static_cast<double>(std::bit_cast<float>(bits));
    };
    std::vector<cdouble> out(raw.size() / 8);
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = {get(8 * i), get(8 * i + 4)};
    return out;
}

void write_header(const std::filesystem::path& path, const IqHeader& header)
{
    json j;
    j["rate_hz"] = header.rate_hz;
    j["sim_center_hz"] = header.sim_center_hz;
    j["start_time_s"] = header.start_time_s;
    j["kind"] = header.kind == SignalKind::Real ? "real" : "complex";
    if (header.kind == SignalKind::Real) {
        j["follower_ppm"] = header.follower_ppm;
        j["hop_instants_s"] = header.hop_instants_s;
        j["settling_samples"] = header.settling_samples;
    }
    auto os = open_out(path);
    os << j.dump(2) << '\n';
}

IqHeader read_header(const std::filesystem::path& path)
{
    std::ifstream is(path);
    if (!is)
        throw ConfigError("cannot open header " + path.string());
    json j;
    try {
        j = json::parse(is);
    } catch (const json::parse_error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    if (!j.is_object())
        throw ConfigError(path.string() + ": header must be a JSON object");
    IqHeader h;
    for (const auto& [key, value] : j.items()) {
        try {
            if (key == "rate_hz")
                h.rate_hz = value.get<double>();
            else if (key == "sim_center_hz")
                h.sim_center_hz = value.get<double>();
            else if (key == "start_time_s")
                h.start_time_s = value.get<double>();
            else if (key == "kind") {
                const auto kind = value.get<std::string>();
                if (kind == "real")
                    h.kind = SignalKind::Real;
                else if (kind == "complex")
                    h.kind = SignalKind::ComplexBaseband;
                else
                    throw ConfigError("header.kind: expected \"real\" or \"complex\", got \"" + kind + "\"");
            } else if (key == "follower_ppm")
                h.follower_ppm = value.get<double>();
            else if (key == "hop_instants_s")
                h.hop_instants_s = value.get<std::vector<double>>();
            else if (key == "settling_samples")
                h.settling_samples = value.get<std::size_t>();
            else
                throw ConfigError("header." + key + ": unknown key");
        } catch (const json::type_error& e) {
            throw ConfigError("header." + key + ": " + e.what());
        }
    }
    for (const char* required : {"rate_hz", "sim_center_hz", "start_time_s"})
        if (!j.contains(required))
            throw ConfigError(std::string("header.") + required + ": missing");
    if (!(h.rate_hz > 0.0))
        throw ConfigError("header.rate_hz: must be positive");
    return h;
}

void write_clock_csv(const std::filesystem::path& path, const RealBuffer& clock, std::size_t max_samples)
{
    auto os = open_out(path);
    os << "time_s,value\n" << std::setprecision(17);
    const std::size_t n = max_samples == 0 ? clock.size() : std::min(max_samples, clock.size());
    for (std::size_t i = 0; i < n; ++i)
        os << clock.time_at(i) << ',' << clock.samples[i] << '\n';
}

void write_phase_csv(const std::filesystem::path& path, const PhaseSeries& ps)
{
    auto os = open_out(path);
    os << "time_s,phase_rad,envelope\n" << std::setprecision(17);
    for (std::size_t i = 0; i < ps.size(); ++i)
        os << ps.times_s[i] << ',' << ps.phase_rad[i] << ',' << ps.envelope[i] << '\n';
}

void write_spectrum_csv(const std::filesystem::path& path, const Psd& psd)
{
    auto os = open_out(path);
    os << "freq_hz,psd_db\n" << std::setprecision(10);
    for (std::size_t i = 0; i < psd.freq_hz.size(); ++i)
        os << psd.freq_hz[i] << ',' << psd.power_db[i] << '\n';
}

} // namespace twotone
