// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <fstream>

#include "twotone/errors.hpp"
#include "twotone/iq_file.hpp"
#include "twotone/spectrum.hpp"

using namespace twotone;
namespace fs = std::filesystem;

TEST_CASE("float32 IQ round trip and byte layout")
{
    const auto dir = fs::temp_directory_path() / "twotone_iq_test";
    fs::create_directories(dir);
    ComplexBuffer b;
    b.rate_hz = 4e7;
    b.samples = {{1.0, -2.0}, {0.5, 0.25}, {-3.0, 1e-3}};
    write_iq(dir / "x.iq", b);
    CHECK(fs::file_size(dir / "x.iq") == 3 * 8);
    std::ifstream is(dir / "x.iq", std::ios::binary);
    unsigned char bytes[4];
    is.read(reinterpret_cast<char*>(bytes), 4);
    // 1.0f little-endian
    CHECK(bytes[0] == 0x00);
    CHECK(bytes[1] == 0x00);
    CHECK(bytes[2] == 0x80);
    CHECK(bytes[3] == 0x3F);
    const auto back = read_iq(dir / "x.iq");
    REQUIRE(back.size() == 3);
    for (std::size_t k = 0; k < 3; ++k) {
        CHECK(back[k].real() == static_cast<double>(static_cast<float>(b.samples[k].real())));
        CHECK(back[k].imag() == static_cast<double>(static_cast<float>(b.samples[k].imag())));
    }

    RealBuffer r;
    r.rate_hz = 1e6;
    r.samples = {0.5, -0.5};
    write_iq(dir / "r.iq", r);
    const auto rb = read_iq(dir / "r.iq");
    CHECK(rb[1] == cdouble(-0.5, 0.0));

    IqHeader h;
    h.rate_hz = 4e7;
    h.sim_center_hz = 9e8;
    h.start_time_s = 0.25;
    h.kind = SignalKind::Real;
    h.follower_ppm = -2.0;
    h.hop_instants_s = {0.1, 0.2};
    h.settling_samples = 300;
    write_header(dir / "h.json", h);
    const auto hb = read_header(dir / "h.json");
    CHECK(hb.rate_hz == h.rate_hz);
    CHECK(hb.start_time_s == h.start_time_s);
    CHECK(hb.kind == SignalKind::Real);
    CHECK(hb.follower_ppm == -2.0);
    CHECK(hb.hop_instants_s == h.hop_instants_s);
    CHECK(hb.settling_samples == 300);

    std::ofstream(dir / "bad.json") << R"({"rate_hz": 1, "sim_center_hz": 2, "start_time_s": 0, "extra": 1})";
    CHECK_THROWS_AS(read_header(dir / "bad.json"), ConfigError);
    std::ofstream(dir / "missing.json") << R"({"rate_hz": 1})";
    CHECK_THROWS_AS(read_header(dir / "missing.json"), ConfigError);
    fs::remove_all(dir);
}

TEST_CASE("welch spectrum of a tone")
{
    const double rate = 4e7;
    std::vector<double> x(1 << 18);
    for (std::size_t n = 0; n < x.size(); ++n)
        x[n] = std::sqrt(2.0) * std::cos(2.0 * 3.14159265358979323846 * 1e7 * static_cast<double>(n) / rate);
    const auto psd = welch_psd(x, rate);
    CHECK(psd.segment_length == 32768);
    CHECK(psd.freq_hz.size() == psd.segment_length / 2 + 1);
    std::size_t peak = 0;
    for (std::size_t k = 0; k < psd.power_db.size(); ++k)
        if (psd.power_db[k] > psd.power_db[peak])
            peak = k;
    CHECK(psd.freq_hz[peak] == doctest::Approx(1e7));
    // Total power (unit) recovered from the one-sided density.
    double total = 0.0;
    const double df = psd.freq_hz[1] - psd.freq_hz[0];
    for (double p : psd.power_db)
        total += std::pow(10.0, p / 10.0) * df;
    CHECK(total == doctest::Approx(1.0).epsilon(0.01));
}
