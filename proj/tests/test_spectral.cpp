#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "emt/error.hpp"
#include "emt/rng.hpp"
#include "emt/spectral.hpp"

using namespace emt;

namespace {

constexpr double kPi = 3.14159265358979323846;

std::vector<double> tone(double f, double fs, size_t n, double phase = 0.0) {
    std::vector<double> w(n);
    for (size_t i = 0; i < n; ++i) w[i] = std::sin(2.0 * kPi * f * (double)i / fs + phase);
    return w;
}

double population_variance(const std::vector<double>& w) {
    double mean = std::accumulate(w.begin(), w.end(), 0.0) / (double)w.size();
    double acc = 0.0;
    for (double v : w) acc += (v - mean) * (v - mean);
    return acc / (double)w.size();
}

// Full-Nyquist partition so the band powers must add up to total power.
std::vector<Band> quarter_bands(double fs) {
    const double q = fs / 8.0;
    return {{0.0, q}, {q, 2 * q}, {2 * q, 3 * q}, {3 * q, fs / 2}};
}

} // namespace

TEST_CASE("dpss tapers are orthonormal with descending concentrations") {
    const int n = 50, k = 4;
    const DpssTapers tap = dpss(n, 2.5, k);
    REQUIRE(tap.tapers.rows == (size_t)k);
    REQUIRE(tap.tapers.cols == (size_t)n);
    REQUIRE(tap.concentrations.size() == (size_t)k);

    for (int a = 0; a < k; ++a) {
        for (int b = 0; b < k; ++b) {
            double dot = 0.0;
            for (int i = 0; i < n; ++i) dot += tap.tapers.at(a, i) * tap.tapers.at(b, i);
            CHECK(std::fabs(dot - (a == b ? 1.0 : 0.0)) < 1e-9);
        }
    }
    for (int a = 0; a + 1 < k; ++a) CHECK(tap.concentrations[a] >= tap.concentrations[a + 1]);
    CHECK(tap.concentrations.front() > 0.99);
    CHECK(tap.concentrations.back() > 0.0);
    CHECK(tap.concentrations.front() <= 1.0 + 1e-12);
}

TEST_CASE("dpss rejects bad parameters") {
    CHECK_THROWS_AS(dpss(50, 2.5, 0), Error);
    CHECK_THROWS_AS(dpss(50, 2.5, 51), Error);
    CHECK_THROWS_AS(dpss(50, 0.0, 4), Error);
    CHECK_THROWS_AS(dpss(50, 25.0, 4), Error);
    try {
        dpss(50, 2.5, 0);
    } catch (const Error& e) {
        CHECK(e.category() == ErrorCategory::Parameter);
    }
}

TEST_CASE("multitaper band powers satisfy Parseval on white noise") {
    Rng rng(42);
    const MultitaperSpec spec{2.5, 4, 500.0};
    const std::vector<Band> bands = quarter_bands(spec.fs);
    double ratio_sum = 0.0;
    for (int d = 0; d < 100; ++d) {
        std::vector<double> w(50);
        for (double& v : w) v = rng.normal();
        const double var = population_variance(w);
        const std::vector<double> bp = multitaper_band_power(w, bands, spec);
        const double total = std::accumulate(bp.begin(), bp.end(), 0.0);
        const double ratio = total / var;
        // single 50-sample windows carry real estimator spread; the 20% bound
        // applies to the Monte Carlo aggregate below
        CHECK(ratio > 0.60);
        CHECK(ratio < 1.50);
        ratio_sum += ratio;
    }
    CHECK(std::fabs(ratio_sum / 100.0 - 1.0) < 0.20);
    CHECK(std::fabs(ratio_sum / 100.0 - 1.0) < 0.05); // typically ~1%
}

TEST_CASE("pure tone concentrates in its band and PSD bin") {
    const MultitaperSpec spec{2.5, 4, 500.0};
    const std::vector<double> w = tone(100.0, spec.fs, 50);

    const std::vector<double> bp = multitaper_band_power(w, quarter_bands(spec.fs), spec);
    const double total = std::accumulate(bp.begin(), bp.end(), 0.0);
    REQUIRE(total > 0.0);
    CHECK(bp[1] / total > 0.90); // 100 Hz lies in [62.5, 125)

    // bins are j*fs/n = 10 Hz apart; the tone sits exactly on bin 10
    const std::vector<double> psd = multitaper_psd(w, spec);
    REQUIRE(psd.size() == 26);
    const size_t peak = (size_t)(std::max_element(psd.begin(), psd.end()) - psd.begin());
    CHECK(peak == 10);
}

TEST_CASE("zero window has zero band power") {
    const std::vector<double> w(50, 0.0);
    const MultitaperSpec spec{2.5, 4, 500.0};
    for (double v : multitaper_band_power(w, quarter_bands(spec.fs), spec)) CHECK(v == 0.0);
}

TEST_CASE("band and length validation") {
    const MultitaperSpec spec{2.5, 4, 500.0};
    const std::vector<double> w(50, 1.0);
    CHECK_THROWS_AS(multitaper_band_power(w, {{100.0, 300.0}}, spec), Error); // over Nyquist
    CHECK_THROWS_AS(multitaper_band_power(w, {{-5.0, 50.0}}, spec), Error);
    CHECK_THROWS_AS(multitaper_band_power(w, {{60.0, 60.0}}, spec), Error); // empty band
    try {
        multitaper_band_power(w, {{100.0, 300.0}}, spec);
    } catch (const Error& e) {
        CHECK(e.category() == ErrorCategory::Parameter);
    }

    CHECK_THROWS_AS(multitaper_psd({1.0, 2.0, 3.0}, spec), Error);
    try {
        multitaper_psd({1.0, 2.0, 3.0}, spec);
    } catch (const Error& e) {
        CHECK(e.category() == ErrorCategory::Length);
    }
    Mat short_windows(2, 3);
    CHECK_THROWS_AS(multitaper_band_power_batch(short_windows, quarter_bands(spec.fs), spec),
                    Error);
}

TEST_CASE("default morlet cycle counts obey the window rule") {
    const std::vector<double> freqs = default_morlet_freqs();
    REQUIRE(freqs == std::vector<double>{50, 75, 100, 125, 150, 175, 200, 225});

    const std::vector<int> cycles = morlet_default_cycles(freqs, 500.0, 50);
    REQUIRE(cycles.size() == freqs.size());
    CHECK(cycles == std::vector<int>{5, 7, 7, 7, 7, 7, 7, 7});
    for (size_t i = 0; i < freqs.size(); ++i)
        CHECK(cycles[i] * 500.0 / freqs[i] <= 50.0 + 1e-9); // fits in the window

    // cap binds only where the window would allow more cycles
    const std::vector<int> tall = morlet_default_cycles(freqs, 500.0, 50, 10);
    CHECK(tall == std::vector<int>{5, 7, 10, 10, 10, 10, 10, 10});

    CHECK_THROWS_AS(morlet_default_cycles({2.0}, 500.0, 50), Error); // < one cycle fits
}

TEST_CASE("morlet power peaks at the injected tone for every default frequency") {
    const double fs = 500.0;
    const std::vector<double> freqs = default_morlet_freqs();
    const std::vector<int> cycles = morlet_default_cycles(freqs, fs, 50);
    for (size_t q = 0; q < freqs.size(); ++q) {
        const std::vector<double> w = tone(freqs[q], fs, 50, 0.4);
        const std::vector<double> p = morlet_power(w, freqs, cycles, fs);
        REQUIRE(p.size() == freqs.size());
        const size_t peak = (size_t)(std::max_element(p.begin(), p.end()) - p.begin());
        CHECK(peak == q);
    }
}

TEST_CASE("morlet validation errors") {
    const std::vector<double> w(50, 0.5);
    // 6 cycles of 50 Hz need 60 samples; only 50 available
    CHECK_THROWS_AS(morlet_power(w, {50.0}, {6}, 500.0), Error);
    try {
        morlet_power(w, {50.0}, {6}, 500.0);
    } catch (const Error& e) {
        CHECK(e.category() == ErrorCategory::Parameter);
        CHECK(std::string(e.what()).find("cycle rule") != std::string::npos);
        CHECK(std::string(e.what()).find("50") != std::string::npos);
    }

    CHECK_THROWS_AS(morlet_power(w, {50.0, 100.0}, {5}, 500.0), Error);
    try {
        morlet_power(w, {50.0, 100.0}, {5}, 500.0);
    } catch (const Error& e) {
        CHECK(e.category() == ErrorCategory::Shape);
    }

    CHECK_THROWS_AS(morlet_power(w, {260.0}, {5}, 500.0), Error); // over Nyquist
    CHECK_THROWS_AS(morlet_power(w, {0.0}, {1}, 500.0), Error);
}

TEST_CASE("batched spectral ops match the per-window versions") {
    Rng rng(7);
    const MultitaperSpec spec{2.5, 4, 500.0};
    const std::vector<Band> bands = quarter_bands(spec.fs);
    const std::vector<double> freqs = default_morlet_freqs();
    const std::vector<int> cycles = morlet_default_cycles(freqs, spec.fs, 50);

    const size_t n_windows = 20, len = 50;
    Mat windows(n_windows, len);
    for (size_t r = 0; r < n_windows; ++r)
        for (size_t i = 0; i < len; ++i) windows.at(r, i) = rng.normal();

    const Mat mt = multitaper_band_power_batch(windows, bands, spec);
    const Mat mw = morlet_power_batch(windows, freqs, cycles, spec.fs);
    REQUIRE(mt.rows == n_windows);
    REQUIRE(mt.cols == bands.size());
    REQUIRE(mw.rows == n_windows);
    REQUIRE(mw.cols == freqs.size());

    for (size_t r = 0; r < n_windows; ++r) {
        std::vector<double> w(len);
        for (size_t i = 0; i < len; ++i) w[i] = windows.at(r, i);
        const std::vector<double> bp = multitaper_band_power(w, bands, spec);
        const std::vector<double> mp = morlet_power(w, freqs, cycles, spec.fs);
        for (size_t b = 0; b < bands.size(); ++b)
            CHECK(std::fabs(mt.at(r, b) - bp[b]) <= 1e-10 * std::max(1.0, std::fabs(bp[b])));
        for (size_t q = 0; q < freqs.size(); ++q)
            CHECK(std::fabs(mw.at(r, q) - mp[q]) <= 1e-10 * std::max(1.0, std::fabs(mp[q])));
    }
}
