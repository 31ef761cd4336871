#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include "emt/error.hpp"
#include "emt/filter.hpp"

using namespace emt;

namespace {

constexpr double kFs = 500.0;

// Analytic squared magnitude of the pre-warped Butterworth bandpass: the
// bilinear design matches the prototype response at warped frequencies.
double analytic_bandpass_pow(double f, int order, double lo, double hi, double fs) {
    const double w = std::tan(M_PI * f / fs);
    const double wl = std::tan(M_PI * lo / fs);
    const double wh = std::tan(M_PI * hi / fs);
    const double x = (w * w - wl * wh) / ((wh - wl) * w);
    return 1.0 / (1.0 + std::pow(x, 2.0 * (order / 2)));
}

double analytic_lowpass_pow(double f, int order, double cut, double fs) {
    const double w = std::tan(M_PI * f / fs);
    const double wc = std::tan(M_PI * cut / fs);
    return 1.0 / (1.0 + std::pow(w / wc, 2.0 * order));
}

// |H(e^{j 2 pi f / fs})|^2 evaluated directly from the cascade coefficients
double sos_response_pow(const SosFilter& filt, double f, double fs) {
    const std::complex<double> z = std::polar(1.0, -2.0 * M_PI * f / fs);
    std::complex<double> h = 1.0;
    for (const Biquad& s : filt.sections)
        h *= (s.b0 + s.b1 * z + s.b2 * z * z) / (1.0 + s.a1 * z + s.a2 * z * z);
    return std::norm(h);
}

std::vector<double> sine(double f, double fs, size_t n) {
    std::vector<double> x(n);
    for (size_t i = 0; i < n; ++i) x[i] = std::sin(2.0 * M_PI * f * (double)i / fs);
    return x;
}

// Least-squares amplitude of the f-component over a steady mid-section; exact
// for a pure sinusoid even over a non-integer number of cycles.
double fitted_amplitude(const std::vector<double>& y, double f, double fs,
                        size_t lo, size_t hi) {
    double cc = 0, ss = 0, cs = 0, yc = 0, ys = 0;
    for (size_t i = lo; i < hi; ++i) {
        const double c = std::cos(2.0 * M_PI * f * (double)i / fs);
        const double s = std::sin(2.0 * M_PI * f * (double)i / fs);
        cc += c * c;
        ss += s * s;
        cs += c * s;
        yc += y[i] * c;
        ys += y[i] * s;
    }
    const double det = cc * ss - cs * cs;
    const double a = (yc * ss - ys * cs) / det;
    const double b = (ys * cc - yc * cs) / det;
    return std::hypot(a, b);
}

} // namespace

TEST_CASE("bandpass cascade response equals the analytic warped prototype") {
    const SosFilter f = design_bandpass(4, 15.0, 225.0, kFs);
    for (double freq = 2.0; freq < 249.0; freq += 3.7) {
        const double got = sos_response_pow(f, freq, kFs);
        const double want = analytic_bandpass_pow(freq, 4, 15.0, 225.0, kFs);
        CHECK(got == doctest::Approx(want).epsilon(1e-6));
    }
    // exact half-power at the prewarped cutoffs
    CHECK(sos_response_pow(f, 15.0, kFs) == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(sos_response_pow(f, 225.0, kFs) == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("lowpass cascade response equals the analytic warped prototype") {
    const SosFilter f = design_lowpass(4, 5.0, kFs);
    for (double freq : {0.5, 1.0, 2.0, 3.5, 5.0, 7.0, 10.0, 20.0, 50.0}) {
        const double got = sos_response_pow(f, freq, kFs);
        const double want = analytic_lowpass_pow(freq, 4, 5.0, kFs);
        CHECK(got == doctest::Approx(want).epsilon(1e-6));
    }
    CHECK(sos_response_pow(f, 5.0, kFs) == doctest::Approx(0.5).epsilon(1e-9));
    // unit gain at DC
    double dc = 1.0;
    for (const Biquad& s : f.sections)
        dc *= (s.b0 + s.b1 + s.b2) / (1.0 + s.a1 + s.a2);
    CHECK(dc == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("forward-backward gain tracks the squared analytic response at 20 tones") {
    const SosFilter f = design_bandpass(4, 15.0, 225.0, kFs);
    const double freqs[20] = {8,   10,  12,  15,  18,  25,  35,  50,  70,  90,
                              110, 130, 150, 170, 190, 205, 215, 225, 232, 240};
    const size_t n = 4096;
    for (double freq : freqs) {
        const std::vector<double> y = filtfilt(f, sine(freq, kFs, n));
        const double amp = fitted_amplitude(y, freq, kFs, n / 4, 3 * n / 4);
        // two passes of |H| give the squared magnitude response
        const double want = analytic_bandpass_pow(freq, 4, 15.0, 225.0, kFs);
        CHECK(std::fabs(amp - want) <= 0.01 * want + 1e-6);
    }
}

TEST_CASE("DC is rejected below 1e-2") {
    const SosFilter f = design_bandpass(4, 15.0, 225.0, kFs);
    const std::vector<double> y = filtfilt(f, std::vector<double>(2000, 1.0));
    double worst = 0.0;
    for (double v : y) worst = std::max(worst, std::fabs(v));
    CHECK(worst < 0.01);
}

TEST_CASE("filtfilt commutes with time reversal") {
    std::vector<double> x(1024);
    for (size_t i = 0; i < x.size(); ++i)
        x[i] = std::sin(0.07 * (double)i) + 0.4 * std::cos(0.31 * (double)i + 1.0);
    const SosFilter f = design_bandpass(4, 15.0, 225.0, kFs);

    std::vector<double> xr(x.rbegin(), x.rend());
    std::vector<double> a = filtfilt(f, x);
    std::vector<double> b = filtfilt(f, xr);
    std::reverse(b.begin(), b.end());
    // the two pass orders only disagree inside the edge transients
    for (size_t i = 300; i + 300 < a.size(); ++i)
        CHECK(std::fabs(a[i] - b[i]) < 1e-4);
}

TEST_CASE("filtfilt introduces no phase lag") {
    // a symmetric pulse stays centered after zero-phase filtering
    const size_t n = 1001, mid = 500;
    std::vector<double> x(n, 0.0);
    for (size_t i = 0; i < n; ++i) {
        const double d = (double)i - (double)mid;
        x[i] = std::exp(-d * d / (2.0 * 40.0 * 40.0));
    }
    const SosFilter f = design_lowpass(4, 5.0, kFs);
    const std::vector<double> y = filtfilt(f, x);
    const size_t peak = (size_t)(std::max_element(y.begin(), y.end()) - y.begin());
    CHECK(peak == mid);
    for (size_t k = 1; k < 300; ++k) // symmetric about the peak
        CHECK(y[mid - k] == doctest::Approx(y[mid + k]).epsilon(1e-6));
}

TEST_CASE("single-pass sosfilt matches direct biquad recursion") {
    const SosFilter f = design_bandpass(4, 15.0, 225.0, kFs);
    std::vector<double> x(64);
    for (size_t i = 0; i < x.size(); ++i) x[i] = std::sin(0.9 * (double)i);

    // reference: cascade of direct-form transposed II biquads
    std::vector<double> ref = x;
    for (const Biquad& s : f.sections) {
        double z1 = 0.0, z2 = 0.0;
        for (double& v : ref) {
            const double in = v;
            v = s.b0 * in + z1;
            z1 = s.b1 * in - s.a1 * v + z2;
            z2 = s.b2 * in - s.a2 * v;
        }
    }
    const std::vector<double> got = sosfilt(f, x);
    for (size_t i = 0; i < x.size(); ++i)
        CHECK(got[i] == doctest::Approx(ref[i]).epsilon(1e-12));
}

TEST_CASE("sosfilt_zi reproduces steady state for a step input") {
    const SosFilter f = design_lowpass(4, 5.0, kFs);
    std::vector<double> zi = sosfilt_zi(f);
    const std::vector<double> y = sosfilt(f, std::vector<double>(100, 1.0), &zi);
    for (double v : y) CHECK(v == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("design rejects bad parameters") {
    CHECK_THROWS_AS(design_bandpass(3, 15.0, 225.0, kFs), Error);
    CHECK_THROWS_AS(design_bandpass(0, 15.0, 225.0, kFs), Error);
    CHECK_THROWS_AS(design_bandpass(4, 225.0, 15.0, kFs), Error);
    CHECK_THROWS_AS(design_bandpass(4, 15.0, 250.0, kFs), Error);
    CHECK_THROWS_AS(design_lowpass(4, 0.0, kFs), Error);
    try {
        design_bandpass(3, 15.0, 225.0, kFs);
    } catch (const Error& e) {
        CHECK(e.category() == ErrorCategory::Parameter);
    }
}

TEST_CASE("filtfilt refuses signals shorter than the padding") {
    const SosFilter f = design_bandpass(4, 15.0, 225.0, kFs);
    REQUIRE(f.padlen() == 3 * (4 + 1));
    try {
        filtfilt(f, std::vector<double>(10, 0.0));
        FAIL("expected length error");
    } catch (const Error& e) {
        CHECK(e.category() == ErrorCategory::Length);
    }
}
