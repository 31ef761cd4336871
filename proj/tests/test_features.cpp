#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "emt/error.hpp"
#include "emt/features.hpp"
#include "emt/manifest.hpp"
#include "emt/rng.hpp"
#include "emt/types.hpp"

using namespace emt;

namespace {

// naive single-pass references, written independently of the library
double naive_rms(const std::vector<double>& w) {
    double s = 0.0;
    for (double v : w) s += v * v;
    return std::sqrt(s / (double)w.size());
}

double naive_wl(const std::vector<double>& w) {
    double s = 0.0;
    for (size_t i = 0; i + 1 < w.size(); ++i) s += std::fabs(w[i + 1] - w[i]);
    return s;
}

int naive_ssc(const std::vector<double>& w, double thr) {
    int c = 0;
    for (size_t i = 1; i + 1 < w.size(); ++i) {
        const double a = w[i] - w[i - 1], b = w[i + 1] - w[i];
        if (-a * b > thr) ++c;
    }
    return c;
}

EmgRecording random_recording(Rng& rng, size_t n, double scale = 1.0) {
    EmgRecording rec;
    rec.channels = default_channel_names();
    rec.samples = Mat(n, kNumChannels);
    for (double& v : rec.samples.a) v = scale * rng.normal();
    rec.condition = {1.10, Movement::Grasping};
    return rec;
}

} // namespace

TEST_CASE("window plan matches the documented layout") {
    RunManifest m; // window_ms 100, overlap 0.5, fs 500 -> L 50, hop 25
    const WindowPlan plan = plan_windows(5000, m);
    CHECK(plan.window_len == 50);
    CHECK(plan.hop == 25);
    CHECK(plan.n_windows == 199);

    CHECK(plan_windows(50, m).n_windows == 1);
    CHECK_THROWS_AS(plan_windows(49, m), Error);
    try {
        plan_windows(49, m);
    } catch (const Error& e) {
        CHECK(e.category() == ErrorCategory::Length);
    }
}

TEST_CASE("time-domain feature examples") {
    CHECK(rms({3.0, -4.0}) == doctest::Approx(3.5355339).epsilon(1e-7));
    CHECK(waveform_length({0.0, 1.0, 0.0, 1.0}) == 3.0);
    CHECK(slope_sign_changes({0.0, 1.0, 0.0, 1.0, 0.0}, 0.0) == 3);

    // a monotone ramp's waveform length is exactly its total rise
    std::vector<double> ramp(64);
    for (size_t i = 0; i < ramp.size(); ++i) ramp[i] = (double)i / (double)(ramp.size() - 1);
    CHECK(waveform_length(ramp) == 1.0);
    CHECK(slope_sign_changes(ramp, kSscThreshold) == 0);
}

TEST_CASE("feature primitives match naive reimplementations on 1000 windows") {
    Rng rng(11);
    for (int t = 0; t < 1000; ++t) {
        const size_t len = 3 + rng.below(120);
        std::vector<double> w(len);
        for (double& v : w) v = 2.0 * rng.normal();
        CHECK(std::fabs(rms(w) - naive_rms(w)) <= 1e-12 * std::max(1.0, naive_rms(w)));
        CHECK(std::fabs(waveform_length(w) - naive_wl(w)) <=
              1e-12 * std::max(1.0, naive_wl(w)));
        CHECK(slope_sign_changes(w, kSscThreshold) == naive_ssc(w, kSscThreshold));
    }
}

TEST_CASE("feature primitive length validation") {
    CHECK_THROWS_AS(rms({}), Error);
    CHECK_THROWS_AS(waveform_length({1.0}), Error);
    CHECK_THROWS_AS(slope_sign_changes({1.0, 2.0}, 0.0), Error);
}

TEST_CASE("full feature matrix has the documented column accounting") {
    Rng rng(3);
    RunManifest m;
    const EmgRecording proc = random_recording(rng, 500);
    const EmgRecording band = random_recording(rng, 500);
    const FeatureMatrix fm = extract_features(proc, band, m, 4);

    // 8 channels x (50 tp + rms + wl + ssc + 4 bp + 8 mwt) = 520
    REQUIRE(fm.n_cols() == 520);
    CHECK(fm.n_rows() == plan_windows(500, m).n_windows);
    CHECK(fm.condition.size() == fm.n_rows());
    CHECK(fm.segment.front() == 4);
    for (const Condition& c : fm.condition) CHECK(c == proc.condition);

    // per-channel block layout and names
    CHECK(fm.columns[0].name() == "ch1_tp0");
    CHECK(fm.columns[17].name() == "ch1_tp17");
    CHECK(fm.columns[50].name() == "ch1_rms");
    CHECK(fm.columns[51].name() == "ch1_wl");
    CHECK(fm.columns[52].name() == "ch1_ssc");
    CHECK(fm.columns[53].name() == "ch1_bp0");
    CHECK(fm.columns[55].name() == "ch1_bp2");
    CHECK(fm.columns[57].name() == "ch1_mwt50");
    CHECK(fm.columns[61].name() == "ch1_mwt150");
    CHECK(fm.columns[65].name() == "ch2_tp0");
    CHECK(fm.columns[519].name() == "ch8_mwt225");

    // MAV is intentionally not part of the set
    for (const FeatureColumn& c : fm.columns) CHECK(c.feature != "mav");
}

TEST_CASE("time-points-only configuration yields 400 columns") {
    Rng rng(5);
    RunManifest m;
    m.use_rms = m.use_wl = m.use_ssc = m.use_band_power = m.use_morlet = false;
    const EmgRecording proc = random_recording(rng, 200);
    const FeatureMatrix fm = extract_features(proc, proc, m);
    REQUIRE(fm.n_cols() == 400); // 8 x 50 raw samples
    for (const FeatureColumn& c : fm.columns) CHECK(c.feature == "tp");
}

TEST_CASE("time-domain features read the processed tap, spectral the band-passed tap") {
    Rng rng(9);
    RunManifest m;
    const EmgRecording proc = random_recording(rng, 250, 0.7);
    const EmgRecording band = random_recording(rng, 250, 1.3);
    const FeatureMatrix fm = extract_features(proc, band, m);
    const WindowPlan plan = plan_windows(250, m);

    for (size_t w = 0; w < fm.n_rows(); ++w) {
        std::vector<double> wp(plan.window_len), wb(plan.window_len);
        for (int i = 0; i < plan.window_len; ++i) {
            wp[i] = proc.samples.at(w * plan.hop + i, 0);
            wb[i] = band.samples.at(w * plan.hop + i, 0);
        }
        // tp and rms come from the processed signal ...
        CHECK(fm.rows.at(w, 3) == wp[3]);
        CHECK(fm.rows.at(w, 50) == doctest::Approx(naive_rms(wp)).epsilon(1e-12));

        // ... band powers from the band-passed tap (recompute both ways)
        const std::vector<double> bp_band =
            multitaper_band_power(wb, default_bands(m), MultitaperSpec{2.5, 4, m.sample_rate_hz});
        const std::vector<double> bp_proc =
            multitaper_band_power(wp, default_bands(m), MultitaperSpec{2.5, 4, m.sample_rate_hz});
        CHECK(fm.rows.at(w, 53) == doctest::Approx(bp_band[0]).epsilon(1e-9));
        CHECK(fm.rows.at(w, 53) != bp_proc[0]);
    }
}

TEST_CASE("append stacks rows and validate rejects inconsistencies") {
    Rng rng(21);
    RunManifest m;
    const EmgRecording a = random_recording(rng, 150);
    EmgRecording b = random_recording(rng, 200);
    b.condition = {1.85, Movement::Complex};

    FeatureMatrix fa = extract_features(a, a, m, 0);
    const FeatureMatrix fb = extract_features(b, b, m, 1);
    const size_t ra = fa.n_rows(), rb = fb.n_rows();
    fa.append(fb);
    REQUIRE(fa.n_rows() == ra + rb);
    CHECK(fa.segment[ra - 1] == 0);
    CHECK(fa.segment[ra] == 1);
    CHECK(fa.condition[ra] == b.condition);
    CHECK(fa.rows.at(ra, 7) == fb.rows.at(0, 7));
    fa.validate();

    FeatureMatrix broken = fa;
    broken.segment.pop_back();
    CHECK_THROWS_AS(broken.validate(), Error);
    FeatureMatrix nan_fm = fa;
    nan_fm.rows.at(0, 0) = std::nan("");
    CHECK_THROWS_AS(nan_fm.validate(), Error);
}

TEST_CASE("extract_features validates tap alignment") {
    Rng rng(13);
    RunManifest m;
    const EmgRecording proc = random_recording(rng, 150);
    const EmgRecording band = random_recording(rng, 151);
    CHECK_THROWS_AS(extract_features(proc, band, m), Error);
    try {
        extract_features(proc, band, m);
    } catch (const Error& e) {
        CHECK(e.category() == ErrorCategory::Shape);
    }
}
