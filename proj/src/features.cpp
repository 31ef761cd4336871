#include "emt/features.hpp"

#include <cmath>

#include "emt/csv.hpp"
#include "emt/error.hpp"
#include "emt/preprocess.hpp"

namespace emt {

WindowPlan plan_windows(size_t n_samples, const RunManifest& m) {
    WindowPlan plan;
    plan.window_len = m.window_len_samples();
    plan.hop = m.hop_samples();
    if (plan.window_len < 2 || plan.hop < 1)
        fail(ErrorCategory::Config, "degenerate window plan");
    if (n_samples < static_cast<size_t>(plan.window_len))
        fail(ErrorCategory::Length,
             "signal has " + std::to_string(n_samples) + " samples, window needs " +
                 std::to_string(plan.window_len));
    plan.n_windows = (n_samples - plan.window_len) / plan.hop + 1;
    return plan;
}

std::string FeatureColumn::name() const {
    if (feature == "tp") return channel + "_tp" + std::to_string(static_cast<int>(param));
    if (feature == "bp") return channel + "_bp" + std::to_string(static_cast<int>(param));
    if (feature == "mwt") return channel + "_mwt" + fmt_double(param);
    return channel + "_" + feature;
}

void FeatureMatrix::append(const FeatureMatrix& other) {
    if (columns.empty()) {
        *this = other;
        return;
    }
    if (other.columns.size() != columns.size())
        fail(ErrorCategory::Shape, "FeatureMatrix::append: column mismatch");
    rows.a.insert(rows.a.end(), other.rows.a.begin(), other.rows.a.end());
    rows.rows += other.rows.rows;
    condition.insert(condition.end(), other.condition.begin(), other.condition.end());
    segment.insert(segment.end(), other.segment.begin(), other.segment.end());
}

void FeatureMatrix::validate() const {
    if (condition.size() != rows.rows || segment.size() != rows.rows)
        fail(ErrorCategory::Shape, "FeatureMatrix: per-row metadata mismatch");
    if (columns.size() != rows.cols)
        fail(ErrorCategory::Shape, "FeatureMatrix: column descriptor mismatch");
    for (double v : rows.a)
        if (!std::isfinite(v)) fail(ErrorCategory::Data, "FeatureMatrix: non-finite value");
}

double rms(const std::vector<double>& window) {
    if (window.empty()) fail(ErrorCategory::Length, "rms: empty window");
    double acc = 0.0;
    for (double v : window) acc += v * v;
    return std::sqrt(acc / static_cast<double>(window.size()));
}

double waveform_length(const std::vector<double>& window) {
    if (window.size() < 2) fail(ErrorCategory::Length, "waveform_length: need >= 2 samples");
    double acc = 0.0;
    for (size_t i = 1; i < window.size(); ++i) acc += std::abs(window[i] - window[i - 1]);
    return acc;
}

int slope_sign_changes(const std::vector<double>& window, double threshold) {
    if (window.size() < 3) fail(ErrorCategory::Length, "slope_sign_changes: need >= 3 samples");
    int count = 0;
    for (size_t i = 1; i + 1 < window.size(); ++i)
        if ((window[i] - window[i - 1]) * (window[i] - window[i + 1]) > threshold) ++count;
    return count;
}

std::vector<Band> default_bands(const RunManifest& m) {
    const double lo = m.low_cut_hz, hi = m.high_cut_hz;
    const double w = (hi - lo) / 4.0;
    return {{lo, lo + w}, {lo + w, lo + 2 * w}, {lo + 2 * w, lo + 3 * w}, {lo + 3 * w, hi}};
}

FeatureMatrix extract_features(const EmgRecording& processed,
                               const EmgRecording& bandpassed, const RunManifest& m,
                               int segment_id) {
    if (processed.n_samples() != bandpassed.n_samples())
        fail(ErrorCategory::Shape, "extract_features: signal length mismatch");
    const WindowPlan plan = plan_windows(processed.n_samples(), m);
    const int L = plan.window_len;

    const std::vector<Band> bands = default_bands(m);
    const std::vector<double> freqs = default_morlet_freqs();
    const std::vector<int> cycles =
        m.use_morlet ? morlet_default_cycles(freqs, m.sample_rate_hz, L)
                     : std::vector<int>{};
    const MultitaperSpec mt_spec{2.5, 4, m.sample_rate_hz};

    // column schema (MAV intentionally absent: redundant with RMS)
    FeatureMatrix fm;
    for (size_t c = 0; c < kNumChannels; ++c) {
        const std::string& ch = processed.channels[c];
        if (m.use_time_points)
            for (int i = 0; i < L; ++i) fm.columns.push_back({ch, "tp", double(i)});
        if (m.use_rms) fm.columns.push_back({ch, "rms", 0});
        if (m.use_wl) fm.columns.push_back({ch, "wl", 0});
        if (m.use_ssc) fm.columns.push_back({ch, "ssc", 0});
        if (m.use_band_power)
            for (size_t b = 0; b < bands.size(); ++b)
                fm.columns.push_back({ch, "bp", double(b)});
        if (m.use_morlet)
            for (double f : freqs) fm.columns.push_back({ch, "mwt", f});
    }
    fm.rows = Mat(plan.n_windows, fm.columns.size());
    fm.condition.assign(plan.n_windows, processed.condition);
    fm.segment.assign(plan.n_windows, segment_id);

    size_t col0 = 0;
    for (size_t c = 0; c < kNumChannels; ++c) {
        // stacked windows for this channel, both taps
        Mat wproc(plan.n_windows, L), wband(plan.n_windows, L);
        for (size_t w = 0; w < plan.n_windows; ++w) {
            const size_t start = w * plan.hop;
            for (int i = 0; i < L; ++i) {
                wproc.at(w, i) = processed.samples.at(start + i, c);
                wband.at(w, i) = bandpassed.samples.at(start + i, c);
            }
        }

        size_t col = col0;
        if (m.use_time_points) {
            for (size_t w = 0; w < plan.n_windows; ++w)
                for (int i = 0; i < L; ++i) fm.rows.at(w, col + i) = wproc.at(w, i);
            col += L;
        }
        std::vector<double> buf(L);
        auto load_window = [&](size_t w) {
            for (int i = 0; i < L; ++i) buf[i] = wproc.at(w, i);
        };
        if (m.use_rms) {
            for (size_t w = 0; w < plan.n_windows; ++w) {
                load_window(w);
                fm.rows.at(w, col) = rms(buf);
            }
            ++col;
        }
        if (m.use_wl) {
            for (size_t w = 0; w < plan.n_windows; ++w) {
                load_window(w);
                fm.rows.at(w, col) = waveform_length(buf);
            }
            ++col;
        }
        if (m.use_ssc) {
            for (size_t w = 0; w < plan.n_windows; ++w) {
                load_window(w);
                fm.rows.at(w, col) = slope_sign_changes(buf, kSscThreshold);
            }
            ++col;
        }
        if (m.use_band_power) {
            const Mat bp = multitaper_band_power_batch(wband, bands, mt_spec);
            for (size_t w = 0; w < plan.n_windows; ++w)
                for (size_t b = 0; b < bands.size(); ++b)
                    fm.rows.at(w, col + b) = bp.at(w, b);
            col += bands.size();
        }
        if (m.use_morlet) {
            const Mat mp = morlet_power_batch(wband, freqs, cycles, m.sample_rate_hz);
            for (size_t w = 0; w < plan.n_windows; ++w)
                for (size_t q = 0; q < freqs.size(); ++q)
                    fm.rows.at(w, col + q) = mp.at(w, q);
            col += freqs.size();
        }
        col0 = col;
    }
    fm.validate();
    return fm;
}

} // namespace emt
