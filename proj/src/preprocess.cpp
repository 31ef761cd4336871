#include "emt/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "emt/error.hpp"

namespace emt {

RunningVariance::RunningVariance(int window) : window_(static_cast<size_t>(window)) {
    if (window < 2)
        fail(ErrorCategory::Parameter, "running variance window must be >= 2");
    buf_.resize(window_, 0.0);
}

void RunningVariance::refresh() {
    const size_t n = std::min(count_, window_);
    double mean = 0.0;
    for (size_t i = 0; i < n; ++i) mean += buf_[i];
    mean /= static_cast<double>(n);
    double m2 = 0.0;
    for (size_t i = 0; i < n; ++i) {
        const double d = buf_[i] - mean;
        m2 += d * d;
    }
    mean_ = mean;
    m2_ = m2;
    since_refresh_ = 0;
}

double RunningVariance::push(double x) {
    if (count_ < window_) {
        // grow phase: plain Welford update
        buf_[head_] = x;
        head_ = (head_ + 1) % window_;
        ++count_;
        const double delta = x - mean_;
        mean_ += delta / static_cast<double>(count_);
        m2_ += delta * (x - mean_);
    } else {
        // steady state: replace the oldest sample
        const double old = buf_[head_];
        buf_[head_] = x;
        head_ = (head_ + 1) % window_;
        const double mean_old = mean_;
        mean_ += (x - old) / static_cast<double>(window_);
        m2_ += (x - old) * (x - mean_ + old - mean_old);
        ++count_;
    }
    // exact recomputation often enough that drift stays below 1e-9 relative;
    // amortized cost is O(1) per push
    if (++since_refresh_ >= std::max<size_t>(64, window_)) refresh();
    if (m2_ < 0.0) m2_ = 0.0; // rounding guard
    return variance();
}

double RunningVariance::variance() const {
    const size_t n = std::min(count_, window_);
    if (n < 2) return 0.0;
    return m2_ / static_cast<double>(n - 1);
}

std::vector<double> running_variance(const std::vector<double>& x, int window) {
    RunningVariance rv(window);
    std::vector<double> out(x.size());
    for (size_t i = 0; i < x.size(); ++i) out[i] = rv.push(x[i]);
    return out;
}

EmgRecording remove_baseline(const EmgRecording& raw, const EmgRecording& rest) {
    if (raw.channels.size() != rest.channels.size() ||
        raw.samples.cols != rest.samples.cols)
        fail(ErrorCategory::Shape, "remove_baseline: channel count mismatch");
    if (raw.sample_rate_hz != rest.sample_rate_hz)
        fail(ErrorCategory::Shape, "remove_baseline: sample rate mismatch");
    if (rest.samples.rows == 0)
        fail(ErrorCategory::Data, "remove_baseline: empty rest recording");

    EmgRecording out = raw;
    for (size_t c = 0; c < raw.samples.cols; ++c) {
        double mean = 0.0;
        for (size_t t = 0; t < rest.samples.rows; ++t) mean += rest.samples.at(t, c);
        mean /= static_cast<double>(rest.samples.rows);
        for (size_t t = 0; t < out.samples.rows; ++t) out.samples.at(t, c) -= mean;
    }
    return out;
}

std::vector<double> bandpass_zero_phase(const std::vector<double>& x,
                                        const FilterSpec& spec) {
    const SosFilter f = design_bandpass(spec.order, spec.low_cut_hz,
                                        spec.high_cut_hz, spec.sample_rate_hz);
    return filtfilt(f, x);
}

std::vector<double> lowpass_smooth(const std::vector<double>& x, const FilterSpec& spec) {
    const SosFilter f =
        design_lowpass(spec.order, spec.smooth_cut_hz, spec.sample_rate_hz);
    return filtfilt(f, x);
}

namespace {

void fit_maxima(const std::vector<const EmgRecording*>& recs, std::vector<double>& out,
                const std::vector<std::string>& channels) {
    out.assign(kNumChannels, 0.0);
    for (const EmgRecording* r : recs)
        for (size_t t = 0; t < r->samples.rows; ++t)
            for (size_t c = 0; c < kNumChannels; ++c)
                out[c] = std::max(out[c], r->samples.at(t, c));
    for (size_t c = 0; c < kNumChannels; ++c)
        if (out[c] <= 0.0)
            fail(ErrorCategory::Normalization,
                 "channel '" + channels[c] + "' has no positive samples to normalize by");
}

} // namespace

std::pair<std::vector<EmgRecording>, ChannelMaxima> normalize(
    const std::vector<EmgRecording>& recordings, NormalizationMode mode) {
    if (recordings.empty())
        fail(ErrorCategory::Data, "normalize: no recordings");

    ChannelMaxima maxima;
    maxima.mode = mode;
    if (mode == NormalizationMode::Global) {
        std::vector<const EmgRecording*> all;
        for (const auto& r : recordings) all.push_back(&r);
        fit_maxima(all, maxima.global, recordings.front().channels);
    } else {
        std::map<Condition, std::vector<const EmgRecording*>> by_cond;
        for (const auto& r : recordings) by_cond[r.condition].push_back(&r);
        for (auto& [cond, recs] : by_cond)
            fit_maxima(recs, maxima.per_condition[cond], recs.front()->channels);
    }

    std::vector<EmgRecording> out;
    out.reserve(recordings.size());
    for (const auto& r : recordings) out.push_back(apply_normalization(r, maxima));
    return {std::move(out), std::move(maxima)};
}

EmgRecording apply_normalization(const EmgRecording& rec, const ChannelMaxima& maxima) {
    const std::vector<double>* mx = nullptr;
    if (maxima.mode == NormalizationMode::Global) {
        mx = &maxima.global;
    } else {
        auto it = maxima.per_condition.find(rec.condition);
        if (it == maxima.per_condition.end())
            fail(ErrorCategory::Normalization,
                 "no fitted maxima for condition " + rec.condition.label());
        mx = &it->second;
    }
    if (mx->size() != kNumChannels)
        fail(ErrorCategory::Shape, "apply_normalization: maxima size");

    EmgRecording out = rec;
    for (size_t t = 0; t < out.samples.rows; ++t)
        for (size_t c = 0; c < kNumChannels; ++c) out.samples.at(t, c) /= (*mx)[c];
    return out;
}

std::vector<double> channel_of(const EmgRecording& rec, size_t ch) {
    std::vector<double> x(rec.samples.rows);
    for (size_t t = 0; t < x.size(); ++t) x[t] = rec.samples.at(t, ch);
    return x;
}

void set_channel(EmgRecording& rec, size_t ch, const std::vector<double>& x) {
    if (x.size() != rec.samples.rows)
        fail(ErrorCategory::Shape, "set_channel: length mismatch");
    for (size_t t = 0; t < x.size(); ++t) rec.samples.at(t, ch) = x[t];
}

} // namespace emt
