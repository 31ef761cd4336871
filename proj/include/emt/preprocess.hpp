#pragma once

#include <map>
#include <vector>

#include "emt/filter.hpp"
#include "emt/manifest.hpp"
#include "emt/types.hpp"

namespace emt {

struct FilterSpec {
    int order = 4;
    double low_cut_hz = 15.0;
    double high_cut_hz = 225.0;
    double smooth_cut_hz = 5.0;
    double sample_rate_hz = 500.0;

    static FilterSpec from_manifest(const RunManifest& m) {
        return {m.filter_order, m.low_cut_hz, m.high_cut_hz, m.smooth_cut_hz,
                m.sample_rate_hz};
    }
};

// Sliding-window sample variance (divisor W-1) with incremental mean/M2
// updates over a ring buffer. Warm-up reports the partial-buffer variance.
class RunningVariance {
public:
    explicit RunningVariance(int window);

    // append a sample, return the variance of the current buffer
    double push(double x);

    double variance() const;
    size_t count() const { return count_; }

private:
    void refresh(); // exact recomputation to cancel accumulated rounding

    std::vector<double> buf_;
    size_t window_;
    size_t count_ = 0;   // total samples seen
    size_t head_ = 0;    // next write position
    double mean_ = 0.0;
    double m2_ = 0.0;
    size_t since_refresh_ = 0;
};

std::vector<double> running_variance(const std::vector<double>& x, int window);

EmgRecording remove_baseline(const EmgRecording& raw, const EmgRecording& rest);

std::vector<double> bandpass_zero_phase(const std::vector<double>& x,
                                        const FilterSpec& spec);
std::vector<double> lowpass_smooth(const std::vector<double>& x,
                                   const FilterSpec& spec);

// Fitted per-channel maxima. Global mode holds one vector; condition-specific
// mode holds one vector per condition.
struct ChannelMaxima {
    NormalizationMode mode = NormalizationMode::Global;
    std::vector<double> global;
    std::map<Condition, std::vector<double>> per_condition;
};

std::pair<std::vector<EmgRecording>, ChannelMaxima> normalize(
    const std::vector<EmgRecording>& recordings, NormalizationMode mode);

EmgRecording apply_normalization(const EmgRecording& rec, const ChannelMaxima& maxima);

// column extraction / insertion helpers shared by pipeline stages
std::vector<double> channel_of(const EmgRecording& rec, size_t ch);
void set_channel(EmgRecording& rec, size_t ch, const std::vector<double>& x);

} // namespace emt
