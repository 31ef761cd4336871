#pragma once

#include <vector>

namespace emt {

// One second-order section, a0 normalized to 1.
struct Biquad {
    double b0, b1, b2;
    double a1, a2;
};

struct SosFilter {
    std::vector<Biquad> sections;
    int order = 0; // total pole count

    int padlen() const { return 3 * (order + 1); }
};

// Digital Butterworth designs via bilinear transform with pre-warped cutoffs.
// `order` is the pole count of the digital filter (bandpass prototype order
// is order/2); must be even.
SosFilter design_bandpass(int order, double low_hz, double high_hz, double fs);
SosFilter design_lowpass(int order, double cut_hz, double fs);

// Single-pass SOS filtering (direct form II transposed). `zi` holds two
// states per section and is updated in place; pass nullptr for zero state.
std::vector<double> sosfilt(const SosFilter& f, const std::vector<double>& x,
                            std::vector<double>* zi = nullptr);

// Steady-state per-section state for a unit-step input (used by filtfilt).
std::vector<double> sosfilt_zi(const SosFilter& f);

// Zero-phase forward-backward filtering with odd-reflection padding of
// length 3*(order+1) and steady-state initial conditions.
std::vector<double> filtfilt(const SosFilter& f, const std::vector<double>& x);

} // namespace emt
