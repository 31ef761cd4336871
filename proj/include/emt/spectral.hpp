#pragma once

#include <utility>
#include <vector>

#include "emt/linalg.hpp"

namespace emt {

// Discrete prolate spheroidal sequences via the symmetric tridiagonal
// eigenproblem; unit-energy tapers ordered by decreasing concentration.
struct DpssTapers {
    Mat tapers;                         // [k x n]
    std::vector<double> concentrations; // in-band energy ratios, same order
};

DpssTapers dpss(int n, double nw, int k);

using Band = std::pair<double, double>; // [lo_hz, hi_hz)

struct MultitaperSpec {
    double nw = 2.5;
    int k = 4;
    double fs = 500.0;
};

// One-sided multitaper PSD at bins f_j = j*fs/n, j = 0..n/2.
std::vector<double> multitaper_psd(const std::vector<double>& window,
                                   const MultitaperSpec& spec);

std::vector<double> multitaper_band_power(const std::vector<double>& window,
                                          const std::vector<Band>& bands,
                                          const MultitaperSpec& spec);

// Batched variant over stacked windows [n_windows x L]; returns
// [n_windows x n_bands]. Matches the per-window op within rounding.
Mat multitaper_band_power_batch(const Mat& windows, const std::vector<Band>& bands,
                                const MultitaperSpec& spec);

// Largest integer cycle counts satisfying n_cycles * fs / f <= window_len,
// capped at `cap`.
std::vector<int> morlet_default_cycles(const std::vector<double>& freqs, double fs,
                                       int window_len, int cap = 7);

std::vector<double> default_morlet_freqs();

// Mean squared magnitude of the 'same'-mode complex Morlet convolution, one
// value per analysis frequency. L2-normalized mother wavelet.
std::vector<double> morlet_power(const std::vector<double>& window,
                                 const std::vector<double>& freqs,
                                 const std::vector<int>& n_cycles, double fs);

Mat morlet_power_batch(const Mat& windows, const std::vector<double>& freqs,
                       const std::vector<int>& n_cycles, double fs);

} // namespace emt
