#pragma once

#include <string>
#include <vector>

#include "emt/linalg.hpp"
#include "emt/manifest.hpp"
#include "emt/spectral.hpp"
#include "emt/types.hpp"

namespace emt {

struct WindowPlan {
    int window_len = 50;
    int hop = 25;
    size_t n_windows = 0;
};

WindowPlan plan_windows(size_t n_samples, const RunManifest& m);

struct FeatureColumn {
    std::string channel;
    std::string feature; // "tp", "rms", "wl", "ssc", "bp", "mwt"
    double param = 0.0;  // tp: sample index; bp: band index; mwt: frequency

    std::string name() const;
};

struct FeatureMatrix {
    Mat rows;
    std::vector<FeatureColumn> columns;
    std::vector<Condition> condition; // per row
    std::vector<int> segment;         // per row: source trial id (contiguity)

    size_t n_rows() const { return rows.rows; }
    size_t n_cols() const { return rows.cols; }
    void append(const FeatureMatrix& other);
    void validate() const;
};

double rms(const std::vector<double>& window);
double waveform_length(const std::vector<double>& window);
int slope_sign_changes(const std::vector<double>& window, double threshold);

constexpr double kSscThreshold = 1e-8;

// Four equal-width bands spanning [low_cut, high_cut].
std::vector<Band> default_bands(const RunManifest& m);

// Features for one trial: time-domain features from the fully preprocessed
// signal, spectral features from the band-passed tap only.
FeatureMatrix extract_features(const EmgRecording& processed,
                               const EmgRecording& bandpassed,
                               const RunManifest& m, int segment_id = 0);

} // namespace emt
