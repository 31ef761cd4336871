#pragma once

#include <array>
#include <string>
#include <vector>

namespace emt {

inline constexpr std::array<const char*, 3> kJointNames = {"elbow", "front", "side"};

struct FilteredSeries {
    std::vector<double> values;
    bool truncated = false; // input shorter than the SG window
};

std::vector<double> median_filter(const std::vector<double>& x, int window);

// Least-squares local polynomial smoother; edge positions are evaluated from
// the first/last full window's fit rather than padded data.
std::vector<double> savgol_filter(const std::vector<double>& x, int window, int order);

// median(5) then Savitzky-Golay(21, order 2)
FilteredSeries filter_predictions(const std::vector<double>& pred);

double rmse(const std::vector<double>& pred, const std::vector<double>& target);
double pearson(const std::vector<double>& pred, const std::vector<double>& target);
double r2(const std::vector<double>& pred, const std::vector<double>& target);

struct JointMetrics {
    double rmse = 0.0, rho = 0.0, r2 = 0.0;
};

struct SeedMetrics {
    uint64_t seed = 0;
    std::array<JointMetrics, 3> joints;
};

// One Table-III row: a (model, weights, condition) cell aggregated over seeds.
struct CellReport {
    std::string model;         // "mlp" | "tcn"
    std::string weights_label; // e.g. "0.00+1.10+1.85"
    char condition = 'B';
    std::vector<SeedMetrics> per_seed;
    std::array<JointMetrics, 3> mean, stdev; // population std across seeds
};

void aggregate_cell(CellReport& cell);

std::string table3_csv(const std::vector<CellReport>& cells);
void write_table3_csv(const std::string& path, const std::vector<CellReport>& cells);

struct BandSeries {
    std::string label;
    std::vector<double> mean, stdev; // across seeds, per test window
};

// Fixed-size SVG: target line plus mean +/- 1 std shaded bands.
void write_band_svg(const std::string& path, const std::string& joint,
                    const std::vector<double>& target,
                    const std::vector<BandSeries>& series);

} // namespace emt
