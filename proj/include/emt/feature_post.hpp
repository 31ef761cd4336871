#pragma once

#include <cstdint>
#include <vector>

#include "emt/features.hpp"
#include "emt/torque.hpp"

namespace emt {

struct SplitSpec {
    double test_fraction = 0.10;
    double val_fraction_of_train = 0.15;
    uint64_t seed = 1234;
};

// Row indices (ascending) of each partition. Blocks are contiguous per
// condition so 50%-overlapping neighbours never straddle train/test.
struct DataSplit {
    std::vector<size_t> train, val, test;
};

DataSplit split(const FeatureMatrix& features, const TorqueSeries& targets,
                const SplitSpec& spec);

// One partition gathered out of the full matrices, keeping the metadata
// needed to stack history without crossing condition/split boundaries.
struct SplitPart {
    Mat x;
    Mat y; // raw torques [n x 3]
    std::vector<Condition> condition;
    std::vector<int> segment;
    std::vector<size_t> orig_index;
};

SplitPart gather(const FeatureMatrix& features, const TorqueSeries& targets,
                 const std::vector<size_t>& indices);

// Row t becomes the concatenation of rows t-H..t (oldest first) within each
// contiguous run; the first rows of a run replicate its earliest row.
Mat stack_history(const SplitPart& part, int depth);

struct Standardizer {
    std::vector<double> mean, stdev;
    std::vector<bool> constant; // flagged columns pass through unscaled

    void fit(const Mat& rows); // population std (divisor n)
    Mat apply(const Mat& rows) const;
};

struct PcaModel {
    std::vector<double> mean;
    Mat components; // [k x d], orthonormal rows
    std::vector<double> explained_ratio;
    size_t k = 0;
};

PcaModel fit_pca(const Mat& train_rows, double retain);
Mat apply_pca(const PcaModel& pca, const Mat& rows);
Mat pca_inverse(const PcaModel& pca, const Mat& reduced);

std::vector<double> one_hot(const Condition& cond, const std::vector<double>& weights);

// Append the per-row one-hot block to a reduced matrix.
Mat append_one_hot(const Mat& rows, const std::vector<Condition>& condition,
                   const std::vector<double>& weights);

// Deterministic Fisher-Yates permutation applied to x and y together.
void shuffle_train(Mat& x, Mat& y, uint64_t seed);

} // namespace emt
