#include "emt/feature_post.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "emt/csv.hpp"
#include "emt/error.hpp"
#include "emt/rng.hpp"

namespace emt {

DataSplit split(const FeatureMatrix& features, const TorqueSeries& targets,
                const SplitSpec& spec) {
    if (features.n_rows() != targets.n_rows())
        fail(ErrorCategory::Shape, "split: feature/target row mismatch");
    if (!(0 < spec.test_fraction && spec.test_fraction < 1))
        fail(ErrorCategory::Config, "split: test_fraction outside (0,1)");
    if (!(0 <= spec.val_fraction_of_train && spec.val_fraction_of_train < 1))
        fail(ErrorCategory::Config, "split: val_fraction outside [0,1)");

    std::map<Condition, std::vector<size_t>> by_cond;
    for (size_t r = 0; r < features.n_rows(); ++r)
        by_cond[features.condition[r]].push_back(r);

    Rng rng(spec.seed);
    DataSplit out;
    for (const auto& [cond, idx] : by_cond) {
        const size_t n = idx.size();
        const size_t n_test =
            static_cast<size_t>(std::lround(spec.test_fraction * static_cast<double>(n)));
        if (n_test < 1 || n < n_test + 2)
            fail(ErrorCategory::Split,
                 "condition " + cond.label() + " has too few windows (" +
                     std::to_string(n) + ") to split");
        const size_t t0 = static_cast<size_t>(rng.below(n - n_test + 1));
        for (size_t i = t0; i < t0 + n_test; ++i) out.test.push_back(idx[i]);

        // remainder forms up to two contiguous pieces around the test block
        std::vector<std::pair<size_t, size_t>> pieces; // [begin, end) into idx
        if (t0 > 0) pieces.emplace_back(0, t0);
        if (t0 + n_test < n) pieces.emplace_back(t0 + n_test, n);
        const size_t n_rem = n - n_test;
        const size_t n_val = static_cast<size_t>(
            std::lround(spec.val_fraction_of_train * static_cast<double>(n_rem)));

        // validation block drawn from the larger remaining piece
        size_t vp = 0;
        for (size_t p = 1; p < pieces.size(); ++p)
            if (pieces[p].second - pieces[p].first >
                pieces[vp].second - pieces[vp].first)
                vp = p;
        size_t v0 = 0, v1 = 0; // [v0, v1) into idx
        if (n_val > 0) {
            const size_t plen = pieces[vp].second - pieces[vp].first;
            if (plen < n_val + 1)
                fail(ErrorCategory::Split,
                     "condition " + cond.label() + ": remainder too small for validation");
            v0 = pieces[vp].first + static_cast<size_t>(rng.below(plen - n_val + 1));
            v1 = v0 + n_val;
            for (size_t i = v0; i < v1; ++i) out.val.push_back(idx[i]);
        }
        for (const auto& [b, e] : pieces)
            for (size_t i = b; i < e; ++i)
                if (i < v0 || i >= v1) out.train.push_back(idx[i]);
    }
    std::sort(out.train.begin(), out.train.end());
    std::sort(out.val.begin(), out.val.end());
    std::sort(out.test.begin(), out.test.end());
    return out;
}

SplitPart gather(const FeatureMatrix& features, const TorqueSeries& targets,
                 const std::vector<size_t>& indices) {
    SplitPart part;
    part.x = Mat(indices.size(), features.n_cols());
    part.y = Mat(indices.size(), targets.raw.cols);
    part.condition.reserve(indices.size());
    part.segment.reserve(indices.size());
    part.orig_index = indices;
    for (size_t r = 0; r < indices.size(); ++r) {
        const size_t src = indices[r];
        if (src >= features.n_rows())
            fail(ErrorCategory::Shape, "gather: index out of range");
        for (size_t c = 0; c < features.n_cols(); ++c)
            part.x.at(r, c) = features.rows.at(src, c);
        for (size_t c = 0; c < targets.raw.cols; ++c)
            part.y.at(r, c) = targets.raw.at(src, c);
        part.condition.push_back(features.condition[src]);
        part.segment.push_back(targets.segment[src]);
    }
    return part;
}

Mat stack_history(const SplitPart& part, int depth) {
    if (depth < 0) fail(ErrorCategory::Parameter, "stack_history: negative depth");
    const size_t n = part.x.rows;
    const size_t k = part.x.cols;
    const size_t h = static_cast<size_t>(depth);
    Mat out(n, (h + 1) * k);

    size_t run_start = 0;
    for (size_t r = 0; r < n; ++r) {
        const bool new_run =
            r == 0 || !(part.condition[r] == part.condition[r - 1]) ||
            part.segment[r] != part.segment[r - 1] ||
            part.orig_index[r] != part.orig_index[r - 1] + 1;
        if (new_run) run_start = r;
        for (size_t j = 0; j <= h; ++j) {
            // slot j holds row r - depth + j, clamped to the run start
            const long long want = static_cast<long long>(r) - depth + static_cast<long long>(j);
            const size_t src = want < static_cast<long long>(run_start)
                                   ? run_start
                                   : static_cast<size_t>(want);
            const double* src_row = part.x.row(src);
            double* dst = out.row(r) + j * k;
            std::copy(src_row, src_row + k, dst);
        }
    }
    return out;
}

void Standardizer::fit(const Mat& rows) {
    if (rows.rows == 0) fail(ErrorCategory::Data, "Standardizer: no rows");
    const double n = static_cast<double>(rows.rows);
    mean.assign(rows.cols, 0.0);
    stdev.assign(rows.cols, 1.0);
    constant.assign(rows.cols, false);
    for (size_t c = 0; c < rows.cols; ++c) {
        double m = 0.0;
        for (size_t r = 0; r < rows.rows; ++r) m += rows.at(r, c);
        m /= n;
        double acc = 0.0;
        for (size_t r = 0; r < rows.rows; ++r) {
            const double d = rows.at(r, c) - m;
            acc += d * d;
        }
        const double sd = std::sqrt(acc / n);
        mean[c] = m;
        if (sd < 1e-12) {
            constant[c] = true;
            stdev[c] = 1.0;
        } else {
            stdev[c] = sd;
        }
    }
}

Mat Standardizer::apply(const Mat& rows) const {
    if (rows.cols != mean.size()) fail(ErrorCategory::Shape, "Standardizer: width mismatch");
    Mat out = rows;
    for (size_t c = 0; c < rows.cols; ++c) {
        if (constant[c]) continue;
        for (size_t r = 0; r < rows.rows; ++r)
            out.at(r, c) = (rows.at(r, c) - mean[c]) / stdev[c];
    }
    return out;
}

PcaModel fit_pca(const Mat& train_rows, double retain) {
    if (!(0 < retain && retain <= 1.0))
        fail(ErrorCategory::Config, "pca retain fraction outside (0,1]");
    if (train_rows.rows < 2) fail(ErrorCategory::Data, "fit_pca: need >= 2 rows");
    const size_t n = train_rows.rows, d = train_rows.cols;

    PcaModel model;
    model.mean.assign(d, 0.0);
    for (size_t c = 0; c < d; ++c) {
        double m = 0.0;
        for (size_t r = 0; r < n; ++r) m += train_rows.at(r, c);
        model.mean[c] = m / static_cast<double>(n);
    }
    Mat centered = train_rows;
    for (size_t r = 0; r < n; ++r)
        for (size_t c = 0; c < d; ++c) centered.at(r, c) -= model.mean[c];

    Mat cov;
    linalg::gemm(centered, true, centered, false, cov,
                 1.0 / static_cast<double>(n - 1));
    linalg::SymEig eig = linalg::sym_eig(cov); // descending

    double total = 0.0;
    for (double& v : eig.values) {
        if (v < 0) v = 0; // PSD rounding guard
        total += v;
    }
    if (total <= 0) fail(ErrorCategory::Data, "fit_pca: zero-variance input");

    model.explained_ratio.resize(d);
    for (size_t i = 0; i < d; ++i) model.explained_ratio[i] = eig.values[i] / total;

    size_t k = 0;
    if (retain >= 1.0) {
        // numerical rank
        const double tol = eig.values[0] * 1e-10;
        while (k < d && eig.values[k] > tol) ++k;
    } else {
        double acc = 0.0;
        while (k < d) {
            acc += model.explained_ratio[k];
            ++k;
            if (acc >= retain) break;
        }
    }
    if (k == 0) k = 1;
    model.k = k;
    model.components = Mat(k, d);
    for (size_t i = 0; i < k; ++i) {
        const double* v = eig.vectors.row(i);
        // deterministic sign: largest-|.| element positive
        size_t arg = 0;
        for (size_t j = 1; j < d; ++j)
            if (std::abs(v[j]) > std::abs(v[arg])) arg = j;
        const double sign = v[arg] >= 0 ? 1.0 : -1.0;
        for (size_t j = 0; j < d; ++j) model.components.at(i, j) = sign * v[j];
    }
    model.explained_ratio.resize(k);
    return model;
}

Mat apply_pca(const PcaModel& pca, const Mat& rows) {
    if (rows.cols != pca.mean.size())
        fail(ErrorCategory::Shape, "apply_pca: width mismatch");
    Mat centered = rows;
    for (size_t r = 0; r < rows.rows; ++r)
        for (size_t c = 0; c < rows.cols; ++c) centered.at(r, c) -= pca.mean[c];
    Mat out;
    linalg::gemm(centered, false, pca.components, true, out);
    return out;
}

Mat pca_inverse(const PcaModel& pca, const Mat& reduced) {
    if (reduced.cols != pca.k) fail(ErrorCategory::Shape, "pca_inverse: width mismatch");
    Mat out;
    linalg::gemm(reduced, false, pca.components, false, out);
    for (size_t r = 0; r < out.rows; ++r)
        for (size_t c = 0; c < out.cols; ++c) out.at(r, c) += pca.mean[c];
    return out;
}

std::vector<double> one_hot(const Condition& cond, const std::vector<double>& weights) {
    std::vector<double> out(weights.size() + 2, 0.0);
    bool found = false;
    for (size_t i = 0; i < weights.size(); ++i)
        if (weights[i] == cond.weight_kg) {
            out[i] = 1.0;
            found = true;
            break;
        }
    if (!found)
        fail(ErrorCategory::Encoding,
             "weight " + fmt_double(cond.weight_kg) + " kg not in configured set");
    out[weights.size() + (cond.movement == Movement::Grasping ? 0 : 1)] = 1.0;
    return out;
}

Mat append_one_hot(const Mat& rows, const std::vector<Condition>& condition,
                   const std::vector<double>& weights) {
    if (condition.size() != rows.rows)
        fail(ErrorCategory::Shape, "append_one_hot: row metadata mismatch");
    const size_t extra = weights.size() + 2;
    Mat out(rows.rows, rows.cols + extra);
    for (size_t r = 0; r < rows.rows; ++r) {
        std::copy(rows.row(r), rows.row(r) + rows.cols, out.row(r));
        const std::vector<double> oh = one_hot(condition[r], weights);
        std::copy(oh.begin(), oh.end(), out.row(r) + rows.cols);
    }
    return out;
}

void shuffle_train(Mat& x, Mat& y, uint64_t seed) {
    if (x.rows != y.rows) fail(ErrorCategory::Shape, "shuffle_train: row mismatch");
    Rng rng(seed);
    const std::vector<size_t> perm = rng.permutation(x.rows);
    Mat nx(x.rows, x.cols), ny(y.rows, y.cols);
    for (size_t r = 0; r < x.rows; ++r) {
        std::copy(x.row(perm[r]), x.row(perm[r]) + x.cols, nx.row(r));
        std::copy(y.row(perm[r]), y.row(perm[r]) + y.cols, ny.row(r));
    }
    x = std::move(nx);
    y = std::move(ny);
}

} // namespace emt
