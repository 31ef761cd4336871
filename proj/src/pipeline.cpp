#include "emt/pipeline.hpp"

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <thread>

#include "emt/csv.hpp"
#include "emt/error.hpp"
#include "emt/feature_post.hpp"
#include "emt/preprocess.hpp"

namespace emt {
namespace fs = std::filesystem;

std::string CellSpec::model_name() const {
    return kind == ModelKind::Mlp ? "mlp" : "tcn";
}

std::string CellSpec::weights_label() const {
    std::string out;
    for (size_t i = 0; i < weights.size(); ++i) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.2f", weights[i]);
        if (i) out += "+";
        out += buf;
    }
    return out;
}

std::string CellSpec::id() const {
    return model_name() + "_" + grid_condition_name(grid) + "_" + weights_label();
}

NormalizationMode CellSpec::norm_mode() const {
    return grid == GridCondition::A ? NormalizationMode::Global
                                    : NormalizationMode::ConditionSpecific;
}

std::vector<CellSpec> table3_cells(const RunManifest& m) {
    std::vector<double> all = m.weights_kg;
    std::sort(all.begin(), all.end());
    if (all.size() < 2)
        fail(ErrorCategory::Protocol, "table3 grid needs at least two weights");
    std::vector<double> heavy(all.begin() + 1, all.end());

    std::vector<CellSpec> cells;
    cells.push_back({ModelKind::Mlp, GridCondition::A, heavy});
    cells.push_back({ModelKind::Mlp, GridCondition::B, heavy});
    cells.push_back({ModelKind::Mlp, GridCondition::A, all});
    cells.push_back({ModelKind::Mlp, GridCondition::B, all});
    cells.push_back({ModelKind::Tcn, GridCondition::C, heavy});
    cells.push_back({ModelKind::Tcn, GridCondition::C, all});
    cells.push_back({ModelKind::Tcn, GridCondition::B, all});
    return cells;
}

LoadedData load_dataset(const RunManifest& m, const std::vector<double>& weights,
                        bool need_truth) {
    DatasetPaths paths = dataset_paths(m);
    if (!fs::exists(paths.rest))
        fail(ErrorCategory::MissingInput, "missing rest recording " + paths.rest);

    std::set<double> wanted(weights.begin(), weights.end());
    LoadedData data;
    data.rest = load_emg_csv(paths.rest);
    for (size_t i = 0; i < paths.condition.size(); ++i) {
        if (!wanted.count(paths.condition[i].weight_kg)) continue;
        if (!fs::exists(paths.emg[i]))
            fail(ErrorCategory::MissingInput, "missing recording " + paths.emg[i]);
        if (!fs::exists(paths.markers[i]))
            fail(ErrorCategory::MissingInput, "missing markers " + paths.markers[i]);
        data.emg.push_back(load_emg_csv(paths.emg[i]));
        data.markers.push_back(load_markers_csv(paths.markers[i]));
        if (need_truth) {
            if (!fs::exists(paths.truth[i]))
                fail(ErrorCategory::MissingInput, "missing truth " + paths.truth[i]);
            data.truth.push_back(load_truth_csv(paths.truth[i]));
        }
        data.condition.push_back(paths.condition[i]);
        data.trial.push_back(paths.trial[i]);
    }
    if (data.emg.empty())
        fail(ErrorCategory::MissingInput, "no recordings for requested weights under " +
                                              m.data_dir);
    return data;
}

namespace {

std::vector<double> clamp01(std::vector<double> x) {
    for (double& v : x) v = std::clamp(v, 0.0, 1.0);
    return x;
}

} // namespace

PreparedFeatures prepare_features(const LoadedData& data, const RunManifest& m,
                                  NormalizationMode mode, bool time_points_only,
                                  bool keep_signals) {
    FilterSpec fspec = FilterSpec::from_manifest(m);
    size_t n_rec = data.emg.size();

    std::vector<EmgRecording> banded(n_rec), variance(n_rec);
    for (size_t i = 0; i < n_rec; ++i) {
        EmgRecording based = remove_baseline(data.emg[i], data.rest);
        EmgRecording band = based, var = based;
        for (size_t ch = 0; ch < kNumChannels; ++ch) {
            std::vector<double> b = bandpass_zero_phase(channel_of(based, ch), fspec);
            set_channel(var, ch, running_variance(b, m.variance_window));
            set_channel(band, ch, std::move(b));
        }
        banded[i] = std::move(band);
        variance[i] = std::move(var);
    }

    auto [normalized, maxima] = normalize(variance, mode);
    variance.clear();

    std::vector<EmgRecording> smoothed(n_rec);
    for (size_t i = 0; i < n_rec; ++i) {
        EmgRecording sm = normalized[i];
        for (size_t ch = 0; ch < kNumChannels; ++ch)
            set_channel(sm, ch, clamp01(lowpass_smooth(channel_of(normalized[i], ch), fspec)));
        smoothed[i] = std::move(sm);
    }

    PreparedFeatures out;
    out.maxima = maxima;
    out.use_activation = m.use_activation;

    std::vector<EmgRecording> processed;
    if (m.use_activation) {
        bool oracle = m.activation_target == ActivationTarget::Oracle;
        if (oracle && data.truth.size() != n_rec)
            fail(ErrorCategory::MissingInput,
                 "activation oracle target requires ground-truth envelopes");
        // fit on the first trial of each condition to bound the search cost
        std::vector<size_t> fit_idx;
        std::set<Condition> seen;
        for (size_t i = 0; i < n_rec; ++i)
            if (seen.insert(data.condition[i]).second) fit_idx.push_back(i);

        for (size_t ch = 0; ch < kNumChannels; ++ch) {
            std::vector<double> e, target;
            for (size_t i : fit_idx) {
                std::vector<double> ei = channel_of(normalized[i], ch);
                e.insert(e.end(), ei.begin(), ei.end());
                if (oracle) {
                    for (size_t t = 0; t < data.truth[i].rows; ++t)
                        target.push_back(data.truth[i].at(t, ch));
                } else {
                    std::vector<double> ti = channel_of(smoothed[i], ch);
                    target.insert(target.end(), ti.begin(), ti.end());
                }
            }
            if (oracle) {
                double peak = 0.0;
                for (double v : target) peak = std::max(peak, v);
                if (peak > 0.0)
                    for (double& v : target) v = std::clamp(v / peak, 0.0, 1.0);
            }
            out.activation.push_back(fit_activation_params(e, target));
        }

        for (size_t i = 0; i < n_rec; ++i) {
            EmgRecording p = normalized[i];
            for (size_t ch = 0; ch < kNumChannels; ++ch)
                set_channel(p, ch,
                            activate(channel_of(normalized[i], ch),
                                     out.activation[ch].params));
            processed.push_back(std::move(p));
        }
    } else {
        processed = smoothed;
    }

    RunManifest fm = m;
    if (time_points_only) {
        fm.use_time_points = true;
        fm.use_rms = fm.use_wl = fm.use_ssc = false;
        fm.use_band_power = fm.use_morlet = false;
    }
    AnthropometricTable table = AnthropometricTable::for_sex(m.body.sex);
    for (size_t i = 0; i < n_rec; ++i) {
        FeatureMatrix f = extract_features(processed[i], banded[i], fm, data.trial[i]);
        JointAngles angles = compute_angles(data.markers[i]);
        RawTorques torques =
            compute_torques(angles, m.body, table, data.condition[i].weight_kg,
                            m.gravity, m.eq1_variant);
        TorqueSeries ts =
            targets_from_torques(torques, data.condition[i], m, data.trial[i]);
        if (ts.n_rows() != f.n_rows())
            fail(ErrorCategory::Shape,
                 "feature/target window mismatch for " + data.condition[i].label() +
                     " trial " + std::to_string(data.trial[i]));
        out.features.append(f);
        out.targets.append(ts);
    }
    out.features.validate();

    if (keep_signals) {
        out.processed = std::move(processed);
        out.bandpassed = std::move(banded);
    }
    return out;
}

namespace {

size_t channel_index(const std::string& name) {
    if (name.size() < 3 || name.compare(0, 2, "ch") != 0)
        fail(ErrorCategory::Schema, "bad channel name " + name);
    int v = std::atoi(name.c_str() + 2);
    if (v < 1 || (size_t)v > kNumChannels)
        fail(ErrorCategory::Schema, "bad channel name " + name);
    return (size_t)(v - 1);
}

// time-major [T x 8] raw time points from the channel-major tp columns
Mat time_point_tensor(const FeatureMatrix& fm, int window_len) {
    std::vector<std::vector<int>> src(kNumChannels,
                                      std::vector<int>(window_len, -1));
    for (size_t c = 0; c < fm.columns.size(); ++c) {
        const FeatureColumn& col = fm.columns[c];
        if (col.feature != "tp") continue;
        int tp = (int)std::llround(col.param);
        if (tp < 0 || tp >= window_len)
            fail(ErrorCategory::Schema, "unexpected time-point index in " + col.name());
        src[channel_index(col.channel)][(size_t)tp] = (int)c;
    }
    for (size_t ch = 0; ch < kNumChannels; ++ch)
        for (int t = 0; t < window_len; ++t)
            if (src[ch][(size_t)t] < 0)
                fail(ErrorCategory::Schema, "missing time-point columns for condition C");

    Mat x(fm.n_rows(), (size_t)window_len * kNumChannels);
    for (size_t r = 0; r < fm.n_rows(); ++r) {
        const double* in = fm.rows.row(r);
        double* o = x.row(r);
        for (int t = 0; t < window_len; ++t)
            for (size_t ch = 0; ch < kNumChannels; ++ch)
                o[(size_t)t * kNumChannels + ch] = in[src[ch][(size_t)t]];
    }
    return x;
}

// one-hot appended to every timestep of a [T x d] sequence row
Mat sequence_with_one_hot(const Mat& stacked, size_t t_len, size_t d,
                          const std::vector<Condition>& condition,
                          const std::vector<double>& weights) {
    size_t bits = weights.size() + 2;
    Mat out(stacked.rows, t_len * (d + bits));
    for (size_t r = 0; r < stacked.rows; ++r) {
        std::vector<double> hot = one_hot(condition[r], weights);
        const double* in = stacked.row(r);
        double* o = out.row(r);
        for (size_t s = 0; s < t_len; ++s) {
            std::copy(in + s * d, in + (s + 1) * d, o + s * (d + bits));
            std::copy(hot.begin(), hot.end(), o + s * (d + bits) + d);
        }
    }
    return out;
}

} // namespace

CellInputs assemble_inputs(const PreparedFeatures& pf, const RunManifest& m,
                           const CellSpec& cell) {
    SplitSpec spec{m.test_fraction, m.val_fraction, m.split_seed};
    DataSplit parts = split(pf.features, pf.targets, spec);
    SplitPart train = gather(pf.features, pf.targets, parts.train);
    SplitPart val = gather(pf.features, pf.targets, parts.val);
    SplitPart test = gather(pf.features, pf.targets, parts.test);

    CellInputs in;
    in.target_scaler.fit(pf.targets.raw);
    in.y_train = in.target_scaler.transform(train.y);
    in.y_val = in.target_scaler.transform(val.y);
    in.y_test_raw = test.y;
    in.test_condition = test.condition;
    in.test_segment = test.segment;
    in.test_orig = test.orig_index;
    in.loss_weights = nn::LossWeights::from_targets(in.y_train);

    if (cell.grid == GridCondition::C) {
        int wl = m.window_len_samples();
        in.x_train = time_point_tensor({train.x, pf.features.columns, {}, {}}, wl);
        in.x_val = time_point_tensor({val.x, pf.features.columns, {}, {}}, wl);
        in.x_test = time_point_tensor({test.x, pf.features.columns, {}, {}}, wl);
        in.tcn_t = (uint64_t)wl;
        in.tcn_c = kNumChannels;
        in.input_dim = in.tcn_t * in.tcn_c;
        return in;
    }

    Mat s_train = stack_history(train, m.history);
    Mat s_val = stack_history(val, m.history);
    Mat s_test = stack_history(test, m.history);
    in.has_pre_std = true;
    in.pre_std.fit(s_train);
    s_train = in.pre_std.apply(s_train);
    s_val = in.pre_std.apply(s_val);
    s_test = in.pre_std.apply(s_test);

    if (cell.kind == ModelKind::Mlp) {
        in.has_pca = true;
        in.pca = fit_pca(s_train, m.pca_retain);
        Mat r_train = apply_pca(in.pca, s_train);
        Mat r_val = apply_pca(in.pca, s_val);
        Mat r_test = apply_pca(in.pca, s_test);
        s_train = Mat();
        s_val = Mat();
        s_test = Mat();
        in.has_post_std = true;
        in.post_std.fit(r_train);
        r_train = in.post_std.apply(r_train);
        r_val = in.post_std.apply(r_val);
        r_test = in.post_std.apply(r_test);
        in.x_train = append_one_hot(r_train, train.condition, cell.weights);
        in.x_val = append_one_hot(r_val, val.condition, cell.weights);
        in.x_test = append_one_hot(r_test, test.condition, cell.weights);
        in.input_dim = in.x_train.cols;
        return in;
    }

    // TCN on the full feature pipeline: the stacked standardized vector as a
    // (history+1)-step sequence with the one-hot block on every step
    size_t d = pf.features.n_cols();
    size_t t_len = (size_t)m.history + 1;
    in.x_train = sequence_with_one_hot(s_train, t_len, d, train.condition, cell.weights);
    in.x_val = sequence_with_one_hot(s_val, t_len, d, val.condition, cell.weights);
    in.x_test = sequence_with_one_hot(s_test, t_len, d, test.condition, cell.weights);
    in.tcn_t = t_len;
    in.tcn_c = d + cell.weights.size() + 2;
    in.input_dim = in.tcn_t * in.tcn_c;
    return in;
}

namespace {

std::vector<std::pair<size_t, size_t>> contiguous_runs(
    const std::vector<Condition>& condition, const std::vector<int>& segment,
    const std::vector<size_t>& orig) {
    std::vector<std::pair<size_t, size_t>> runs;
    for (size_t i = 0; i < condition.size(); ++i) {
        bool fresh = i == 0 || !(condition[i] == condition[i - 1]) ||
                     segment[i] != segment[i - 1] || orig[i] != orig[i - 1] + 1;
        if (fresh) runs.emplace_back(i, i + 1);
        else runs.back().second = i + 1;
    }
    return runs;
}

std::unique_ptr<Network> build_network(ModelKind kind, uint64_t input_dim,
                                       uint64_t tcn_t, uint64_t tcn_c,
                                       const RunManifest& m, uint64_t seed) {
    if (kind == ModelKind::Mlp)
        return std::make_unique<MlpNetwork>((size_t)input_dim, m, seed);
    return std::make_unique<TcnNetwork>((size_t)tcn_t, (size_t)tcn_c, m, seed);
}

} // namespace

SeedMetrics evaluate_network(Network& net, const CellInputs& in, uint64_t seed,
                             Mat* pred_raw_out) {
    Mat pred_raw = in.target_scaler.inverse(predict(net, in.x_test));
    Mat filtered(pred_raw.rows, 3);
    for (auto [start, end] : contiguous_runs(in.test_condition, in.test_segment,
                                             in.test_orig)) {
        for (size_t j = 0; j < 3; ++j) {
            std::vector<double> col(end - start);
            for (size_t r = start; r < end; ++r) col[r - start] = pred_raw.at(r, j);
            FilteredSeries f = filter_predictions(col);
            for (size_t r = start; r < end; ++r)
                filtered.at(r, j) = f.values[r - start];
        }
    }

    SeedMetrics metrics;
    metrics.seed = seed;
    for (size_t j = 0; j < 3; ++j) {
        std::vector<double> p(filtered.rows), t(filtered.rows);
        for (size_t r = 0; r < filtered.rows; ++r) {
            p[r] = filtered.at(r, j);
            t[r] = in.y_test_raw.at(r, j);
        }
        metrics.joints[j] = {rmse(p, t), pearson(p, t), r2(p, t)};
    }
    if (pred_raw_out) *pred_raw_out = std::move(filtered);
    return metrics;
}

SeedRun train_seed(const CellInputs& in, const PreparedFeatures& pf,
                   const RunManifest& m, const CellSpec& cell, uint64_t seed) {
    Mat x = in.x_train, y = in.y_train;
    shuffle_train(x, y, seed);

    std::unique_ptr<Network> net =
        build_network(cell.kind, in.input_dim, in.tcn_t, in.tcn_c, m, seed);
    net->init_params();

    SeedRun run;
    run.train = train_network(*net, x, y, in.x_val, in.y_val, in.loss_weights, m);
    run.metrics = evaluate_network(*net, in, seed, &run.test_pred_raw);

    RegressorState& st = run.state;
    st.manifest_text = serialize_manifest(m);
    st.kind = cell.kind;
    st.grid = cell.grid;
    st.seed = seed;
    st.weights_kg = cell.weights;
    st.maxima = pf.maxima;
    st.use_activation = pf.use_activation;
    st.activation = pf.activation;
    st.has_pre_std = in.has_pre_std;
    st.pre_std = in.pre_std;
    st.has_pca = in.has_pca;
    st.pca = in.pca;
    st.has_post_std = in.has_post_std;
    st.post_std = in.post_std;
    st.target_scaler = in.target_scaler;
    st.loss_weights = in.loss_weights;
    st.input_dim = in.input_dim;
    st.tcn_t = in.tcn_t;
    st.tcn_c = in.tcn_c;
    for (auto& [name, values] : net->tensors()) st.tensors.emplace_back(name, *values);
    return run;
}

std::unique_ptr<Network> network_from_state(const RegressorState& st) {
    RunManifest m = parse_manifest(st.manifest_text);
    std::unique_ptr<Network> net =
        build_network(st.kind, st.input_dim, st.tcn_t, st.tcn_c, m, st.seed);
    auto live = net->tensors();
    if (live.size() != st.tensors.size())
        fail(ErrorCategory::Data, "bundle tensor count mismatch");
    for (size_t i = 0; i < live.size(); ++i) {
        if (live[i].first != st.tensors[i].first ||
            live[i].second->size() != st.tensors[i].second.size())
            fail(ErrorCategory::Data, "bundle tensor mismatch at " + st.tensors[i].first);
        *live[i].second = st.tensors[i].second;
    }
    return net;
}

std::string provenance_line(const RunManifest& m) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%016llx",
                  (unsigned long long)manifest_hash(m));
    std::string seeds;
    for (size_t i = 0; i < m.seeds.size(); ++i) {
        if (i) seeds += "+";
        seeds += std::to_string(m.seeds[i]);
    }
    return std::string("version=1.0.0 manifest=") + buf + " seeds=" + seeds;
}

namespace {

void write_band_csv(const std::string& path, const Mat& target,
                    const std::vector<Mat>& preds, const RunManifest& m,
                    const CellSpec& cell) {
    CsvTable table;
    table.meta["provenance"] = provenance_line(m);
    table.meta["cell"] = cell.id();
    table.meta["n_seeds"] = std::to_string(preds.size());
    for (const char* joint : kJointNames) {
        table.columns.push_back(std::string("target_") + joint);
        table.columns.push_back(std::string("mean_") + joint);
        table.columns.push_back(std::string("std_") + joint);
    }
    table.values = Mat(target.rows, 9);
    double n = (double)preds.size();
    for (size_t r = 0; r < target.rows; ++r) {
        for (size_t j = 0; j < 3; ++j) {
            double mean = 0.0;
            for (const Mat& p : preds) mean += p.at(r, j);
            mean /= n;
            double var = 0.0;
            for (const Mat& p : preds) {
                double d = p.at(r, j) - mean;
                var += d * d;
            }
            table.values.at(r, j * 3) = target.at(r, j);
            table.values.at(r, j * 3 + 1) = mean;
            table.values.at(r, j * 3 + 2) = std::sqrt(var / n);
        }
    }
    write_csv(path, table);
}

} // namespace

CellReport run_cell(const RunManifest& m, const CellSpec& cell,
                    const std::vector<uint64_t>& seeds, const std::string& out_dir,
                    bool save_outputs) {
    bool need_truth =
        m.use_activation && m.activation_target == ActivationTarget::Oracle;
    LoadedData data = load_dataset(m, cell.weights, need_truth);
    PreparedFeatures pf =
        prepare_features(data, m, cell.norm_mode(), cell.grid == GridCondition::C);
    CellInputs in = assemble_inputs(pf, m, cell);

    CellReport report;
    report.model = cell.model_name();
    report.weights_label = cell.weights_label();
    report.condition = grid_condition_name(cell.grid);

    std::vector<Mat> preds;
    for (uint64_t seed : seeds) {
        SeedRun run = train_seed(in, pf, m, cell, seed);
        report.per_seed.push_back(run.metrics);
        preds.push_back(std::move(run.test_pred_raw));
        if (save_outputs) {
            fs::create_directories(fs::path(out_dir) / "bundles");
            save_bundle((fs::path(out_dir) / "bundles" /
                         (cell.id() + "_s" + std::to_string(seed) + ".emtb"))
                            .string(),
                        run.state);
        }
    }
    aggregate_cell(report);

    if (save_outputs) {
        fs::create_directories(fs::path(out_dir) / "cells");
        write_cell_csv((fs::path(out_dir) / "cells" / (cell.id() + ".csv")).string(),
                       report, m);
        write_band_csv(
            (fs::path(out_dir) / "cells" / (cell.id() + "_band.csv")).string(),
            in.y_test_raw, preds, m, cell);
    }
    return report;
}

namespace {

int worker_cap(size_t n_cells) {
    const char* env = std::getenv("PIPELINE_THREADS");
    long cap;
    if (env && *env) {
        char* end = nullptr;
        cap = std::strtol(env, &end, 10);
        if (!end || *end != '\0' || cap < 1)
            fail(ErrorCategory::Config, "PIPELINE_THREADS must be a positive integer");
    } else {
        cap = (long)std::thread::hardware_concurrency();
        if (cap < 1) cap = 1;
    }
    return (int)std::min<long>(cap, (long)n_cells);
}

} // namespace

ProtocolResult run_protocol(const RunManifest& m) {
    std::vector<CellSpec> cells = table3_cells(m);
    fs::create_directories(fs::path(m.out_dir) / "cells");
    fs::create_directories(fs::path(m.out_dir) / "bundles");

    int cap = worker_cap(cells.size());
    std::vector<std::pair<pid_t, size_t>> active;
    size_t next = 0;

    auto reap_one = [&]() {
        int status = 0;
        pid_t pid = waitpid(-1, &status, 0);
        if (pid < 0) fail(ErrorCategory::Internal, "waitpid failed");
        auto it = std::find_if(active.begin(), active.end(),
                               [&](auto& p) { return p.first == pid; });
        if (it == active.end()) return;
        size_t idx = it->second;
        active.erase(it);
        int code = WIFEXITED(status) ? WEXITSTATUS(status) : 128;
        if (code != 0)
            fail(ErrorCategory::Protocol, "cell " + cells[idx].id() +
                                              " failed with exit code " +
                                              std::to_string(code));
    };

    std::fflush(nullptr);
    while (next < cells.size() || !active.empty()) {
        while (next < cells.size() && (int)active.size() < cap) {
            pid_t pid = fork();
            if (pid < 0) fail(ErrorCategory::Internal, "fork failed");
            if (pid == 0) {
                int code = 0;
                try {
                    run_cell(m, cells[next], m.seeds, m.out_dir, true);
                } catch (const Error& e) {
                    std::fprintf(stderr, "error[%s]: %s\n", e.category_name(), e.what());
                    code = e.exit_code();
                } catch (const std::exception& e) {
                    std::fprintf(stderr, "error[internal]: %s\n", e.what());
                    code = (int)ErrorCategory::Internal;
                }
                std::fflush(nullptr);
                _exit(code);
            }
            active.emplace_back(pid, next);
            ++next;
        }
        if (!active.empty()) reap_one();
    }
    return aggregate_report(m);
}

ProtocolResult aggregate_report(const RunManifest& m) {
    std::vector<CellSpec> cells = table3_cells(m);
    ProtocolResult result;
    for (const CellSpec& cell : cells) {
        fs::path path = fs::path(m.out_dir) / "cells" / (cell.id() + ".csv");
        if (!fs::exists(path))
            fail(ErrorCategory::MissingInput, "missing cell results " + path.string());
        result.cells.push_back(load_cell_csv(path.string()));
    }

    fs::path report_dir = fs::path(m.out_dir) / "report";
    fs::create_directories(report_dir);
    result.table_path = (report_dir / "table3.csv").string();
    {
        std::ofstream out(result.table_path, std::ios::binary | std::ios::trunc);
        if (!out) fail(ErrorCategory::MissingInput, "cannot open " + result.table_path);
        out << "#provenance=" << provenance_line(m) << "\n" << table3_csv(result.cells);
    }

    // Fig-5-style bands: MLP-B and TCN-C on the full weight set
    CellSpec mlp_cell = cells[3], tcn_cell = cells[5];
    fs::path mlp_band = fs::path(m.out_dir) / "cells" / (mlp_cell.id() + "_band.csv");
    fs::path tcn_band = fs::path(m.out_dir) / "cells" / (tcn_cell.id() + "_band.csv");
    if (fs::exists(mlp_band) && fs::exists(tcn_band)) {
        CsvTable a = read_csv(mlp_band.string());
        CsvTable b = read_csv(tcn_band.string());
        if (a.values.rows == b.values.rows && a.values.rows >= 2) {
            for (size_t j = 0; j < 3; ++j) {
                std::vector<double> target(a.values.rows);
                BandSeries sa{"MLP B", std::vector<double>(a.values.rows),
                              std::vector<double>(a.values.rows)};
                BandSeries sb{"TCN C", std::vector<double>(a.values.rows),
                              std::vector<double>(a.values.rows)};
                for (size_t r = 0; r < a.values.rows; ++r) {
                    target[r] = a.values.at(r, j * 3);
                    sa.mean[r] = a.values.at(r, j * 3 + 1);
                    sa.stdev[r] = a.values.at(r, j * 3 + 2);
                    sb.mean[r] = b.values.at(r, j * 3 + 1);
                    sb.stdev[r] = b.values.at(r, j * 3 + 2);
                }
                std::string path =
                    (report_dir / ("bands_" + std::string(kJointNames[j]) + ".svg"))
                        .string();
                write_band_svg(path, kJointNames[j], target, {sa, sb});
                result.svg_paths.push_back(path);
            }
        }
    }
    return result;
}

// ---------------------------------------------------------------------------
// intermediate CSV formats

namespace {

double movement_code(Movement mv) { return mv == Movement::Grasping ? 0.0 : 1.0; }

Movement movement_from_code(double v) {
    if (v == 0.0) return Movement::Grasping;
    if (v == 1.0) return Movement::Complex;
    fail(ErrorCategory::Schema, "bad movement code " + fmt_double(v));
}

FeatureColumn parse_feature_column(const std::string& name) {
    size_t us = name.find('_');
    if (us == std::string::npos || us == 0 || us + 1 >= name.size())
        fail(ErrorCategory::Schema, "bad feature column " + name);
    FeatureColumn col;
    col.channel = name.substr(0, us);
    std::string rest = name.substr(us + 1);
    size_t digits = rest.size();
    while (digits > 0 && std::isdigit((unsigned char)rest[digits - 1])) --digits;
    col.feature = rest.substr(0, digits);
    col.param = digits < rest.size() ? std::atof(rest.c_str() + digits) : 0.0;
    if (col.feature.empty()) fail(ErrorCategory::Schema, "bad feature column " + name);
    return col;
}

} // namespace

void write_features_csv(const std::string& path, const FeatureMatrix& fm,
                        const RunManifest& m) {
    CsvTable table;
    table.meta["provenance"] = provenance_line(m);
    table.columns = {"weight_kg", "movement", "segment"};
    for (const FeatureColumn& c : fm.columns) table.columns.push_back(c.name());
    table.values = Mat(fm.n_rows(), 3 + fm.n_cols());
    for (size_t r = 0; r < fm.n_rows(); ++r) {
        table.values.at(r, 0) = fm.condition[r].weight_kg;
        table.values.at(r, 1) = movement_code(fm.condition[r].movement);
        table.values.at(r, 2) = (double)fm.segment[r];
        std::copy(fm.rows.row(r), fm.rows.row(r) + fm.n_cols(), table.values.row(r) + 3);
    }
    write_csv(path, table);
}

FeatureMatrix load_features_csv(const std::string& path) {
    CsvTable table = read_csv(path);
    if (table.columns.size() < 4 || table.columns[0] != "weight_kg" ||
        table.columns[1] != "movement" || table.columns[2] != "segment")
        fail(ErrorCategory::Schema, "not a feature matrix: " + path);
    FeatureMatrix fm;
    for (size_t c = 3; c < table.columns.size(); ++c)
        fm.columns.push_back(parse_feature_column(table.columns[c]));
    fm.rows = Mat(table.values.rows, table.columns.size() - 3);
    for (size_t r = 0; r < table.values.rows; ++r) {
        Condition cond;
        cond.weight_kg = table.values.at(r, 0);
        cond.movement = movement_from_code(table.values.at(r, 1));
        fm.condition.push_back(cond);
        fm.segment.push_back((int)std::llround(table.values.at(r, 2)));
        std::copy(table.values.row(r) + 3, table.values.row(r) + table.values.cols,
                  fm.rows.row(r));
    }
    fm.validate();
    return fm;
}

void write_targets_csv(const std::string& path, const TorqueSeries& ts,
                       const RunManifest& m) {
    CsvTable table;
    table.meta["provenance"] = provenance_line(m);
    table.columns = {"weight_kg", "movement", "segment", "tau_e", "tau_sf", "tau_ss"};
    table.values = Mat(ts.n_rows(), 6);
    for (size_t r = 0; r < ts.n_rows(); ++r) {
        table.values.at(r, 0) = ts.condition[r].weight_kg;
        table.values.at(r, 1) = movement_code(ts.condition[r].movement);
        table.values.at(r, 2) = (double)ts.segment[r];
        for (size_t j = 0; j < 3; ++j) table.values.at(r, 3 + j) = ts.raw.at(r, j);
    }
    write_csv(path, table);
}

TorqueSeries load_targets_csv(const std::string& path) {
    CsvTable table = read_csv(path);
    std::vector<std::string> expect = {"weight_kg", "movement", "segment",
                                       "tau_e",     "tau_sf",   "tau_ss"};
    if (table.columns != expect)
        fail(ErrorCategory::Schema, "not a target table: " + path);
    TorqueSeries ts;
    ts.raw = Mat(table.values.rows, 3);
    for (size_t r = 0; r < table.values.rows; ++r) {
        Condition cond;
        cond.weight_kg = table.values.at(r, 0);
        cond.movement = movement_from_code(table.values.at(r, 1));
        ts.condition.push_back(cond);
        ts.segment.push_back((int)std::llround(table.values.at(r, 2)));
        for (size_t j = 0; j < 3; ++j) ts.raw.at(r, j) = table.values.at(r, 3 + j);
    }
    return ts;
}

void write_maxima_csv(const std::string& path, const ChannelMaxima& maxima,
                      const RunManifest& m) {
    CsvTable table;
    table.meta["provenance"] = provenance_line(m);
    table.meta["mode"] =
        maxima.mode == NormalizationMode::Global ? "global" : "condition";
    if (maxima.mode == NormalizationMode::Global) {
        for (size_t ch = 0; ch < kNumChannels; ++ch)
            table.columns.push_back("max_ch" + std::to_string(ch + 1));
        table.values = Mat(1, kNumChannels);
        for (size_t ch = 0; ch < kNumChannels; ++ch)
            table.values.at(0, ch) = maxima.global[ch];
    } else {
        table.columns = {"weight_kg", "movement"};
        for (size_t ch = 0; ch < kNumChannels; ++ch)
            table.columns.push_back("max_ch" + std::to_string(ch + 1));
        table.values = Mat(maxima.per_condition.size(), 2 + kNumChannels);
        size_t r = 0;
        for (const auto& [cond, maxes] : maxima.per_condition) {
            table.values.at(r, 0) = cond.weight_kg;
            table.values.at(r, 1) = movement_code(cond.movement);
            for (size_t ch = 0; ch < kNumChannels; ++ch)
                table.values.at(r, 2 + ch) = maxes[ch];
            ++r;
        }
    }
    write_csv(path, table);
}

ChannelMaxima load_maxima_csv(const std::string& path) {
    CsvTable table = read_csv(path);
    auto it = table.meta.find("mode");
    if (it == table.meta.end())
        fail(ErrorCategory::Schema, "maxima table missing mode meta: " + path);
    ChannelMaxima maxima;
    if (it->second == "global") {
        maxima.mode = NormalizationMode::Global;
        if (table.values.rows != 1 || table.values.cols != kNumChannels)
            fail(ErrorCategory::Schema, "bad global maxima table: " + path);
        maxima.global.assign(table.values.row(0), table.values.row(0) + kNumChannels);
    } else if (it->second == "condition") {
        maxima.mode = NormalizationMode::ConditionSpecific;
        if (table.values.cols != 2 + kNumChannels)
            fail(ErrorCategory::Schema, "bad condition maxima table: " + path);
        for (size_t r = 0; r < table.values.rows; ++r) {
            Condition cond;
            cond.weight_kg = table.values.at(r, 0);
            cond.movement = movement_from_code(table.values.at(r, 1));
            std::vector<double> maxes(kNumChannels);
            for (size_t ch = 0; ch < kNumChannels; ++ch)
                maxes[ch] = table.values.at(r, 2 + ch);
            maxima.per_condition[cond] = maxes;
        }
    } else {
        fail(ErrorCategory::Schema, "unknown maxima mode " + it->second);
    }
    return maxima;
}

void write_activation_csv(const std::string& path,
                          const std::vector<ActivationFit>& fits,
                          const RunManifest& m) {
    CsvTable table;
    table.meta["provenance"] = provenance_line(m);
    table.columns = {"channel", "alpha",     "beta1",     "beta2",
                     "delay",   "objective", "degenerate"};
    table.values = Mat(fits.size(), 7);
    for (size_t ch = 0; ch < fits.size(); ++ch) {
        const ActivationFit& f = fits[ch];
        table.values.at(ch, 0) = (double)(ch + 1);
        table.values.at(ch, 1) = f.params.alpha;
        table.values.at(ch, 2) = f.params.beta1;
        table.values.at(ch, 3) = f.params.beta2;
        table.values.at(ch, 4) = (double)f.params.delay_samples;
        table.values.at(ch, 5) = f.objective;
        table.values.at(ch, 6) = f.degenerate ? 1.0 : 0.0;
    }
    write_csv(path, table);
}

std::vector<ActivationFit> load_activation_csv(const std::string& path) {
    CsvTable table = read_csv(path);
    if (table.values.cols != 7)
        fail(ErrorCategory::Schema, "bad activation table: " + path);
    std::vector<ActivationFit> fits;
    for (size_t r = 0; r < table.values.rows; ++r) {
        ActivationFit f;
        f.params.alpha = table.values.at(r, 1);
        f.params.beta1 = table.values.at(r, 2);
        f.params.beta2 = table.values.at(r, 3);
        f.params.delay_samples = (int)std::llround(table.values.at(r, 4));
        f.objective = table.values.at(r, 5);
        f.degenerate = table.values.at(r, 6) != 0.0;
        fits.push_back(f);
    }
    return fits;
}

void write_cell_csv(const std::string& path, const CellReport& report,
                    const RunManifest& m) {
    CsvTable table;
    table.meta["provenance"] = provenance_line(m);
    table.meta["model"] = report.model;
    table.meta["weights"] = report.weights_label;
    table.meta["condition"] = std::string(1, report.condition);
    table.columns = {"seed"};
    for (const char* joint : kJointNames)
        for (const char* metric : {"rmse", "rho", "r2"})
            table.columns.push_back(std::string(joint) + "_" + metric);
    table.values = Mat(report.per_seed.size(), 10);
    for (size_t r = 0; r < report.per_seed.size(); ++r) {
        const SeedMetrics& s = report.per_seed[r];
        table.values.at(r, 0) = (double)s.seed;
        for (size_t j = 0; j < 3; ++j) {
            table.values.at(r, 1 + j * 3) = s.joints[j].rmse;
            table.values.at(r, 2 + j * 3) = s.joints[j].rho;
            table.values.at(r, 3 + j * 3) = s.joints[j].r2;
        }
    }
    write_csv(path, table);
}

CellReport load_cell_csv(const std::string& path) {
    CsvTable table = read_csv(path);
    if (table.values.cols != 10 || table.meta.find("model") == table.meta.end() ||
        table.meta.find("weights") == table.meta.end() ||
        table.meta.find("condition") == table.meta.end() ||
        table.meta["condition"].size() != 1)
        fail(ErrorCategory::Schema, "bad cell results table: " + path);
    CellReport report;
    report.model = table.meta["model"];
    report.weights_label = table.meta["weights"];
    report.condition = table.meta["condition"][0];
    for (size_t r = 0; r < table.values.rows; ++r) {
        SeedMetrics s;
        s.seed = (uint64_t)std::llround(table.values.at(r, 0));
        for (size_t j = 0; j < 3; ++j) {
            s.joints[j].rmse = table.values.at(r, 1 + j * 3);
            s.joints[j].rho = table.values.at(r, 2 + j * 3);
            s.joints[j].r2 = table.values.at(r, 3 + j * 3);
        }
        report.per_seed.push_back(s);
    }
    aggregate_cell(report);
    return report;
}

} // namespace emt
