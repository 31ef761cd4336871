#pragma once

#include <memory>
#include <string>
#include <vector>

#include "emt/bundle.hpp"
#include "emt/eval.hpp"
#include "emt/features.hpp"
#include "emt/manifest.hpp"
#include "emt/models.hpp"
#include "emt/synth.hpp"
#include "emt/torque.hpp"

namespace emt {

struct CellSpec {
    ModelKind kind = ModelKind::Mlp;
    GridCondition grid = GridCondition::B;
    std::vector<double> weights;

    std::string model_name() const;
    std::string weights_label() const; // e.g. "0.00+1.10+1.85"
    std::string id() const;            // filename-safe cell identifier
    NormalizationMode norm_mode() const;
};

// The canonical seven-row experiment grid: MLP x {heavy, all} x {A, B},
// TCN-C x {heavy, all}, TCN-B on all weights.
std::vector<CellSpec> table3_cells(const RunManifest& m);

struct LoadedData {
    EmgRecording rest;
    std::vector<EmgRecording> emg; // per (condition, trial), condition-major
    std::vector<MarkerTrajectory> markers;
    std::vector<Mat> truth; // ground-truth envelopes, only when requested
    std::vector<Condition> condition;
    std::vector<int> trial;
};

LoadedData load_dataset(const RunManifest& m, const std::vector<double>& weights,
                        bool need_truth);

struct PreparedFeatures {
    FeatureMatrix features;
    TorqueSeries targets;
    ChannelMaxima maxima;
    bool use_activation = false;
    std::vector<ActivationFit> activation; // per channel
    // per-recording final signals, kept for the preprocess subcommand
    std::vector<EmgRecording> processed, bandpassed;
};

// baseline -> bandpass (tap) -> variance -> normalize -> smooth/activation ->
// features + windowed reference torques
PreparedFeatures prepare_features(const LoadedData& data, const RunManifest& m,
                                  NormalizationMode mode, bool time_points_only,
                                  bool keep_signals = false);

// Seed-independent per-cell assembly: split, history stacking, scaling, PCA,
// one-hot, and target scaling. x_train is left unshuffled.
struct CellInputs {
    Mat x_train, y_train, x_val, y_val, x_test; // y scaled to [-1,1]
    Mat y_test_raw;                             // N*m
    std::vector<Condition> test_condition;
    std::vector<int> test_segment;
    std::vector<size_t> test_orig;

    MinMaxScaler target_scaler;
    nn::LossWeights loss_weights;
    bool has_pre_std = false, has_pca = false, has_post_std = false;
    Standardizer pre_std, post_std;
    PcaModel pca;
    uint64_t input_dim = 0, tcn_t = 0, tcn_c = 0;
};

CellInputs assemble_inputs(const PreparedFeatures& pf, const RunManifest& m,
                           const CellSpec& cell);

struct SeedRun {
    RegressorState state;
    SeedMetrics metrics;
    Mat test_pred_raw; // filtered predictions, N*m, [n_test x 3]
    TrainResult train;
};

SeedRun train_seed(const CellInputs& in, const PreparedFeatures& pf,
                   const RunManifest& m, const CellSpec& cell, uint64_t seed);

// Predict the test split, filter each contiguous run, score per joint.
SeedMetrics evaluate_network(Network& net, const CellInputs& in, uint64_t seed,
                             Mat* pred_raw_out = nullptr);

std::unique_ptr<Network> network_from_state(const RegressorState& state);

// Runs one cell over the given seeds in-process, optionally saving bundles
// and the per-seed metrics CSV under out_dir.
CellReport run_cell(const RunManifest& m, const CellSpec& cell,
                    const std::vector<uint64_t>& seeds, const std::string& out_dir,
                    bool save_outputs);

struct ProtocolResult {
    std::vector<CellReport> cells;
    std::string table_path;
    std::vector<std::string> svg_paths;
};

// Full Table-III protocol: one worker process per cell (capped by
// PIPELINE_THREADS), then deterministic aggregation into report files.
ProtocolResult run_protocol(const RunManifest& m);

// Aggregate previously written per-cell CSVs into the report files.
ProtocolResult aggregate_report(const RunManifest& m);

std::string provenance_line(const RunManifest& m);

// intermediate-file helpers used by the subcommands
void write_features_csv(const std::string& path, const FeatureMatrix& fm,
                        const RunManifest& m);
FeatureMatrix load_features_csv(const std::string& path);
void write_targets_csv(const std::string& path, const TorqueSeries& ts,
                       const RunManifest& m);
TorqueSeries load_targets_csv(const std::string& path);
void write_maxima_csv(const std::string& path, const ChannelMaxima& maxima,
                      const RunManifest& m);
ChannelMaxima load_maxima_csv(const std::string& path);
void write_activation_csv(const std::string& path,
                          const std::vector<ActivationFit>& fits,
                          const RunManifest& m);
std::vector<ActivationFit> load_activation_csv(const std::string& path);
void write_cell_csv(const std::string& path, const CellReport& report,
                    const RunManifest& m);
CellReport load_cell_csv(const std::string& path);

} // namespace emt
