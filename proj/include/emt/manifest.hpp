#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "emt/types.hpp"

namespace emt {

enum class NormalizationMode { Global, ConditionSpecific };
enum class ModelKind { Mlp, Tcn };
enum class Eq1Variant { AsPrinted, MomentArmX };
enum class ActivationTarget { Smoothed, Oracle };

struct RunManifest {
    // sampling / filtering
    double sample_rate_hz = 500.0;
    int filter_order = 4;
    double low_cut_hz = 15.0;
    double high_cut_hz = 225.0;
    double smooth_cut_hz = 5.0;
    int variance_window = 50;

    // segmentation
    double window_ms = 100.0;
    double overlap = 0.5;

    // preprocessing / features
    NormalizationMode norm_mode = NormalizationMode::ConditionSpecific;
    bool use_time_points = true;
    bool use_rms = true;
    bool use_wl = true;
    bool use_ssc = true;
    bool use_band_power = true;
    bool use_morlet = true;
    bool use_activation = true;
    ActivationTarget activation_target = ActivationTarget::Smoothed;

    // feature post-processing
    double pca_retain = 0.95;
    int history = 4;
    double test_fraction = 0.10;
    double val_fraction = 0.15;
    uint64_t split_seed = 1234;

    // model / training
    ModelKind model = ModelKind::Mlp;
    std::vector<uint64_t> seeds = {1, 7, 25, 45, 70};
    std::vector<int> mlp_hidden = {128, 64};
    double dropout = 0.10;
    double l2 = 0.001;
    double learning_rate = 0.001;
    int batch_size = 64;
    int max_epochs = 200;
    int patience = 20;
    double huber_delta = 1.0;
    int tcn_filters = 32;
    int tcn_kernel = 3;
    int tcn_dense = 64;

    // torque
    Eq1Variant eq1_variant = Eq1Variant::AsPrinted;
    BodyParameters body;
    double gravity = 9.81;

    // synthetic data
    int synth_trials = 20;
    double synth_duration_s = 10.0;
    double synth_noise = 1.0;
    uint64_t synth_seed = 99;
    std::vector<double> weights_kg = {0.0, 1.10, 1.85};

    // paths
    std::string data_dir = "data";
    std::string out_dir = "out";

    int window_len_samples() const;
    int hop_samples() const;
    std::vector<Condition> conditions() const;
    void validate() const;
};

RunManifest load_manifest(const std::string& path);
RunManifest parse_manifest(const std::string& text);
std::string serialize_manifest(const RunManifest& m);
void save_manifest(const std::string& path, const RunManifest& m);

// FNV-1a 64 of the serialized manifest; used in provenance lines.
uint64_t manifest_hash(const RunManifest& m);

} // namespace emt
