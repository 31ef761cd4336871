#pragma once

#include <string>
#include <vector>

#include "emt/manifest.hpp"
#include "emt/types.hpp"

namespace emt {

struct SynthSpec {
    double trial_duration_s = 10.0;
    int trials_per_condition = 20;
    double noise_level = 1.0;
    uint64_t seed = 99;
    BodyParameters body;
    double gravity = 9.81;
    Eq1Variant eq1_variant = Eq1Variant::AsPrinted;
    double sample_rate_hz = 500.0;

    static SynthSpec from_manifest(const RunManifest& m);
};

// Rigid-arm marker paths: fixed shoulders, right arm driven by smooth
// raised-cosine joint profiles, left arm at rest. Segment lengths are exact.
MarkerTrajectory synth_kinematics(const SynthSpec& spec, const Condition& condition,
                                  int trial);

struct SynthEmg {
    EmgRecording emg;
    Mat envelope; // [n_samples x 8] ground-truth activation envelope
};

// Band-limited carrier (random-phase cosine comb plus Gaussian roughness)
// amplitude-modulated by a torque-driven envelope; a per-(condition, channel)
// electrode gain scales the recorded signal but not the returned envelope.
SynthEmg synth_emg(const MarkerTrajectory& traj, const Condition& condition,
                   const SynthSpec& spec, int trial);

SynthEmg synth_rest(const SynthSpec& spec);

// Per-channel electrode gain for a condition (drifts between conditions).
double synth_gain(const SynthSpec& spec, const Condition& condition, size_t channel);

struct DatasetPaths {
    std::string rest;
    // parallel arrays, one entry per (condition, trial)
    std::vector<Condition> condition;
    std::vector<int> trial;
    std::vector<std::string> emg, markers, truth;
};

DatasetPaths dataset_paths(const RunManifest& m);

// Writes rest + per-trial EMG, marker, and truth CSVs under m.data_dir.
DatasetPaths generate_dataset(const RunManifest& m);

void write_truth_csv(const std::string& path, const Mat& envelope,
                     double rate_hz, const Condition& cond);
Mat load_truth_csv(const std::string& path);

} // namespace emt
