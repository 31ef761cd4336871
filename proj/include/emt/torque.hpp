#pragma once

#include <vector>

#include "emt/features.hpp"
#include "emt/manifest.hpp"
#include "emt/types.hpp"

namespace emt {

struct JointAngles {
    std::vector<double> theta_s; // shoulder adduction, radians
    std::vector<double> theta_e; // elbow extension, radians
};

// Segment masses as % of body mass and COM distances as % of segment length.
struct AnthropometricTable {
    double mass_pct_ua, mass_pct_fa, mass_pct_h;
    double com_pct_ua, com_pct_fa, com_pct_h;

    static AnthropometricTable for_sex(Sex sex);
};

// Lab frame: x forward (sagittal), y lateral (left->right shoulder), z up;
// gravity along -z. The right arm is the instrumented side.
JointAngles compute_angles(const MarkerTrajectory& traj);

// x = l_fa * sin(theta_e - theta_s), y = l_ua * sin(theta_s)
std::pair<std::vector<double>, std::vector<double>> perpendicular_distances(
    const JointAngles& angles, const BodyParameters& body);

struct RawTorques {
    std::vector<double> tau_e;  // elbow
    std::vector<double> tau_s;  // shoulder (unprojected)
    std::vector<double> tau_sf; // sagittal projection
    std::vector<double> tau_ss; // frontal projection
};

RawTorques compute_torques(const JointAngles& angles, const BodyParameters& body,
                           const AnthropometricTable& table, double m_obj,
                           double gravity = 9.81,
                           Eq1Variant variant = Eq1Variant::AsPrinted);

// Per-output min-max mapping to [-1, 1], fitted on the training partition.
struct MinMaxScaler {
    std::vector<double> lo, hi; // per output channel

    void fit(const Mat& rows);
    Mat transform(const Mat& rows) const;
    Mat inverse(const Mat& rows) const;
};

struct TorqueSeries {
    Mat raw;    // [n_windows x 3]: tau_e, tau_sf, tau_ss in N*m
    Mat scaled; // [-1, 1] once a scaler is fitted
    std::vector<Condition> condition;
    std::vector<int> segment;

    size_t n_rows() const { return raw.rows; }
    void append(const TorqueSeries& other);
};

// 5 Hz zero-phase low-pass -> feature window plan -> last sample per window.
TorqueSeries targets_from_torques(const RawTorques& raw, const Condition& cond,
                                  const RunManifest& m, int segment_id = 0);

} // namespace emt
