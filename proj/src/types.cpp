#include "emt/types.hpp"

#include <cmath>
#include <cstdio>

namespace emt {

std::string movement_name(Movement m) {
    return m == Movement::Grasping ? "grasping" : "complex";
}

Movement movement_from_name(const std::string& s) {
    if (s == "grasping") return Movement::Grasping;
    if (s == "complex") return Movement::Complex;
    fail(ErrorCategory::Schema, "unknown movement '" + s + "'");
}

std::string Condition::label() const {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.2fkg_%s", weight_kg, movement_name(movement).c_str());
    return buf;
}

std::vector<std::string> default_channel_names() {
    return {"ch1", "ch2", "ch3", "ch4", "ch5", "ch6", "ch7", "ch8"};
}

const std::array<std::string, kNumMarkers>& marker_names() {
    static const std::array<std::string, kNumMarkers> names = {
        "l_shoulder", "r_shoulder", "l_elbow", "r_elbow", "l_wrist", "r_wrist"};
    return names;
}

void EmgRecording::validate() const {
    if (sample_rate_hz <= 0)
        fail(ErrorCategory::Data, "EMG sample rate must be positive");
    if (channels.size() != kNumChannels || samples.cols != kNumChannels)
        fail(ErrorCategory::Shape, "EMG recording must have 8 channels");
    for (size_t i = 0; i < samples.a.size(); ++i)
        if (!std::isfinite(samples.a[i]))
            fail(ErrorCategory::Data,
                 "non-finite EMG sample at row " + std::to_string(i / samples.cols));
    if (condition.weight_kg < 0)
        fail(ErrorCategory::Data, "negative condition weight");
}

void MarkerTrajectory::validate() const {
    if (sample_rate_hz <= 0)
        fail(ErrorCategory::Data, "marker sample rate must be positive");
    if (positions.size() != samples * kNumMarkers * 3)
        fail(ErrorCategory::Shape, "marker tensor size mismatch");
    for (double v : positions)
        if (!std::isfinite(v)) fail(ErrorCategory::Data, "non-finite marker coordinate");
}

void BodyParameters::validate() const {
    if (body_mass_kg <= 0 || hand_length_m <= 0 || upper_arm_length_m <= 0 ||
        forearm_length_m <= 0)
        fail(ErrorCategory::Config, "body parameters must be strictly positive");
}

} // namespace emt
