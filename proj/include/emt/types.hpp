#pragma once

#include <array>
#include <string>
#include <vector>

#include "emt/error.hpp"
#include "emt/linalg.hpp"

namespace emt {

enum class Movement { Grasping, Complex };

std::string movement_name(Movement m);
Movement movement_from_name(const std::string& s);

struct Condition {
    double weight_kg = 0.0;
    Movement movement = Movement::Grasping;

    bool operator==(const Condition& o) const {
        return weight_kg == o.weight_kg && movement == o.movement;
    }
    bool operator<(const Condition& o) const {
        if (weight_kg != o.weight_kg) return weight_kg < o.weight_kg;
        return static_cast<int>(movement) < static_cast<int>(o.movement);
    }
    std::string label() const;
};

constexpr size_t kNumChannels = 8;
constexpr size_t kNumMarkers = 6;

std::vector<std::string> default_channel_names();

// Fixed marker order; the right arm is the instrumented side.
const std::array<std::string, kNumMarkers>& marker_names();

struct EmgRecording {
    double sample_rate_hz = 500.0;
    std::vector<std::string> channels;
    Mat samples; // [n_samples x 8], millivolts
    Condition condition;
    bool is_rest = false;

    size_t n_samples() const { return samples.rows; }
    void validate() const;
};

struct MarkerTrajectory {
    double sample_rate_hz = 500.0;
    std::vector<double> positions; // [n_samples x 6 x 3], meters
    size_t samples = 0;
    Condition condition;

    size_t n_samples() const { return samples; }
    const double* at(size_t t, size_t marker) const {
        return positions.data() + (t * kNumMarkers + marker) * 3;
    }
    double* at(size_t t, size_t marker) {
        return positions.data() + (t * kNumMarkers + marker) * 3;
    }
    void validate() const;
};

enum class Sex { Male, Female };

struct BodyParameters {
    double body_mass_kg = 70.0;
    Sex sex = Sex::Male;
    double hand_length_m = 0.19;
    double upper_arm_length_m = 0.30;
    double forearm_length_m = 0.27;

    void validate() const;
};

} // namespace emt
