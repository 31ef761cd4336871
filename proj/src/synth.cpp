#include "emt/synth.hpp"

#include <cmath>
#include <filesystem>

#include "emt/csv.hpp"
#include "emt/error.hpp"
#include "emt/filter.hpp"
#include "emt/rng.hpp"
#include "emt/torque.hpp"

namespace emt {
namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kShoulderHalfWidth = 0.18; // m
constexpr double kShoulderHeight = 1.40;    // m
constexpr double kDcOffset = 0.02;          // mV
constexpr double kNoiseFloor = 0.01;        // mV, scaled by spec.noise_level

// torque-to-envelope mixing, one row per channel (elbow, front, side)
constexpr double kMixing[kNumChannels][3] = {
    {0.090, 0.015, 0.006}, // biceps
    {0.066, 0.012, 0.009}, // triceps
    {0.078, 0.021, 0.003}, // brachioradialis
    {0.060, 0.006, 0.006}, // wrist flexors
    {0.012, 0.084, 0.012}, // anterior deltoid
    {0.006, 0.018, 0.090}, // medial deltoid
    {0.015, 0.060, 0.036}, // pectoralis major
    {0.003, 0.030, 0.072}, // upper trapezius
};
constexpr double kTonicBase = 0.004; // mV^2
constexpr double kTonicPerKg[kNumChannels] = {0.050, 0.040, 0.045, 0.035,
                                              0.020, 0.015, 0.025, 0.010};

uint64_t fnv1a(const std::string& s) {
    uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

uint64_t derived_seed(uint64_t base, const std::string& label) {
    return base ^ fnv1a(label);
}

// C1 bump: cos^2(pi*v) inside |v| <= 1/2, zero outside
double lobe(double v) {
    if (std::fabs(v) >= 0.5) return 0.0;
    double c = std::cos(kPi * v);
    return c * c;
}

struct Profile {
    std::vector<double> center, width, amp;

    double eval(double t) const {
        double v = 0.0;
        for (size_t k = 0; k < center.size(); ++k)
            v += amp[k] * lobe((t - center[k]) / width[k]);
        return v;
    }
};

Profile make_profile(Rng& rng, double t0, double t1, int lobes, double amp_lo,
                     double amp_hi) {
    Profile p;
    double span = (t1 - t0) / lobes;
    for (int k = 0; k < lobes; ++k) {
        double center = t0 + span * (k + 0.5) + span * 0.1 * (rng.uniform() - 0.5);
        double width = span * (0.85 + 0.1 * rng.uniform());
        p.center.push_back(center);
        p.width.push_back(width);
        p.amp.push_back(amp_lo + (amp_hi - amp_lo) * rng.uniform());
    }
    return p;
}

double deg(double d) { return d * kPi / 180.0; }

} // namespace

SynthSpec SynthSpec::from_manifest(const RunManifest& m) {
    SynthSpec spec;
    spec.trial_duration_s = m.synth_duration_s;
    spec.trials_per_condition = m.synth_trials;
    spec.noise_level = m.synth_noise;
    spec.seed = m.synth_seed;
    spec.body = m.body;
    spec.gravity = m.gravity;
    spec.eq1_variant = m.eq1_variant;
    spec.sample_rate_hz = m.sample_rate_hz;
    return spec;
}

MarkerTrajectory synth_kinematics(const SynthSpec& spec, const Condition& condition,
                                  int trial) {
    if (spec.trial_duration_s <= 0.0)
        fail(ErrorCategory::Parameter, "synth: duration must be positive");
    if (spec.noise_level < 0.0)
        fail(ErrorCategory::Parameter, "synth: noise level must be >= 0");
    size_t n = (size_t)std::llround(spec.trial_duration_s * spec.sample_rate_hz);
    Rng rng(derived_seed(spec.seed,
                         "kin/" + condition.label() + "/t" + std::to_string(trial)));

    double t_end = spec.trial_duration_s;
    double active0 = 0.5, active1 = t_end - 0.5;
    if (active1 <= active0) {
        active0 = 0.0;
        active1 = t_end;
    }

    Profile phi_s, theta_e, delta_s, delta_f;
    if (condition.movement == Movement::Grasping) {
        int reps = std::max(1, (int)std::lround((active1 - active0) / 4.0));
        phi_s = make_profile(rng, active0, active1, reps, deg(38), deg(54));
        theta_e = make_profile(rng, active0, active1, reps, deg(40), deg(65));
        delta_s = make_profile(rng, active0, active1, reps, deg(2), deg(6));
        delta_f = make_profile(rng, active0, active1, reps, deg(1), deg(5));
    } else {
        int reps = std::max(2, (int)std::lround((active1 - active0) / 3.0));
        phi_s = make_profile(rng, active0, active1, reps, deg(20), deg(54));
        theta_e = make_profile(rng, active0, active1, reps + 1, deg(25), deg(70));
        delta_s = make_profile(rng, active0, active1, reps, deg(8), deg(30));
        delta_f = make_profile(rng, active0, active1, reps, deg(4), deg(14));
    }

    MarkerTrajectory traj;
    traj.sample_rate_hz = spec.sample_rate_hz;
    traj.samples = n;
    traj.condition = condition;
    traj.positions.assign(n * kNumMarkers * 3, 0.0);

    const double l_ua = spec.body.upper_arm_length_m;
    const double l_fa = spec.body.forearm_length_m;
    const double ls[3] = {0.0, -kShoulderHalfWidth, kShoulderHeight};
    const double rs[3] = {0.0, kShoulderHalfWidth, kShoulderHeight};

    for (size_t t = 0; t < n; ++t) {
        double tt = (double)t / spec.sample_rate_hz;
        double ps = phi_s.eval(tt);
        double pf = ps + theta_e.eval(tt); // forearm flexed beyond the upper arm
        double ds = delta_s.eval(tt);
        double df = ds + delta_f.eval(tt);

        auto dir = [](double phi, double delta, double* out) {
            out[0] = std::sin(phi) * std::cos(delta);
            out[1] = std::sin(delta);
            out[2] = -std::cos(phi) * std::cos(delta);
        };
        double du[3], dfv[3];
        dir(ps, ds, du);
        dir(pf, df, dfv);

        double* l_sh = traj.at(t, 0);
        double* r_sh = traj.at(t, 1);
        double* l_el = traj.at(t, 2);
        double* r_el = traj.at(t, 3);
        double* l_wr = traj.at(t, 4);
        double* r_wr = traj.at(t, 5);
        for (int i = 0; i < 3; ++i) {
            l_sh[i] = ls[i];
            r_sh[i] = rs[i];
            l_el[i] = ls[i];
            l_wr[i] = ls[i];
            r_el[i] = rs[i] + l_ua * du[i];
            r_wr[i] = r_el[i] + l_fa * dfv[i];
        }
        l_el[2] -= l_ua;
        l_wr[2] -= l_ua + l_fa;
    }
    traj.validate();
    return traj;
}

double synth_gain(const SynthSpec& spec, const Condition& condition, size_t channel) {
    // Electrode-skin coupling drifts between condition blocks; log-uniform on
    // [1/3, 3] so amplitude is only comparable after normalization.
    Rng rng(derived_seed(spec.seed, "gain/" + condition.label() + "/ch" +
                                        std::to_string(channel)));
    return std::exp(std::log(3.0) * (2.0 * rng.uniform() - 1.0));
}

namespace {

// Carrier = random-phase cosine comb (lines at multiples of fs/50 stay
// orthogonal over any variance window, so sliding power is exactly flat and
// the variance stage reads the squared envelope cleanly) blended with
// band-limited Gaussian noise whose weight sets the stochastic roughness.
std::vector<double> band_limited_unit_noise(Rng& rng, size_t n, double fs,
                                            double roughness) {
    const double lam = std::clamp(roughness, 0.0, 1.0);
    const double df = fs / 50.0; // 10 Hz at the default rate
    const int k_lo = 5, k_hi = 20; // 50..200 Hz

    std::vector<double> out(n, 0.0);
    const double comb_amp =
        (1.0 - lam) * std::sqrt(2.0 / (double)(k_hi - k_lo + 1));
    for (int k = k_lo; k <= k_hi; ++k) {
        double w = 2.0 * kPi * (double)k * df / fs;
        double phi = 2.0 * kPi * rng.uniform();
        for (size_t i = 0; i < n; ++i) out[i] += comb_amp * std::cos(w * (double)i + phi);
    }
    std::vector<double> g(n);
    for (double& v : g) v = rng.normal();
    SosFilter bp = design_bandpass(4, 30.0, 210.0, fs);
    g = sosfilt(bp, g);
    double gv = 0.0;
    for (double v : g) gv += v * v;
    gv = std::sqrt(gv / (double)n);
    if (gv > 0.0)
        for (size_t i = 0; i < n; ++i) out[i] += lam * g[i] / gv;

    double mean = 0.0;
    for (double v : out) mean += v;
    mean /= (double)n;
    double var = 0.0;
    for (double v : out) var += (v - mean) * (v - mean);
    var /= (double)n;
    double scale = var > 0.0 ? 1.0 / std::sqrt(var) : 1.0;
    for (double& v : out) v = (v - mean) * scale;
    return out;
}

SynthEmg emg_from_envelope(const Mat& env, const Condition& condition,
                           const SynthSpec& spec, const std::string& tag,
                           bool is_rest) {
    size_t n = env.rows;
    SynthEmg out;
    out.envelope = env;
    out.emg.sample_rate_hz = spec.sample_rate_hz;
    out.emg.channels = default_channel_names();
    out.emg.samples = Mat(n, kNumChannels);
    out.emg.condition = condition;
    out.emg.is_rest = is_rest;

    for (size_t ch = 0; ch < kNumChannels; ++ch) {
        Rng rng(derived_seed(spec.seed, tag + "/ch" + std::to_string(ch)));
        std::vector<double> carrier = band_limited_unit_noise(
            rng, n, spec.sample_rate_hz, 0.5 * spec.noise_level);
        std::vector<double> floor_noise =
            band_limited_unit_noise(rng, n, spec.sample_rate_hz, 1.0);
        double gain = is_rest ? 1.0 : synth_gain(spec, condition, ch);
        for (size_t t = 0; t < n; ++t) {
            double amp = gain * std::max(0.0, env.at(t, ch));
            out.emg.samples.at(t, ch) =
                kDcOffset + amp * carrier[t] +
                spec.noise_level * kNoiseFloor * floor_noise[t];
        }
    }
    out.emg.validate();
    return out;
}

} // namespace

SynthEmg synth_emg(const MarkerTrajectory& traj, const Condition& condition,
                   const SynthSpec& spec, int trial) {
    traj.validate();
    JointAngles angles = compute_angles(traj);
    AnthropometricTable table = AnthropometricTable::for_sex(spec.body.sex);
    RawTorques torques = compute_torques(angles, spec.body, table, condition.weight_kg,
                                         spec.gravity, spec.eq1_variant);

    size_t n = traj.n_samples();
    Mat env(n, kNumChannels);
    for (size_t ch = 0; ch < kNumChannels; ++ch) {
        double tonic = kTonicBase + kTonicPerKg[ch] * condition.weight_kg;
        for (size_t t = 0; t < n; ++t) {
            // amplitude envelope, linear in torque demand; the carrier's
            // windowed variance reads env^2
            env.at(t, ch) = tonic + kMixing[ch][0] * std::fabs(torques.tau_e[t]) +
                            kMixing[ch][1] * std::fabs(torques.tau_sf[t]) +
                            kMixing[ch][2] * std::fabs(torques.tau_ss[t]);
        }
    }
    return emg_from_envelope(env, condition, spec,
                             "emg/" + condition.label() + "/t" + std::to_string(trial),
                             false);
}

SynthEmg synth_rest(const SynthSpec& spec) {
    size_t n = (size_t)std::llround(spec.trial_duration_s * spec.sample_rate_hz);
    Condition cond{0.0, Movement::Grasping};
    Mat env(n, kNumChannels);
    for (size_t ch = 0; ch < kNumChannels; ++ch)
        for (size_t t = 0; t < n; ++t) env.at(t, ch) = kTonicBase;
    return emg_from_envelope(env, cond, spec, "rest", true);
}

void write_truth_csv(const std::string& path, const Mat& envelope, double rate_hz,
                     const Condition& cond) {
    CsvTable table;
    table.meta["rate_hz"] = fmt_double(rate_hz);
    table.meta["weight_kg"] = fmt_double(cond.weight_kg);
    table.meta["movement"] = movement_name(cond.movement);
    for (size_t ch = 0; ch < kNumChannels; ++ch)
        table.columns.push_back("env_ch" + std::to_string(ch + 1));
    table.values = envelope;
    write_csv(path, table);
}

Mat load_truth_csv(const std::string& path) {
    CsvTable table = read_csv(path);
    if (table.columns.size() != kNumChannels)
        fail(ErrorCategory::Schema, "truth csv: expected 8 envelope columns in " + path);
    return table.values;
}

DatasetPaths dataset_paths(const RunManifest& m) {
    DatasetPaths paths;
    std::filesystem::path dir(m.data_dir);
    paths.rest = (dir / "rest.csv").string();
    for (const Condition& cond : m.conditions()) {
        for (int trial = 0; trial < m.synth_trials; ++trial) {
            std::string stem = cond.label() + "_t" + std::to_string(trial);
            paths.condition.push_back(cond);
            paths.trial.push_back(trial);
            paths.emg.push_back((dir / ("emg_" + stem + ".csv")).string());
            paths.markers.push_back((dir / ("markers_" + stem + ".csv")).string());
            paths.truth.push_back((dir / ("truth_" + stem + ".csv")).string());
        }
    }
    return paths;
}

DatasetPaths generate_dataset(const RunManifest& m) {
    SynthSpec spec = SynthSpec::from_manifest(m);
    DatasetPaths paths = dataset_paths(m);
    std::filesystem::create_directories(m.data_dir);

    SynthEmg rest = synth_rest(spec);
    write_emg_csv(paths.rest, rest.emg);

    for (size_t i = 0; i < paths.condition.size(); ++i) {
        const Condition& cond = paths.condition[i];
        int trial = paths.trial[i];
        MarkerTrajectory traj = synth_kinematics(spec, cond, trial);
        SynthEmg rec = synth_emg(traj, cond, spec, trial);
        write_markers_csv(paths.markers[i], traj);
        write_emg_csv(paths.emg[i], rec.emg);
        write_truth_csv(paths.truth[i], rec.envelope, spec.sample_rate_hz, cond);
    }
    return paths;
}

} // namespace emt
