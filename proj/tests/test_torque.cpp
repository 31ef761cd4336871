#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "emt/error.hpp"
#include "emt/manifest.hpp"
#include "emt/rng.hpp"
#include "emt/torque.hpp"
#include "emt/types.hpp"

using namespace emt;

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kG = 9.81;

// hand-transcribed equilibrium equations, kept separate from the library
struct HandTorques {
    double tau_e, tau_s, tau_sf, tau_ss;
};

HandTorques hand_torques(double theta_s, double theta_e, const BodyParameters& body,
                         const AnthropometricTable& tab, double m_obj) {
    const double m_ua = body.body_mass_kg * tab.mass_pct_ua / 100.0;
    const double m_fa = body.body_mass_kg * tab.mass_pct_fa / 100.0;
    const double m_h = body.body_mass_kg * tab.mass_pct_h / 100.0;
    const double x = body.forearm_length_m * std::sin(theta_e - theta_s);
    const double y = body.upper_arm_length_m * std::sin(theta_s);

    HandTorques h;
    h.tau_e = m_fa * kG * (tab.com_pct_fa / 100.0) * x +
              (m_obj + m_h) * kG *
                  (body.forearm_length_m +
                   (tab.com_pct_h / 100.0) * body.hand_length_m * std::sin(theta_e - theta_s));
    h.tau_s = h.tau_e + m_ua * kG * (tab.com_pct_ua / 100.0) * y +
              (m_obj + m_h + m_fa) * kG * body.upper_arm_length_m;
    h.tau_sf = h.tau_s * std::cos(theta_s);
    h.tau_ss = h.tau_s * std::sin(theta_s);
    return h;
}

// arm pose in the frontal plane: theta_s from vertical, elbow flexed a further
// theta_e between upper arm and forearm
MarkerTrajectory pose_traj(double theta_s, double theta_e, size_t n = 1) {
    MarkerTrajectory traj;
    traj.samples = n;
    traj.positions.assign(n * kNumMarkers * 3, 0.0);
    const double lua = 0.30, lfa = 0.27;
    for (size_t t = 0; t < n; ++t) {
        auto set = [&](size_t idx, double x, double y, double z) {
            double* p = traj.at(t, idx);
            p[0] = x;
            p[1] = y;
            p[2] = z;
        };
        set(0, 0.0, -0.20, 1.50); // l_shoulder
        set(1, 0.0, 0.20, 1.50);  // r_shoulder
        set(2, 0.0, -0.20, 1.20); // l_elbow
        set(4, 0.0, -0.20, 0.93); // l_wrist
        // u1 = +y (left->right shoulder), down = -z
        const double ey = 0.20 + lua * std::sin(theta_s);
        const double ez = 1.50 - lua * std::cos(theta_s);
        set(3, 0.0, ey, ez); // r_elbow
        const double phi = theta_s + theta_e;
        set(5, 0.0, ey + lfa * std::sin(phi), ez - lfa * std::cos(phi)); // r_wrist
    }
    return traj;
}

JointAngles angles_of(double theta_s, double theta_e, size_t n = 1) {
    JointAngles a;
    a.theta_s.assign(n, theta_s);
    a.theta_e.assign(n, theta_e);
    return a;
}

} // namespace

TEST_CASE("anthropometric table holds the published percentages") {
    const AnthropometricTable m = AnthropometricTable::for_sex(Sex::Male);
    CHECK(m.mass_pct_ua == 2.71);
    CHECK(m.mass_pct_fa == 1.62);
    CHECK(m.mass_pct_h == 0.61);
    CHECK(m.com_pct_ua == 57.72);
    CHECK(m.com_pct_fa == 45.74);
    CHECK(m.com_pct_h == 79.00);

    const AnthropometricTable f = AnthropometricTable::for_sex(Sex::Female);
    CHECK(f.mass_pct_ua == 2.55);
    CHECK(f.mass_pct_fa == 1.38);
    CHECK(f.mass_pct_h == 0.56);
    CHECK(f.com_pct_ua == 57.54);
    CHECK(f.com_pct_fa == 45.59);
    CHECK(f.com_pct_h == 74.74);
}

TEST_CASE("marker geometry recovers the constructed joint angles") {
    {
        const JointAngles a = compute_angles(pose_traj(0.0, 0.0)); // hanging arm
        CHECK(std::fabs(a.theta_s[0]) < 1e-9);
        CHECK(std::fabs(a.theta_e[0]) < 1e-9);
    }
    {
        // upper arm vertical, forearm forward (sagittal): 90 degree elbow
        MarkerTrajectory traj = pose_traj(0.0, 0.0);
        double* w = traj.at(0, 5);
        w[0] = 0.27; // r_wrist straight ahead of the elbow
        w[1] = 0.20;
        w[2] = 1.20;
        const JointAngles a = compute_angles(traj);
        CHECK(std::fabs(a.theta_e[0] - a.theta_s[0] - kPi / 2) < 1e-9);
    }
    Rng rng(17);
    for (int t = 0; t < 50; ++t) {
        const double ts = rng.uniform() * kPi / 2;
        const double te = rng.uniform() * (kPi - 0.1);
        const JointAngles a = compute_angles(pose_traj(ts, te));
        CHECK(std::fabs(a.theta_s[0] - ts) < 1e-9);
        CHECK(std::fabs(a.theta_e[0] - te) < 1e-9);
    }
}

TEST_CASE("degenerate marker configurations raise Kinematics errors") {
    {
        MarkerTrajectory traj = pose_traj(0.3, 0.4);
        double* e = traj.at(0, 3); // r_elbow onto r_shoulder
        e[0] = 0.0;
        e[1] = 0.20;
        e[2] = 1.50;
        CHECK_THROWS_AS(compute_angles(traj), Error);
        try {
            compute_angles(traj);
        } catch (const Error& e2) {
            CHECK(e2.category() == ErrorCategory::Kinematics);
        }
    }
    {
        MarkerTrajectory traj = pose_traj(0.3, 0.4);
        double* l = traj.at(0, 0); // l_shoulder onto r_shoulder
        l[0] = 0.0;
        l[1] = 0.20;
        l[2] = 1.50;
        CHECK_THROWS_AS(compute_angles(traj), Error);
    }
    {
        MarkerTrajectory traj = pose_traj(0.3, 0.4);
        double* l = traj.at(0, 0); // shoulder axis along gravity
        l[0] = 0.0;
        l[1] = 0.20;
        l[2] = 2.50;
        CHECK_THROWS_AS(compute_angles(traj), Error);
    }
}

TEST_CASE("perpendicular distances follow the small geometric identities") {
    const BodyParameters body;
    const auto [x, y] = perpendicular_distances(angles_of(0.0, kPi / 3), body);
    CHECK(std::fabs(y[0]) == 0.0);
    CHECK(x[0] == doctest::Approx(0.27 * std::sin(kPi / 3)).epsilon(1e-12));

    const auto [x2, y2] = perpendicular_distances(angles_of(kPi / 6, kPi / 6), body);
    CHECK(std::fabs(x2[0]) < 1e-12); // theta_e == theta_s: forearm vertical
    CHECK(y2[0] == doctest::Approx(0.30 * 0.5).epsilon(1e-12));
}

TEST_CASE("torques match the hand-derived equations at 100 random poses") {
    Rng rng(29);
    const BodyParameters body;
    const AnthropometricTable tab = AnthropometricTable::for_sex(Sex::Male);
    const double masses[3] = {0.0, 1.10, 1.85};
    for (int t = 0; t < 100; ++t) {
        const double ts = rng.uniform() * kPi / 2;
        const double te = rng.uniform() * kPi;
        const double m_obj = masses[rng.below(3)];
        const RawTorques got = compute_torques(angles_of(ts, te), body, tab, m_obj);
        const HandTorques want = hand_torques(ts, te, body, tab, m_obj);
        CHECK(std::fabs(got.tau_e[0] - want.tau_e) < 1e-9);
        CHECK(std::fabs(got.tau_s[0] - want.tau_s) < 1e-9);
        CHECK(std::fabs(got.tau_sf[0] - want.tau_sf) < 1e-9);
        CHECK(std::fabs(got.tau_ss[0] - want.tau_ss) < 1e-9);

        // projection identity
        const double lhs = got.tau_sf[0] * got.tau_sf[0] + got.tau_ss[0] * got.tau_ss[0];
        const double rhs = got.tau_s[0] * got.tau_s[0];
        CHECK(std::fabs(lhs - rhs) < 1e-9 * std::max(1.0, rhs));
    }
}

TEST_CASE("elbow torque is affine in the object mass with the analytic slope") {
    Rng rng(31);
    const BodyParameters body;
    const AnthropometricTable tab = AnthropometricTable::for_sex(Sex::Female);
    for (int t = 0; t < 20; ++t) {
        const double ts = rng.uniform() * kPi / 2;
        const double te = rng.uniform() * kPi;
        const JointAngles a = angles_of(ts, te);
        const double t0 = compute_torques(a, body, tab, 0.0).tau_e[0];
        const double t1 = compute_torques(a, body, tab, 1.0).tau_e[0];
        const double t2 = compute_torques(a, body, tab, 2.0).tau_e[0];

        const double slope = kG * (body.forearm_length_m +
                                   (tab.com_pct_h / 100.0) * body.hand_length_m *
                                       std::sin(te - ts));
        CHECK(std::fabs((t1 - t0) - slope) < 1e-9);
        CHECK(std::fabs((t2 - t1) - (t1 - t0)) < 1e-9); // affine: equal increments
    }
}

TEST_CASE("frontal projection vanishes for an adduction-free pose") {
    const BodyParameters body;
    const AnthropometricTable tab = AnthropometricTable::for_sex(Sex::Male);
    const RawTorques r = compute_torques(angles_of(0.0, 1.2), body, tab, 1.1);
    CHECK(r.tau_ss[0] == 0.0);
    CHECK(r.tau_sf[0] == doctest::Approx(r.tau_s[0]).epsilon(1e-15));
}

TEST_CASE("corrected variant swaps the lever arm of the load term") {
    const BodyParameters body;
    const AnthropometricTable tab = AnthropometricTable::for_sex(Sex::Male);
    const double ts = 0.2, te = 1.0;
    const JointAngles a = angles_of(ts, te);
    const double printed = compute_torques(a, body, tab, 1.0).tau_e[0];
    const double corrected =
        compute_torques(a, body, tab, 1.0, kG, Eq1Variant::Corrected).tau_e[0];
    const double m_h = body.body_mass_kg * tab.mass_pct_h / 100.0;
    const double x = body.forearm_length_m * std::sin(te - ts);
    const double expected_gap = (1.0 + m_h) * kG * (body.forearm_length_m - x);
    CHECK(printed - corrected == doctest::Approx(expected_gap).epsilon(1e-9));

    CHECK_THROWS_AS(compute_torques(a, body, tab, -0.5), Error);
}

TEST_CASE("min-max scaler round-trips and rejects degenerate channels") {
    Mat rows(4, 2);
    const double vals[4][2] = {{0.0, -3.0}, {2.0, 1.0}, {1.0, 5.0}, {0.5, 0.0}};
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 2; ++c) rows.at(r, c) = vals[r][c];

    MinMaxScaler sc;
    sc.fit(rows);
    const Mat scaled = sc.transform(rows);
    for (double v : scaled.a) {
        CHECK(v >= -1.0 - 1e-12);
        CHECK(v <= 1.0 + 1e-12);
    }
    CHECK(scaled.at(0, 0) == -1.0); // channel minima and maxima hit the ends
    CHECK(scaled.at(1, 0) == 1.0);
    CHECK(scaled.at(2, 1) == 1.0);

    const Mat back = sc.inverse(scaled);
    for (size_t i = 0; i < rows.a.size(); ++i) CHECK(std::fabs(back.a[i] - rows.a[i]) < 1e-12);

    Mat constant(3, 1);
    constant.a = {2.0, 2.0, 2.0};
    MinMaxScaler bad;
    CHECK_THROWS_AS(bad.fit(constant), Error);

    Mat wide(2, 3);
    CHECK_THROWS_AS(sc.transform(wide), Error);
}

TEST_CASE("targets align with the feature window plan") {
    RunManifest m;
    const size_t n = 400;
    RawTorques raw;
    raw.tau_e.assign(n, 5.0); // constants pass the zero-phase low-pass unchanged
    raw.tau_sf.assign(n, 2.0);
    raw.tau_ss.assign(n, -1.0);

    const Condition cond{1.85, Movement::Complex};
    const TorqueSeries ts = targets_from_torques(raw, cond, m, 6);
    CHECK(ts.n_rows() == plan_windows(n, m).n_windows);
    CHECK(ts.raw.cols == 3);
    for (size_t w = 0; w < ts.n_rows(); ++w) {
        CHECK(ts.raw.at(w, 0) == doctest::Approx(5.0).epsilon(1e-9));
        CHECK(ts.raw.at(w, 1) == doctest::Approx(2.0).epsilon(1e-9));
        CHECK(ts.raw.at(w, 2) == doctest::Approx(-1.0).epsilon(1e-9));
    }
    for (const Condition& c : ts.condition) CHECK(c == cond);
    for (int s : ts.segment) CHECK(s == 6);

    // appending keeps both blocks' metadata
    TorqueSeries two = ts;
    two.append(ts);
    CHECK(two.n_rows() == 2 * ts.n_rows());
    CHECK(two.segment.back() == 6);
}
