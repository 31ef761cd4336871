#include "emt/torque.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "emt/error.hpp"
#include "emt/preprocess.hpp"

namespace emt {

AnthropometricTable AnthropometricTable::for_sex(Sex sex) {
    if (sex == Sex::Male) return {2.71, 1.62, 0.61, 57.72, 45.74, 79.00};
    return {2.55, 1.38, 0.56, 57.54, 45.59, 74.74};
}

namespace {

struct Vec3 {
    double x, y, z;
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
    double norm() const { return std::sqrt(dot(*this)); }
};

Vec3 marker(const MarkerTrajectory& traj, size_t t, size_t idx) {
    const double* p = traj.at(t, idx);
    return {p[0], p[1], p[2]};
}

double clamped_angle(const Vec3& a, const Vec3& b, size_t t, const char* what) {
    const double na = a.norm(), nb = b.norm();
    if (na < 1e-6 || nb < 1e-6)
        fail(ErrorCategory::Kinematics, std::string(what) + ": degenerate vector at sample " +
                                            std::to_string(t));
    const double c = std::clamp(a.dot(b) / (na * nb), -1.0, 1.0);
    return std::acos(c);
}

} // namespace

JointAngles compute_angles(const MarkerTrajectory& traj) {
    traj.validate();
    // marker order: l_shoulder, r_shoulder, l_elbow, r_elbow, l_wrist, r_wrist
    constexpr size_t L_SHO = 0, R_SHO = 1, R_ELB = 3, R_WRI = 5;
    const Vec3 down{0.0, 0.0, -1.0};

    JointAngles out;
    out.theta_s.resize(traj.n_samples());
    out.theta_e.resize(traj.n_samples());
    for (size_t t = 0; t < traj.n_samples(); ++t) {
        const Vec3 sho = marker(traj, t, R_SHO);
        const Vec3 elb = marker(traj, t, R_ELB);
        const Vec3 wri = marker(traj, t, R_WRI);
        const Vec3 upper = elb - sho;   // shoulder -> elbow
        const Vec3 fore = wri - elb;    // elbow -> wrist
        out.theta_e[t] = clamped_angle(upper, fore, t, "theta_e");

        // frontal plane spanned by the shoulder-shoulder axis and gravity
        const Vec3 axis_raw = marker(traj, t, R_SHO) - marker(traj, t, L_SHO);
        const double axis_norm = axis_raw.norm();
        if (axis_norm < 1e-6)
            fail(ErrorCategory::Kinematics,
                 "theta_s: coincident shoulder markers at sample " + std::to_string(t));
        // orthonormalize the axis against the vertical
        Vec3 u1{axis_raw.x / axis_norm, axis_raw.y / axis_norm, axis_raw.z / axis_norm};
        const double vpart = u1.dot(down);
        u1 = {u1.x - vpart * down.x, u1.y - vpart * down.y, u1.z - vpart * down.z};
        const double u1n = u1.norm();
        if (u1n < 1e-6)
            fail(ErrorCategory::Kinematics,
                 "theta_s: shoulder axis parallel to gravity at sample " + std::to_string(t));
        u1 = {u1.x / u1n, u1.y / u1n, u1.z / u1n};

        const double a = upper.dot(u1);          // lateral component
        const double b = upper.dot(down);        // downward component
        const double pn = std::hypot(a, b);
        if (pn < 1e-9) {
            out.theta_s[t] = 0.0; // projection degenerate: arm in the sagittal axis
        } else {
            const double c = std::clamp(b / pn, -1.0, 1.0);
            out.theta_s[t] = std::acos(c);
        }
    }
    return out;
}

std::pair<std::vector<double>, std::vector<double>> perpendicular_distances(
    const JointAngles& angles, const BodyParameters& body) {
    body.validate();
    const size_t n = angles.theta_s.size();
    std::vector<double> x(n), y(n);
    for (size_t t = 0; t < n; ++t) {
        x[t] = body.forearm_length_m * std::sin(angles.theta_e[t] - angles.theta_s[t]);
        y[t] = body.upper_arm_length_m * std::sin(angles.theta_s[t]);
    }
    return {std::move(x), std::move(y)};
}

RawTorques compute_torques(const JointAngles& angles, const BodyParameters& body,
                           const AnthropometricTable& table, double m_obj,
                           double gravity, Eq1Variant variant) {
    body.validate();
    if (m_obj < 0) fail(ErrorCategory::Parameter, "object mass must be nonnegative");
    const double m_ua = body.body_mass_kg * table.mass_pct_ua / 100.0;
    const double m_fa = body.body_mass_kg * table.mass_pct_fa / 100.0;
    const double m_h = body.body_mass_kg * table.mass_pct_h / 100.0;
    const auto [xs, ys] = perpendicular_distances(angles, body);

    const size_t n = angles.theta_s.size();
    RawTorques out;
    out.tau_e.resize(n);
    out.tau_s.resize(n);
    out.tau_sf.resize(n);
    out.tau_ss.resize(n);
    for (size_t t = 0; t < n; ++t) {
        const double sin_es = std::sin(angles.theta_e[t] - angles.theta_s[t]);
        const double hand_term = (table.com_pct_h / 100.0) * body.hand_length_m * sin_es;
        const double arm_term =
            variant == Eq1Variant::AsPrinted ? body.forearm_length_m : xs[t];
        const double tau_e = m_fa * gravity * (table.com_pct_fa / 100.0) * xs[t] +
                             (m_obj + m_h) * gravity * (arm_term + hand_term);
        const double tau_s = tau_e + m_ua * gravity * (table.com_pct_ua / 100.0) * ys[t] +
                             (m_obj + m_h + m_fa) * gravity * body.upper_arm_length_m;
        out.tau_e[t] = tau_e;
        out.tau_s[t] = tau_s;
        out.tau_sf[t] = tau_s * std::cos(angles.theta_s[t]);
        out.tau_ss[t] = tau_s * std::sin(angles.theta_s[t]);
    }
    return out;
}

void MinMaxScaler::fit(const Mat& rows) {
    if (rows.rows == 0) fail(ErrorCategory::Data, "MinMaxScaler: no rows");
    lo.assign(rows.cols, 0.0);
    hi.assign(rows.cols, 0.0);
    for (size_t c = 0; c < rows.cols; ++c) {
        double mn = rows.at(0, c), mx = rows.at(0, c);
        for (size_t r = 1; r < rows.rows; ++r) {
            mn = std::min(mn, rows.at(r, c));
            mx = std::max(mx, rows.at(r, c));
        }
        if (mx - mn < 1e-12)
            fail(ErrorCategory::Data,
                 "MinMaxScaler: constant output channel " + std::to_string(c));
        lo[c] = mn;
        hi[c] = mx;
    }
}

Mat MinMaxScaler::transform(const Mat& rows) const {
    if (rows.cols != lo.size()) fail(ErrorCategory::Shape, "MinMaxScaler: width mismatch");
    Mat out = rows;
    for (size_t r = 0; r < rows.rows; ++r)
        for (size_t c = 0; c < rows.cols; ++c)
            out.at(r, c) = 2.0 * (rows.at(r, c) - lo[c]) / (hi[c] - lo[c]) - 1.0;
    return out;
}

Mat MinMaxScaler::inverse(const Mat& rows) const {
    if (rows.cols != lo.size()) fail(ErrorCategory::Shape, "MinMaxScaler: width mismatch");
    Mat out = rows;
    for (size_t r = 0; r < rows.rows; ++r)
        for (size_t c = 0; c < rows.cols; ++c)
            out.at(r, c) = (rows.at(r, c) + 1.0) / 2.0 * (hi[c] - lo[c]) + lo[c];
    return out;
}

void TorqueSeries::append(const TorqueSeries& other) {
    if (raw.cols == 0) {
        *this = other;
        return;
    }
    if (other.raw.cols != raw.cols) fail(ErrorCategory::Shape, "TorqueSeries::append");
    raw.a.insert(raw.a.end(), other.raw.a.begin(), other.raw.a.end());
    raw.rows += other.raw.rows;
    condition.insert(condition.end(), other.condition.begin(), other.condition.end());
    segment.insert(segment.end(), other.segment.begin(), other.segment.end());
}

TorqueSeries targets_from_torques(const RawTorques& raw, const Condition& cond,
                                  const RunManifest& m, int segment_id) {
    const size_t n = raw.tau_e.size();
    const FilterSpec spec = FilterSpec::from_manifest(m);
    const std::vector<double>* series[3] = {&raw.tau_e, &raw.tau_sf, &raw.tau_ss};
    std::vector<double> smooth[3];
    for (int j = 0; j < 3; ++j) smooth[j] = lowpass_smooth(*series[j], spec);

    const WindowPlan plan = plan_windows(n, m);
    TorqueSeries out;
    out.raw = Mat(plan.n_windows, 3);
    out.condition.assign(plan.n_windows, cond);
    out.segment.assign(plan.n_windows, segment_id);
    for (size_t w = 0; w < plan.n_windows; ++w) {
        const size_t last = w * plan.hop + plan.window_len - 1;
        for (int j = 0; j < 3; ++j) out.raw.at(w, j) = smooth[j][last];
    }
    return out;
}

} // namespace emt
