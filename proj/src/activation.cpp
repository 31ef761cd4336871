#include "emt/activation.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "emt/error.hpp"

namespace emt {

void ActivationParams::validate() const {
    if (alpha < 0 || beta1 < 0 || beta2 < 0)
        fail(ErrorCategory::Parameter, "activation coefficients must be nonnegative");
    if (std::abs(alpha + beta1 + beta2 - 1.0) > 1e-9)
        fail(ErrorCategory::Parameter, "activation coefficients must sum to 1");
    if (delay_samples < 0)
        fail(ErrorCategory::Parameter, "activation delay must be nonnegative");
}

std::vector<double> activate(const std::vector<double>& e, const ActivationParams& p) {
    p.validate();
    std::vector<double> out(e.size());
    double p1 = 0.0, p2 = 0.0; // p(t-1), p(t-2)
    for (size_t t = 0; t < e.size(); ++t) {
        const double et =
            t >= static_cast<size_t>(p.delay_samples) ? e[t - p.delay_samples] : 0.0;
        const double pt = p.alpha * et + p.beta1 * p1 + p.beta2 * p2;
        out[t] = pt;
        p2 = p1;
        p1 = pt;
    }
    return out;
}

namespace {

// MSE of the recursion against target for coefficients (b1, b2) and delay d;
// infeasible points get a large penalty so Nelder-Mead stays on the simplex.
double objective(const std::vector<double>& e, const std::vector<double>& target,
                 double b1, double b2, int d) {
    if (b1 < 0 || b2 < 0 || b1 + b2 > 1.0) return 1e30;
    const double a = 1.0 - b1 - b2;
    double p1 = 0.0, p2 = 0.0, sse = 0.0;
    const size_t n = e.size();
    for (size_t t = 0; t < n; ++t) {
        const double et = t >= static_cast<size_t>(d) ? e[t - d] : 0.0;
        const double pt = a * et + b1 * p1 + b2 * p2;
        const double r = pt - target[t];
        sse += r * r;
        p2 = p1;
        p1 = pt;
    }
    return sse / static_cast<double>(n);
}

struct Point {
    double b1, b2, f;
};

// Nelder-Mead on (beta1, beta2), seeded around `start`.
Point nelder_mead(const std::vector<double>& e, const std::vector<double>& target,
                  int d, double b1, double b2) {
    auto eval = [&](double x, double y) { return objective(e, target, x, y, d); };
    const double h = 0.02;
    std::array<Point, 3> s = {{{b1, b2, eval(b1, b2)},
                               {std::min(b1 + h, 1.0), b2, 0.0},
                               {b1, std::min(b2 + h, 1.0), 0.0}}};
    s[1].f = eval(s[1].b1, s[1].b2);
    s[2].f = eval(s[2].b1, s[2].b2);

    for (int it = 0; it < 300; ++it) {
        std::sort(s.begin(), s.end(), [](const Point& a, const Point& b) { return a.f < b.f; });
        if (s[2].f - s[0].f < 1e-16) break;
        const double cx = (s[0].b1 + s[1].b1) / 2.0;
        const double cy = (s[0].b2 + s[1].b2) / 2.0;

        const double rx = cx + (cx - s[2].b1), ry = cy + (cy - s[2].b2);
        const double fr = eval(rx, ry);
        if (fr < s[0].f) {
            const double ex = cx + 2.0 * (cx - s[2].b1), ey = cy + 2.0 * (cy - s[2].b2);
            const double fe = eval(ex, ey);
            s[2] = fe < fr ? Point{ex, ey, fe} : Point{rx, ry, fr};
        } else if (fr < s[1].f) {
            s[2] = {rx, ry, fr};
        } else {
            const double kx = cx + 0.5 * (s[2].b1 - cx), ky = cy + 0.5 * (s[2].b2 - cy);
            const double fk = eval(kx, ky);
            if (fk < s[2].f) {
                s[2] = {kx, ky, fk};
            } else {
                for (int i = 1; i < 3; ++i) {
                    s[i].b1 = s[0].b1 + 0.5 * (s[i].b1 - s[0].b1);
                    s[i].b2 = s[0].b2 + 0.5 * (s[i].b2 - s[0].b2);
                    s[i].f = eval(s[i].b1, s[i].b2);
                }
            }
        }
    }
    std::sort(s.begin(), s.end(), [](const Point& a, const Point& b) { return a.f < b.f; });
    return s[0];
}

} // namespace

ActivationFit fit_activation_params(const std::vector<double>& e,
                                    const std::vector<double>& target, int d_max) {
    if (e.size() != target.size())
        fail(ErrorCategory::Shape, "fit_activation_params: length mismatch");
    if (e.size() < 8)
        fail(ErrorCategory::Length, "fit_activation_params: signal too short");
    for (double v : e)
        if (!(v >= 0.0 && v <= 1.0))
            fail(ErrorCategory::Parameter, "fit_activation_params: e outside [0,1]");
    for (double v : target)
        if (!std::isfinite(v))
            fail(ErrorCategory::Data, "fit_activation_params: non-finite target");

    const auto [tmin, tmax] = std::minmax_element(target.begin(), target.end());
    if (*tmax - *tmin < 1e-12) {
        ActivationFit fit;
        fit.params = {1.0, 0.0, 0.0, 0};
        fit.objective = objective(e, target, 0.0, 0.0, 0);
        fit.degenerate = true;
        return fit;
    }

    ActivationFit best;
    best.objective = std::numeric_limits<double>::infinity();
    for (int d = 0; d <= d_max; ++d) {
        // coarse simplex grid, then local refinement of the best cell
        Point grid_best{0.0, 0.0, objective(e, target, 0.0, 0.0, d)};
        for (double b1 = 0.0; b1 <= 1.0 + 1e-12; b1 += 0.1) {
            for (double b2 = 0.0; b1 + b2 <= 1.0 + 1e-12; b2 += 0.1) {
                const double f = objective(e, target, b1, b2, d);
                if (f < grid_best.f) grid_best = {b1, b2, f};
            }
        }
        const Point refined = nelder_mead(e, target, d, grid_best.b1, grid_best.b2);
        const Point& winner = refined.f < grid_best.f ? refined : grid_best;
        if (winner.f < best.objective) {
            best.objective = winner.f;
            best.params = {1.0 - winner.b1 - winner.b2, winner.b1, winner.b2, d};
        }
    }
    // snap rounding residue off the simplex constraint
    best.params.alpha = std::max(0.0, 1.0 - best.params.beta1 - best.params.beta2);
    return best;
}

} // namespace emt
