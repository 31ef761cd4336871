#include "emt/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "emt/csv.hpp"
#include "emt/error.hpp"

namespace emt {
namespace {

// modest sizes only (SG order 2 -> 3x3 normal equations)
std::vector<double> solve_small(std::vector<double> a, std::vector<double> b) {
    size_t n = b.size();
    for (size_t col = 0; col < n; ++col) {
        size_t piv = col;
        for (size_t r = col + 1; r < n; ++r)
            if (std::fabs(a[r * n + col]) > std::fabs(a[piv * n + col])) piv = r;
        if (a[piv * n + col] == 0.0)
            fail(ErrorCategory::Internal, "singular normal equations");
        if (piv != col) {
            for (size_t c = 0; c < n; ++c) std::swap(a[piv * n + c], a[col * n + c]);
            std::swap(b[piv], b[col]);
        }
        for (size_t r = col + 1; r < n; ++r) {
            double f = a[r * n + col] / a[col * n + col];
            for (size_t c = col; c < n; ++c) a[r * n + c] -= f * a[col * n + c];
            b[r] -= f * b[col];
        }
    }
    std::vector<double> x(n, 0.0);
    for (size_t r = n; r-- > 0;) {
        double s = b[r];
        for (size_t c = r + 1; c < n; ++c) s -= a[r * n + c] * x[c];
        x[r] = s / a[r * n + r];
    }
    return x;
}

// fit x[start..start+w) with a degree-`order` polynomial in t = idx - center
std::vector<double> polyfit_window(const std::vector<double>& x, size_t start,
                                   int w, int order, double center) {
    int terms = order + 1;
    std::vector<double> ata((size_t)terms * terms, 0.0), atb(terms, 0.0);
    for (int j = 0; j < w; ++j) {
        double t = (double)(start + (size_t)j) - center;
        double powers[8];
        powers[0] = 1.0;
        for (int p = 1; p < terms; ++p) powers[p] = powers[p - 1] * t;
        for (int r = 0; r < terms; ++r) {
            for (int c = 0; c < terms; ++c) ata[(size_t)r * terms + c] += powers[r] * powers[c];
            atb[r] += powers[r] * x[start + (size_t)j];
        }
    }
    return solve_small(std::move(ata), std::move(atb));
}

double polyval(const std::vector<double>& coef, double t) {
    double v = 0.0;
    for (size_t p = coef.size(); p-- > 0;) v = v * t + coef[p];
    return v;
}

} // namespace

std::vector<double> median_filter(const std::vector<double>& x, int window) {
    if (window < 1 || window % 2 == 0)
        fail(ErrorCategory::Parameter, "median filter window must be odd");
    if (x.empty()) return {};
    int half = window / 2;
    long long n = (long long)x.size();
    std::vector<double> out(x.size());
    std::vector<double> buf(window);
    for (long long i = 0; i < n; ++i) {
        for (int k = -half; k <= half; ++k) {
            long long j = std::clamp(i + k, 0LL, n - 1); // nearest-edge padding
            buf[(size_t)(k + half)] = x[(size_t)j];
        }
        std::nth_element(buf.begin(), buf.begin() + half, buf.end());
        out[(size_t)i] = buf[(size_t)half];
    }
    return out;
}

std::vector<double> savgol_filter(const std::vector<double>& x, int window, int order) {
    if (window < 1 || window % 2 == 0)
        fail(ErrorCategory::Parameter, "savgol window must be odd");
    if (order < 0 || order >= window)
        fail(ErrorCategory::Parameter, "savgol order must be < window");
    size_t n = x.size();
    if (n < (size_t)window) fail(ErrorCategory::Length, "savgol: series shorter than window");
    int half = window / 2;
    std::vector<double> out(n);
    // one fit per edge window, evaluated at the uncovered positions
    std::vector<double> head = polyfit_window(x, 0, window, order, (double)half);
    std::vector<double> tail = polyfit_window(x, n - (size_t)window, window, order,
                                              (double)(n - 1 - (size_t)half));
    for (int i = 0; i < half; ++i) out[(size_t)i] = polyval(head, (double)i - half);
    for (int i = 0; i < half; ++i)
        out[n - 1 - (size_t)i] = polyval(tail, (double)half - i);
    for (size_t i = (size_t)half; i + (size_t)half < n; ++i) {
        std::vector<double> c = polyfit_window(x, i - (size_t)half, window, order, (double)i);
        out[i] = c[0];
    }
    return out;
}

FilteredSeries filter_predictions(const std::vector<double>& pred) {
    FilteredSeries out;
    size_t n = pred.size();
    if (n == 0) return out;
    int med_w = (int)std::min<size_t>(5, n);
    if (med_w % 2 == 0) --med_w; // largest odd <= n, capped at 5
    std::vector<double> med = median_filter(pred, med_w);
    int sg_w = 21;
    if (n < 21) {
        out.truncated = true;
        sg_w = (int)std::min<size_t>(n, 21);
        if (sg_w % 2 == 0) --sg_w;
    }
    if (sg_w < 5) {
        out.values = std::move(med);
        return out;
    }
    out.values = savgol_filter(med, sg_w, 2);
    return out;
}

namespace {

void check_lengths(const std::vector<double>& pred, const std::vector<double>& target) {
    if (pred.size() != target.size())
        fail(ErrorCategory::Shape, "metrics: length mismatch");
    if (pred.size() < 2) fail(ErrorCategory::Length, "metrics: need at least 2 samples");
    for (double v : pred)
        if (!std::isfinite(v)) fail(ErrorCategory::Data, "metrics: non-finite prediction");
    for (double v : target)
        if (!std::isfinite(v)) fail(ErrorCategory::Data, "metrics: non-finite target");
}

double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / (double)v.size();
}

} // namespace

double rmse(const std::vector<double>& pred, const std::vector<double>& target) {
    check_lengths(pred, target);
    double s = 0.0;
    for (size_t i = 0; i < pred.size(); ++i) {
        double d = pred[i] - target[i];
        s += d * d;
    }
    return std::sqrt(s / (double)pred.size());
}

double pearson(const std::vector<double>& pred, const std::vector<double>& target) {
    check_lengths(pred, target);
    double mp = mean_of(pred), mt = mean_of(target);
    double spt = 0.0, spp = 0.0, stt = 0.0;
    for (size_t i = 0; i < pred.size(); ++i) {
        double dp = pred[i] - mp, dt = target[i] - mt;
        spt += dp * dt;
        spp += dp * dp;
        stt += dt * dt;
    }
    if (stt == 0.0) fail(ErrorCategory::Data, "pearson: constant target");
    if (spp == 0.0) fail(ErrorCategory::Data, "pearson: constant prediction");
    return spt / std::sqrt(spp * stt);
}

double r2(const std::vector<double>& pred, const std::vector<double>& target) {
    check_lengths(pred, target);
    double mt = mean_of(target);
    double ss_res = 0.0, ss_tot = 0.0;
    for (size_t i = 0; i < pred.size(); ++i) {
        double e = pred[i] - target[i];
        double d = target[i] - mt;
        ss_res += e * e;
        ss_tot += d * d;
    }
    if (ss_tot == 0.0) fail(ErrorCategory::Data, "r2: constant target");
    return 1.0 - ss_res / ss_tot;
}

void aggregate_cell(CellReport& cell) {
    if (cell.per_seed.empty()) fail(ErrorCategory::Protocol, "cell has no seed results");
    size_t n = cell.per_seed.size();
    for (size_t j = 0; j < 3; ++j) {
        auto moments = [&](auto pick) {
            double m = 0.0;
            for (const SeedMetrics& s : cell.per_seed) m += pick(s.joints[j]);
            m /= (double)n;
            double v = 0.0;
            for (const SeedMetrics& s : cell.per_seed) {
                double d = pick(s.joints[j]) - m;
                v += d * d;
            }
            return std::pair<double, double>(m, std::sqrt(v / (double)n));
        };
        std::tie(cell.mean[j].rmse, cell.stdev[j].rmse) =
            moments([](const JointMetrics& x) { return x.rmse; });
        std::tie(cell.mean[j].rho, cell.stdev[j].rho) =
            moments([](const JointMetrics& x) { return x.rho; });
        std::tie(cell.mean[j].r2, cell.stdev[j].r2) =
            moments([](const JointMetrics& x) { return x.r2; });
    }
}

std::string table3_csv(const std::vector<CellReport>& cells) {
    std::string out = "model,weights,condition";
    for (const char* joint : kJointNames)
        for (const char* metric : {"rmse", "rho", "r2"})
            for (const char* stat : {"mean", "std"})
                out += std::string(",") + joint + "_" + metric + "_" + stat;
    out += "\n";
    for (const CellReport& c : cells) {
        out += c.model + "," + c.weights_label + "," + c.condition;
        for (size_t j = 0; j < 3; ++j) {
            out += "," + fmt_double(c.mean[j].rmse) + "," + fmt_double(c.stdev[j].rmse);
            out += "," + fmt_double(c.mean[j].rho) + "," + fmt_double(c.stdev[j].rho);
            out += "," + fmt_double(c.mean[j].r2) + "," + fmt_double(c.stdev[j].r2);
        }
        out += "\n";
    }
    return out;
}

void write_table3_csv(const std::string& path, const std::vector<CellReport>& cells) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCategory::MissingInput, "cannot open " + path);
    out << table3_csv(cells);
    if (!out) fail(ErrorCategory::Data, "write failed for " + path);
}

namespace {

std::string fixed2(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

} // namespace

void write_band_svg(const std::string& path, const std::string& joint,
                    const std::vector<double>& target,
                    const std::vector<BandSeries>& series) {
    if (target.size() < 2) fail(ErrorCategory::Length, "band plot: need >= 2 points");
    const double width = 900.0, height = 300.0, pad = 40.0;
    double lo = target[0], hi = target[0];
    auto widen = [&](double v) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    };
    for (double v : target) widen(v);
    for (const BandSeries& s : series) {
        if (s.mean.size() != target.size() || s.stdev.size() != target.size())
            fail(ErrorCategory::Shape, "band plot: series length mismatch");
        for (size_t i = 0; i < s.mean.size(); ++i) {
            widen(s.mean[i] - s.stdev[i]);
            widen(s.mean[i] + s.stdev[i]);
        }
    }
    if (hi - lo < 1e-12) hi = lo + 1.0;
    size_t n = target.size();
    auto px = [&](size_t i) { return pad + (width - 2 * pad) * (double)i / (double)(n - 1); };
    auto py = [&](double v) {
        return height - pad - (height - 2 * pad) * (v - lo) / (hi - lo);
    };
    auto polyline = [&](const std::vector<double>& v) {
        std::string pts;
        for (size_t i = 0; i < n; ++i) {
            if (i) pts += " ";
            pts += fixed2(px(i)) + "," + fixed2(py(v[i]));
        }
        return pts;
    };

    static const char* kColors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728"};
    std::string svg =
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"900\" height=\"300\" "
        "viewBox=\"0 0 900 300\">\n";
    svg += "<rect width=\"900\" height=\"300\" fill=\"white\"/>\n";
    svg += "<text x=\"20\" y=\"24\" font-family=\"sans-serif\" font-size=\"14\">" +
           joint + " torque (N m), test windows</text>\n";
    for (size_t s = 0; s < series.size(); ++s) {
        const BandSeries& b = series[s];
        const char* color = kColors[s % 4];
        std::string pts;
        for (size_t i = 0; i < n; ++i)
            pts += fixed2(px(i)) + "," + fixed2(py(b.mean[i] + b.stdev[i])) + " ";
        for (size_t i = n; i-- > 0;)
            pts += fixed2(px(i)) + "," + fixed2(py(b.mean[i] - b.stdev[i])) + " ";
        pts.pop_back();
        svg += "<polygon points=\"" + pts + "\" fill=\"" + color +
               "\" fill-opacity=\"0.25\" stroke=\"none\"/>\n";
        svg += "<polyline points=\"" + polyline(b.mean) + "\" fill=\"none\" stroke=\"" +
               color + "\" stroke-width=\"1.2\"/>\n";
        svg += "<text x=\"" + fixed2(160.0 + 180.0 * (double)s) +
               "\" y=\"24\" font-family=\"sans-serif\" font-size=\"12\" fill=\"" + color +
               "\">" + b.label + "</text>\n";
    }
    svg += "<polyline points=\"" + polyline(target) +
           "\" fill=\"none\" stroke=\"#222222\" stroke-width=\"1.0\" "
           "stroke-dasharray=\"4 2\"/>\n";
    svg += "</svg>\n";

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCategory::MissingInput, "cannot open " + path);
    out << svg;
    if (!out) fail(ErrorCategory::Data, "write failed for " + path);
}

} // namespace emt
