#include "emt/filter.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <string>

#include "emt/error.hpp"

namespace emt {

namespace {

using cplx = std::complex<double>;

void check_order(int order) {
    if (order < 2 || order % 2 != 0)
        fail(ErrorCategory::Parameter, "filter order must be even and >= 2");
}

// Analog Butterworth prototype poles on the unit circle, upper half plane
// only (conjugates are implied), for prototype order n.
std::vector<cplx> prototype_upper(int n) {
    std::vector<cplx> poles;
    for (int k = 0; k < n; ++k) {
        const double theta = M_PI * (2.0 * k + n + 1.0) / (2.0 * n);
        const cplx p(std::cos(theta), std::sin(theta));
        if (p.imag() > 1e-12) poles.push_back(p);
    }
    return poles;
}

cplx bilinear_pole(cplx s, double fs2) { return (fs2 + s) / (fs2 - s); }

Biquad biquad_from_pole(cplx q, double nb0, double nb1, double nb2) {
    // denominator (z - q)(z - conj q)
    return {nb0, nb1, nb2, -2.0 * q.real(), std::norm(q)};
}

} // namespace

SosFilter design_lowpass(int order, double cut_hz, double fs) {
    check_order(order);
    if (!(0 < cut_hz && cut_hz < fs / 2))
        fail(ErrorCategory::Parameter, "lowpass cutoff outside (0, fs/2)");
    const double wc = 2.0 * fs * std::tan(M_PI * cut_hz / fs);
    const double fs2 = 2.0 * fs;

    // overall digital gain: wc^n / prod(fs2 - p) over all n analog poles
    cplx denom = 1.0;
    for (const cplx& pu : prototype_upper(order)) {
        const cplx p = wc * pu;
        denom *= (fs2 - p) * (fs2 - std::conj(p));
    }
    const double gain = std::pow(wc, order) / denom.real();

    SosFilter f;
    f.order = order;
    const int nsec = order / 2;
    const double g = std::pow(gain, 1.0 / nsec);
    for (const cplx& pu : prototype_upper(order)) {
        const cplx q = bilinear_pole(wc * pu, fs2);
        // zeros at z = -1 pair: (z + 1)^2
        f.sections.push_back(biquad_from_pole(q, g, 2.0 * g, g));
    }
    return f;
}

SosFilter design_bandpass(int order, double low_hz, double high_hz, double fs) {
    check_order(order);
    if (!(0 < low_hz && low_hz < high_hz && high_hz < fs / 2))
        fail(ErrorCategory::Parameter, "bandpass cutoffs must satisfy 0 < lo < hi < fs/2");
    const int n = order / 2; // prototype order
    const double wlo = 2.0 * fs * std::tan(M_PI * low_hz / fs);
    const double whi = 2.0 * fs * std::tan(M_PI * high_hz / fs);
    const double w0sq = wlo * whi;
    const double bw = whi - wlo;
    const double fs2 = 2.0 * fs;

    // analog poles: each prototype pole p maps to the two roots of
    // s^2 - (p*bw) s + w0^2 = 0
    std::vector<cplx> poles; // one representative per conjugate pair
    for (int k = 0; k < n; ++k) {
        const double theta = M_PI * (2.0 * k + n + 1.0) / (2.0 * n);
        const cplx p(std::cos(theta), std::sin(theta));
        const cplx half = p * bw / 2.0;
        const cplx disc = std::sqrt(half * half - w0sq);
        poles.push_back(half + disc);
        poles.push_back(half - disc);
    }
    // keep a single representative per conjugate pair (prototype poles come
    // in conjugate pairs for even n, so drop lower-half duplicates)
    std::vector<cplx> reps;
    for (const cplx& q : poles) {
        bool dup = false;
        for (const cplx& r : reps)
            if (std::abs(q - std::conj(r)) < 1e-9 * std::abs(q)) dup = true;
        if (!dup) reps.push_back(q);
    }
    if (reps.size() != static_cast<size_t>(n))
        fail(ErrorCategory::Internal, "bandpass pole pairing failed");

    // gain: bw^n * prod(fs2 - z) / prod(fs2 - p); analog zeros are n at 0
    cplx denom = 1.0;
    for (const cplx& q : reps) denom *= (fs2 - q) * (fs2 - std::conj(q));
    const double gain = std::pow(bw * fs2, n) / denom.real();

    SosFilter f;
    f.order = order;
    const double g = std::pow(std::abs(gain), 1.0 / n);
    for (const cplx& q : reps) {
        // digital zeros: one at +1, one at -1 per section -> (z^2 - 1)
        f.sections.push_back(biquad_from_pole(bilinear_pole(q, fs2), g, 0.0, -g));
    }
    if (gain < 0)
        for (auto* c : {&f.sections[0].b0, &f.sections[0].b1, &f.sections[0].b2}) *c = -*c;
    return f;
}

std::vector<double> sosfilt(const SosFilter& f, const std::vector<double>& x,
                            std::vector<double>* zi) {
    std::vector<double> state(zi ? *zi : std::vector<double>(2 * f.sections.size(), 0.0));
    if (state.size() != 2 * f.sections.size())
        fail(ErrorCategory::Shape, "sosfilt: zi size mismatch");
    std::vector<double> y = x;
    for (size_t s = 0; s < f.sections.size(); ++s) {
        const Biquad& q = f.sections[s];
        double z1 = state[2 * s], z2 = state[2 * s + 1];
        for (double& v : y) {
            const double xin = v;
            const double out = q.b0 * xin + z1;
            z1 = q.b1 * xin - q.a1 * out + z2;
            z2 = q.b2 * xin - q.a2 * out;
            v = out;
        }
        state[2 * s] = z1;
        state[2 * s + 1] = z2;
    }
    if (zi) *zi = state;
    return y;
}

std::vector<double> sosfilt_zi(const SosFilter& f) {
    std::vector<double> zi(2 * f.sections.size());
    double scale = 1.0; // DC gain accumulated through preceding sections
    for (size_t s = 0; s < f.sections.size(); ++s) {
        const Biquad& q = f.sections[s];
        const double h1 = (q.b0 + q.b1 + q.b2) / (1.0 + q.a1 + q.a2);
        zi[2 * s] = scale * (h1 - q.b0);
        zi[2 * s + 1] = scale * (q.b2 - q.a2 * h1);
        scale *= h1;
    }
    return zi;
}

std::vector<double> filtfilt(const SosFilter& f, const std::vector<double>& x) {
    const size_t pad = static_cast<size_t>(f.padlen());
    if (x.size() <= pad)
        fail(ErrorCategory::Length, "filtfilt: signal length " + std::to_string(x.size()) +
                                        " too short for padding " + std::to_string(pad));
    const size_t n = x.size();
    std::vector<double> ext;
    ext.reserve(n + 2 * pad);
    for (size_t i = pad; i >= 1; --i) ext.push_back(2.0 * x[0] - x[i]);
    ext.insert(ext.end(), x.begin(), x.end());
    for (size_t i = 1; i <= pad; ++i) ext.push_back(2.0 * x[n - 1] - x[n - 1 - i]);

    const std::vector<double> zi0 = sosfilt_zi(f);

    std::vector<double> zi(zi0.size());
    for (size_t i = 0; i < zi.size(); ++i) zi[i] = zi0[i] * ext.front();
    std::vector<double> y = sosfilt(f, ext, &zi);

    std::reverse(y.begin(), y.end());
    for (size_t i = 0; i < zi.size(); ++i) zi[i] = zi0[i] * y.front();
    y = sosfilt(f, y, &zi);
    std::reverse(y.begin(), y.end());

    return std::vector<double>(y.begin() + pad, y.begin() + pad + n);
}

} // namespace emt
