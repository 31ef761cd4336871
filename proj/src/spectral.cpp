#include "emt/spectral.hpp"

#include <cmath>
#include <complex>
#include <map>
#include <string>
#include <tuple>

#include "emt/error.hpp"

namespace emt {

DpssTapers dpss(int n, double nw, int k) {
    if (n < 2 || k < 1 || k > n)
        fail(ErrorCategory::Parameter, "dpss: need 2 <= k <= n");
    if (nw <= 0 || nw >= n / 2.0)
        fail(ErrorCategory::Parameter, "dpss: time-bandwidth product out of range");

    const double w = nw / n; // half-bandwidth, cycles per sample
    std::vector<double> diag(n), off(n - 1);
    const double cos2pw = std::cos(2.0 * M_PI * w);
    for (int i = 0; i < n; ++i) {
        const double x = (n - 1 - 2.0 * i) / 2.0;
        diag[i] = x * x * cos2pw;
    }
    for (int i = 0; i + 1 < n; ++i) off[i] = (i + 1.0) * (n - 1.0 - i) / 2.0;

    const linalg::SymEig eig = linalg::tridiag_eig(diag, off); // ascending
    DpssTapers out;
    out.tapers = Mat(k, n);
    out.concentrations.resize(k);
    for (int t = 0; t < k; ++t) {
        const double* v = eig.vectors.row(n - 1 - t); // largest first
        double energy = 0.0;
        for (int i = 0; i < n; ++i) energy += v[i] * v[i];
        const double scale = 1.0 / std::sqrt(energy);
        // fix polarity: positive mean for symmetric tapers, positive initial
        // lobe otherwise (cosmetic; power estimates are sign-invariant)
        double mean = 0.0;
        for (int i = 0; i < n; ++i) mean += v[i];
        double sign = 1.0;
        if (std::abs(mean) > 1e-9 * n) {
            sign = mean > 0 ? 1.0 : -1.0;
        } else {
            for (int i = 0; i < n; ++i)
                if (std::abs(v[i]) > 1e-7) { sign = v[i] > 0 ? 1.0 : -1.0; break; }
        }
        for (int i = 0; i < n; ++i) out.tapers.at(t, i) = sign * scale * v[i];
    }

    // concentrations via the sinc kernel quadratic form
    for (int t = 0; t < k; ++t) {
        double acc = 0.0;
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                const int d = i - j;
                const double kern =
                    d == 0 ? 2.0 * w : std::sin(2.0 * M_PI * w * d) / (M_PI * d);
                acc += out.tapers.at(t, i) * kern * out.tapers.at(t, j);
            }
        }
        out.concentrations[t] = acc;
    }
    return out;
}

namespace {

const DpssTapers& cached_tapers(int n, double nw, int k) {
    static std::map<std::tuple<int, int, int>, DpssTapers> cache;
    const auto key = std::make_tuple(n, static_cast<int>(std::lround(nw * 1000)), k);
    auto it = cache.find(key);
    if (it == cache.end()) it = cache.emplace(key, dpss(n, nw, k)).first;
    return it->second;
}

void check_bands(const std::vector<Band>& bands, double fs) {
    for (const Band& b : bands)
        if (!(0.0 <= b.first && b.first < b.second && b.second <= fs / 2))
            fail(ErrorCategory::Parameter,
                 "band [" + std::to_string(b.first) + ", " + std::to_string(b.second) +
                     ") outside (0, " + std::to_string(fs / 2) + ")");
}

// DFT basis for bins 0..n/2: column pair (2j, 2j+1) holds cos/sin at bin j.
Mat dft_basis(int n) {
    const int nbins = n / 2 + 1;
    Mat d(n, 2 * nbins);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < nbins; ++j) {
            const double ang = 2.0 * M_PI * i * j / n;
            d.at(i, 2 * j) = std::cos(ang);
            d.at(i, 2 * j + 1) = -std::sin(ang);
        }
    }
    return d;
}

} // namespace

std::vector<double> multitaper_psd(const std::vector<double>& window,
                                   const MultitaperSpec& spec) {
    const int n = static_cast<int>(window.size());
    if (n < 4) fail(ErrorCategory::Length, "multitaper: window too short");
    const DpssTapers& tap = cached_tapers(n, spec.nw, spec.k);
    const int nbins = n / 2 + 1;

    std::vector<double> psd(nbins, 0.0);
    std::vector<std::complex<double>> spec_k(nbins);
    for (int t = 0; t < spec.k; ++t) {
        for (int j = 0; j < nbins; ++j) {
            std::complex<double> acc = 0.0;
            for (int i = 0; i < n; ++i) {
                const double ang = 2.0 * M_PI * i * j / n;
                acc += tap.tapers.at(t, i) * window[i] *
                       std::complex<double>(std::cos(ang), -std::sin(ang));
            }
            spec_k[j] = acc;
        }
        for (int j = 0; j < nbins; ++j) psd[j] += std::norm(spec_k[j]) / spec.fs;
    }
    for (double& v : psd) v /= spec.k;
    // one-sided doubling (skip DC and Nyquist)
    for (int j = 1; j < nbins - (n % 2 == 0 ? 1 : 0); ++j) psd[j] *= 2.0;
    return psd;
}

std::vector<double> multitaper_band_power(const std::vector<double>& window,
                                          const std::vector<Band>& bands,
                                          const MultitaperSpec& spec) {
    check_bands(bands, spec.fs);
    const std::vector<double> psd = multitaper_psd(window, spec);
    const int n = static_cast<int>(window.size());
    const double df = spec.fs / n;

    std::vector<double> out(bands.size(), 0.0);
    for (size_t b = 0; b < bands.size(); ++b)
        for (size_t j = 0; j < psd.size(); ++j) {
            const double f = df * static_cast<double>(j);
            if (f >= bands[b].first && f < bands[b].second) out[b] += psd[j] * df;
        }
    return out;
}

Mat multitaper_band_power_batch(const Mat& windows, const std::vector<Band>& bands,
                                const MultitaperSpec& spec) {
    check_bands(bands, spec.fs);
    const int n = static_cast<int>(windows.cols);
    if (n < 4) fail(ErrorCategory::Length, "multitaper: window too short");
    const DpssTapers& tap = cached_tapers(n, spec.nw, spec.k);
    const int nbins = n / 2 + 1;
    const Mat basis = dft_basis(n);

    Mat psd(windows.rows, nbins); // accumulated over tapers
    Mat tapered(windows.rows, n);
    Mat coef;
    for (int t = 0; t < spec.k; ++t) {
        for (size_t r = 0; r < windows.rows; ++r)
            for (int i = 0; i < n; ++i)
                tapered.at(r, i) = windows.at(r, i) * tap.tapers.at(t, i);
        linalg::gemm(tapered, false, basis, false, coef);
        for (size_t r = 0; r < windows.rows; ++r)
            for (int j = 0; j < nbins; ++j) {
                const double re = coef.at(r, 2 * j), im = coef.at(r, 2 * j + 1);
                psd.at(r, j) += (re * re + im * im) / spec.fs;
            }
    }
    const double df = spec.fs / n;
    const int last_doubled = nbins - (n % 2 == 0 ? 1 : 0);

    Mat out(windows.rows, bands.size());
    for (size_t b = 0; b < bands.size(); ++b) {
        for (int j = 0; j < nbins; ++j) {
            const double f = df * j;
            if (!(f >= bands[b].first && f < bands[b].second)) continue;
            const double scale =
                (j >= 1 && j < last_doubled ? 2.0 : 1.0) / spec.k * df;
            for (size_t r = 0; r < windows.rows; ++r)
                out.at(r, b) += psd.at(r, j) * scale;
        }
    }
    return out;
}

std::vector<int> morlet_default_cycles(const std::vector<double>& freqs, double fs,
                                       int window_len, int cap) {
    std::vector<int> out;
    for (double f : freqs) {
        const int max_legal = static_cast<int>(std::floor(window_len * f / fs + 1e-9));
        if (max_legal < 1)
            fail(ErrorCategory::Parameter,
                 "no legal cycle count for frequency " + std::to_string(f));
        out.push_back(std::min(max_legal, cap));
    }
    return out;
}

std::vector<double> default_morlet_freqs() {
    return {50, 75, 100, 125, 150, 175, 200, 225};
}

namespace {

struct Wavelet {
    std::vector<double> re, im;
};

Wavelet make_wavelet(double f, int n_cycles, double fs) {
    const double duration = n_cycles / f;     // seconds
    const double sigma_t = duration / 6.0;    // +-3 sigma support
    const int m = std::max(3, static_cast<int>(std::lround(duration * fs)));
    Wavelet w;
    w.re.resize(m);
    w.im.resize(m);
    double energy = 0.0;
    for (int i = 0; i < m; ++i) {
        const double t = (i - (m - 1) / 2.0) / fs;
        const double g = std::exp(-t * t / (2.0 * sigma_t * sigma_t));
        w.re[i] = g * std::cos(2.0 * M_PI * f * t);
        w.im[i] = g * std::sin(2.0 * M_PI * f * t);
        energy += g * g;
    }
    const double scale = 1.0 / std::sqrt(energy);
    for (int i = 0; i < m; ++i) {
        w.re[i] *= scale;
        w.im[i] *= scale;
    }
    return w;
}

void check_cycles(const std::vector<double>& freqs, const std::vector<int>& n_cycles,
                  double fs, int window_len) {
    if (freqs.size() != n_cycles.size())
        fail(ErrorCategory::Shape, "morlet: freqs/n_cycles length mismatch");
    for (size_t i = 0; i < freqs.size(); ++i) {
        if (freqs[i] <= 0 || freqs[i] >= fs / 2)
            fail(ErrorCategory::Parameter,
                 "morlet frequency " + std::to_string(freqs[i]) + " outside (0, fs/2)");
        if (n_cycles[i] * fs / freqs[i] > window_len + 1e-9)
            fail(ErrorCategory::Parameter,
                 "cycle rule violated for frequency " + std::to_string(freqs[i]));
    }
}

} // namespace

std::vector<double> morlet_power(const std::vector<double>& window,
                                 const std::vector<double>& freqs,
                                 const std::vector<int>& n_cycles, double fs) {
    const int n = static_cast<int>(window.size());
    check_cycles(freqs, n_cycles, fs, n);

    std::vector<double> out(freqs.size(), 0.0);
    for (size_t q = 0; q < freqs.size(); ++q) {
        const Wavelet w = make_wavelet(freqs[q], n_cycles[q], fs);
        const int m = static_cast<int>(w.re.size());
        const int c = (m - 1) / 2;
        double acc = 0.0;
        for (int i = 0; i < n; ++i) { // output position, 'same' mode
            double re = 0.0, im = 0.0;
            for (int j = 0; j < n; ++j) {
                const int k = i - j + c;
                if (k < 0 || k >= m) continue;
                re += window[j] * w.re[k];
                im += window[j] * w.im[k];
            }
            acc += re * re + im * im;
        }
        out[q] = acc / n;
    }
    return out;
}

Mat morlet_power_batch(const Mat& windows, const std::vector<double>& freqs,
                       const std::vector<int>& n_cycles, double fs) {
    const int n = static_cast<int>(windows.cols);
    check_cycles(freqs, n_cycles, fs, n);

    Mat out(windows.rows, freqs.size());
    Mat conv_re, conv_im;
    for (size_t q = 0; q < freqs.size(); ++q) {
        const Wavelet w = make_wavelet(freqs[q], n_cycles[q], fs);
        const int m = static_cast<int>(w.re.size());
        const int c = (m - 1) / 2;
        Mat dre(n, n), dim(n, n); // [input j x output i]
        for (int j = 0; j < n; ++j)
            for (int i = 0; i < n; ++i) {
                const int k = i - j + c;
                if (k < 0 || k >= m) continue;
                dre.at(j, i) = w.re[k];
                dim.at(j, i) = w.im[k];
            }
        linalg::gemm(windows, false, dre, false, conv_re);
        linalg::gemm(windows, false, dim, false, conv_im);
        for (size_t r = 0; r < windows.rows; ++r) {
            double acc = 0.0;
            for (int i = 0; i < n; ++i) {
                const double re = conv_re.at(r, i), im = conv_im.at(r, i);
                acc += re * re + im * im;
            }
            out.at(r, q) = acc / n;
        }
    }
    return out;
}

} // namespace emt
