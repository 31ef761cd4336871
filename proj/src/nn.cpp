#include "emt/nn.hpp"

#include <algorithm>
#include <cmath>

#include "emt/error.hpp"

namespace emt::nn {

namespace {

Mat as_mat(size_t rows, size_t cols, std::vector<double> data) {
    Mat m(rows, cols);
    m.a = std::move(data);
    return m;
}

void he_uniform(std::vector<double>& w, size_t fan_in, Rng& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in));
    for (double& v : w) v = rng.uniform(-limit, limit);
}

} // namespace

Dense::Dense(size_t in, size_t out, const std::string& name)
    : in_dim(in), out_dim(out), w(in * out, 0.0), b(out, 0.0), gw(in * out, 0.0),
      gb(out, 0.0), name_(name) {}

void Dense::init(Rng& rng) { he_uniform(w, in_dim, rng); }

Mat Dense::forward(const Mat& x, bool) {
    if (x.cols != in_dim) fail(ErrorCategory::Shape, name_ + ": input width mismatch");
    x_ = x;
    const Mat wm = as_mat(in_dim, out_dim, w);
    Mat y;
    linalg::gemm(x, false, wm, false, y);
    for (size_t r = 0; r < y.rows; ++r)
        for (size_t c = 0; c < out_dim; ++c) y.at(r, c) += b[c];
    return y;
}

Mat Dense::backward(const Mat& grad_out) {
    const Mat wm = as_mat(in_dim, out_dim, w);
    Mat gwm = as_mat(in_dim, out_dim, gw);
    linalg::gemm(x_, true, grad_out, false, gwm, 1.0, 1.0);
    gw = std::move(gwm.a);
    for (size_t r = 0; r < grad_out.rows; ++r)
        for (size_t c = 0; c < out_dim; ++c) gb[c] += grad_out.at(r, c);
    Mat gx;
    linalg::gemm(grad_out, false, wm, true, gx);
    return gx;
}

std::vector<ParamRef> Dense::params() {
    return {{name_ + ".w", &w, &gw, true}, {name_ + ".b", &b, &gb, false}};
}

Mat Relu::forward(const Mat& x, bool) {
    x_ = x;
    Mat y = x;
    for (double& v : y.a) v = v > 0 ? v : 0.0;
    return y;
}

Mat Relu::backward(const Mat& grad_out) {
    Mat gx = grad_out;
    for (size_t i = 0; i < gx.a.size(); ++i)
        if (x_.a[i] <= 0) gx.a[i] = 0.0;
    return gx;
}

Mat Tanh::forward(const Mat& x, bool) {
    Mat y = x;
    for (double& v : y.a) v = std::tanh(v);
    y_ = y;
    return y;
}

Mat Tanh::backward(const Mat& grad_out) {
    Mat gx = grad_out;
    for (size_t i = 0; i < gx.a.size(); ++i) gx.a[i] *= 1.0 - y_.a[i] * y_.a[i];
    return gx;
}

BatchNorm::BatchNorm(size_t d, const std::string& name, double mom, double e)
    : dim(d), momentum(mom), eps(e), gamma(d, 1.0), beta(d, 0.0), ggamma(d, 0.0),
      gbeta(d, 0.0), running_mean(d, 0.0), running_var(d, 1.0), name_(name) {}

Mat BatchNorm::forward(const Mat& x, bool training) {
    if (x.cols != dim) fail(ErrorCategory::Shape, name_ + ": input width mismatch");
    Mat y(x.rows, x.cols);
    if (!training) {
        for (size_t c = 0; c < dim; ++c) {
            const double inv = 1.0 / std::sqrt(running_var[c] + eps);
            for (size_t r = 0; r < x.rows; ++r)
                y.at(r, c) = gamma[c] * (x.at(r, c) - running_mean[c]) * inv + beta[c];
        }
        return y;
    }
    batch_ = x.rows;
    batch_mean_.assign(dim, 0.0);
    batch_std_.assign(dim, 0.0);
    xhat_ = Mat(x.rows, x.cols);
    const double n = static_cast<double>(x.rows);
    for (size_t c = 0; c < dim; ++c) {
        double m = 0.0;
        for (size_t r = 0; r < x.rows; ++r) m += x.at(r, c);
        m /= n;
        double var = 0.0;
        for (size_t r = 0; r < x.rows; ++r) {
            const double d = x.at(r, c) - m;
            var += d * d;
        }
        var /= n;
        const double std = std::sqrt(var + eps);
        batch_mean_[c] = m;
        batch_std_[c] = std;
        for (size_t r = 0; r < x.rows; ++r) {
            const double xh = (x.at(r, c) - m) / std;
            xhat_.at(r, c) = xh;
            y.at(r, c) = gamma[c] * xh + beta[c];
        }
        running_mean[c] = momentum * running_mean[c] + (1.0 - momentum) * m;
        running_var[c] = momentum * running_var[c] + (1.0 - momentum) * var;
    }
    return y;
}

Mat BatchNorm::backward(const Mat& grad_out) {
    const double n = static_cast<double>(batch_);
    Mat gx(grad_out.rows, grad_out.cols);
    for (size_t c = 0; c < dim; ++c) {
        double sum_dy = 0.0, sum_dy_xhat = 0.0;
        for (size_t r = 0; r < grad_out.rows; ++r) {
            const double dy = grad_out.at(r, c);
            sum_dy += dy;
            sum_dy_xhat += dy * xhat_.at(r, c);
        }
        ggamma[c] += sum_dy_xhat;
        gbeta[c] += sum_dy;
        const double inv_std = 1.0 / batch_std_[c];
        for (size_t r = 0; r < grad_out.rows; ++r) {
            const double dxhat = grad_out.at(r, c) * gamma[c];
            gx.at(r, c) = inv_std * (dxhat - (gamma[c] / n) * sum_dy -
                                     xhat_.at(r, c) * (gamma[c] / n) * sum_dy_xhat);
        }
    }
    return gx;
}

std::vector<ParamRef> BatchNorm::params() {
    return {{name_ + ".gamma", &gamma, &ggamma, false},
            {name_ + ".beta", &beta, &gbeta, false}};
}

std::vector<std::pair<std::string, std::vector<double>*>> BatchNorm::tensors() {
    return {{name_ + ".gamma", &gamma},
            {name_ + ".beta", &beta},
            {name_ + ".running_mean", &running_mean},
            {name_ + ".running_var", &running_var}};
}

Mat Dropout::forward(const Mat& x, bool training) {
    if (!training || rate_ <= 0.0) {
        mask_ = Mat();
        return x;
    }
    const double keep = 1.0 - rate_;
    mask_ = Mat(x.rows, x.cols);
    Mat y = x;
    for (size_t i = 0; i < x.a.size(); ++i) {
        const double m = rng_->uniform() < rate_ ? 0.0 : 1.0 / keep;
        mask_.a[i] = m;
        y.a[i] *= m;
    }
    return y;
}

Mat Dropout::backward(const Mat& grad_out) {
    if (mask_.empty()) return grad_out;
    Mat gx = grad_out;
    for (size_t i = 0; i < gx.a.size(); ++i) gx.a[i] *= mask_.a[i];
    return gx;
}

LayerNorm::LayerNorm(size_t t, size_t c, const std::string& name, double e)
    : t_len(t), channels(c), eps(e), gamma(c, 1.0), beta(c, 0.0), ggamma(c, 0.0),
      gbeta(c, 0.0), name_(name) {}

Mat LayerNorm::forward(const Mat& x, bool) {
    if (x.cols != t_len * channels)
        fail(ErrorCategory::Shape, name_ + ": input width mismatch");
    xhat_ = Mat(x.rows, x.cols);
    inv_std_.assign(x.rows * t_len, 0.0);
    Mat y(x.rows, x.cols);
    const double nc = static_cast<double>(channels);
    for (size_t r = 0; r < x.rows; ++r) {
        for (size_t t = 0; t < t_len; ++t) {
            const double* xi = x.row(r) + t * channels;
            double m = 0.0;
            for (size_t c = 0; c < channels; ++c) m += xi[c];
            m /= nc;
            double var = 0.0;
            for (size_t c = 0; c < channels; ++c) {
                const double d = xi[c] - m;
                var += d * d;
            }
            var /= nc;
            const double inv = 1.0 / std::sqrt(var + eps);
            inv_std_[r * t_len + t] = inv;
            double* xh = xhat_.row(r) + t * channels;
            double* yo = y.row(r) + t * channels;
            for (size_t c = 0; c < channels; ++c) {
                xh[c] = (xi[c] - m) * inv;
                yo[c] = gamma[c] * xh[c] + beta[c];
            }
        }
    }
    return y;
}

Mat LayerNorm::backward(const Mat& grad_out) {
    Mat gx(grad_out.rows, grad_out.cols);
    const double nc = static_cast<double>(channels);
    for (size_t r = 0; r < grad_out.rows; ++r) {
        for (size_t t = 0; t < t_len; ++t) {
            const double* dy = grad_out.row(r) + t * channels;
            const double* xh = xhat_.row(r) + t * channels;
            double sum_dxhat = 0.0, sum_dxhat_xhat = 0.0;
            for (size_t c = 0; c < channels; ++c) {
                const double dxhat = dy[c] * gamma[c];
                sum_dxhat += dxhat;
                sum_dxhat_xhat += dxhat * xh[c];
                ggamma[c] += dy[c] * xh[c];
                gbeta[c] += dy[c];
            }
            const double inv = inv_std_[r * t_len + t];
            double* go = gx.row(r) + t * channels;
            for (size_t c = 0; c < channels; ++c) {
                const double dxhat = dy[c] * gamma[c];
                go[c] = inv * (dxhat - sum_dxhat / nc - xh[c] * sum_dxhat_xhat / nc);
            }
        }
    }
    return gx;
}

std::vector<ParamRef> LayerNorm::params() {
    return {{name_ + ".gamma", &gamma, &ggamma, false},
            {name_ + ".beta", &beta, &gbeta, false}};
}

Mat SpatialDropout::forward(const Mat& x, bool training) {
    if (!training || rate_ <= 0.0) {
        mask_ = Mat();
        return x;
    }
    const double keep = 1.0 - rate_;
    mask_ = Mat(x.rows, channels);
    for (double& m : mask_.a) m = rng_->uniform() < rate_ ? 0.0 : 1.0 / keep;
    Mat y = x;
    for (size_t r = 0; r < x.rows; ++r)
        for (size_t t = 0; t < t_len; ++t)
            for (size_t c = 0; c < channels; ++c)
                y.at(r, t * channels + c) *= mask_.at(r, c);
    return y;
}

Mat SpatialDropout::backward(const Mat& grad_out) {
    if (mask_.empty()) return grad_out;
    Mat gx = grad_out;
    for (size_t r = 0; r < gx.rows; ++r)
        for (size_t t = 0; t < t_len; ++t)
            for (size_t c = 0; c < channels; ++c)
                gx.at(r, t * channels + c) *= mask_.at(r, c);
    return gx;
}

CausalConv::CausalConv(size_t t, size_t ci, size_t co, size_t k, size_t d,
                       const std::string& name)
    : t_len(t), c_in(ci), c_out(co), kernel(k), dilation(d), w(k * ci * co, 0.0),
      b(co, 0.0), gw(k * ci * co, 0.0), gb(co, 0.0), name_(name) {}

void CausalConv::init(Rng& rng) { he_uniform(w, kernel * c_in, rng); }

Mat CausalConv::forward(const Mat& x, bool) {
    if (x.cols != t_len * c_in)
        fail(ErrorCategory::Shape, name_ + ": input width mismatch");
    batch_ = x.rows;
    // im2col: tap j reaches j*dilation samples into the past (j = 0 is now)
    cols_ = Mat(batch_ * t_len, kernel * c_in);
    for (size_t r = 0; r < batch_; ++r) {
        const double* xr = x.row(r);
        for (size_t t = 0; t < t_len; ++t) {
            double* dst = cols_.row(r * t_len + t);
            for (size_t j = 0; j < kernel; ++j) {
                const long long src_t =
                    static_cast<long long>(t) - static_cast<long long>(j * dilation);
                if (src_t < 0) continue; // causal zero padding
                const double* src = xr + static_cast<size_t>(src_t) * c_in;
                std::copy(src, src + c_in, dst + j * c_in);
            }
        }
    }
    const Mat wm = as_mat(kernel * c_in, c_out, w);
    Mat y2;
    linalg::gemm(cols_, false, wm, false, y2); // [batch*T x c_out]
    for (size_t r = 0; r < y2.rows; ++r)
        for (size_t c = 0; c < c_out; ++c) y2.at(r, c) += b[c];

    Mat y(batch_, t_len * c_out);
    y.a = std::move(y2.a);
    y.rows = batch_;
    y.cols = t_len * c_out;
    return y;
}

Mat CausalConv::backward(const Mat& grad_out) {
    Mat g2(batch_ * t_len, c_out);
    g2.a = grad_out.a;

    Mat gwm = as_mat(kernel * c_in, c_out, gw);
    linalg::gemm(cols_, true, g2, false, gwm, 1.0, 1.0);
    gw = std::move(gwm.a);
    for (size_t r = 0; r < g2.rows; ++r)
        for (size_t c = 0; c < c_out; ++c) gb[c] += g2.at(r, c);

    const Mat wm = as_mat(kernel * c_in, c_out, w);
    Mat gcols;
    linalg::gemm(g2, false, wm, true, gcols); // [batch*T x kernel*c_in]

    Mat gx(batch_, t_len * c_in);
    for (size_t r = 0; r < batch_; ++r) {
        double* gxr = gx.row(r);
        for (size_t t = 0; t < t_len; ++t) {
            const double* src = gcols.row(r * t_len + t);
            for (size_t j = 0; j < kernel; ++j) {
                const long long src_t =
                    static_cast<long long>(t) - static_cast<long long>(j * dilation);
                if (src_t < 0) continue;
                double* dst = gxr + static_cast<size_t>(src_t) * c_in;
                const double* s = src + j * c_in;
                for (size_t c = 0; c < c_in; ++c) dst[c] += s[c];
            }
        }
    }
    return gx;
}

std::vector<ParamRef> CausalConv::params() {
    return {{name_ + ".w", &w, &gw, true}, {name_ + ".b", &b, &gb, false}};
}

Mat GlobalAveragePool::forward(const Mat& x, bool) {
    if (x.cols != t_len * channels)
        fail(ErrorCategory::Shape, "gap: input width mismatch");
    Mat y(x.rows, channels);
    for (size_t r = 0; r < x.rows; ++r) {
        const double* xr = x.row(r);
        for (size_t t = 0; t < t_len; ++t)
            for (size_t c = 0; c < channels; ++c) y.at(r, c) += xr[t * channels + c];
        for (size_t c = 0; c < channels; ++c) y.at(r, c) /= static_cast<double>(t_len);
    }
    return y;
}

Mat GlobalAveragePool::backward(const Mat& grad_out) {
    Mat gx(grad_out.rows, t_len * channels);
    for (size_t r = 0; r < grad_out.rows; ++r)
        for (size_t t = 0; t < t_len; ++t)
            for (size_t c = 0; c < channels; ++c)
                gx.at(r, t * channels + c) =
                    grad_out.at(r, c) / static_cast<double>(t_len);
    return gx;
}

LossWeights LossWeights::from_targets(const Mat& targets, double eps) {
    LossWeights lw;
    lw.epsilon = eps;
    lw.w.assign(targets.cols, 0.0);
    const double n = static_cast<double>(targets.rows);
    for (size_t c = 0; c < targets.cols; ++c) {
        double m = 0.0;
        for (size_t r = 0; r < targets.rows; ++r) m += targets.at(r, c);
        m /= n;
        double var = 0.0;
        for (size_t r = 0; r < targets.rows; ++r) {
            const double d = targets.at(r, c) - m;
            var += d * d;
        }
        var /= n;
        lw.w[c] = 1.0 / (var + eps);
    }
    return lw;
}

namespace {

double huber(double e, double delta) {
    const double a = std::abs(e);
    return a <= delta ? 0.5 * e * e : delta * (a - 0.5 * delta);
}

double huber_grad(double e, double delta) {
    if (e > delta) return delta;
    if (e < -delta) return -delta;
    return e;
}

} // namespace

double weighted_huber(const double* pred, const double* target, size_t n,
                      const LossWeights& lw, double delta) {
    double acc = 0.0;
    for (size_t i = 0; i < n; ++i) acc += lw.w[i] * huber(pred[i] - target[i], delta);
    return acc;
}

double weighted_huber_batch(const Mat& pred, const Mat& target, const LossWeights& lw,
                            double delta, Mat* grad) {
    if (pred.rows != target.rows || pred.cols != target.cols)
        fail(ErrorCategory::Shape, "weighted_huber: shape mismatch");
    if (lw.w.size() != pred.cols)
        fail(ErrorCategory::Shape, "weighted_huber: weight count mismatch");
    const double n = static_cast<double>(pred.rows);
    double loss = 0.0;
    if (grad) *grad = Mat(pred.rows, pred.cols);
    for (size_t r = 0; r < pred.rows; ++r) {
        for (size_t c = 0; c < pred.cols; ++c) {
            const double e = pred.at(r, c) - target.at(r, c);
            loss += lw.w[c] * huber(e, delta);
            if (grad) grad->at(r, c) = lw.w[c] * huber_grad(e, delta) / n;
        }
    }
    return loss / n;
}

Adam::Adam(std::vector<ParamRef> params, double lr, double l2, double beta1,
           double beta2, double eps)
    : params_(std::move(params)), lr_(lr), l2_(l2), beta1_(beta1), beta2_(beta2),
      eps_(eps) {
    for (const ParamRef& p : params_) {
        m_.emplace_back(p.value->size(), 0.0);
        v_.emplace_back(p.value->size(), 0.0);
    }
}

void Adam::zero_grad() {
    for (ParamRef& p : params_) std::fill(p.grad->begin(), p.grad->end(), 0.0);
}

double Adam::l2_penalty() const {
    double acc = 0.0;
    for (const ParamRef& p : params_) {
        if (!p.decay) continue;
        for (double v : *p.value) acc += v * v;
    }
    return l2_ * acc;
}

void Adam::step() {
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (size_t i = 0; i < params_.size(); ++i) {
        ParamRef& p = params_[i];
        for (size_t j = 0; j < p.value->size(); ++j) {
            double g = (*p.grad)[j];
            if (p.decay) g += 2.0 * l2_ * (*p.value)[j];
            m_[i][j] = beta1_ * m_[i][j] + (1.0 - beta1_) * g;
            v_[i][j] = beta2_ * v_[i][j] + (1.0 - beta2_) * g * g;
            const double mhat = m_[i][j] / bc1;
            const double vhat = v_[i][j] / bc2;
            (*p.value)[j] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
        }
    }
}

} // namespace emt::nn
