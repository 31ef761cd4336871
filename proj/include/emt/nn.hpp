#pragma once

#include <memory>
#include <string>
#include <vector>

#include "emt/linalg.hpp"
#include "emt/rng.hpp"

namespace emt::nn {

// Trainable parameter: value and gradient buffers plus whether the L2
// penalty applies (weights yes, biases and norm scales no).
struct ParamRef {
    std::string name;
    std::vector<double>* value;
    std::vector<double>* grad;
    bool decay;
};

// Batched layer over row-major matrices. Sequence layers interpret each row
// as [T x C] flattened time-major.
class Layer {
public:
    virtual ~Layer() = default;
    virtual Mat forward(const Mat& x, bool training) = 0;
    // consumes d(loss)/d(output), accumulates parameter gradients, returns
    // d(loss)/d(input)
    virtual Mat backward(const Mat& grad_out) = 0;
    virtual std::vector<ParamRef> params() { return {}; }
    virtual void init(Rng&) {}

    // everything that must persist in a model bundle (parameters plus any
    // non-trainable state such as batch-norm running statistics)
    virtual std::vector<std::pair<std::string, std::vector<double>*>> tensors() {
        std::vector<std::pair<std::string, std::vector<double>*>> out;
        for (ParamRef p : params()) out.emplace_back(p.name, p.value);
        return out;
    }
};

class Dense : public Layer {
public:
    Dense(size_t in, size_t out, const std::string& name);
    Mat forward(const Mat& x, bool training) override;
    Mat backward(const Mat& grad_out) override;
    std::vector<ParamRef> params() override;
    void init(Rng& rng) override;

    size_t in_dim, out_dim;
    std::vector<double> w, b, gw, gb; // w is [in x out]

private:
    std::string name_;
    Mat x_;
};

class Relu : public Layer {
public:
    Mat forward(const Mat& x, bool training) override;
    Mat backward(const Mat& grad_out) override;

private:
    Mat x_;
};

class Tanh : public Layer {
public:
    Mat forward(const Mat& x, bool training) override;
    Mat backward(const Mat& grad_out) override;

private:
    Mat y_;
};

class BatchNorm : public Layer {
public:
    BatchNorm(size_t dim, const std::string& name, double momentum = 0.9,
              double eps = 1e-5);
    Mat forward(const Mat& x, bool training) override;
    Mat backward(const Mat& grad_out) override;
    std::vector<ParamRef> params() override;
    std::vector<std::pair<std::string, std::vector<double>*>> tensors() override;

    size_t dim;
    double momentum, eps;
    std::vector<double> gamma, beta, ggamma, gbeta;
    std::vector<double> running_mean, running_var;

private:
    std::string name_;
    Mat xhat_;
    std::vector<double> batch_mean_, batch_std_;
    size_t batch_ = 0;
};

// Inverted dropout on independent activations.
class Dropout : public Layer {
public:
    Dropout(double rate, Rng* rng) : rate_(rate), rng_(rng) {}
    Mat forward(const Mat& x, bool training) override;
    Mat backward(const Mat& grad_out) override;

private:
    double rate_;
    Rng* rng_;
    Mat mask_;
};

// Per-timestep normalization over channels for [T x C] rows.
class LayerNorm : public Layer {
public:
    LayerNorm(size_t t, size_t c, const std::string& name, double eps = 1e-5);
    Mat forward(const Mat& x, bool training) override;
    Mat backward(const Mat& grad_out) override;
    std::vector<ParamRef> params() override;

    size_t t_len, channels;
    double eps;
    std::vector<double> gamma, beta, ggamma, gbeta;

private:
    std::string name_;
    Mat xhat_;
    std::vector<double> inv_std_; // per (row, timestep)
};

// Drops whole channels (same mask across time) for [T x C] rows.
class SpatialDropout : public Layer {
public:
    SpatialDropout(size_t t, size_t c, double rate, Rng* rng)
        : t_len(t), channels(c), rate_(rate), rng_(rng) {}
    Mat forward(const Mat& x, bool training) override;
    Mat backward(const Mat& grad_out) override;

    size_t t_len, channels;

private:
    double rate_;
    Rng* rng_;
    Mat mask_; // [batch x channels]
};

// Dilated causal 1-D convolution on [T x C_in] rows via im2col + GEMM;
// output rows are [T x C_out].
class CausalConv : public Layer {
public:
    CausalConv(size_t t, size_t c_in, size_t c_out, size_t kernel, size_t dilation,
               const std::string& name);
    Mat forward(const Mat& x, bool training) override;
    Mat backward(const Mat& grad_out) override;
    std::vector<ParamRef> params() override;
    void init(Rng& rng) override;

    size_t t_len, c_in, c_out, kernel, dilation;
    std::vector<double> w, b, gw, gb; // w is [kernel*c_in x c_out]

private:
    std::string name_;
    Mat cols_; // [batch*T x kernel*c_in]
    size_t batch_ = 0;
};

// Mean over time: [T x C] rows -> [C] rows.
class GlobalAveragePool : public Layer {
public:
    GlobalAveragePool(size_t t, size_t c) : t_len(t), channels(c) {}
    Mat forward(const Mat& x, bool training) override;
    Mat backward(const Mat& grad_out) override;

    size_t t_len, channels;
};

struct LossWeights {
    std::vector<double> w; // per output channel
    double epsilon = 1e-6;

    // w_i = 1 / (Var(tau_i) + eps) over the training targets
    static LossWeights from_targets(const Mat& targets, double eps = 1e-6);
};

double weighted_huber(const double* pred, const double* target, size_t n,
                      const LossWeights& lw, double delta);

// Mean weighted Huber over a batch; fills grad with d(loss)/d(pred).
double weighted_huber_batch(const Mat& pred, const Mat& target, const LossWeights& lw,
                            double delta, Mat* grad);

class Adam {
public:
    Adam(std::vector<ParamRef> params, double lr, double l2, double beta1 = 0.9,
         double beta2 = 0.999, double eps = 1e-8);

    // applies accumulated gradients, adding the L2 term for decayed params
    void step();
    void zero_grad();

    double l2_penalty() const; // lambda2 * sum(theta^2) over decayed params
    const std::vector<ParamRef>& params() const { return params_; }

private:
    std::vector<ParamRef> params_;
    std::vector<std::vector<double>> m_, v_;
    double lr_, l2_, beta1_, beta2_, eps_;
    long long t_ = 0;
};

} // namespace emt::nn
