#pragma once

#include <memory>
#include <vector>

#include "emt/manifest.hpp"
#include "emt/nn.hpp"

namespace emt {

// Table-III experiment grid: A = global normalization + full features,
// B = condition-specific normalization + full features, C = preprocessed
// time points only.
enum class GridCondition { A, B, C };

char grid_condition_name(GridCondition c);
GridCondition grid_condition_from_name(char c);

class Network {
public:
    explicit Network(uint64_t seed) : rng(seed) {}
    virtual ~Network() = default;

    virtual Mat forward(const Mat& x, bool training) = 0;
    virtual Mat backward(const Mat& grad) = 0;

    std::vector<nn::ParamRef> params();
    std::vector<std::pair<std::string, std::vector<double>*>> tensors();
    void init_params();

    Rng rng;

protected:
    // fixed topological order; drives init, optimizer and serialization
    virtual std::vector<nn::Layer*> layer_list() = 0;
};

// Dense(h1) -> BN -> ReLU -> Dropout -> ... -> Dense(3) -> Tanh
class MlpNetwork : public Network {
public:
    MlpNetwork(size_t in_dim, const RunManifest& m, uint64_t seed);
    Mat forward(const Mat& x, bool training) override;
    Mat backward(const Mat& grad) override;

protected:
    std::vector<nn::Layer*> layer_list() override;

private:
    std::vector<std::unique_ptr<nn::Layer>> layers_;
};

// Two residual stacks (dilations 1 and 2) of causal convolutions with layer
// norm, ReLU and spatial dropout; 1x1 skip where channel counts differ; then
// GAP -> Dense(64) -> ReLU -> Dense(3) -> tanh.
class TcnNetwork : public Network {
public:
    TcnNetwork(size_t t_len, size_t c_in, const RunManifest& m, uint64_t seed);
    Mat forward(const Mat& x, bool training) override;
    Mat backward(const Mat& grad) override;

    size_t t_len, c_in;

protected:
    std::vector<nn::Layer*> layer_list() override;

private:
    struct Stack {
        std::unique_ptr<nn::CausalConv> conv_a, conv_b;
        std::unique_ptr<nn::LayerNorm> ln_a, ln_b;
        std::unique_ptr<nn::Relu> relu_a, relu_b;
        std::unique_ptr<nn::SpatialDropout> drop_a, drop_b;
        std::unique_ptr<nn::CausalConv> skip; // null -> identity
    };
    Mat stack_forward(Stack& s, const Mat& x, bool training);
    Mat stack_backward(Stack& s, const Mat& grad);

    Stack s1_, s2_;
    std::unique_ptr<nn::GlobalAveragePool> gap_;
    std::unique_ptr<nn::Dense> head1_, head2_;
    std::unique_ptr<nn::Relu> head_relu_;
    std::unique_ptr<nn::Tanh> out_tanh_;
};

struct TrainResult {
    int epochs_run = 0;
    int best_epoch = 0;
    double best_val_loss = 0.0;
    std::vector<double> train_loss; // per epoch, includes the L2 term
};

// Deterministic mini-batch training with early stopping on validation loss;
// the best-epoch parameters are restored before returning.
TrainResult train_network(Network& net, const Mat& x_train, const Mat& y_train,
                          const Mat& x_val, const Mat& y_val,
                          const nn::LossWeights& lw, const RunManifest& m);

Mat predict(Network& net, const Mat& x, size_t batch = 256);

} // namespace emt
