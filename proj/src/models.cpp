#include "emt/models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "emt/error.hpp"

namespace emt {

char grid_condition_name(GridCondition c) {
    switch (c) {
    case GridCondition::A: return 'A';
    case GridCondition::B: return 'B';
    case GridCondition::C: return 'C';
    }
    fail(ErrorCategory::Internal, "bad grid condition");
}

GridCondition grid_condition_from_name(char c) {
    if (c == 'A' || c == 'a') return GridCondition::A;
    if (c == 'B' || c == 'b') return GridCondition::B;
    if (c == 'C' || c == 'c') return GridCondition::C;
    fail(ErrorCategory::Config, std::string("unknown grid condition '") + c + "'");
}

std::vector<nn::ParamRef> Network::params() {
    std::vector<nn::ParamRef> out;
    for (nn::Layer* l : layer_list())
        for (nn::ParamRef p : l->params()) out.push_back(p);
    return out;
}

std::vector<std::pair<std::string, std::vector<double>*>> Network::tensors() {
    std::vector<std::pair<std::string, std::vector<double>*>> out;
    for (nn::Layer* l : layer_list())
        for (auto& t : l->tensors()) out.push_back(t);
    return out;
}

void Network::init_params() {
    for (nn::Layer* l : layer_list()) l->init(rng);
}

MlpNetwork::MlpNetwork(size_t in_dim, const RunManifest& m, uint64_t seed)
    : Network(seed) {
    if (in_dim == 0) fail(ErrorCategory::Shape, "mlp: empty input");
    size_t prev = in_dim;
    int idx = 0;
    for (int h : m.mlp_hidden) {
        std::string tag = std::to_string(++idx);
        layers_.push_back(std::make_unique<nn::Dense>(prev, (size_t)h, "dense" + tag));
        layers_.push_back(std::make_unique<nn::BatchNorm>((size_t)h, "bn" + tag));
        layers_.push_back(std::make_unique<nn::Relu>());
        layers_.push_back(std::make_unique<nn::Dropout>(m.dropout, &rng));
        prev = (size_t)h;
    }
    layers_.push_back(std::make_unique<nn::Dense>(prev, 3, "out"));
    layers_.push_back(std::make_unique<nn::Tanh>());
}

Mat MlpNetwork::forward(const Mat& x, bool training) {
    Mat cur = x;
    for (auto& l : layers_) cur = l->forward(cur, training);
    return cur;
}

Mat MlpNetwork::backward(const Mat& grad) {
    Mat cur = grad;
    for (auto it = layers_.rbegin(); it != layers_.rend(); ++it)
        cur = (*it)->backward(cur);
    return cur;
}

std::vector<nn::Layer*> MlpNetwork::layer_list() {
    std::vector<nn::Layer*> out;
    for (auto& l : layers_) out.push_back(l.get());
    return out;
}

TcnNetwork::TcnNetwork(size_t t, size_t c, const RunManifest& m, uint64_t seed)
    : Network(seed), t_len(t), c_in(c) {
    if (t == 0 || c == 0) fail(ErrorCategory::Shape, "tcn: empty input");
    size_t f = (size_t)m.tcn_filters;
    size_t k = (size_t)m.tcn_kernel;
    auto build = [&](Stack& s, size_t ci, size_t dil, const std::string& tag) {
        s.conv_a = std::make_unique<nn::CausalConv>(t, ci, f, k, dil, tag + "a");
        s.ln_a = std::make_unique<nn::LayerNorm>(t, f, tag + "a_ln");
        s.relu_a = std::make_unique<nn::Relu>();
        s.drop_a = std::make_unique<nn::SpatialDropout>(t, f, m.dropout, &rng);
        s.conv_b = std::make_unique<nn::CausalConv>(t, f, f, k, dil, tag + "b");
        s.ln_b = std::make_unique<nn::LayerNorm>(t, f, tag + "b_ln");
        s.relu_b = std::make_unique<nn::Relu>();
        s.drop_b = std::make_unique<nn::SpatialDropout>(t, f, m.dropout, &rng);
        if (ci != f)
            s.skip = std::make_unique<nn::CausalConv>(t, ci, f, 1, 1, tag + "skip");
    };
    build(s1_, c, 1, "tcn1");
    build(s2_, f, 2, "tcn2");
    gap_ = std::make_unique<nn::GlobalAveragePool>(t, f);
    head1_ = std::make_unique<nn::Dense>(f, (size_t)m.tcn_dense, "head1");
    head_relu_ = std::make_unique<nn::Relu>();
    head2_ = std::make_unique<nn::Dense>((size_t)m.tcn_dense, 3, "head2");
    out_tanh_ = std::make_unique<nn::Tanh>();
}

Mat TcnNetwork::stack_forward(Stack& s, const Mat& x, bool training) {
    Mat h = s.conv_a->forward(x, training);
    h = s.ln_a->forward(h, training);
    h = s.relu_a->forward(h, training);
    h = s.drop_a->forward(h, training);
    h = s.conv_b->forward(h, training);
    h = s.ln_b->forward(h, training);
    h = s.relu_b->forward(h, training);
    h = s.drop_b->forward(h, training);
    Mat res = s.skip ? s.skip->forward(x, training) : x;
    for (size_t i = 0; i < h.a.size(); ++i) h.a[i] += res.a[i];
    return h;
}

Mat TcnNetwork::stack_backward(Stack& s, const Mat& grad) {
    Mat g = s.drop_b->backward(grad);
    g = s.relu_b->backward(g);
    g = s.ln_b->backward(g);
    g = s.conv_b->backward(g);
    g = s.drop_a->backward(g);
    g = s.relu_a->backward(g);
    g = s.ln_a->backward(g);
    g = s.conv_a->backward(g);
    Mat res = s.skip ? s.skip->backward(grad) : grad;
    for (size_t i = 0; i < g.a.size(); ++i) g.a[i] += res.a[i];
    return g;
}

Mat TcnNetwork::forward(const Mat& x, bool training) {
    if (x.cols != t_len * c_in) fail(ErrorCategory::Shape, "tcn: input width mismatch");
    Mat h = stack_forward(s1_, x, training);
    h = stack_forward(s2_, h, training);
    h = gap_->forward(h, training);
    h = head1_->forward(h, training);
    h = head_relu_->forward(h, training);
    h = head2_->forward(h, training);
    return out_tanh_->forward(h, training);
}

Mat TcnNetwork::backward(const Mat& grad) {
    Mat g = out_tanh_->backward(grad);
    g = head2_->backward(g);
    g = head_relu_->backward(g);
    g = head1_->backward(g);
    g = gap_->backward(g);
    g = stack_backward(s2_, g);
    return stack_backward(s1_, g);
}

std::vector<nn::Layer*> TcnNetwork::layer_list() {
    std::vector<nn::Layer*> out;
    auto add = [&](Stack& s) {
        out.push_back(s.conv_a.get());
        out.push_back(s.ln_a.get());
        out.push_back(s.relu_a.get());
        out.push_back(s.drop_a.get());
        out.push_back(s.conv_b.get());
        out.push_back(s.ln_b.get());
        out.push_back(s.relu_b.get());
        out.push_back(s.drop_b.get());
        if (s.skip) out.push_back(s.skip.get());
    };
    add(s1_);
    add(s2_);
    out.push_back(gap_.get());
    out.push_back(head1_.get());
    out.push_back(head_relu_.get());
    out.push_back(head2_.get());
    out.push_back(out_tanh_.get());
    return out;
}

namespace {

Mat take_rows(const Mat& x, size_t start, size_t count) {
    Mat out(count, x.cols);
    std::copy(x.row(start), x.row(start) + count * x.cols, out.a.data());
    return out;
}

std::vector<std::vector<double>> snapshot(Network& net) {
    std::vector<std::vector<double>> out;
    for (auto& t : net.tensors()) out.push_back(*t.second);
    return out;
}

void restore(Network& net, const std::vector<std::vector<double>>& snap) {
    auto ts = net.tensors();
    if (ts.size() != snap.size()) fail(ErrorCategory::Internal, "snapshot size mismatch");
    for (size_t i = 0; i < ts.size(); ++i) *ts[i].second = snap[i];
}

} // namespace

TrainResult train_network(Network& net, const Mat& x_train, const Mat& y_train,
                          const Mat& x_val, const Mat& y_val,
                          const nn::LossWeights& lw, const RunManifest& m) {
    if (x_train.rows == 0) fail(ErrorCategory::Training, "no training rows");
    if (x_train.rows != y_train.rows || x_val.rows != y_val.rows)
        fail(ErrorCategory::Shape, "train: row count mismatch");

    nn::Adam opt(net.params(), m.learning_rate, m.l2);
    size_t batch = (size_t)m.batch_size;

    TrainResult res;
    res.best_val_loss = std::numeric_limits<double>::infinity();
    std::vector<std::vector<double>> best = snapshot(net);
    int since_best = 0;

    for (int epoch = 1; epoch <= m.max_epochs; ++epoch) {
        double loss_sum = 0.0;
        for (size_t start = 0; start < x_train.rows; start += batch) {
            size_t n = std::min(batch, x_train.rows - start);
            Mat xb = take_rows(x_train, start, n);
            Mat yb = take_rows(y_train, start, n);
            Mat pred = net.forward(xb, true);
            Mat grad;
            double data_loss = nn::weighted_huber_batch(pred, yb, lw, m.huber_delta, &grad);
            opt.zero_grad();
            net.backward(grad);
            opt.step();
            loss_sum += data_loss * (double)n;
        }
        double train_loss = loss_sum / (double)x_train.rows + opt.l2_penalty();
        res.train_loss.push_back(train_loss);
        res.epochs_run = epoch;
        if (!std::isfinite(train_loss))
            fail(ErrorCategory::Training,
                 "training diverged at epoch " + std::to_string(epoch));

        if (x_val.rows == 0) {
            res.best_epoch = epoch;
            best = snapshot(net);
            continue;
        }
        Mat val_pred = predict(net, x_val);
        double val_loss =
            nn::weighted_huber_batch(val_pred, y_val, lw, m.huber_delta, nullptr);
        if (!std::isfinite(val_loss))
            fail(ErrorCategory::Training,
                 "validation loss diverged at epoch " + std::to_string(epoch));
        if (val_loss < res.best_val_loss) {
            res.best_val_loss = val_loss;
            res.best_epoch = epoch;
            best = snapshot(net);
            since_best = 0;
        } else if (++since_best >= m.patience) {
            break;
        }
    }

    restore(net, best);
    return res;
}

Mat predict(Network& net, const Mat& x, size_t batch) {
    Mat out;
    for (size_t start = 0; start < x.rows; start += batch) {
        size_t n = std::min(batch, x.rows - start);
        Mat pred = net.forward(take_rows(x, start, n), false);
        if (out.empty()) {
            out = Mat(x.rows, pred.cols);
        }
        std::copy(pred.a.begin(), pred.a.end(), out.row(start));
    }
    if (out.empty()) out = Mat(0, 3);
    return out;
}

} // namespace emt
