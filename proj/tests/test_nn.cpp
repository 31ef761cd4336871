#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <vector>

#include "emt/models.hpp"
#include "emt/nn.hpp"
#include "emt/rng.hpp"

using namespace emt;
using namespace emt::nn;

namespace {

Mat random_mat(Rng& rng, size_t r, size_t c, double scale = 1.0, double nudge = 0.0) {
    Mat m(r, c);
    for (double& v : m.a) {
        v = scale * rng.normal();
        if (nudge > 0.0) v += v >= 0.0 ? nudge : -nudge; // keep away from relu kink
    }
    return m;
}

double dot_loss(const Mat& y, const Mat& coeff) {
    double s = 0.0;
    for (size_t i = 0; i < y.a.size(); ++i) s += coeff.a[i] * y.a[i];
    return s;
}

double rel_err(double a, double b) {
    return std::fabs(a - b) / std::max(std::fabs(a) + std::fabs(b), 1e-3);
}

// Max relative error between analytic gradients (input + every parameter) and
// central differences of the scalar loss sum(coeff .* forward(x)).
double layer_grad_max_rel(Layer& layer, Mat x, Rng& rng) {
    Mat y0 = layer.forward(x, true);
    Mat coeff(y0.rows, y0.cols);
    for (double& v : coeff.a) v = rng.uniform(-1.5, 1.5);

    for (ParamRef p : layer.params()) std::fill(p.grad->begin(), p.grad->end(), 0.0);
    Mat gx = layer.backward(coeff);

    auto numeric = [&](double* slot) {
        const double h = 1e-5 * std::max(1.0, std::fabs(*slot));
        const double save = *slot;
        *slot = save + h;
        const double lp = dot_loss(layer.forward(x, true), coeff);
        *slot = save - h;
        const double lm = dot_loss(layer.forward(x, true), coeff);
        *slot = save;
        return (lp - lm) / (2.0 * h);
    };

    double worst = 0.0;
    for (size_t i = 0; i < x.a.size(); ++i)
        worst = std::max(worst, rel_err(gx.a[i], numeric(&x.a[i])));
    for (ParamRef p : layer.params())
        for (size_t j = 0; j < p.value->size(); ++j)
            worst = std::max(worst, rel_err((*p.grad)[j], numeric(&(*p.value)[j])));
    return worst;
}

double network_grad_max_rel(Network& net, Mat x, Rng& rng) {
    Mat y0 = net.forward(x, true);
    Mat coeff(y0.rows, y0.cols);
    for (double& v : coeff.a) v = rng.uniform(-1.5, 1.5);

    for (ParamRef p : net.params()) std::fill(p.grad->begin(), p.grad->end(), 0.0);
    Mat gx = net.backward(coeff);

    auto numeric = [&](double* slot) {
        const double h = 1e-5 * std::max(1.0, std::fabs(*slot));
        const double save = *slot;
        *slot = save + h;
        const double lp = dot_loss(net.forward(x, true), coeff);
        *slot = save - h;
        const double lm = dot_loss(net.forward(x, true), coeff);
        *slot = save;
        return (lp - lm) / (2.0 * h);
    };

    double worst = 0.0;
    for (size_t i = 0; i < x.a.size(); ++i)
        worst = std::max(worst, rel_err(gx.a[i], numeric(&x.a[i])));
    for (ParamRef p : net.params())
        for (size_t j = 0; j < p.value->size(); ++j)
            worst = std::max(worst, rel_err((*p.grad)[j], numeric(&(*p.value)[j])));
    return worst;
}

} // namespace

TEST_CASE("dense forward matches hand computation") {
    Dense d(2, 3, "d");
    d.w = {1.0, 2.0, 3.0, 4.0, 5.0, 6.0}; // [2 x 3] row-major
    d.b = {0.5, -0.5, 1.0};
    Mat x(1, 2);
    x.a = {2.0, -1.0};
    Mat y = d.forward(x, false);
    CHECK(y.at(0, 0) == doctest::Approx(2.0 * 1 - 1.0 * 4 + 0.5).epsilon(1e-12));
    CHECK(y.at(0, 1) == doctest::Approx(2.0 * 2 - 1.0 * 5 - 0.5).epsilon(1e-12));
    CHECK(y.at(0, 2) == doctest::Approx(2.0 * 3 - 1.0 * 6 + 1.0).epsilon(1e-12));
}

TEST_CASE("zero-weight dense maps everything to zero") {
    Dense d(4, 3, "d");
    Rng rng(3);
    Mat x = random_mat(rng, 5, 4);
    Mat y = d.forward(x, false);
    for (double v : y.a) CHECK(v == 0.0);
}

TEST_CASE("causal conv forward matches direct dilated convolution") {
    Rng rng(11);
    const size_t t = 7, ci = 2, co = 3, k = 3, dil = 2;
    CausalConv conv(t, ci, co, k, dil, "c");
    conv.init(rng);
    for (double& v : conv.b) v = rng.normal();
    Mat x = random_mat(rng, 2, t * ci);

    Mat y = conv.forward(x, false);
    REQUIRE(y.rows == 2);
    REQUIRE(y.cols == t * co);
    for (size_t r = 0; r < 2; ++r)
        for (size_t tt = 0; tt < t; ++tt)
            for (size_t o = 0; o < co; ++o) {
                double acc = conv.b[o];
                for (size_t j = 0; j < k; ++j) {
                    const long long src = (long long)tt - (long long)(j * dil);
                    if (src < 0) continue;
                    for (size_t c = 0; c < ci; ++c)
                        acc += conv.w[(j * ci + c) * co + o] *
                               x.at(r, (size_t)src * ci + c);
                }
                CHECK(y.at(r, tt * co + o) == doctest::Approx(acc).epsilon(1e-12));
            }
}

TEST_CASE("gradient checks: every deterministic layer type") {
    Rng rng(42);
    std::vector<double> errs;
    auto run = [&](Layer& l, Mat x) { errs.push_back(layer_grad_max_rel(l, std::move(x), rng)); };

    for (int rep = 0; rep < 3; ++rep) {
        size_t in = 3 + rng.below(4), out = 2 + rng.below(4), batch = 2 + rng.below(3);
        Dense d(in, out, "d");
        d.init(rng);
        for (double& v : d.b) v = 0.1 * rng.normal();
        run(d, random_mat(rng, batch, in));
    }
    for (int rep = 0; rep < 3; ++rep) {
        Relu r;
        run(r, random_mat(rng, 3, 4 + rng.below(3), 1.0, 0.2));
    }
    for (int rep = 0; rep < 2; ++rep) {
        Tanh t;
        run(t, random_mat(rng, 2 + rng.below(3), 5));
    }
    for (int rep = 0; rep < 3; ++rep) {
        size_t dim = 3 + rng.below(3);
        BatchNorm bn(dim, "bn");
        for (double& v : bn.gamma) v = 0.5 + rng.uniform();
        for (double& v : bn.beta) v = rng.normal();
        run(bn, random_mat(rng, 4 + rng.below(4), dim));
    }
    for (int rep = 0; rep < 3; ++rep) {
        size_t t = 3 + rng.below(3), c = 3 + rng.below(3);
        LayerNorm ln(t, c, "ln");
        for (double& v : ln.gamma) v = 0.5 + rng.uniform();
        for (double& v : ln.beta) v = rng.normal();
        run(ln, random_mat(rng, 2, t * c));
    }
    const size_t kernels[] = {1, 2, 3, 3, 2};
    const size_t dils[] = {1, 1, 2, 4, 3};
    for (int rep = 0; rep < 5; ++rep) {
        size_t t = 6 + rng.below(4), ci = 2 + rng.below(2), co = 2 + rng.below(3);
        CausalConv conv(t, ci, co, kernels[rep], dils[rep], "c");
        conv.init(rng);
        for (double& v : conv.b) v = 0.1 * rng.normal();
        run(conv, random_mat(rng, 2, t * ci));
    }
    for (int rep = 0; rep < 2; ++rep) {
        size_t t = 4 + rng.below(3), c = 3;
        GlobalAveragePool gap(t, c);
        run(gap, random_mat(rng, 3, t * c));
    }

    REQUIRE(errs.size() >= 20);
    for (double e : errs) CHECK(e < 1e-4);
}

TEST_CASE("gradient checks: whole networks with dropout disabled") {
    RunManifest m;
    m.dropout = 0.0;

    SUBCASE("mlp") {
        m.mlp_hidden = {6, 5};
        MlpNetwork net(7, m, 5);
        net.init_params();
        Rng rng(6);
        Mat x = random_mat(rng, 4, 7);
        CHECK(network_grad_max_rel(net, x, rng) < 1e-4);
    }
    SUBCASE("tcn with residual stacks") {
        m.tcn_filters = 4;
        m.tcn_kernel = 2;
        m.tcn_dense = 5;
        TcnNetwork net(6, 3, m, 5);
        net.init_params();
        Rng rng(7);
        Mat x = random_mat(rng, 3, 6 * 3);
        CHECK(network_grad_max_rel(net, x, rng) < 1e-4);
    }
}

TEST_CASE("backward accumulates gradients until explicitly zeroed") {
    // the training loop relies on zero_grad() per batch; a silently
    // accumulating optimizer input is the classic failure mode
    Rng rng(9);
    Dense d(3, 2, "d");
    d.init(rng);
    Mat x1 = random_mat(rng, 2, 3), x2 = random_mat(rng, 2, 3);
    Mat g1 = random_mat(rng, 2, 2), g2 = random_mat(rng, 2, 2);

    d.forward(x1, true);
    d.backward(g1);
    std::vector<double> after_one = d.gw;
    d.forward(x2, true);
    d.backward(g2);
    std::vector<double> accumulated = d.gw;

    std::fill(d.gw.begin(), d.gw.end(), 0.0);
    std::fill(d.gb.begin(), d.gb.end(), 0.0);
    d.forward(x2, true);
    d.backward(g2);
    for (size_t i = 0; i < d.gw.size(); ++i)
        CHECK(accumulated[i] == doctest::Approx(after_one[i] + d.gw[i]).epsilon(1e-12));

    Adam opt(d.params(), 1e-3, 0.0);
    opt.zero_grad();
    for (double v : d.gw) CHECK(v == 0.0);
    for (double v : d.gb) CHECK(v == 0.0);
}

TEST_CASE("two identical batches without zero_grad double the gradient") {
    // regression guard for the per-batch zero_grad contract in train_network
    Rng rng(13);
    Dense d(4, 2, "d");
    d.init(rng);
    Mat x = random_mat(rng, 3, 4);
    Mat g = random_mat(rng, 3, 2);
    d.forward(x, true);
    d.backward(g);
    std::vector<double> once = d.gw;
    d.forward(x, true);
    d.backward(g);
    for (size_t i = 0; i < once.size(); ++i)
        CHECK(d.gw[i] == doctest::Approx(2.0 * once[i]).epsilon(1e-12));
}

TEST_CASE("adam matches a hand-stepped reference, L2 only on decayed params") {
    Dense d(2, 1, "d");
    d.w = {0.5, -0.3};
    d.b = {0.2};
    const double lr = 0.01, l2 = 0.05, b1 = 0.9, b2 = 0.999, eps = 1e-8;
    Adam opt(d.params(), lr, l2, b1, b2, eps);

    // independent reference update
    std::vector<double> w_ref = {0.5, -0.3}, b_ref = {0.2};
    std::vector<double> mw(2, 0.0), vw(2, 0.0), mb(1, 0.0), vb(1, 0.0);
    Rng rng(21);
    for (int t = 1; t <= 3; ++t) {
        std::vector<double> gw = {rng.normal(), rng.normal()};
        std::vector<double> gb = {rng.normal()};
        d.gw = gw;
        d.gb = gb;
        opt.step();

        const double bc1 = 1.0 - std::pow(b1, t), bc2 = 1.0 - std::pow(b2, t);
        for (int j = 0; j < 2; ++j) {
            const double g = gw[j] + 2.0 * l2 * w_ref[j];
            mw[j] = b1 * mw[j] + (1 - b1) * g;
            vw[j] = b2 * vw[j] + (1 - b2) * g * g;
            w_ref[j] -= lr * (mw[j] / bc1) / (std::sqrt(vw[j] / bc2) + eps);
        }
        const double g = gb[0]; // bias carries no decay
        mb[0] = b1 * mb[0] + (1 - b1) * g;
        vb[0] = b2 * vb[0] + (1 - b2) * g * g;
        b_ref[0] -= lr * (mb[0] / bc1) / (std::sqrt(vb[0] / bc2) + eps);

        for (int j = 0; j < 2; ++j) CHECK(d.w[j] == doctest::Approx(w_ref[j]).epsilon(1e-12));
        CHECK(d.b[0] == doctest::Approx(b_ref[0]).epsilon(1e-12));
    }
}

TEST_CASE("adam l2 penalty covers weights but not biases or norm scales") {
    Dense d(2, 2, "d");
    d.w = {1.0, 2.0, 3.0, 4.0};
    d.b = {10.0, 10.0};
    BatchNorm bn(2, "bn");
    bn.gamma = {5.0, 5.0};

    std::vector<ParamRef> ps = d.params();
    for (ParamRef p : bn.params()) ps.push_back(p);
    Adam opt(ps, 1e-3, 0.01);
    CHECK(opt.l2_penalty() == doctest::Approx(0.01 * (1 + 4 + 9 + 16)).epsilon(1e-12));
}

TEST_CASE("dropout: inverted scaling, mask statistics, eval identity") {
    Rng rng(17);
    const double rate = 0.3;
    Dropout drop(rate, &rng);
    Mat x(100, 100, 1.0); // 10^4 activations

    Mat y = drop.forward(x, true);
    size_t zeros = 0;
    for (double v : y.a) {
        if (v == 0.0) {
            ++zeros;
        } else {
            CHECK(v == doctest::Approx(1.0 / (1.0 - rate)).epsilon(1e-12));
        }
    }
    // binomial(10^4, 0.3): 4 sigma ~ 0.018
    const double frac = (double)zeros / (double)x.a.size();
    CHECK(frac == doctest::Approx(rate).epsilon(0.07));

    // backward uses the recorded mask
    Mat g(100, 100, 1.0);
    Mat gx = drop.backward(g);
    for (size_t i = 0; i < gx.a.size(); ++i)
        CHECK(gx.a[i] == doctest::Approx(y.a[i]).epsilon(1e-12));

    // inference is the identity
    Mat ye = drop.forward(x, false);
    for (size_t i = 0; i < ye.a.size(); ++i) CHECK(ye.a[i] == x.a[i]);
    Mat gpass = drop.backward(g);
    for (size_t i = 0; i < gpass.a.size(); ++i) CHECK(gpass.a[i] == g.a[i]);
}

TEST_CASE("spatial dropout removes whole channels across time") {
    Rng rng(19);
    const size_t t = 10, c = 8, batch = 50;
    const double rate = 0.25;
    SpatialDropout drop(t, c, rate, &rng);
    Mat x(batch, t * c, 1.0);
    Mat y = drop.forward(x, true);

    size_t dropped = 0;
    for (size_t r = 0; r < batch; ++r)
        for (size_t ch = 0; ch < c; ++ch) {
            const double first = y.at(r, ch);
            for (size_t tt = 1; tt < t; ++tt)
                CHECK(y.at(r, tt * c + ch) == first); // same mask across time
            if (first == 0.0)
                ++dropped;
            else
                CHECK(first == doctest::Approx(1.0 / (1.0 - rate)).epsilon(1e-12));
        }
    const double frac = (double)dropped / (double)(batch * c);
    CHECK(frac > 0.10);
    CHECK(frac < 0.40);
}

TEST_CASE("weighted huber frozen values") {
    LossWeights lw;
    lw.w = {2.0};
    double pred = 1.0, target = 0.5;
    CHECK(weighted_huber(&pred, &target, 1, lw, 1.0) == doctest::Approx(0.25).epsilon(1e-12));

    lw.w = {1.0};
    pred = 3.0;
    target = 0.0;
    CHECK(weighted_huber(&pred, &target, 1, lw, 1.0) == doctest::Approx(2.5).epsilon(1e-12));

    // continuous at |e| = delta
    pred = 1.0;
    const double inner = weighted_huber(&pred, &target, 1, lw, 1.0);
    CHECK(inner == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("loss weights are inverse target variance") {
    Mat targets(1000, 2);
    Rng rng(23);
    for (size_t r = 0; r < targets.rows; ++r) {
        targets.at(r, 0) = rng.normal();       // var 1
        targets.at(r, 1) = 2.0 * rng.normal(); // var 4
    }
    LossWeights lw = LossWeights::from_targets(targets);
    CHECK(lw.w[0] / lw.w[1] == doctest::Approx(4.0).epsilon(0.2));

    Mat exact(2, 2);
    exact.at(0, 0) = 1.0;
    exact.at(1, 0) = -1.0; // var 1
    exact.at(0, 1) = 2.0;
    exact.at(1, 1) = -2.0; // var 4
    LossWeights le = LossWeights::from_targets(exact, 0.0);
    CHECK(le.w[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(le.w[1] == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("batch huber loss and gradient match finite differences") {
    Rng rng(29);
    Mat pred = random_mat(rng, 6, 3), target = random_mat(rng, 6, 3);
    LossWeights lw;
    lw.w = {1.0, 2.5, 0.5};
    Mat grad;
    const double loss = weighted_huber_batch(pred, target, lw, 1.0, &grad);

    // value equals the mean of the per-row pointwise reduction
    double acc = 0.0;
    for (size_t r = 0; r < pred.rows; ++r)
        acc += weighted_huber(pred.row(r), target.row(r), 3, lw, 1.0);
    CHECK(loss == doctest::Approx(acc / 6.0).epsilon(1e-12));

    for (size_t i = 0; i < pred.a.size(); ++i) {
        const double h = 1e-6;
        const double save = pred.a[i];
        pred.a[i] = save + h;
        const double lp = weighted_huber_batch(pred, target, lw, 1.0, nullptr);
        pred.a[i] = save - h;
        const double lm = weighted_huber_batch(pred, target, lw, 1.0, nullptr);
        pred.a[i] = save;
        CHECK(grad.a[i] == doctest::Approx((lp - lm) / (2 * h)).epsilon(1e-4));
    }
}

TEST_CASE("batchnorm running statistics drive inference mode") {
    Rng rng(31);
    BatchNorm bn(3, "bn", 0.0); // momentum 0: running stats = last batch
    Mat x = random_mat(rng, 16, 3, 2.0);
    Mat y_train = bn.forward(x, true);
    Mat y_eval = bn.forward(x, false);
    // with running stats equal to the batch stats the two paths agree up to
    // the eps placement (var+eps inside vs sqrt of running var + eps)
    for (size_t i = 0; i < y_train.a.size(); ++i)
        CHECK(y_eval.a[i] == doctest::Approx(y_train.a[i]).epsilon(1e-4));

    auto ts = bn.tensors();
    REQUIRE(ts.size() == 4); // gamma, beta, running mean, running var
}
