#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <vector>

#include "emt/activation.hpp"
#include "emt/error.hpp"
#include "emt/rng.hpp"

using namespace emt;

namespace {

// uniform draw from the alpha + beta1 + beta2 = 1 simplex
ActivationParams random_params(Rng& rng, int d_max = 10) {
    double u = rng.uniform(), v = rng.uniform();
    if (u > v) std::swap(u, v);
    ActivationParams p;
    p.alpha = u;
    p.beta1 = v - u;
    p.beta2 = 1.0 - v;
    p.delay_samples = (int)rng.below((uint64_t)d_max + 1);
    return p;
}

std::vector<double> smooth_excitation(Rng& rng, size_t n) {
    std::vector<double> e(n, 0.0);
    double state = 0.3;
    for (size_t i = 0; i < n; ++i) {
        state += 0.05 * (rng.uniform() - 0.5);
        state = std::clamp(state, 0.0, 1.0);
        e[i] = state;
    }
    return e;
}

} // namespace

TEST_CASE("output stays inside [0,1] for 10^4 random stable parameter draws") {
    Rng rng(201);
    size_t violations = 0;
    for (int rep = 0; rep < 10000; ++rep) {
        const ActivationParams p = random_params(rng);
        std::vector<double> e(40);
        for (double& v : e) v = rng.uniform();
        for (double v : activate(e, p))
            if (v < 0.0 || v > 1.0) ++violations;
    }
    CHECK(violations == 0);
}

TEST_CASE("alpha = 1 is the identity") {
    Rng rng(203);
    std::vector<double> e(100);
    for (double& v : e) v = rng.uniform();
    const std::vector<double> p = activate(e, {1.0, 0.0, 0.0, 0});
    for (size_t i = 0; i < e.size(); ++i) CHECK(p[i] == e[i]);
}

TEST_CASE("constant full excitation rises monotonically to 1") {
    Rng rng(205);
    for (int rep = 0; rep < 20; ++rep) {
        ActivationParams p = random_params(rng, 0);
        if (p.alpha < 0.05) p = {0.3, 0.4, 0.3, 0}; // avoid the near-frozen corner
        const std::vector<double> out = activate(std::vector<double>(600, 1.0), p);
        for (size_t i = 1; i < out.size(); ++i) CHECK(out[i] >= out[i - 1] - 1e-15);
        CHECK(out.back() == doctest::Approx(1.0).epsilon(1e-6));
        CHECK(out.back() <= 1.0);
    }
}

TEST_CASE("delay shifts the impulse response") {
    std::vector<double> e(20, 0.0);
    e[0] = 1.0;
    const ActivationParams p{0.25, 0.5, 0.25, 5};
    const std::vector<double> out = activate(e, p);
    for (int t = 0; t < 5; ++t) CHECK(out[(size_t)t] == 0.0);
    CHECK(out[5] == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(out[6] > 0.0); // recursion keeps ringing after the impulse arrives
}

TEST_CASE("the recursion is linear in the excitation") {
    Rng rng(207);
    const ActivationParams p = random_params(rng);
    std::vector<double> e(200);
    for (double& v : e) v = rng.uniform();
    std::vector<double> scaled = e;
    for (double& v : scaled) v *= 0.37;

    const std::vector<double> a = activate(e, p);
    const std::vector<double> b = activate(scaled, p);
    for (size_t i = 0; i < a.size(); ++i)
        CHECK(b[i] == doctest::Approx(0.37 * a[i]).epsilon(1e-12));
}

TEST_CASE("parameter validation") {
    CHECK_THROWS_AS(ActivationParams({-0.1, 0.6, 0.5, 0}).validate(), Error);
    CHECK_THROWS_AS(ActivationParams({0.5, 0.2, 0.2, 0}).validate(), Error);
    CHECK_THROWS_AS(ActivationParams({0.5, 0.25, 0.25, -1}).validate(), Error);
    try {
        ActivationParams({0.5, 0.2, 0.2, 0}).validate();
    } catch (const Error& e) {
        CHECK(e.category() == ErrorCategory::Parameter);
    }
    ActivationParams ok{0.2, 0.5, 0.3, 3};
    ok.validate(); // no throw
}

TEST_CASE("fit recovers synthetic parameters including the exact delay") {
    Rng rng(209);
    const std::vector<double> e = smooth_excitation(rng, 2000);
    const ActivationParams truth{0.2, 0.5, 0.3, 3};
    const std::vector<double> target = activate(e, truth);

    const ActivationFit fit = fit_activation_params(e, target, 10);
    CHECK_FALSE(fit.degenerate);
    CHECK(fit.params.delay_samples == 3);
    CHECK(fit.objective <= 1e-8);
    CHECK(fit.params.alpha == doctest::Approx(0.2).epsilon(1e-3));
    CHECK(fit.params.beta1 == doctest::Approx(0.5).epsilon(1e-2));
    CHECK(fit.params.beta2 == doctest::Approx(0.3).epsilon(1e-2));
}

TEST_CASE("fitting the excitation against itself collapses to the identity") {
    Rng rng(211);
    const std::vector<double> e = smooth_excitation(rng, 1000);
    const ActivationFit fit = fit_activation_params(e, e, 10);
    CHECK_FALSE(fit.degenerate);
    CHECK(fit.params.delay_samples == 0);
    CHECK(fit.params.alpha == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(fit.objective <= 1e-10);
}

TEST_CASE("constant target takes the degenerate fallback") {
    Rng rng(213);
    const std::vector<double> e = smooth_excitation(rng, 500);
    const ActivationFit fit = fit_activation_params(e, std::vector<double>(500, 0.4), 10);
    CHECK(fit.degenerate);
    fit.params.validate(); // fallback parameters are still a valid filter
}

TEST_CASE("fit input validation") {
    std::vector<double> e(100, 0.5), t(100, 0.5);
    SUBCASE("length mismatch") {
        try {
            fit_activation_params(e, std::vector<double>(99, 0.5), 10);
            FAIL("expected shape error");
        } catch (const Error& err) {
            CHECK(err.category() == ErrorCategory::Shape);
        }
    }
    SUBCASE("excitation outside [0,1]") {
        e[40] = 1.5;
        try {
            fit_activation_params(e, t, 10);
            FAIL("expected parameter error");
        } catch (const Error& err) {
            CHECK(err.category() == ErrorCategory::Parameter);
        }
    }
    SUBCASE("non-finite target") {
        t[10] = std::nan("");
        try {
            fit_activation_params(e, t, 10);
            FAIL("expected data error");
        } catch (const Error& err) {
            CHECK(err.category() == ErrorCategory::Data);
        }
    }
    SUBCASE("too short for the delay search") {
        std::vector<double> tiny(3, 0.5);
        try {
            fit_activation_params(tiny, tiny, 10);
            FAIL("expected length error");
        } catch (const Error& err) {
            CHECK(err.category() == ErrorCategory::Length);
        }
    }
}
