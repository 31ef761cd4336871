#pragma once

#include <vector>

namespace emt {

// Second-order neural activation recursion
//   p(t) = alpha * e(t - d) + beta1 * p(t-1) + beta2 * p(t-2)
// with alpha + beta1 + beta2 = 1 and all coefficients nonnegative.
struct ActivationParams {
    double alpha = 1.0;
    double beta1 = 0.0;
    double beta2 = 0.0;
    int delay_samples = 0;

    void validate() const;
};

std::vector<double> activate(const std::vector<double>& e, const ActivationParams& p);

struct ActivationFit {
    ActivationParams params;
    double objective = 0.0; // MSE against the target
    bool degenerate = false; // constant-target fallback was taken
};

// Constrained least-squares fit: exhaustive over delay in [0, d_max], grid +
// Nelder-Mead refinement over the (beta1, beta2) simplex.
ActivationFit fit_activation_params(const std::vector<double>& e,
                                    const std::vector<double>& target,
                                    int d_max = 50);

} // namespace emt
