#pragma once

// Finite-difference gradient verification, run in double precision. A check
// perturbs sampled tensor entries by +/-eps, recomputes the scalar loss, and
// compares the central difference against the analytic gradient with relative
// error |a - c| / max(|a|, |c|, 1e-8).

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "twopath/rng.hpp"
#include "twopath/tensor.hpp"

namespace twopath {

struct GradCheckReport {
    std::string name;
    double max_rel_error = 0.0;
    int checks = 0;
    bool ok(double tol) const { return max_rel_error < tol; }
};

inline double rel_error(double analytic, double central) {
    return std::abs(analytic - central) /
           std::max({std::abs(analytic), std::abs(central), 1e-8});
}

// value: the tensor being perturbed (loss() must observe the mutation);
// grad: analytic dLoss/dvalue, same shape; n_checks entries are sampled.
inline GradCheckReport check_gradient(const std::string& name, Tensor<double>& value,
                                      const Tensor<double>& grad,
                                      const std::function<double()>& loss, int n_checks,
                                      Rng& pick, double eps = 1e-5) {
    GradCheckReport rep;
    rep.name = name;
    const size_t n = value.data.size();
    const int checks = std::min<size_t>(static_cast<size_t>(n_checks), n);
    for (int t = 0; t < checks; ++t) {
        const size_t i = pick.below(n);
        const double keep = value.data[i];
        value.data[i] = keep + eps;
        const double up = loss();
        value.data[i] = keep - eps;
        const double down = loss();
        value.data[i] = keep;
        const double central = (up - down) / (2.0 * eps);
        rep.max_rel_error = std::max(rep.max_rel_error, rel_error(grad.data[i], central));
        ++rep.checks;
    }
    return rep;
}

}  // namespace twopath
