#pragma once

// Central finite differences over named parameter blocks, used to verify
// every analytic gradient path.

#include <cmath>
#include <functional>
#include <string>

#include "ra/nn.hpp"

namespace ra::test {

// Scale-aware agreement: |a - b| <= tol * max(1, |a|, |b|).
inline bool grads_close(double analytic, double numeric, double tol = 1e-4) {
    const double scale = std::max({1.0, std::fabs(analytic), std::fabs(numeric)});
    return std::fabs(analytic - numeric) <= tol * scale;
}

struct FdReport {
    long long checked = 0;
    long long failures = 0;
    double worst_abs_err = 0.0;
    std::string worst_block;
};

// Walks every entry of every block, evaluating `loss()` at x +- eps, and
// compares against the matching entry of `grads`.
inline FdReport check_gradients(std::vector<nn::ParamBlock<double>> params,
                                std::vector<nn::ParamBlock<double>> grads,
                                const std::function<double()>& loss,
                                double eps = 1e-5, double tol = 1e-4) {
    FdReport rep;
    for (size_t b = 0; b < params.size(); ++b) {
        double* p = params[b].data();
        const double* g = grads[b].data();
        for (Eigen::Index i = 0; i < params[b].size(); ++i) {
            const double saved = p[i];
            p[i] = saved + eps;
            const double up = loss();
            p[i] = saved - eps;
            const double down = loss();
            p[i] = saved;
            const double numeric = (up - down) / (2.0 * eps);
            ++rep.checked;
            if (!grads_close(g[i], numeric, tol)) {
                ++rep.failures;
                const double err = std::fabs(g[i] - numeric);
                if (err > rep.worst_abs_err) {
                    rep.worst_abs_err = err;
                    rep.worst_block = params[b].name;
                }
            }
        }
    }
    return rep;
}

} // namespace ra::test
