#pragma once

// Shared helpers for the test binaries; doctest must already be included.

#include <cmath>
#include <functional>
#include <vector>

#include "fitkd/gradcheck.hpp"
#include "fitkd/rng.hpp"
#include "fitkd/tape.hpp"
#include "fitkd/tensor.hpp"

namespace fitkd::testing {

inline Tensor random_tensor(Rng& rng, std::vector<int> shape, double scale = 1.0) {
    Tensor t = Tensor::zeros(std::move(shape));
    for (double& v : t.data) v = rng.normal(0.0, scale);
    return t;
}

// Simplex point sampled uniformly (exponential spacings, normalized).
inline std::vector<double> random_distribution(Rng& rng, int n) {
    std::vector<double> p(static_cast<std::size_t>(n));
    double sum = 0.0;
    for (double& v : p) {
        v = -std::log(1.0 - rng.uniform());
        sum += v;
    }
    for (double& v : p) v /= sum;
    return p;
}

// Max relative FD error of d(loss)/d(x) where `build` records a scalar loss
// from a single leaf; constants are baked into the builder.
inline double fd_error(const Tensor& x0,
                       const std::function<int(ComputationTape&, int)>& build,
                       double step = 1e-5) {
    ComputationTape tape;
    int x = tape.leaf(x0);
    int loss = build(tape, x);
    auto grads = tape.backward(loss);
    auto eval = [&](const std::vector<double>& v) {
        ComputationTape probe;
        Tensor xt = x0;
        xt.data = v;
        int out = build(probe, probe.leaf(xt));
        return probe.value(out).data[0];
    };
    return finite_difference_check(eval, x0.data, grads[static_cast<std::size_t>(x)].data, step)
        .max_rel_err;
}

}  // namespace fitkd::testing
