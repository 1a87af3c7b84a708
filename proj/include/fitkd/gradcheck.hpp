#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace fitkd {

struct GradCheckResult {
    double max_rel_err = 0.0;
    std::size_t worst_index = 0;
    double analytic_at_worst = 0.0;
    double numeric_at_worst = 0.0;
};

// Compares an analytic gradient against central differences of f around x.
// Per-coordinate relative error is |a - n| / max(1e-12, |a| + |n|); the
// result reports the worst coordinate.
GradCheckResult finite_difference_check(
    const std::function<double(const std::vector<double>&)>& f, std::vector<double> x,
    const std::vector<double>& analytic, double step = 1e-5);

}  // namespace fitkd
