#include "fitkd/gradcheck.hpp"

#include <cmath>
#include <stdexcept>

namespace fitkd {

GradCheckResult finite_difference_check(
    const std::function<double(const std::vector<double>&)>& f, std::vector<double> x,
    const std::vector<double>& analytic, double step) {
    if (x.size() != analytic.size()) {
        throw std::invalid_argument("finite_difference_check: gradient size mismatch");
    }
    GradCheckResult result;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double keep = x[i];
        x[i] = keep + step;
        const double hi = f(x);
        x[i] = keep - step;
        const double lo = f(x);
        x[i] = keep;
        const double numeric = (hi - lo) / (2.0 * step);
        const double a = analytic[i];
        const double rel = std::fabs(a - numeric) / std::max(1e-12, std::fabs(a) + std::fabs(numeric));
        if (rel >= result.max_rel_err) {
            result.max_rel_err = rel;
            result.worst_index = i;
            result.analytic_at_worst = a;
            result.numeric_at_worst = numeric;
        }
    }
    return result;
}

}  // namespace fitkd
