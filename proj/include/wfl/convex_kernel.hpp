#pragma once

#include <functional>
#include <utility>
#include <vector>

namespace wfl {

struct MinimizeResult {
    double x;
    double fx;
};

// Golden-section search for a convex function on [lo, hi]. Returns an
// endpoint when the minimum sits on the boundary.
MinimizeResult minimize_1d(const std::function<double(double)>& f, double lo, double hi,
                           double tol = 1e-9);

// Minimize sum_n g_n(B_n) subject to sum B_n <= budget, B_n >= lower_bounds[n],
// for convex non-increasing g_n, via bisection on the dual multiplier. Since
// every g_n is decreasing the budget binds at the optimum.
std::vector<double> allocate_budget(
    const std::vector<std::function<double(double)>>& per_channel_cost, double budget,
    const std::vector<double>& lower_bounds, double tol = 1e-7);

// Water-level counterpart for min-max objectives: given strictly decreasing
// per-channel level functions L_n(B_n), finds the common level q and the
// bandwidths with L_n(B_n) = q and sum B_n = budget.
std::vector<double> equalize_levels(
    const std::vector<std::function<double(double)>>& per_channel_level, double budget,
    const std::vector<double>& lower_bounds, double tol = 1e-7);

struct HessianCheck {
    double min_eigenvalue;
    double max_eigenvalue;
    bool psd;
};

// Central-difference 2x2 Hessian of f at (x, y); psd iff the smaller
// eigenvalue clears -1e-6 * (1 + |larger eigenvalue|).
HessianCheck hessian_psd_check(const std::function<double(double, double)>& f, double x,
                               double y, double step);

}  // namespace wfl
