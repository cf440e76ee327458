#include "wfl/convex_kernel.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace wfl {

namespace {

double checked(const std::function<double(double)>& f, double x) {
    const double v = f(x);
    if (!std::isfinite(v)) throw std::runtime_error("non-finite objective value in 1-D search");
    return v;
}

}  // namespace

MinimizeResult minimize_1d(const std::function<double(double)>& f, double lo, double hi,
                           double tol) {
    if (!(lo < hi)) throw std::invalid_argument("minimize_1d: requires lo < hi");
    static const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;

    double a = lo, b = hi;
    double c = b - (b - a) * inv_phi;
    double d = a + (b - a) * inv_phi;
    double fc = checked(f, c), fd = checked(f, d);

    double best_x = fc < fd ? c : d;
    double best_f = std::min(fc, fd);

    while (b - a > tol) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - (b - a) * inv_phi;
            fc = checked(f, c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + (b - a) * inv_phi;
            fd = checked(f, d);
        }
        if (fc < best_f) { best_f = fc; best_x = c; }
        if (fd < best_f) { best_f = fd; best_x = d; }
    }
    // boundary minima: the bracket may have collapsed onto an endpoint of [lo, hi]
    for (double x : {lo, hi}) {
        const double fx = checked(f, x);
        if (fx < best_f) { best_f = fx; best_x = x; }
    }
    return {best_x, best_f};
}

namespace {

// B_n(lambda): per-channel response to the dual price.
std::vector<double> dual_response(const std::vector<std::function<double(double)>>& cost,
                                  double budget, const std::vector<double>& lower,
                                  double lambda, double xtol) {
    std::vector<double> b(cost.size());
    for (std::size_t n = 0; n < cost.size(); ++n) {
        if (lower[n] >= budget) { b[n] = lower[n]; continue; }
        auto lagr = [&](double x) { return cost[n](x) + lambda * x; };
        b[n] = minimize_1d(lagr, lower[n], budget, xtol).x;
    }
    return b;
}

double total(const std::vector<double>& b) {
    return std::accumulate(b.begin(), b.end(), 0.0);
}

double total_cost(const std::vector<std::function<double(double)>>& cost,
                  const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t n = 0; n < cost.size(); ++n) s += cost[n](b[n]);
    return s;
}

}  // namespace

std::vector<double> allocate_budget(
    const std::vector<std::function<double(double)>>& per_channel_cost, double budget,
    const std::vector<double>& lower_bounds, double tol) {
    const std::size_t n_ch = per_channel_cost.size();
    if (budget <= 0) throw std::invalid_argument("allocate_budget: budget must be positive");
    if (lower_bounds.size() != n_ch)
        throw std::invalid_argument("allocate_budget: one lower bound per channel");
    const double lower_sum = total(lower_bounds);
    if (lower_sum > budget)
        throw std::invalid_argument("allocate_budget: budget infeasible against lower bounds");
    if (n_ch == 1) return {budget};

    const double xtol = std::max(1e-12, tol * budget * 1e-2);

    auto response = [&](double lambda) {
        return dual_response(per_channel_cost, budget, lower_bounds, lambda, xtol);
    };

    std::vector<double> b0 = response(0.0);
    if (total(b0) <= budget * (1.0 + tol)) return b0;

    // bracket the dual price: grow until the aggregate response drops below budget
    double lam_hi = 1e-18;
    std::vector<double> b_hi = response(lam_hi);
    int guard = 0;
    while (total(b_hi) > budget && guard++ < 400) {
        lam_hi *= 4.0;
        b_hi = response(lam_hi);
    }
    if (total(b_hi) > budget)
        throw std::runtime_error("allocate_budget: failed to bracket the dual price");

    double lam_lo = 0.0;
    std::vector<double> b = b_hi;
    for (int it = 0; it < 200; ++it) {
        const double lam = 0.5 * (lam_lo + lam_hi);
        b = response(lam);
        const double t = total(b);
        if (std::abs(t - budget) <= tol * budget) break;
        if (t > budget)
            lam_lo = lam;
        else
            lam_hi = lam;
    }
    if (total(b) > budget) b = response(lam_hi);  // feasible side of the bracket

    // spend any slack: every g_n is non-increasing, so filling the budget never hurts
    double slack = budget - total(b);
    if (slack > 0) {
        const double scale = budget / total(b);
        for (auto& x : b) x *= scale;
    }

    // equal-split candidate, guards against a mis-bracketed dual search
    std::vector<double> eq(n_ch);
    const double extra = (budget - lower_sum) / static_cast<double>(n_ch);
    for (std::size_t i = 0; i < n_ch; ++i) eq[i] = lower_bounds[i] + extra;
    if (total_cost(per_channel_cost, eq) < total_cost(per_channel_cost, b)) b = eq;

    return b;
}

std::vector<double> equalize_levels(
    const std::vector<std::function<double(double)>>& per_channel_level, double budget,
    const std::vector<double>& lower_bounds, double tol) {
    const std::size_t n_ch = per_channel_level.size();
    if (budget <= 0) throw std::invalid_argument("equalize_levels: budget must be positive");
    if (lower_bounds.size() != n_ch)
        throw std::invalid_argument("equalize_levels: one lower bound per channel");
    if (total(lower_bounds) > budget)
        throw std::invalid_argument("equalize_levels: budget infeasible against lower bounds");
    if (n_ch == 1) return {budget};

    // smallest bandwidth achieving level <= q on a strictly decreasing L_n
    auto inverse = [&](std::size_t n, double q) {
        double lo = lower_bounds[n], hi = budget;
        if (per_channel_level[n](hi) > q) return hi;
        if (per_channel_level[n](lo) <= q) return lo;
        for (int it = 0; it < 100; ++it) {
            const double mid = 0.5 * (lo + hi);
            if (per_channel_level[n](mid) > q)
                lo = mid;
            else
                hi = mid;
            if (hi - lo <= 1e-13 * budget) break;
        }
        return hi;
    };

    double q_lo = -std::numeric_limits<double>::infinity();
    double q_hi = -std::numeric_limits<double>::infinity();
    for (std::size_t n = 0; n < n_ch; ++n) {
        q_lo = std::max(q_lo, per_channel_level[n](budget));
        q_hi = std::max(q_hi, per_channel_level[n](std::max(lower_bounds[n], 1e-12 * budget)));
    }
    if (!(q_lo < q_hi))
        throw std::runtime_error("equalize_levels: levels are not decreasing over the domain");

    std::vector<double> b(n_ch);
    auto sum_at = [&](double q) {
        for (std::size_t n = 0; n < n_ch; ++n) b[n] = inverse(n, q);
        return total(b);
    };
    for (int it = 0; it < 200; ++it) {
        const double q = 0.5 * (q_lo + q_hi);
        const double s = sum_at(q);
        if (std::abs(s - budget) <= tol * budget) break;
        if (s > budget)
            q_lo = q;
        else
            q_hi = q;
    }
    if (total(b) > budget) sum_at(q_hi);

    const double scale = budget / total(b);
    for (auto& x : b) x *= scale;
    return b;
}

HessianCheck hessian_psd_check(const std::function<double(double, double)>& f, double x,
                               double y, double step) {
    // evaluate in per-axis scaled coordinates; the congruence transform
    // preserves the inertia, so the psd verdict is unchanged while the two
    // axes get comparable magnitudes
    const double sx = std::max(1.0, std::abs(x));
    const double sy = std::max(1.0, std::abs(y));
    const double hx = step * sx;
    const double hy = step * sy;

    auto eval = [&](double dx, double dy) {
        const double v = f(x + dx, y + dy);
        if (!std::isfinite(v)) throw std::runtime_error("non-finite evaluation in Hessian check");
        return v;
    };

    const double f00 = eval(0, 0);
    const double fxx = (eval(hx, 0) - 2 * f00 + eval(-hx, 0)) / (hx * hx) * (sx * sx);
    const double fyy = (eval(0, hy) - 2 * f00 + eval(0, -hy)) / (hy * hy) * (sy * sy);
    const double fxy = (eval(hx, hy) - eval(hx, -hy) - eval(-hx, hy) + eval(-hx, -hy)) /
                       (4 * hx * hy) * (sx * sy);

    const double mean = 0.5 * (fxx + fyy);
    const double disc = std::sqrt(0.25 * (fxx - fyy) * (fxx - fyy) + fxy * fxy);
    HessianCheck out;
    out.min_eigenvalue = mean - disc;
    out.max_eigenvalue = mean + disc;
    out.psd = out.min_eigenvalue >= -1e-6 * (1.0 + std::abs(out.max_eigenvalue));
    return out;
}

}  // namespace wfl
