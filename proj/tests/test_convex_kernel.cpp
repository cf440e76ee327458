#include <cmath>
#include <stdexcept>
#include <vector>

#include <doctest.h>

#include "wfl/convex_kernel.hpp"

using namespace wfl;

TEST_CASE("minimize_1d") {
    auto quad = [](double x) { return (x - 2.0) * (x - 2.0); };
    const auto r = minimize_1d(quad, 0.0, 5.0, 1e-8);
    CHECK(r.x == doctest::Approx(2.0).epsilon(1e-6));
    CHECK(r.fx == doctest::Approx(0.0).scale(1.0).epsilon(1e-10));

    const auto lin = minimize_1d([](double x) { return x; }, 1.0, 3.0);
    CHECK(lin.x == doctest::Approx(1.0).epsilon(1e-6));  // boundary minimum

    const auto cosh2 = minimize_1d([](double x) { return std::exp(x) + std::exp(-x); },
                                   -2.0, 2.0);
    CHECK(cosh2.x == doctest::Approx(0.0).scale(1.0).epsilon(1e-6));

    CHECK_THROWS_AS(minimize_1d(quad, 3.0, 1.0), std::invalid_argument);
    CHECK_THROWS(minimize_1d([](double) { return std::nan(""); }, 0.0, 1.0));
}

TEST_CASE("minimize_1d beats a uniform grid on convex functions") {
    auto f = [](double x) { return x * x * x * x - 3.0 * x + 1.0; };  // convex on [0, 2]
    const auto r = minimize_1d(f, 0.0, 2.0, 1e-9);
    for (int i = 0; i <= 2000; ++i) {
        const double x = 2.0 * i / 2000.0;
        CHECK(r.fx <= f(x) + 1e-12);
    }
}

TEST_CASE("allocate_budget symmetric and KKT-proportional splits") {
    auto inv = [](double c) {
        return std::function<double(double)>([c](double b) { return c / b; });
    };

    std::vector<std::function<double(double)>> sym{inv(1.0), inv(1.0)};
    const auto even = allocate_budget(sym, 2.0, {1e-6, 1e-6});
    CHECK(even[0] == doctest::Approx(1.0).epsilon(1e-4));
    CHECK(even[1] == doctest::Approx(1.0).epsilon(1e-4));

    // KKT for c/B costs gives B_n proportional to sqrt(c_n)
    std::vector<std::function<double(double)>> skew{inv(1.0), inv(4.0)};
    const auto uneven = allocate_budget(skew, 3.0, {1e-6, 1e-6});
    CHECK(uneven[0] == doctest::Approx(1.0).epsilon(1e-3));
    CHECK(uneven[1] == doctest::Approx(2.0).epsilon(1e-3));

    std::vector<std::function<double(double)>> one{inv(7.0)};
    CHECK(allocate_budget(one, 5.0, {1e-6})[0] == doctest::Approx(5.0));

    CHECK_THROWS_AS(allocate_budget(sym, 1.0, {0.8, 0.8}), std::invalid_argument);
}

TEST_CASE("allocate_budget spends the whole budget") {
    auto cost = [](double c, double p) {
        return std::function<double(double)>(
            [c, p](double b) { return c / std::pow(b, p); });
    };
    std::vector<std::function<double(double)>> fns{cost(2.0, 1.0), cost(5.0, 0.5),
                                                   cost(1.0, 2.0)};
    const auto b = allocate_budget(fns, 10.0, {1e-3, 1e-3, 1e-3});
    CHECK(b[0] + b[1] + b[2] == doctest::Approx(10.0).epsilon(1e-6));
    for (double v : b) CHECK(v >= 1e-3);
}

TEST_CASE("equalize_levels matches the analytic water level") {
    // L_n(B) = c_n / B equalized under a budget gives B_n proportional to c_n
    auto level = [](double c) {
        return std::function<double(double)>([c](double b) { return c / b; });
    };
    std::vector<std::function<double(double)>> fns{level(1.0), level(3.0)};
    const auto b = equalize_levels(fns, 8.0, {1e-6, 1e-6});
    CHECK(b[0] == doctest::Approx(2.0).epsilon(1e-5));
    CHECK(b[1] == doctest::Approx(6.0).epsilon(1e-5));
    CHECK(1.0 / b[0] == doctest::Approx(3.0 / b[1]).epsilon(1e-5));
}

TEST_CASE("hessian_psd_check") {
    const auto bowl = hessian_psd_check(
        [](double x, double y) { return x * x + y * y; }, 1.0, 1.0, 1e-4);
    CHECK(bowl.min_eigenvalue == doctest::Approx(2.0).epsilon(1e-3));
    CHECK(bowl.psd);

    const auto saddle = hessian_psd_check(
        [](double x, double y) { return x * x - y * y; }, 0.0, 0.0, 1e-4);
    CHECK(saddle.min_eigenvalue == doctest::Approx(-2.0).epsilon(1e-3));
    CHECK_FALSE(saddle.psd);
}
