#include <cmath>
#include <sstream>
#include <vector>

#include <doctest.h>

#include "wfl/fl_sim.hpp"
#include "wfl/harness.hpp"
#include "wfl/rng.hpp"

using namespace wfl;

TEST_CASE("one-dimensional ridge task has the closed-form minimizer") {
    const auto task = make_toy_task(1, {1}, 1, 42);
    // w* solves (X'X/M + ridge) w = X'y/M for the single mini-batch
    const auto& mb = task.batches[0][0];
    double xx = 0.0, xy = 0.0;
    for (int i = 0; i < mb.rows; ++i) {
        xx += mb.x[i] * mb.x[i];
        xy += mb.x[i] * mb.y[i];
    }
    const double closed = (xy / mb.rows) / (xx / mb.rows + task.ridge);
    const auto w = task.global_minimizer();
    CHECK(w[0] == doctest::Approx(closed).epsilon(1e-12));

    // plain gradient descent reaches the same point
    std::vector<double> wt{0.0};
    for (int it = 0; it < 2000; ++it) wt = full_gradient_step(wt, 0, 0.1, task);
    CHECK(wt[0] == doctest::Approx(closed).epsilon(1e-8));
}

TEST_CASE("identical seeds give identical tasks") {
    const auto a = make_toy_task(3, {4, 5, 6}, 4, 7);
    const auto b = make_toy_task(3, {4, 5, 6}, 4, 7);
    CHECK(a.batches[1][2].x == b.batches[1][2].x);
    CHECK(a.batches[2][0].y == b.batches[2][0].y);
    CHECK(a.strong_convexity_m == b.strong_convexity_m);
}

TEST_CASE("gradient bound covers observed gradients") {
    const auto task = make_toy_task(3, {3, 3, 3}, 5, 11);
    Rng rng(12);
    for (int trial = 0; trial < 40; ++trial) {
        std::vector<double> w(5);
        for (auto& v : w) v = rng.uniform(-2.0, 2.0);
        for (int k = 0; k < 3; ++k) {
            const auto g = task.user_gradient(k, w);
            double norm = 0.0;
            for (double v : g) norm += v * v;
            CHECK(std::sqrt(norm) <= task.grad_bound_g);
        }
    }
}

TEST_CASE("analytic gradient matches finite differences") {
    const auto task = make_toy_task(2, {3, 4}, 6, 13);
    Rng rng(14);
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<double> w(6);
        for (auto& v : w) v = rng.uniform(-1.5, 1.5);
        for (int k = 0; k < 2; ++k) {
            const auto g = task.user_gradient(k, w);
            for (int j = 0; j < 6; ++j) {
                const double h = 1e-6;
                auto wp = w, wm = w;
                wp[j] += h;
                wm[j] -= h;
                const double fd = (task.user_loss(k, wp) - task.user_loss(k, wm)) / (2 * h);
                CHECK(g[j] == doctest::Approx(fd).epsilon(1e-5));
            }
        }
    }
}

TEST_CASE("local_train basics") {
    const auto task = make_toy_task(1, {5}, 3, 21);
    std::vector<double> w0{0.3, -0.2, 0.5};
    const auto same = local_train(w0, 0, 0, task, 1);
    CHECK(same == w0);

    // contraction toward the user optimum at a safe learning rate
    const auto wstar = task.global_minimizer();
    auto dist = [&](const std::vector<double>& w) {
        double d = 0.0;
        for (int j = 0; j < 3; ++j) d += (w[j] - wstar[j]) * (w[j] - wstar[j]);
        return std::sqrt(d);
    };
    const double before = dist(w0);
    auto w = w0;
    for (int it = 0; it < 5; ++it) w = full_gradient_step(w, 0, 1.0 / task.smoothness_l, task);
    CHECK(dist(w) <= before);
}

TEST_CASE("aggregate") {
    std::vector<std::vector<double>> same{{1.0, 2.0}, {1.0, 2.0}};
    std::vector<double> e{0.5, 0.5};
    CHECK(aggregate(same, e) == std::vector<double>{1.0, 2.0});

    std::vector<std::vector<double>> pair{{0.0}, {2.0}};
    CHECK(aggregate(pair, e)[0] == doctest::Approx(1.0));

    std::vector<std::vector<double>> skew{{4.0}, {0.0}};
    std::vector<double> e2{0.25, 0.75};
    CHECK(aggregate(skew, e2)[0] == doctest::Approx(1.0));

    std::vector<std::vector<double>> bad{{1.0}, {1.0, 2.0}};
    CHECK_THROWS_AS(aggregate(bad, e), std::invalid_argument);
}

TEST_CASE("aggregation stays within the coordinate envelope") {
    Rng rng(31);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<std::vector<double>> models(3, std::vector<double>(4));
        std::vector<double> e{0.2, 0.5, 0.3};
        for (auto& m : models)
            for (auto& v : m) v = rng.uniform(-3.0, 3.0);
        const auto w = aggregate(models, e);
        for (int j = 0; j < 4; ++j) {
            double lo = 1e9, hi = -1e9;
            for (const auto& m : models) {
                lo = std::min(lo, m[j]);
                hi = std::max(hi, m[j]);
            }
            CHECK(w[j] >= lo - 1e-12);
            CHECK(w[j] <= hi + 1e-12);
        }
    }
}

TEST_CASE("full-gradient loss gap contracts at least geometrically") {
    // single-user task so the global minimizer is the user's own optimum
    const auto task = make_toy_task(1, {8}, 4, 51);
    const double ck = contraction_ck(task, 0);
    CHECK(ck > 0.0);
    CHECK(ck < 1.0);

    const auto wstar = task.global_minimizer();
    const double fstar = task.user_loss(0, wstar);
    std::vector<double> w(4, 0.0);
    const double gap0 = task.user_loss(0, w) - fstar;
    double bound = gap0;
    for (int phi = 1; phi <= 50; ++phi) {
        w = full_gradient_step(w, 0, task.eta_k(0), task);
        bound *= (1.0 - ck);
        CHECK(task.user_loss(0, w) - fstar <= bound + 1e-9);
    }
}

namespace {

struct FixedPhiAllocator {
    double phi;
    AllocationResult operator()(const Assignment& a, std::span<const UserProfile> users,
                                const RoundConfig& config) const {
        AllocationResult res;
        res.scheme = "fixed";
        res.bandwidths_hz.assign(a.subchannels.size(),
                                 config.total_bandwidth_hz / a.subchannels.size());
        res.powers_w.resize(a.subchannels.size());
        auto& m = res.metrics;
        m.per_user_minibatches.assign(users.size(), phi);
        m.per_user_uplink_s.assign(users.size(), 0.0);
        m.per_user_compute_s.assign(users.size(), 0.0);
        m.per_user_lptm.resize(users.size());
        m.wgptm = 0.0;
        for (std::size_t k = 0; k < users.size(); ++k) {
            m.per_user_lptm[k] = phi / users[k].minibatch_count;
            m.wgptm += users[k].weight * m.per_user_lptm[k];
        }
        res.objective = m.wgptm;
        return res;
    }
};

Scenario tiny_scenario() {
    Scenario s;
    s.num_users = 4;
    s.config.num_subchannels = 2;
    s.master_seed = 3;
    return s;
}

ChannelGenerator channels_for(const Scenario& scn, const ToyTask& task) {
    return [scn, &task](int round) {
        auto users = generate_realization(scn, static_cast<std::uint64_t>(round));
        for (std::size_t k = 0; k < users.size(); ++k) {
            users[k].minibatch_count = task.minibatch_counts[k];
            users[k].weight = task.weights[k];
        }
        return users;
    };
}

}  // namespace

TEST_CASE("run_training with a zero-phi allocator keeps the loss constant") {
    const Scenario scn = tiny_scenario();
    const auto task = make_toy_task(4, {5, 6, 7, 8}, 3, 2);
    const auto trace = run_training(task, scn.config, FixedPhiAllocator{0.0},
                                    channels_for(scn, task), 5, 9);
    for (double l : trace.loss) CHECK(l == doctest::Approx(trace.initial_loss));
}

TEST_CASE("run_training is deterministic per seed and decreases the loss") {
    const Scenario scn = tiny_scenario();
    const auto task = make_toy_task(4, {5, 6, 7, 8}, 3, 2);
    const auto a = run_training(task, scn.config, FixedPhiAllocator{10.0},
                                channels_for(scn, task), 6, 9);
    const auto b = run_training(task, scn.config, FixedPhiAllocator{10.0},
                                channels_for(scn, task), 6, 9);
    CHECK(a.loss == b.loss);
    CHECK(a.loss.back() < a.initial_loss);
}

TEST_CASE("async schedule trains faster users for more iterations") {
    Scenario scn = tiny_scenario();
    scn.config.flops_per_minibatch = 2.4e9;  // keeps iteration counts desk-scale
    auto task = make_toy_task(4, {5, 6, 7, 8}, 3, 2);

    ChannelGenerator channels = [&](int round) {
        auto users = generate_realization(scn, static_cast<std::uint64_t>(round));
        for (std::size_t k = 0; k < users.size(); ++k) {
            users[k].minibatch_count = task.minibatch_counts[k];
            users[k].weight = task.weights[k];
            users[k].flops_per_second = (k == 0) ? 24e9 : 6e9;  // one much faster user
            users[k].normalized_gain = 5e6;
        }
        return users;
    };
    const auto trace = run_async_oma(task, scn.config, channels, 3, 4);
    REQUIRE(trace.phi.size() == 3);
    for (const auto& round : trace.phi) {
        CHECK(round[0] >= 4.0 * task.minibatch_counts[0]);  // at least one block each
        CHECK(round[0] / task.minibatch_counts[0] > round[1] / task.minibatch_counts[1]);
    }
    CHECK(std::isfinite(trace.loss.back()));
}

TEST_CASE("spearman correlation") {
    TrainingTrace t;
    t.initial_loss = 100.0;
    double loss = 100.0;
    for (int i = 0; i < 80; ++i) {
        const double wg = 1.0 + 0.01 * ((i * 37) % 80);
        loss -= wg;  // decrease strictly increasing in the metric
        t.wgptm.push_back(wg);
        t.loss.push_back(loss);
        t.phi.push_back({});
    }
    CHECK(theorem1_correlation({t}, 1.0) == doctest::Approx(1.0));

    TrainingTrace flat = t;
    for (auto& v : flat.wgptm) v = 2.0;
    CHECK_THROWS(theorem1_correlation({flat}, 1.0));

    TrainingTrace few;
    few.initial_loss = 1.0;
    few.wgptm = {1.0, 2.0};
    few.loss = {0.9, 0.7};
    CHECK_THROWS_AS(theorem1_correlation({few}, 1.0), std::invalid_argument);
}

TEST_CASE("trace csv format") {
    TrainingTrace t;
    t.initial_loss = 5.0;
    t.loss = {4.0, 3.5};
    t.wgptm = {1.5, 1.25};
    t.phi = {{10.0, 20.0}, {12.0, 18.0}};
    std::ostringstream out;
    write_trace_csv(out, t);
    CHECK(out.str() ==
          "round,loss,wgptm,phi\n0,4,1.5,10;20\n1,3.5,1.25,12;18\n");
}
