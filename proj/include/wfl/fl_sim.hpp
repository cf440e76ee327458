#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "wfl/types.hpp"

namespace wfl {

struct Minibatch {
    int rows = 0;
    std::vector<double> x;  // row-major rows x dimension
    std::vector<double> y;
};

// Synthetic strongly convex FL task: per-user ridge-regression losses over
// i.i.d. mini-batches,
//   F_k(w) = avg_b [ 0.5 ||X_b w - y_b||^2 / M ] + (ridge/2) ||w||^2.
struct ToyTask {
    int dimension = 1;
    int samples_per_batch = 8;
    double ridge = 0.1;
    double learning_rate_eta = 0.5;
    std::vector<std::vector<Minibatch>> batches;  // per user
    std::vector<int> minibatch_counts;
    std::vector<double> weights;  // e_k, proportional to |M_k|

    // empirical curvature/gradient constants measured at construction
    double strong_convexity_m = 0.0;
    double smoothness_l = 0.0;
    double grad_bound_g = 0.0;

    double eta_k(int user) const {
        return learning_rate_eta / static_cast<double>(minibatch_counts[user]);
    }

    double user_loss(int user, std::span<const double> w) const;
    std::vector<double> user_gradient(int user, std::span<const double> w) const;  // full
    double global_loss(std::span<const double> w) const;
    std::vector<double> global_minimizer() const;  // exact, via the normal equations
};

ToyTask make_toy_task(int num_users, const std::vector<int>& minibatch_counts, int dimension,
                      std::uint64_t seed, int samples_per_batch = 8, double ridge = 0.1,
                      double eta = 0.5);

// Sequential mini-batch SGD at rate eta_k; batch order is a fixed shuffle per
// (seed), cycled when count exceeds one epoch.
std::vector<double> local_train(std::span<const double> w_start, int user, int count,
                                const ToyTask& task, std::uint64_t shuffle_seed);

std::vector<double> aggregate(const std::vector<std::vector<double>>& local_models,
                              std::span<const double> weights);

// One deterministic full-gradient step, w - eta * grad F_k(w).
std::vector<double> full_gradient_step(std::span<const double> w, int user, double eta,
                                       const ToyTask& task);

// Contraction factor of the full-gradient recursion, 2 m eta_k - m L eta_k^2.
double contraction_ck(const ToyTask& task, int user);

struct TrainingTrace {
    std::string scheme;
    std::uint64_t seed = 0;
    double initial_loss = 0.0;
    std::vector<double> loss;                // after each round's aggregation
    std::vector<double> wgptm;               // per round
    std::vector<std::vector<double>> phi;    // per round, trained mini-batches per user
};

using Allocator = std::function<AllocationResult(const Assignment&,
                                                 std::span<const UserProfile>,
                                                 const RoundConfig&)>;
// Fresh per-round user profiles (block fading: gains and speeds redrawn each
// round, weights and mini-batch counts fixed).
using ChannelGenerator = std::function<std::vector<UserProfile>(int round)>;

TrainingTrace run_training(const ToyTask& task, const RoundConfig& config,
                           const Allocator& allocator, const ChannelGenerator& channels,
                           int num_rounds, std::uint64_t seed);

// Idealized Async-FL over MC-OMA: per subchannel the round spans all uploads
// plus the slowest user's 4-iteration training time; faster users train 4X
// iterations with intermediate aggregations that incur no upload delay.
TrainingTrace run_async_oma(const ToyTask& task, const RoundConfig& config,
                            const ChannelGenerator& channels, int num_global_rounds,
                            std::uint64_t seed);

// Spearman rank correlation between per-round WGPTM and per-round loss
// decrease over the early-round window (first 30% of rounds by default).
double theorem1_correlation(const std::vector<TrainingTrace>& traces,
                            double early_fraction = 0.3);

void write_trace_csv(std::ostream& out, const TrainingTrace& trace);

}  // namespace wfl
