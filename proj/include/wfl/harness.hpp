#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "wfl/types.hpp"

namespace wfl {

// Monte-Carlo scenario: the physical round constants plus the population
// distributions users are drawn from each trial.
struct Scenario {
    RoundConfig config;
    int num_users = 25;
    double gain_db_min = 2.0;
    double gain_db_max = 15.0;
    double flops_per_second_min = 6e9;
    double flops_per_second_max = 9e9;
    int dataset_size_min = 300;
    int dataset_size_max = 500;
    int minibatch_size = 20;  // samples per mini-batch, |M_k| = round(|D_k| / this)
    std::string clustering = "sorted";  // or "random"
    std::vector<std::string> schemes;   // empty = every registered scheme
    int num_trials = 1000;
    std::uint64_t master_seed = 1;

    void validate() const;
};

// JSON text -> Scenario; unknown keys rejected, absent keys keep defaults.
Scenario scenario_from_json(const std::string& text);

using SchemeFn = AllocationResult (*)(const Assignment&, std::span<const UserProfile>,
                                      const RoundConfig&);

const std::vector<std::string>& scheme_names();
SchemeFn scheme_by_name(const std::string& name);  // invalid name -> invalid_argument

// Per-trial independent population draw, deterministic in (master_seed, trial).
// Weights are dataset-proportional and sum to 1.
std::vector<UserProfile> generate_realization(const Scenario& scenario,
                                              std::uint64_t trial_index);

Assignment cluster_for(const Scenario& scenario, std::span<const UserProfile> users,
                       std::uint64_t trial_index);

struct SweepRow {
    double param = 0.0;
    std::string scheme;
    double mean_wgptm = 0.0;
    double std_wgptm = 0.0;
    int trials = 0;  // successful trials contributing to the mean
};

// sweep_param in {"users", "subchannels", "duration"}; one row per
// (value, scheme). Trials run in parallel (WFL_ALLOC_THREADS caps, 0 = auto)
// but are reduced by trial index, so output is schedule-independent.
std::vector<SweepRow> run_sweep(const Scenario& scenario, const std::string& sweep_param,
                                std::span<const double> values);

void write_sweep_csv(std::ostream& out, std::span<const SweepRow> rows);

// Effective worker count after applying the WFL_ALLOC_THREADS cap.
int alloc_threads();

}  // namespace wfl
