// Command-line front end: single-round allocation, Monte-Carlo sweeps, toy
// federated training, and a built-in self-check battery.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "wfl/baselines.hpp"
#include "wfl/clustering.hpp"
#include "wfl/fl_sim.hpp"
#include "wfl/harness.hpp"
#include "wfl/noma_allocator.hpp"
#include "wfl/rng.hpp"

namespace {

wfl::Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw CLI::ValidationError("--config", "cannot open " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    try {
        return wfl::scenario_from_json(buf.str());
    } catch (const std::invalid_argument& e) {
        throw CLI::ValidationError("--config", e.what());
    }
}

std::ostream& open_out(std::ofstream& file, const std::string& path) {
    if (path.empty()) return std::cout;
    file.open(path, std::ios::binary);  // binary: identical bytes on every platform
    if (!file) throw CLI::ValidationError("--out", "cannot open " + path);
    return file;
}

nlohmann::json result_to_json(const wfl::AllocationResult& res,
                              std::span<const wfl::UserProfile> users) {
    nlohmann::json j;
    j["scheme"] = res.scheme;
    j["solver_status"] = wfl::to_string(res.solver_status);
    j["wgptm"] = res.objective;
    j["bandwidths_hz"] = res.bandwidths_hz;
    j["powers_w"] = res.powers_w;
    nlohmann::json per_user = nlohmann::json::array();
    for (std::size_t k = 0; k < users.size(); ++k) {
        per_user.push_back({{"user_id", users[k].user_id},
                            {"weight", users[k].weight},
                            {"minibatch_count", users[k].minibatch_count},
                            {"lptm", res.metrics.per_user_lptm[k]},
                            {"minibatches_trained", res.metrics.per_user_minibatches[k]},
                            {"uplink_s", res.metrics.per_user_uplink_s[k]},
                            {"compute_s", res.metrics.per_user_compute_s[k]}});
    }
    j["users"] = std::move(per_user);
    return j;
}

std::vector<std::string> resolve_schemes(const std::string& flag, const wfl::Scenario& scn) {
    if (flag == "all") return wfl::scheme_names();
    if (!flag.empty()) {
        wfl::scheme_by_name(flag);  // validates
        return {flag};
    }
    return scn.schemes.empty() ? wfl::scheme_names() : scn.schemes;
}

int run_allocate(const wfl::Scenario& scn, const std::string& scheme, const std::string& out_path) {
    auto fn = wfl::scheme_by_name(scheme);
    const auto users = wfl::generate_realization(scn, 0);
    const auto assignment = wfl::cluster_for(scn, users, 0);
    const auto res = fn(assignment, users, scn.config);
    std::ofstream file;
    open_out(file, out_path) << result_to_json(res, users).dump(2) << "\n";
    return 0;
}

int run_sweep_cmd(wfl::Scenario scn, const std::string& scheme, const std::string& param,
                  std::vector<double> values, const std::string& out_path) {
    scn.schemes = resolve_schemes(scheme, scn);
    if (values.empty()) {
        if (param == "duration")
            values = {5, 10, 15, 20, 25, 30};
        else if (param == "users")
            for (int k = scn.config.num_subchannels; k <= 4 * scn.config.num_subchannels;
                 k += scn.config.num_subchannels)
                values.push_back(k);
        else
            values = {2, 5, 10, 15};
    }
    const auto rows = wfl::run_sweep(scn, param, values);
    std::ofstream file;
    wfl::write_sweep_csv(open_out(file, out_path), rows);
    return 0;
}

int run_montecarlo(wfl::Scenario scn, const std::string& scheme, const std::string& out_path) {
    scn.schemes = resolve_schemes(scheme, scn);
    const std::vector<double> values = {static_cast<double>(scn.num_users)};
    const auto rows = wfl::run_sweep(scn, "users", values);
    std::ofstream file;
    wfl::write_sweep_csv(open_out(file, out_path), rows);
    return 0;
}

int run_flsim(const wfl::Scenario& scn, const std::string& scheme, int rounds,
              const std::string& out_path) {
    const auto base_users = wfl::generate_realization(scn, 0);
    std::vector<int> counts;
    for (const auto& u : base_users) counts.push_back(u.minibatch_count);
    const auto task = wfl::make_toy_task(scn.num_users, counts, 10, scn.master_seed);

    wfl::ChannelGenerator channels = [&](int round) {
        auto users = wfl::generate_realization(scn, static_cast<std::uint64_t>(round));
        for (std::size_t k = 0; k < users.size(); ++k) {
            users[k].minibatch_count = counts[k];
            users[k].weight = task.weights[k];
        }
        return users;
    };

    wfl::TrainingTrace trace;
    if (scheme == "async-oma") {
        trace = wfl::run_async_oma(task, scn.config, channels, rounds, scn.master_seed);
    } else {
        auto fn = wfl::scheme_by_name(scheme.empty() ? "joint" : scheme);
        wfl::Allocator alloc = [fn](const wfl::Assignment& a,
                                    std::span<const wfl::UserProfile> u,
                                    const wfl::RoundConfig& c) { return fn(a, u, c); };
        trace = wfl::run_training(task, scn.config, alloc, channels, rounds, scn.master_seed);
    }
    std::ofstream file;
    wfl::write_trace_csv(open_out(file, out_path), trace);
    return 0;
}

bool check(bool ok, const char* what, int& failures) {
    std::cout << (ok ? "ok   " : "FAIL ") << what << "\n";
    if (!ok) ++failures;
    return ok;
}

int run_selftest(wfl::Scenario scn) {
    scn.num_trials = 50;
    int failures = 0;

    const auto users = wfl::generate_realization(scn, 0);
    double weight_sum = 0.0;
    for (const auto& u : users) weight_sum += u.weight;
    check(std::abs(weight_sum - 1.0) < 1e-12, "realization weights sum to 1", failures);

    const auto assignment = wfl::cluster_for(scn, users, 0);
    const auto joint = wfl::allocate_joint(assignment, users, scn.config);
    double band_sum = 0.0;
    for (double b : joint.bandwidths_hz) band_sum += b;
    check(std::abs(band_sum - scn.config.total_bandwidth_hz) <
              1e-6 * scn.config.total_bandwidth_hz,
          "joint bandwidths sum to the budget", failures);

    const auto power_only = wfl::allocate_power_only(assignment, users, scn.config);
    const auto full_power = wfl::allocate_full_power(assignment, users, scn.config);
    check(joint.objective >= power_only.objective - 1e-9 &&
              power_only.objective >= full_power.objective - 1e-9,
          "single-instance dominance joint >= power-only >= full-power", failures);

    const auto sync = wfl::allocate_sync_joint(assignment, users, scn.config);
    check(joint.objective >= sync.objective - 1e-9, "flexible >= sync", failures);

    scn.schemes = {"joint", "power-only", "full-power"};
    const std::vector<double> values = {static_cast<double>(scn.num_users)};
    const auto rows_a = wfl::run_sweep(scn, "users", values);
    const auto rows_b = wfl::run_sweep(scn, "users", values);
    bool identical = rows_a.size() == rows_b.size();
    bool dominance = rows_a[0].mean_wgptm >= rows_a[1].mean_wgptm - 1e-9 &&
                     rows_a[1].mean_wgptm >= rows_a[2].mean_wgptm - 1e-9;
    for (std::size_t i = 0; identical && i < rows_a.size(); ++i)
        identical = rows_a[i].mean_wgptm == rows_b[i].mean_wgptm &&
                    rows_a[i].std_wgptm == rows_b[i].std_wgptm;
    check(identical, "sweep repeats bit-identically", failures);
    check(dominance, "mean dominance joint >= power-only >= full-power", failures);

    bool finite = true;
    for (const auto& r : rows_a) finite = finite && std::isfinite(r.mean_wgptm) && r.mean_wgptm >= 0;
    check(finite, "all means finite and non-negative", failures);

    std::cout << (failures == 0 ? "selftest passed\n" : "selftest FAILED\n");
    return failures == 0 ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Round-level resource allocation and simulation for NOMA federated learning"};
    app.require_subcommand(1);

    std::string config_path, out_path, scheme, sweep_param = "duration";
    std::optional<std::uint64_t> seed;
    std::optional<int> trials;
    std::vector<double> sweep_values;
    int flsim_rounds = 40;

    auto add_common = [&](CLI::App* cmd, bool config_required) {
        auto* opt = cmd->add_option("--config", config_path, "scenario JSON file");
        if (config_required) opt->required();
        cmd->add_option("--seed", seed, "override the scenario master seed");
        cmd->add_option("--trials", trials, "override the scenario trial count");
        cmd->add_option("--out", out_path, "output file (default stdout)");
        cmd->add_option("--scheme", scheme, "scheme name, or \"all\"");
    };

    auto* cmd_allocate =
        app.add_subcommand("allocate", "solve one realization and print the result as JSON");
    add_common(cmd_allocate, true);

    auto* cmd_sweep = app.add_subcommand("sweep", "Monte-Carlo sweep over a parameter, CSV out");
    add_common(cmd_sweep, true);
    cmd_sweep->add_option("--param", sweep_param, "users | subchannels | duration");
    cmd_sweep->add_option("--values", sweep_values, "sweep values (ascending)")->delimiter(',');

    auto* cmd_mc = app.add_subcommand("montecarlo", "fixed scenario, all schemes, CSV out");
    add_common(cmd_mc, true);

    auto* cmd_flsim = app.add_subcommand("flsim", "toy federated training, trace CSV out");
    add_common(cmd_flsim, true);
    cmd_flsim->add_option("--rounds", flsim_rounds, "training rounds");

    auto* cmd_selftest = app.add_subcommand("selftest", "run the built-in check battery");
    add_common(cmd_selftest, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        wfl::Scenario scn;
        if (!config_path.empty()) scn = load_scenario(config_path);
        if (seed) scn.master_seed = *seed;
        if (trials) scn.num_trials = *trials;
        scn.validate();

        if (cmd_allocate->parsed())
            return run_allocate(scn, scheme.empty() ? "joint" : scheme, out_path);
        if (cmd_sweep->parsed())
            return run_sweep_cmd(scn, scheme, sweep_param, sweep_values, out_path);
        if (cmd_mc->parsed()) return run_montecarlo(scn, scheme, out_path);
        if (cmd_flsim->parsed()) return run_flsim(scn, scheme, flsim_rounds, out_path);
        if (cmd_selftest->parsed()) return run_selftest(scn);
    } catch (const CLI::ValidationError& e) {
        std::cerr << e.what() << "\n";
        return 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
