#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "wfl/baselines.hpp"
#include "wfl/clustering.hpp"
#include "wfl/core_model.hpp"
#include "wfl/fl_sim.hpp"
#include "wfl/harness.hpp"
#include "wfl/metric.hpp"
#include "wfl/noma_allocator.hpp"

namespace py = pybind11;
using namespace wfl;

namespace {

// span-taking core functions re-wrapped over vectors for python callers
std::vector<UserProfile> as_users(const std::vector<UserProfile>& u) { return u; }

}  // namespace

PYBIND11_MODULE(_wflnoma, m) {
    m.doc() = "Resource allocation and round simulation for NOMA federated learning";

    py::register_exception<InfeasibleDelayError>(m, "InfeasibleDelayError");

    py::class_<RoundConfig>(m, "RoundConfig")
        .def(py::init<>())
        .def_readwrite("total_bandwidth_hz", &RoundConfig::total_bandwidth_hz)
        .def_readwrite("num_subchannels", &RoundConfig::num_subchannels)
        .def_readwrite("round_duration_s", &RoundConfig::round_duration_s)
        .def_readwrite("downlink_delay_s", &RoundConfig::downlink_delay_s)
        .def_readwrite("max_power_w", &RoundConfig::max_power_w)
        .def_readwrite("payload_bits", &RoundConfig::payload_bits)
        .def_readwrite("flops_per_minibatch", &RoundConfig::flops_per_minibatch)
        .def_readwrite("gain_scale", &RoundConfig::gain_scale)
        .def("validate", &RoundConfig::validate);

    py::class_<UserProfile>(m, "UserProfile")
        .def(py::init<>())
        .def_readwrite("user_id", &UserProfile::user_id)
        .def_readwrite("minibatch_count", &UserProfile::minibatch_count)
        .def_readwrite("weight", &UserProfile::weight)
        .def_readwrite("flops_per_second", &UserProfile::flops_per_second)
        .def_readwrite("normalized_gain", &UserProfile::normalized_gain);

    py::class_<Assignment>(m, "Assignment")
        .def(py::init<>())
        .def_readwrite("subchannels", &Assignment::subchannels);

    py::class_<RoundMetrics>(m, "RoundMetrics")
        .def_readonly("per_user_lptm", &RoundMetrics::per_user_lptm)
        .def_readonly("per_user_minibatches", &RoundMetrics::per_user_minibatches)
        .def_readonly("per_user_uplink_s", &RoundMetrics::per_user_uplink_s)
        .def_readonly("per_user_compute_s", &RoundMetrics::per_user_compute_s)
        .def_readonly("wgptm", &RoundMetrics::wgptm);

    py::class_<AllocationResult>(m, "AllocationResult")
        .def_readonly("scheme", &AllocationResult::scheme)
        .def_readonly("bandwidths_hz", &AllocationResult::bandwidths_hz)
        .def_readonly("powers_w", &AllocationResult::powers_w)
        .def_readonly("metrics", &AllocationResult::metrics)
        .def_readonly("objective", &AllocationResult::objective)
        .def_property_readonly("solver_status", [](const AllocationResult& r) {
            return std::string(to_string(r.solver_status));
        });

    m.def("sic_sinr", [](std::vector<double> g, std::vector<double> p, double bn, int i) {
        return sic_sinr(g, p, bn, i);
    });
    m.def("uplink_rate", [](std::vector<double> g, std::vector<double> p, double bn, int i) {
        return uplink_rate(g, p, bn, i);
    });
    m.def("feasible_minibatches", &feasible_minibatches);
    m.def("lptm", &lptm);
    m.def("wgptm",
          [](std::vector<double> w, std::vector<double> l) { return wgptm(w, l); });

    m.def("cluster_sorted", [](const std::vector<UserProfile>& u, int n) {
        return cluster_sorted(as_users(u), n);
    });
    m.def("cluster_random", [](const std::vector<UserProfile>& u, int n, std::uint64_t seed) {
        return cluster_random(as_users(u), n, seed);
    });

    auto bind_alloc = [&m](const char* name, SchemeFn fn) {
        m.def(name, [fn](const Assignment& a, const std::vector<UserProfile>& u,
                         const RoundConfig& c) { return fn(a, u, c); });
    };
    bind_alloc("allocate_joint", allocate_joint);
    bind_alloc("allocate_power_only", allocate_power_only);
    bind_alloc("allocate_full_power", allocate_full_power);
    bind_alloc("allocate_oma_flexible", allocate_oma_flexible);
    bind_alloc("allocate_sync_joint", allocate_sync_joint);
    bind_alloc("allocate_sync_power_only", allocate_sync_power_only);
    bind_alloc("allocate_sync_full_power", allocate_sync_full_power);
    bind_alloc("allocate_sync_oma", allocate_sync_oma);

    py::class_<Scenario>(m, "Scenario")
        .def(py::init<>())
        .def_readwrite("config", &Scenario::config)
        .def_readwrite("num_users", &Scenario::num_users)
        .def_readwrite("gain_db_min", &Scenario::gain_db_min)
        .def_readwrite("gain_db_max", &Scenario::gain_db_max)
        .def_readwrite("flops_per_second_min", &Scenario::flops_per_second_min)
        .def_readwrite("flops_per_second_max", &Scenario::flops_per_second_max)
        .def_readwrite("dataset_size_min", &Scenario::dataset_size_min)
        .def_readwrite("dataset_size_max", &Scenario::dataset_size_max)
        .def_readwrite("minibatch_size", &Scenario::minibatch_size)
        .def_readwrite("clustering", &Scenario::clustering)
        .def_readwrite("schemes", &Scenario::schemes)
        .def_readwrite("num_trials", &Scenario::num_trials)
        .def_readwrite("master_seed", &Scenario::master_seed)
        .def("validate", &Scenario::validate);

    py::class_<SweepRow>(m, "SweepRow")
        .def_readonly("param", &SweepRow::param)
        .def_readonly("scheme", &SweepRow::scheme)
        .def_readonly("mean_wgptm", &SweepRow::mean_wgptm)
        .def_readonly("std_wgptm", &SweepRow::std_wgptm)
        .def_readonly("trials", &SweepRow::trials);

    m.def("scenario_from_json", &scenario_from_json);
    m.def("scheme_names", &scheme_names);
    m.def("generate_realization", &generate_realization);
    m.def("run_sweep", [](const Scenario& s, const std::string& p, std::vector<double> v) {
        return run_sweep(s, p, v);
    });
}
