#pragma once

// Experiment harness: single runs, parameter sweeps with common random
// numbers across sweep points, and CSV output with per-point summary rows.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "edgetune/baselines.hpp"
#include "edgetune/config.hpp"
#include "edgetune/solver.hpp"

namespace edgetune {

inline constexpr int csv_schema_version = 1;

enum class Algorithm { joint, average_allocation, comm_only, freq_only, grid_oracle };

inline std::string to_string(Algorithm a) {
    switch (a) {
        case Algorithm::joint: return "joint";
        case Algorithm::average_allocation: return "average_allocation";
        case Algorithm::comm_only: return "comm_only";
        case Algorithm::freq_only: return "freq_only";
        case Algorithm::grid_oracle: return "grid_oracle";
    }
    return "unknown";
}

inline Algorithm parse_algorithm(const std::string& s) {
    if (s == "joint") return Algorithm::joint;
    if (s == "avg" || s == "average" || s == "average_allocation")
        return Algorithm::average_allocation;
    if (s == "comm-only" || s == "comm_only") return Algorithm::comm_only;
    if (s == "freq-only" || s == "freq_only") return Algorithm::freq_only;
    if (s == "oracle" || s == "grid_oracle") return Algorithm::grid_oracle;
    throw std::invalid_argument("unknown algorithm '" + s +
                                "' (expected joint|avg|comm-only|freq-only|oracle)");
}

// One CSV data row. Failed runs keep the row with ucr = nan and converged = 0
// so a sweep records every attempt.
struct RunRecord {
    std::uint64_t seed = 0;
    int user_count = 0;
    std::string sweep_variable = "none";
    double sweep_value = std::numeric_limits<double>::quiet_NaN();
    std::string algorithm;
    double ucr = std::numeric_limits<double>::quiet_NaN();
    double system_utility = std::numeric_limits<double>::quiet_NaN();
    double total_energy = std::numeric_limits<double>::quiet_NaN();
    double system_delay = std::numeric_limits<double>::quiet_NaN();
    bool converged = false;
    int outer_iterations = 0;
    double wall_time = 0.0;  // seconds; the only column that varies between reruns
};

// ---- seed derivation -----------------------------------------------------------

// Output stage of the splitmix64 generator.
inline std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// Seed for replicate `index` under `master`. Depends only on (master, index),
// never on the sweep point, so sweep points share random numbers replicate by
// replicate and per-point differences are not noise from scenario redraws.
inline std::uint64_t run_seed(std::uint64_t master, int index) {
    return mix64(master + (static_cast<std::uint64_t>(index) + 1) * 0x9E3779B97F4A7C15ULL);
}

// ---- CSV -----------------------------------------------------------------------

namespace detail {

inline std::string csv_num(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

}  // namespace detail

inline void write_csv_header(std::ostream& out) {
    out << "schema_version,seed,user_count,sweep_variable,sweep_value,algorithm,ucr,"
           "system_utility,total_energy,system_delay,converged,outer_iterations,wall_time\n";
}

inline void write_csv_row(std::ostream& out, const RunRecord& r) {
    out << csv_schema_version << ',' << r.seed << ',' << r.user_count << ',' << r.sweep_variable
        << ',' << detail::csv_num(r.sweep_value) << ',' << r.algorithm << ','
        << detail::csv_num(r.ucr) << ',' << detail::csv_num(r.system_utility) << ','
        << detail::csv_num(r.total_energy) << ',' << detail::csv_num(r.system_delay) << ','
        << (r.converged ? 1 : 0) << ',' << r.outer_iterations << ','
        << detail::csv_num(r.wall_time) << '\n';
}

inline void write_trace_header(std::ostream& out) {
    out << "schema_version,iteration,y,objective,ucr,cs_residual,phi_iterations,sca_iterations\n";
}

inline void write_trace_csv(std::ostream& out, const Trace& trace) {
    write_trace_header(out);
    for (const auto& row : trace.rows) {
        out << csv_schema_version << ',' << row.iteration << ',' << detail::csv_num(row.y) << ','
            << detail::csv_num(row.objective) << ',' << detail::csv_num(row.ucr) << ','
            << detail::csv_num(row.cs_residual) << ',' << row.phi_iterations << ','
            << row.sca_iterations << '\n';
    }
}

// ---- single run ----------------------------------------------------------------

struct SingleOutcome {
    RunRecord record;
    SolveResult result;    // empty for failed runs
    Scenario scenario;     // empty when generation itself failed
    int exit_code = 0;     // 0 ok, 2 infeasible, 3 not converged
    std::string error;     // nonempty iff the run failed
};

inline SolveResult run_algorithm(const Scenario& sc, Algorithm algo, const SolverOptions& opt,
                                 int oracle_points) {
    switch (algo) {
        case Algorithm::joint: return dinkelbach_solve(sc, opt);
        case Algorithm::average_allocation: return average_allocation(sc);
        case Algorithm::comm_only: return comm_only(sc, opt);
        case Algorithm::freq_only: return freq_only(sc, opt);
        case Algorithm::grid_oracle: {
            OracleResult o = grid_oracle(sc, oracle_points);
            SolveResult r;
            r.allocation = o.allocation;
            r.retention = o.retention;
            r.cost = evaluate(sc, o.allocation);
            r.converged = true;
            r.state.alloc = r.allocation;
            r.state.retention = r.retention;
            r.state.y = r.cost.ucr;
            r.state.mult.resize(sc.size());
            return r;
        }
    }
    throw std::logic_error("run_algorithm: unhandled algorithm");
}

inline SingleOutcome run_single(const RunConfig& cfg, Algorithm algo, std::uint64_t seed,
                                int oracle_points = 8) {
    SingleOutcome out;
    out.record.seed = seed;
    out.record.user_count = cfg.system.user_count;
    out.record.algorithm = to_string(algo);
    auto t0 = std::chrono::steady_clock::now();
    auto stop_clock = [&] {
        out.record.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    };
    try {
        out.scenario = generate_scenario(cfg.system, cfg.user, seed, cfg.policy);
        out.result = run_algorithm(out.scenario, algo, cfg.solver, oracle_points);
        stop_clock();
        out.record.ucr = out.result.cost.ucr;
        out.record.system_utility = out.result.cost.system_utility;
        out.record.total_energy = out.result.cost.total_energy;
        out.record.system_delay = out.result.cost.system_delay;
        out.record.converged = out.result.converged;
        out.record.outer_iterations = out.result.outer_iterations;
        out.exit_code = out.result.converged ? 0 : 3;
        if (!out.result.converged) out.error = "solver did not converge";
    } catch (const infeasible_error& e) {
        stop_clock();
        out.exit_code = 2;
        out.error = e.what();
    } catch (const std::exception& e) {
        stop_clock();
        out.exit_code = 2;
        out.error = e.what();
    }
    return out;
}

// ---- sweeps --------------------------------------------------------------------

struct SweepSpec {
    std::string variable;        // user_count | power_max | user_freq_max |
                                 // server_freq_max | cost_weights
    std::vector<double> values;  // for cost_weights the value is the energy weight,
                                 // time weight = 1 - value
    int seeds_per_point = 20;
    std::vector<Algorithm> algorithms{Algorithm::joint};
    int oracle_points = 8;
};

inline void apply_sweep_value(RunConfig& cfg, const std::string& variable, double value) {
    if (variable == "user_count") {
        int n = static_cast<int>(std::llround(value));
        if (n < 1 || std::abs(value - n) > 1e-9)
            throw std::invalid_argument("user_count sweep values must be positive integers");
        cfg.system.user_count = n;
    } else if (variable == "power_max") {
        cfg.user.power_max = value;
    } else if (variable == "user_freq_max") {
        cfg.user.freq_max = value;
    } else if (variable == "server_freq_max") {
        cfg.system.server_freq_max = value;
    } else if (variable == "cost_weights") {
        if (!(value >= 0.0) || !(value <= 1.0))
            throw std::invalid_argument("cost_weights sweep values must lie in [0, 1]");
        cfg.system.cost_weight_energy = value;
        cfg.system.cost_weight_time = 1.0 - value;
    } else {
        throw std::invalid_argument(
            "unknown sweep variable '" + variable +
            "' (expected user_count|power_max|user_freq_max|server_freq_max|cost_weights)");
    }
}

struct SweepResult {
    std::vector<RunRecord> rows;  // one per (value, seed, algorithm), in that loop order
};

// Runs the sweep. Row order is deterministic: values outermost, then seed
// replicates, then algorithms. Failures become rows with nan results.
inline SweepResult run_sweep(const RunConfig& base, const SweepSpec& spec,
                             std::uint64_t master_seed) {
    if (spec.values.empty()) throw std::invalid_argument("sweep needs at least one value");
    if (spec.seeds_per_point < 1)
        throw std::invalid_argument("seeds_per_point must be at least 1");
    if (spec.algorithms.empty()) throw std::invalid_argument("sweep needs at least one algorithm");
    SweepResult res;
    res.rows.reserve(spec.values.size() * spec.seeds_per_point * spec.algorithms.size());
    for (double value : spec.values) {
        RunConfig cfg = base;
        apply_sweep_value(cfg, spec.variable, value);
        for (int rep = 0; rep < spec.seeds_per_point; ++rep) {
            std::uint64_t seed = run_seed(master_seed, rep);
            for (Algorithm algo : spec.algorithms) {
                SingleOutcome one = run_single(cfg, algo, seed, spec.oracle_points);
                one.record.sweep_variable = spec.variable;
                one.record.sweep_value = value;
                res.rows.push_back(one.record);
            }
        }
    }
    return res;
}

namespace detail {

struct Moments {
    double mean = std::numeric_limits<double>::quiet_NaN();
    double stddev = std::numeric_limits<double>::quiet_NaN();
};

// Population statistics over the finite entries; all-nan input stays nan.
inline Moments moments(const std::vector<double>& xs) {
    double sum = 0.0;
    int n = 0;
    for (double x : xs)
        if (std::isfinite(x)) {
            sum += x;
            ++n;
        }
    if (n == 0) return {};
    double mean = sum / n;
    double ss = 0.0;
    for (double x : xs)
        if (std::isfinite(x)) ss += (x - mean) * (x - mean);
    return {mean, std::sqrt(ss / n)};
}

}  // namespace detail

// Appends two rows per (sweep value, algorithm): the per-point mean and the
// population standard deviation over seed replicates. The seed column holds
// "mean"/"std"; failed replicates (nan ucr) are excluded from the statistics;
// the converged column holds the converged fraction and its deviation.
inline void write_summary_rows(std::ostream& out, const SweepSpec& spec,
                               const SweepResult& res) {
    for (double value : spec.values) {
        for (Algorithm algo : spec.algorithms) {
            std::string name = to_string(algo);
            std::vector<double> ucr, util, energy, delay, conv, iters, wall;
            int user_count = 0;
            for (const RunRecord& r : res.rows) {
                if (r.algorithm != name || r.sweep_value != value) continue;
                user_count = r.user_count;
                conv.push_back(r.converged ? 1.0 : 0.0);
                wall.push_back(r.wall_time);
                if (!std::isfinite(r.ucr)) continue;
                ucr.push_back(r.ucr);
                util.push_back(r.system_utility);
                energy.push_back(r.total_energy);
                delay.push_back(r.system_delay);
                iters.push_back(r.outer_iterations);
            }
            auto u = detail::moments(ucr);
            auto s = detail::moments(util);
            auto e = detail::moments(energy);
            auto d = detail::moments(delay);
            auto c = detail::moments(conv);
            auto it = detail::moments(iters);
            auto w = detail::moments(wall);
            auto row = [&](const char* tag, auto pick) {
                out << csv_schema_version << ',' << tag << ',' << user_count << ','
                    << spec.variable << ',' << detail::csv_num(value) << ',' << name << ','
                    << detail::csv_num(pick(u)) << ',' << detail::csv_num(pick(s)) << ','
                    << detail::csv_num(pick(e)) << ',' << detail::csv_num(pick(d)) << ','
                    << detail::csv_num(pick(c)) << ',' << detail::csv_num(pick(it)) << ','
                    << detail::csv_num(pick(w)) << '\n';
            };
            row("mean", [](const detail::Moments& m) { return m.mean; });
            row("std", [](const detail::Moments& m) { return m.stddev; });
        }
    }
}

inline void write_sweep_csv(std::ostream& out, const SweepSpec& spec, const SweepResult& res) {
    write_csv_header(out);
    for (const RunRecord& r : res.rows) write_csv_row(out, r);
    write_summary_rows(out, spec, res);
}

// Per-user detail block for single runs: own header, independent of the
// RunRecord schema.
inline void write_user_rows(std::ostream& out, const Scenario& sc, const SolveResult& res) {
    out << "user,bandwidth,power,extraction_rate,user_freq,server_freq,retention,"
           "secrecy_rate,time_total,energy_total,utility\n";
    for (int n = 0; n < sc.size(); ++n) {
        const auto& a = res.allocation;
        const auto& u = res.cost.users[static_cast<std::size_t>(n)];
        out << n << ',' << detail::csv_num(a.bandwidth[static_cast<std::size_t>(n)]) << ','
            << detail::csv_num(a.power[static_cast<std::size_t>(n)]) << ','
            << detail::csv_num(a.extraction_rate[static_cast<std::size_t>(n)]) << ','
            << detail::csv_num(a.user_freq[static_cast<std::size_t>(n)]) << ','
            << detail::csv_num(a.server_freq[static_cast<std::size_t>(n)]) << ','
            << detail::csv_num(res.retention[static_cast<std::size_t>(n)].retention_rate) << ','
            << detail::csv_num(u.secrecy_rate) << ',' << detail::csv_num(u.total_time()) << ','
            << detail::csv_num(u.total_energy()) << ',' << detail::csv_num(u.utility) << '\n';
    }
}

}  // namespace edgetune
