// Command line front end: defaults | solve | sweep | oracle.
// Exit codes: 0 success, 1 usage or configuration error, 2 infeasible
// instance, 3 solver finished without convergence.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "edgetune/config.hpp"
#include "edgetune/harness.hpp"

namespace {

edgetune::RunConfig load_or_default(const std::string& path) {
    if (path.empty()) return {};
    return edgetune::load_config(path);
}

std::ostream& open_out(std::ofstream& file, const std::string& path) {
    if (path.empty()) return std::cout;
    file.open(path);
    if (!file) throw std::runtime_error("cannot open output file: " + path);
    return file;
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> parts;
    std::string item;
    std::istringstream in(s);
    while (std::getline(in, item, ','))
        if (!item.empty()) parts.push_back(item);
    return parts;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"joint resource allocation simulator for secure offsite tuning"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_path;
    std::string trace_path;
    std::string algo_arg = "joint";
    std::string sweep_arg;
    std::uint64_t seed = 0;
    int seeds_per_point = 20;
    int oracle_points = 8;

    auto* cmd_defaults = app.add_subcommand("defaults", "write the default configuration");
    cmd_defaults->add_option("--out", out_path, "output path (stdout if omitted)");

    auto* cmd_solve = app.add_subcommand("solve", "solve one generated scenario");
    cmd_solve->add_option("--config", config_path, "configuration file")
        ->check(CLI::ExistingFile);
    auto* solve_seed = cmd_solve->add_option("--seed", seed, "scenario seed (default: rng_seed)");
    cmd_solve->add_option("--algo", algo_arg, "joint|avg|comm-only|freq-only|oracle");
    cmd_solve->add_option("--out", out_path, "result CSV path (stdout if omitted)");
    cmd_solve->add_option("--trace", trace_path, "per-iteration trace CSV path");
    cmd_solve->add_option("--points", oracle_points, "grid points per axis for --algo oracle");

    auto* cmd_sweep = app.add_subcommand("sweep", "sweep one variable over seed replicates");
    cmd_sweep->add_option("--config", config_path, "configuration file")
        ->check(CLI::ExistingFile);
    auto* sweep_seed =
        cmd_sweep->add_option("--seed", seed, "master seed for replicates (default: rng_seed)");
    cmd_sweep
        ->add_option("--sweep", sweep_arg,
                     "VAR=v1,v2,... with VAR one of user_count|power_max|user_freq_max|"
                     "server_freq_max|cost_weights")
        ->required();
    cmd_sweep->add_option("--seeds-per-point", seeds_per_point, "replicates per sweep value");
    cmd_sweep->add_option("--algo", algo_arg, "comma-separated algorithm list");
    cmd_sweep->add_option("--out", out_path, "sweep CSV path (stdout if omitted)");
    cmd_sweep->add_option("--points", oracle_points, "grid points per axis for oracle rows");

    auto* cmd_oracle =
        app.add_subcommand("oracle", "compare the joint solver against the grid oracle");
    cmd_oracle->add_option("--config", config_path, "configuration file")
        ->check(CLI::ExistingFile);
    auto* oracle_seed =
        cmd_oracle->add_option("--seed", seed, "scenario seed (default: rng_seed)");
    cmd_oracle->add_option("--points", oracle_points, "grid points per axis");
    cmd_oracle->add_option("--out", out_path, "report path (stdout if omitted)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (app.got_subcommand(cmd_defaults)) {
            std::ofstream file;
            std::ostream& out = open_out(file, out_path);
            out << edgetune::default_config_text();
            return 0;
        }

        edgetune::RunConfig cfg = load_or_default(config_path);

        if (app.got_subcommand(cmd_solve)) {
            std::uint64_t s = solve_seed->count() ? seed : cfg.system.rng_seed;
            edgetune::Algorithm algo = edgetune::parse_algorithm(algo_arg);
            edgetune::SingleOutcome one = edgetune::run_single(cfg, algo, s, oracle_points);
            if (one.exit_code == 2) {
                std::cerr << "infeasible: " << one.error << "\n";
                return 2;
            }
            std::ofstream file;
            std::ostream& out = open_out(file, out_path);
            edgetune::write_csv_header(out);
            edgetune::write_csv_row(out, one.record);
            out << "\n";
            edgetune::write_user_rows(out, one.scenario, one.result);
            if (!trace_path.empty()) {
                std::ofstream tf(trace_path);
                if (!tf) throw std::runtime_error("cannot open trace file: " + trace_path);
                edgetune::write_trace_csv(tf, one.result.trace);
            }
            if (one.exit_code == 3) std::cerr << "warning: " << one.error << "\n";
            return one.exit_code;
        }

        if (app.got_subcommand(cmd_sweep)) {
            auto eq = sweep_arg.find('=');
            if (eq == std::string::npos || eq == 0 || eq + 1 == sweep_arg.size())
                throw std::invalid_argument("--sweep expects VAR=v1,v2,...");
            edgetune::SweepSpec spec;
            spec.variable = sweep_arg.substr(0, eq);
            for (const std::string& v : split_list(sweep_arg.substr(eq + 1)))
                spec.values.push_back(std::stod(v));
            if (spec.values.empty()) throw std::invalid_argument("--sweep lists no values");
            spec.seeds_per_point = seeds_per_point;
            spec.algorithms.clear();
            for (const std::string& a : split_list(algo_arg))
                spec.algorithms.push_back(edgetune::parse_algorithm(a));
            spec.oracle_points = oracle_points;
            std::uint64_t master = sweep_seed->count() ? seed : cfg.system.rng_seed;
            edgetune::SweepResult res = edgetune::run_sweep(cfg, spec, master);
            std::ofstream file;
            std::ostream& out = open_out(file, out_path);
            edgetune::write_sweep_csv(out, spec, res);
            return 0;
        }

        if (app.got_subcommand(cmd_oracle)) {
            std::uint64_t s = oracle_seed->count() ? seed : cfg.system.rng_seed;
            edgetune::Scenario sc =
                edgetune::generate_scenario(cfg.system, cfg.user, s, cfg.policy);
            edgetune::SolveResult joint = edgetune::dinkelbach_solve(sc, cfg.solver);
            edgetune::OracleResult oracle = edgetune::grid_oracle(sc, oracle_points);
            std::ofstream file;
            std::ostream& out = open_out(file, out_path);
            char buf[256];
            std::snprintf(buf, sizeof buf,
                          "joint_ucr = %.17g\noracle_ucr = %.17g\njoint_over_oracle = %.17g\n",
                          joint.cost.ucr, oracle.ucr, joint.cost.ucr / oracle.ucr);
            out << buf;
            return joint.converged ? 0 : 3;
        }
    } catch (const edgetune::infeasible_error& e) {
        std::cerr << "infeasible: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
