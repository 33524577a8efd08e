#pragma once

// Flat key=value run configuration: one file drives scenario generation, the
// solver, and the harness. Keys match the config struct field names exactly;
// '#' starts a comment; later assignments win.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "edgetune/scenario.hpp"
#include "edgetune/solver.hpp"

namespace edgetune {

struct RunConfig {
    SystemConfig system;
    UserConfig user;  // template applied to every generated user
    GenerationPolicy policy;
    SolverOptions solver;
};

class config_error : public std::runtime_error {
   public:
    config_error(int line, const std::string& what)
        : std::runtime_error("config line " + std::to_string(line) + ": " + what), line(line) {}
    int line;
};

namespace detail {

inline std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline double parse_double(const std::string& v, int line, const std::string& key) {
    try {
        std::size_t used = 0;
        double x = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument("trailing characters");
        return x;
    } catch (const std::exception&) {
        throw config_error(line, "key '" + key + "': cannot parse '" + v + "' as a number");
    }
}

inline long long parse_int(const std::string& v, int line, const std::string& key) {
    try {
        std::size_t used = 0;
        long long x = std::stoll(v, &used);
        if (used != v.size()) throw std::invalid_argument("trailing characters");
        return x;
    } catch (const std::exception&) {
        throw config_error(line, "key '" + key + "': cannot parse '" + v + "' as an integer");
    }
}

inline std::uint64_t parse_u64(const std::string& v, int line, const std::string& key) {
    try {
        std::size_t used = 0;
        std::uint64_t x = std::stoull(v, &used);
        if (used != v.size()) throw std::invalid_argument("trailing characters");
        return x;
    } catch (const std::exception&) {
        throw config_error(line,
                           "key '" + key + "': cannot parse '" + v + "' as an unsigned integer");
    }
}

inline bool parse_bool(const std::string& v, int line, const std::string& key) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw config_error(line, "key '" + key + "': expected true/false/1/0, got '" + v + "'");
}

inline std::string fmt_double(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

}  // namespace detail

// Parses config text. bits_per_layer is derived from total_param_size,
// layer_count, and bits_per_parameter unless set explicitly.
inline RunConfig parse_config(std::istream& in) {
    RunConfig cfg;
    bool bits_per_layer_explicit = false;
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        auto hash = raw.find('#');
        if (hash != std::string::npos) raw.erase(hash);
        std::string line = detail::trim(raw);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw config_error(line_no, "expected 'key = value', got '" + line + "'");
        std::string key = detail::trim(line.substr(0, eq));
        std::string val = detail::trim(line.substr(eq + 1));
        if (key.empty()) throw config_error(line_no, "empty key");
        if (val.empty()) throw config_error(line_no, "key '" + key + "': empty value");

        auto d = [&] { return detail::parse_double(val, line_no, key); };
        auto i = [&] { return detail::parse_int(val, line_no, key); };
        auto b = [&] { return detail::parse_bool(val, line_no, key); };

        auto& sys = cfg.system;
        auto& usr = cfg.user;
        auto& pol = cfg.policy;
        auto& sol = cfg.solver;
        if (key == "user_count") sys.user_count = static_cast<int>(i());
        else if (key == "layer_count") sys.layer_count = static_cast<int>(i());
        else if (key == "bits_per_layer") { sys.bits_per_layer = d(); bits_per_layer_explicit = true; }
        else if (key == "total_param_size") sys.total_param_size = i();
        else if (key == "bits_per_parameter") sys.bits_per_parameter = static_cast<int>(i());
        else if (key == "noise_psd_server") sys.noise_psd_server = d();
        else if (key == "noise_psd_eve") sys.noise_psd_eve = d();
        else if (key == "server_capacitance") sys.server_capacitance = d();
        else if (key == "server_freq_max") sys.server_freq_max = d();
        else if (key == "cost_weight_time") sys.cost_weight_time = d();
        else if (key == "cost_weight_energy") sys.cost_weight_energy = d();
        else if (key == "C1") sys.C1 = d();
        else if (key == "C2") sys.C2 = d();
        else if (key == "C3") sys.C3 = d();
        else if (key == "C4") sys.C4 = d();
        else if (key == "utility_scale") sys.utility_scale = d();
        else if (key == "loss_l0") sys.loss_l0 = d();
        else if (key == "loss_q") sys.loss_q = d();
        else if (key == "rng_seed") sys.rng_seed = detail::parse_u64(val, line_no, key);
        else if (key == "bandwidth_max") usr.bandwidth_max = d();
        else if (key == "power_max") usr.power_max = d();
        else if (key == "freq_max") usr.freq_max = d();
        else if (key == "user_capacitance") usr.user_capacitance = d();
        else if (key == "confidentiality_coeff") usr.confidentiality_coeff = d();
        else if (key == "efficiency_min") usr.efficiency_min = d();
        else if (key == "loss_max") usr.loss_max = d();
        else if (key == "distance_to_server") usr.distance_to_server = d();
        else if (key == "distance_to_eve") usr.distance_to_eve = d();
        else if (key == "distance_min_km") pol.distance_min_km = d();
        else if (key == "distance_max_km") pol.distance_max_km = d();
        else if (key == "eve_min_separation_km") pol.eve_min_separation_km = d();
        else if (key == "shadow_std_db") pol.shadow_std_db = d();
        else if (key == "resample_infeasible") pol.resample_infeasible = b();
        else if (key == "max_resample_attempts") pol.max_resample_attempts = static_cast<int>(i());
        else if (key == "dinkelbach_tol") sol.dinkelbach_tol = d();
        else if (key == "dinkelbach_max_iter") sol.dinkelbach_max_iter = static_cast<int>(i());
        else if (key == "ao_max_iter") sol.ao_max_iter = static_cast<int>(i());
        else if (key == "sca_max_iter") sol.sca_max_iter = static_cast<int>(i());
        else if (key == "sca_tol") sol.sca_tol = d();
        else if (key == "bisection_tol") sol.bisection_tol = d();
        else if (key == "root_max_iter") sol.root_max_iter = static_cast<int>(i());
        else if (key == "power_floor") sol.power_floor = d();
        else if (key == "server_freq_floor") sol.server_freq_floor = d();
        else if (key == "polish_iters") sol.polish_iters = static_cast<int>(i());
        else if (key == "multi_start") sol.multi_start = b();
        else throw config_error(line_no, "unknown key '" + key + "'");
    }
    if (!bits_per_layer_explicit) cfg.system.bits_per_layer = cfg.system.derived_bits_per_layer();
    return cfg;
}

inline RunConfig parse_config(const std::string& text) {
    std::istringstream in(text);
    return parse_config(in);
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    return parse_config(in);
}

// Writes the default configuration. Values marked "artifact choice" have no
// prescribed reference setting and were fixed for this implementation.
inline std::string default_config_text() {
    RunConfig c;
    using detail::fmt_double;
    std::ostringstream o;
    o << "# Run configuration: flat key = value pairs, '#' starts a comment.\n";
    o << "# Keys match the configuration struct field names exactly.\n\n";
    o << "# --- system ---\n";
    o << "user_count = " << c.system.user_count << "\n";
    o << "layer_count = " << c.system.layer_count << "                  # artifact choice\n";
    o << "total_param_size = " << c.system.total_param_size << "\n";
    o << "bits_per_parameter = " << c.system.bits_per_parameter << "            # artifact choice\n";
    o << "# bits_per_layer is derived as total_param_size / layer_count * bits_per_parameter\n";
    o << "# unless set explicitly:\n";
    o << "# bits_per_layer = " << fmt_double(c.system.bits_per_layer) << "\n";
    o << "noise_psd_server = " << fmt_double(c.system.noise_psd_server)
      << "  # -174 dBm/Hz in W/Hz\n";
    o << "noise_psd_eve = " << fmt_double(c.system.noise_psd_eve) << "     # -174 dBm/Hz in W/Hz\n";
    o << "server_capacitance = " << fmt_double(c.system.server_capacitance) << "\n";
    o << "server_freq_max = " << fmt_double(c.system.server_freq_max) << "             # 100 GHz\n";
    o << "cost_weight_time = " << fmt_double(c.system.cost_weight_time) << "\n";
    o << "cost_weight_energy = " << fmt_double(c.system.cost_weight_energy) << "\n";
    o << "C1 = " << fmt_double(c.system.C1) << "                    # artifact choice\n";
    o << "C2 = " << fmt_double(c.system.C2) << "                       # artifact choice\n";
    o << "C3 = " << fmt_double(c.system.C3) << "                    # artifact choice\n";
    o << "C4 = " << fmt_double(c.system.C4) << "                       # artifact choice\n";
    o << "utility_scale = " << fmt_double(c.system.utility_scale) << "            # artifact choice\n";
    o << "loss_l0 = " << fmt_double(c.system.loss_l0) << "                  # artifact choice\n";
    o << "loss_q = " << fmt_double(c.system.loss_q) << "                   # artifact choice\n";
    o << "rng_seed = " << c.system.rng_seed << "\n\n";
    o << "# --- per-user template ---\n";
    o << "bandwidth_max = " << fmt_double(c.user.bandwidth_max) << "            # artifact choice\n";
    o << "power_max = " << fmt_double(c.user.power_max) << "                # 0.2 W\n";
    o << "freq_max = " << fmt_double(c.user.freq_max) << "             # 7 GHz\n";
    o << "user_capacitance = " << fmt_double(c.user.user_capacitance) << "\n";
    o << "confidentiality_coeff = " << fmt_double(c.user.confidentiality_coeff)
      << "        # artifact choice\n";
    o << "efficiency_min = " << fmt_double(c.user.efficiency_min)
      << "  # ln 2, artifact choice\n";
    o << "loss_max = " << fmt_double(c.user.loss_max) << "                 # artifact choice\n";
    o << "distance_to_server = " << fmt_double(c.user.distance_to_server)
      << "        # km, artifact choice\n";
    o << "distance_to_eve = " << fmt_double(c.user.distance_to_eve)
      << "           # km, artifact choice\n\n";
    o << "# --- scenario generation (artifact choices) ---\n";
    o << "distance_min_km = " << fmt_double(c.policy.distance_min_km) << "\n";
    o << "distance_max_km = " << fmt_double(c.policy.distance_max_km) << "\n";
    o << "eve_min_separation_km = " << fmt_double(c.policy.eve_min_separation_km) << "\n";
    o << "shadow_std_db = " << fmt_double(c.policy.shadow_std_db) << "\n";
    o << "resample_infeasible = " << (c.policy.resample_infeasible ? "true" : "false") << "\n";
    o << "max_resample_attempts = " << c.policy.max_resample_attempts << "\n\n";
    o << "# --- solver ---\n";
    o << "dinkelbach_tol = " << fmt_double(c.solver.dinkelbach_tol) << "\n";
    o << "dinkelbach_max_iter = " << c.solver.dinkelbach_max_iter << "\n";
    o << "ao_max_iter = " << c.solver.ao_max_iter << "\n";
    o << "sca_max_iter = " << c.solver.sca_max_iter << "\n";
    o << "sca_tol = " << fmt_double(c.solver.sca_tol) << "\n";
    o << "bisection_tol = " << fmt_double(c.solver.bisection_tol) << "\n";
    o << "root_max_iter = " << c.solver.root_max_iter << "\n";
    o << "power_floor = " << fmt_double(c.solver.power_floor) << "          # W, artifact choice\n";
    o << "server_freq_floor = " << fmt_double(c.solver.server_freq_floor)
      << "            # Hz, artifact choice\n";
    o << "polish_iters = " << c.solver.polish_iters << "\n";
    o << "multi_start = " << (c.solver.multi_start ? "true" : "false") << "\n";
    return o.str();
}

inline void write_defaults(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write config file: " + path);
    out << default_config_text();
}

}  // namespace edgetune
