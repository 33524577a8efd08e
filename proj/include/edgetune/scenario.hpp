#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace edgetune {

// Raised when a problem instance admits no solution (secrecy impossible,
// retention bounds empty, and similar structural dead ends).
class infeasible_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// System-wide constants shared by all users.
struct SystemConfig {
    int user_count = 5;
    int layer_count = 32;            // transformer depth
    double bits_per_layer = 7e6;     // uplink payload bits per extracted layer
    long long total_param_size = 14000000;
    int bits_per_parameter = 16;     // used to derive bits_per_layer when absent
    double noise_psd_server = 3.981071705534972e-21;  // W/Hz, -174 dBm/Hz
    double noise_psd_eve = 3.981071705534972e-21;     // W/Hz
    double server_capacitance = 1e-27;
    double server_freq_max = 100e9;  // cycles/s, shared across users
    double cost_weight_time = 0.5;
    double cost_weight_energy = 0.5;
    double C1 = 1e9;   // user-side cycles: C1 * phi^C2, C2 > 1
    double C2 = 2.0;
    double C3 = 5e9;   // server-side cycles: C3 * phi^-C4
    double C4 = 1.0;
    double utility_scale = 1.0;
    double loss_l0 = 1.0;  // retention loss surrogate: loss_l0 * (1 - chi)^loss_q
    double loss_q = 2.0;
    std::uint64_t rng_seed = 1;

    double derived_bits_per_layer() const {
        return static_cast<double>(total_param_size) / layer_count * bits_per_parameter;
    }

    void validate() const {
        std::string bad;
        auto req = [&](bool ok, const char* what) { if (!ok) { bad += bad.empty() ? "" : "; "; bad += what; } };
        req(user_count >= 1, "user_count >= 1");
        req(layer_count >= 1, "layer_count >= 1");
        req(bits_per_layer > 0, "bits_per_layer > 0");
        req(total_param_size > 0, "total_param_size > 0");
        req(noise_psd_server > 0, "noise_psd_server > 0");
        req(noise_psd_eve > 0, "noise_psd_eve > 0");
        req(server_capacitance > 0, "server_capacitance > 0");
        req(server_freq_max > 0, "server_freq_max > 0");
        req(cost_weight_time >= 0 && cost_weight_time <= 1, "cost_weight_time in [0,1]");
        req(cost_weight_energy >= 0 && cost_weight_energy <= 1, "cost_weight_energy in [0,1]");
        req(std::fabs(cost_weight_time + cost_weight_energy - 1.0) <= 1e-9,
            "cost_weight_time + cost_weight_energy == 1");
        req(C1 > 0, "C1 > 0");
        req(C2 > 1, "C2 > 1");
        req(C3 > 0, "C3 > 0");
        req(C4 > 0, "C4 > 0");
        req(utility_scale > 0, "utility_scale > 0");
        req(loss_l0 > 0, "loss_l0 > 0");
        req(loss_q > 0, "loss_q > 0");
        if (!bad.empty()) throw std::invalid_argument("invalid system config: " + bad);
    }
};

// Per-user limits. Generated users share the template fields and carry their
// own positions.
struct UserConfig {
    double bandwidth_max = 1e6;   // Hz
    double power_max = 0.2;       // W
    double freq_max = 7e9;        // cycles/s
    double user_capacitance = 1e-27;
    double confidentiality_coeff = 16.0;  // sets phi_max = 2 * coeff / layer_count
    double efficiency_min = 0.6931471805599453;  // nats; ln 2 makes chi_upper == phi
    double loss_max = 0.81;
    double distance_to_server = 0.25;  // km
    double distance_to_eve = 0.25;     // km

    double phi_max(int layer_count) const {
        return 2.0 * confidentiality_coeff / layer_count;
    }

    void validate(int layer_count) const {
        std::string bad;
        auto req = [&](bool ok, const char* what) { if (!ok) { bad += bad.empty() ? "" : "; "; bad += what; } };
        req(bandwidth_max > 0, "bandwidth_max > 0");
        req(power_max > 0, "power_max > 0");
        req(freq_max > 0, "freq_max > 0");
        req(user_capacitance > 0, "user_capacitance > 0");
        req(confidentiality_coeff > 0, "confidentiality_coeff > 0");
        double pm = phi_max(layer_count);
        req(pm > 0 && pm <= 1.0 + 1e-12, "phi_max = 2*confidentiality_coeff/layer_count in (0, 1]");
        req(efficiency_min > 0, "efficiency_min > 0");
        req(loss_max > 0, "loss_max > 0");
        req(distance_to_server > 0, "distance_to_server > 0");
        req(distance_to_eve > 0, "distance_to_eve > 0");
        if (!bad.empty()) throw std::invalid_argument("invalid user config: " + bad);
    }
};

// Linear power gains of the two links of one user.
struct Channel {
    double gain_to_server = 0.0;
    double gain_to_eve = 0.0;
};

// Placement and fading knobs used by generate_scenario. These are simulation
// choices, not physical constants; defaults keep users inside the validity
// range of the urban-cell path loss model.
struct GenerationPolicy {
    double distance_min_km = 0.05;
    double distance_max_km = 0.5;
    double eve_min_separation_km = 1e-3;  // clamp: eavesdropper never closer than 1 m
    double shadow_std_db = 8.0;
    bool resample_infeasible = true;  // redraw users whose secrecy rate cannot be positive
    int max_resample_attempts = 100;
};

struct Scenario {
    SystemConfig system;
    std::vector<UserConfig> users;
    std::vector<Channel> channels;  // same order as users

    int size() const { return static_cast<int>(users.size()); }

    void validate() const {
        system.validate();
        if (static_cast<int>(users.size()) != system.user_count ||
            users.size() != channels.size())
            throw std::invalid_argument("scenario user/channel list length mismatch");
        for (const auto& u : users) u.validate(system.layer_count);
        for (const auto& c : channels) {
            if (!(c.gain_to_server > 0) || c.gain_to_eve < 0)
                throw std::invalid_argument("channel gains must satisfy g > 0, g_e >= 0");
        }
    }
};

// Urban-cell path loss 128.1 + 37.6*log10(d_km) plus log-normal shadowing,
// returned as a linear power gain.
inline double path_loss_gain(double distance_km, double shadow_db) {
    if (!(distance_km > 0))
        throw std::domain_error("path_loss_gain: distance must be positive");
    double pl_db = 128.1 + 37.6 * std::log10(distance_km) + shadow_db;
    return std::pow(10.0, -pl_db / 10.0);
}

// Positive secrecy capacity is achievable for some (b, p) iff the legitimate
// link beats the eavesdropper link per unit noise.
inline bool secrecy_feasible_user(const Channel& c, const SystemConfig& sys) {
    return c.gain_to_server / sys.noise_psd_server > c.gain_to_eve / sys.noise_psd_eve;
}

inline std::vector<bool> secrecy_feasibility(const Scenario& sc) {
    sc.validate();
    std::vector<bool> out;
    out.reserve(sc.users.size());
    for (const auto& c : sc.channels) out.push_back(secrecy_feasible_user(c, sc.system));
    return out;
}

// Draws user and eavesdropper positions and shadow fading for one instance.
// Pure function of (config, template, seed): the same seed reproduces the
// scenario bit for bit. Users are drawn sequentially after the eavesdropper,
// so instances with larger user_count share their user prefix with smaller
// ones under the same seed.
inline Scenario generate_scenario(const SystemConfig& config, const UserConfig& user_template,
                                  std::uint64_t rng_seed,
                                  const GenerationPolicy& policy = {}) {
    config.validate();
    user_template.validate(config.layer_count);
    if (!(policy.distance_min_km > 0) || !(policy.distance_max_km > policy.distance_min_km))
        throw std::invalid_argument("generation policy: need 0 < distance_min_km < distance_max_km");

    Scenario sc;
    sc.system = config;
    sc.users.reserve(config.user_count);
    sc.channels.reserve(config.user_count);

    std::mt19937_64 rng(rng_seed);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    std::normal_distribution<double> shadow(0.0, policy.shadow_std_db);

    const double pi = 3.14159265358979323846;
    // Eavesdropper: uniform over the full cell disc, drawn before any user so
    // that user prefixes are stable across user_count values.
    double er = policy.distance_max_km * std::sqrt(u01(rng));
    double ea = 2.0 * pi * u01(rng);
    double ex = er * std::cos(ea), ey = er * std::sin(ea);

    for (int n = 0; n < config.user_count; ++n) {
        UserConfig u = user_template;
        Channel ch;
        bool ok = false;
        int attempts = policy.resample_infeasible ? policy.max_resample_attempts : 1;
        for (int t = 0; t < attempts; ++t) {
            // uniform over the annulus [distance_min, distance_max]
            double rmin2 = policy.distance_min_km * policy.distance_min_km;
            double rmax2 = policy.distance_max_km * policy.distance_max_km;
            double r = std::sqrt(rmin2 + (rmax2 - rmin2) * u01(rng));
            double a = 2.0 * pi * u01(rng);
            double x = r * std::cos(a), y = r * std::sin(a);
            u.distance_to_server = r;
            u.distance_to_eve = std::max(std::hypot(x - ex, y - ey), policy.eve_min_separation_km);
            ch.gain_to_server = path_loss_gain(u.distance_to_server, shadow(rng));
            ch.gain_to_eve = path_loss_gain(u.distance_to_eve, shadow(rng));
            if (secrecy_feasible_user(ch, config) || !policy.resample_infeasible) { ok = true; break; }
        }
        if (!ok)
            throw infeasible_error("generate_scenario: user " + std::to_string(n) +
                                   " has no secrecy-feasible channel after " +
                                   std::to_string(policy.max_resample_attempts) + " attempts");
        sc.users.push_back(u);
        sc.channels.push_back(ch);
    }
    return sc;
}

}  // namespace edgetune
