#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "edgetune/scenario.hpp"

namespace edgetune {

// Raised when a user's secrecy rate is zero: the uplink carries nothing and
// the allocation cannot be costed.
class transmission_failure : public std::runtime_error {
public:
    explicit transmission_failure(int user)
        : std::runtime_error("transmission failure: secrecy rate is zero for user " +
                             std::to_string(user)),
          user_index(user) {}
    int user_index;
};

class validation_error : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Decision variables. Vectors are indexed by user; delay_bound is the shared
// completion deadline T.
struct Allocation {
    std::vector<double> bandwidth;        // Hz
    std::vector<double> power;            // W
    std::vector<double> extraction_rate;  // phi, dimensionless
    std::vector<double> user_freq;        // cycles/s
    std::vector<double> server_freq;      // cycles/s
    double delay_bound = 0.0;             // s

    int size() const { return static_cast<int>(bandwidth.size()); }

    static Allocation sized(int n) {
        Allocation a;
        a.bandwidth.resize(n);
        a.power.resize(n);
        a.extraction_rate.resize(n);
        a.user_freq.resize(n);
        a.server_freq.resize(n);
        return a;
    }
};

// Discrete emulator retention rate with the continuous bounds it was derived
// from (lower: loss budget, upper: tuning-efficiency floor).
struct EmulatorChoice {
    double retention_rate = 0.0;
    double lower_bound = 0.0;
    double upper_bound = 0.0;
};

struct PerUserCost {
    double t_compute_user = 0.0;
    double t_uplink = 0.0;
    double t_compute_server = 0.0;
    double e_compute_user = 0.0;
    double e_uplink = 0.0;
    double e_compute_server = 0.0;
    double secrecy_rate = 0.0;
    double utility = 0.0;

    double total_time() const { return t_compute_user + t_uplink + t_compute_server; }
    double total_energy() const { return e_compute_user + e_uplink + e_compute_server; }
};

struct CostBreakdown {
    std::vector<PerUserCost> users;
    double system_delay = 0.0;    // max over users of their summed times
    double total_energy = 0.0;    // sum of every per-user energy term
    double total_cost = 0.0;      // c_t * delay + c_e * energy
    double system_utility = 0.0;  // sum of per-user utilities
    double ucr = 0.0;             // system_utility / total_cost
};

inline constexpr std::array<double, 5> retention_grid{0.1, 0.3, 0.5, 0.7, 0.9};

// ---- elementary model pieces -------------------------------------------------

// GPU cycles the user spends extracting an adapter of rate phi: C1 * phi^C2.
inline double cycles_user(double phi, double c1, double c2) {
    if (!(phi > 0)) throw std::domain_error("cycles_user: phi must be positive");
    return c1 * std::pow(phi, c2);
}
inline double cycles_user(double phi, const SystemConfig& sys) {
    return cycles_user(phi, sys.C1, sys.C2);
}

// GPU cycles the server spends on the returned adapter: C3 * phi^-C4.
inline double cycles_server(double phi, double c3, double c4) {
    if (!(phi > 0)) throw std::domain_error("cycles_server: phi must be positive");
    return c3 * std::pow(phi, -c4);
}
inline double cycles_server(double phi, const SystemConfig& sys) {
    return cycles_server(phi, sys.C3, sys.C4);
}

// Shannon rate of one FDMA link with bandwidth-proportional noise power.
inline double rate(double b, double p, double gain, double noise_psd) {
    if (!(b > 0)) throw std::domain_error("rate: bandwidth must be positive");
    if (p < 0) throw std::domain_error("rate: power must be non-negative");
    return b * std::log2(1.0 + gain * p / (noise_psd * b));
}

// Secrecy rate: legitimate rate minus eavesdropper rate, clamped at zero.
// Zero means the uplink fails outright.
inline double secrecy_rate(double b, double p, double gain_server, double gain_eve,
                           double noise_server, double noise_eve) {
    double diff = rate(b, p, gain_server, noise_server) - rate(b, p, gain_eve, noise_eve);
    return diff > 0.0 ? diff : 0.0;
}

inline double secrecy_rate(double b, double p, const Channel& ch, const SystemConfig& sys) {
    return secrecy_rate(b, p, ch.gain_to_server, ch.gain_to_eve,
                        sys.noise_psd_server, sys.noise_psd_eve);
}

// Adapter payload in bits for extraction rate phi.
inline double payload_bits(double phi, const SystemConfig& sys) {
    return phi * sys.layer_count * sys.bits_per_layer;
}

struct TimeEnergy {
    double time = 0.0;
    double energy = 0.0;
};

// Uplink time and radiated energy for the adapter transfer. Throws when the
// secrecy rate is zero (user index is only known to callers, so -1 here).
inline TimeEnergy uplink_time_energy(double b, double p, double phi, const SystemConfig& sys,
                                     const Channel& ch, int user_index = -1) {
    double rs = secrecy_rate(b, p, ch, sys);
    if (!(rs > 0.0)) throw transmission_failure(user_index);
    double t = payload_bits(phi, sys) / rs;
    return {t, p * t};
}

// Local extraction time and switched-capacitance energy at frequency f.
inline TimeEnergy compute_time_energy_user(double f, double phi, double capacitance,
                                           const SystemConfig& sys) {
    if (!(f > 0)) throw std::domain_error("compute_time_energy_user: frequency must be positive");
    double cycles = cycles_user(phi, sys);
    return {cycles / f, capacitance * cycles * f * f};
}

// Server-side fine-tuning time and energy at frequency f.
inline TimeEnergy compute_time_energy_server(double f, double phi, double capacitance,
                                             const SystemConfig& sys) {
    if (!(f > 0)) throw std::domain_error("compute_time_energy_server: frequency must be positive");
    double cycles = cycles_server(phi, sys);
    return {cycles / f, capacitance * cycles * f * f};
}

// Diminishing-returns utility of one user's allocation. Normalizes frequency
// and bandwidth by their caps so every term lives on [0, 1].
inline double utility_user(double b, double phi, double f, const UserConfig& user,
                           double utility_scale) {
    return utility_scale * std::log(1.0 + phi + f / user.freq_max + b / user.bandwidth_max);
}

// ---- emulator retention ------------------------------------------------------

// Fine-tuning efficiency of extraction rate phi against retention chi.
inline double efficiency_G(double phi, double chi) {
    if (!(phi > 0) || !(chi > 0)) throw std::domain_error("efficiency_G: inputs must be positive");
    return std::log1p(phi / chi);
}

// Monotone stand-in for the emulator's MSE loss as retention decreases.
inline double mse_loss_surrogate(double chi, double l0 = 1.0, double q = 2.0) {
    if (!(chi > 0) || chi > 1.0) throw std::domain_error("mse_loss_surrogate: chi must be in (0, 1]");
    return l0 * std::pow(1.0 - chi, q);
}

// Smallest retention that keeps the surrogate loss within budget.
inline double retention_lower_bound(const UserConfig& user, const SystemConfig& sys) {
    if (user.loss_max >= sys.loss_l0) return 0.0;
    return 1.0 - std::pow(user.loss_max / sys.loss_l0, 1.0 / sys.loss_q);
}

// Largest retention that still meets the efficiency floor at extraction phi.
// Uses expm1 so that efficiency_min = ln 2 gives exactly phi.
inline double retention_upper_bound(double phi, double efficiency_min) {
    return phi / std::expm1(efficiency_min);
}

// Smallest grid retention at or above the continuous lower bound. Throws when
// even full retention cannot meet the loss budget.
inline double retention_grid_ceil(double chi_lower) {
    for (double g : retention_grid)
        if (g >= chi_lower - 1e-12) return g;
    throw infeasible_error("retention: loss budget requires chi > " +
                           std::to_string(retention_grid.back()));
}

// Minimal extraction rate at which the efficiency floor can be met with
// retention chi_lower: the unique root of efficiency_G(phi, chi_lower) = e_min.
inline double phi_min(double chi_lower, double efficiency_min) {
    if (!(chi_lower > 0)) throw std::domain_error("phi_min: chi_lower must be positive");
    return chi_lower * std::expm1(efficiency_min);
}

// Discrete retention choice: ROUND(min[chi_lower, chi_upper]) to the nearest
// grid value, ties rounding up.
inline EmulatorChoice select_retention(double phi, const UserConfig& user,
                                       const SystemConfig& sys) {
    double pm = user.phi_max(sys.layer_count);
    if (!(phi > 0) || phi > pm * (1.0 + 1e-12))
        throw std::domain_error("select_retention: phi outside (0, phi_max]");
    EmulatorChoice c;
    c.lower_bound = retention_lower_bound(user, sys);
    c.upper_bound = retention_upper_bound(phi, user.efficiency_min);
    if (c.lower_bound > 1.0)
        throw infeasible_error("select_retention: empty feasible retention set");
    double target = std::min(c.lower_bound, c.upper_bound);
    double best = retention_grid.front();
    double best_dist = std::fabs(target - best);
    for (double g : retention_grid) {
        double d = std::fabs(target - g);
        // on an exact midpoint tie the larger grid value wins
        if (d < best_dist || (d == best_dist && g > best)) {
            best = g;
            best_dist = d;
        }
    }
    c.retention_rate = best;
    return c;
}

// ---- full evaluation ----------------------------------------------------------

// Checks every hard constraint of the allocation problem except the retention
// pair (which needs an EmulatorChoice; see solver::kkt_certificate).
inline void validate_allocation(const Scenario& sc, const Allocation& a) {
    const double slack = 1.0 + 1e-9;
    std::string bad;
    auto fail = [&](const std::string& what) { bad += bad.empty() ? "" : "; "; bad += what; };
    if (a.size() != sc.size()) {
        throw validation_error("allocation size mismatch");
    }
    if (!(a.delay_bound > 0)) fail("delay bound must be positive");
    double fm_sum = 0.0;
    for (int n = 0; n < sc.size(); ++n) {
        const auto& u = sc.users[n];
        const std::string id = "user " + std::to_string(n) + ": ";
        if (!(a.bandwidth[n] > 0) || a.bandwidth[n] > u.bandwidth_max * slack)
            fail(id + "bandwidth outside (0, bandwidth_max]");
        if (a.power[n] < 0 || a.power[n] > u.power_max * slack)
            fail(id + "power outside [0, power_max]");
        double pm = u.phi_max(sc.system.layer_count);
        if (!(a.extraction_rate[n] > 0) || a.extraction_rate[n] > pm * slack)
            fail(id + "extraction rate outside (0, phi_max]");
        if (!(a.user_freq[n] > 0) || a.user_freq[n] > u.freq_max * slack)
            fail(id + "user frequency outside (0, freq_max]");
        if (!(a.server_freq[n] > 0)) fail(id + "server frequency must be positive");
        fm_sum += a.server_freq[n];
    }
    if (fm_sum > sc.system.server_freq_max * slack)
        fail("summed server frequency exceeds server_freq_max");
    if (!bad.empty()) throw validation_error("allocation constraint violations: " + bad);
}

// Costs an allocation end to end: per-user times, energies, utilities, then
// the delay, energy, weighted cost, and utility-consumption ratio.
inline CostBreakdown evaluate(const Scenario& sc, const Allocation& a) {
    validate_allocation(sc, a);
    const auto& sys = sc.system;
    CostBreakdown out;
    out.users.resize(sc.size());
    for (int n = 0; n < sc.size(); ++n) {
        const auto& u = sc.users[n];
        auto& row = out.users[n];
        row.secrecy_rate = secrecy_rate(a.bandwidth[n], a.power[n], sc.channels[n], sys);
        if (!(row.secrecy_rate > 0)) throw transmission_failure(n);
        TimeEnergy local = compute_time_energy_user(a.user_freq[n], a.extraction_rate[n],
                                                    u.user_capacitance, sys);
        TimeEnergy up = uplink_time_energy(a.bandwidth[n], a.power[n], a.extraction_rate[n],
                                           sys, sc.channels[n], n);
        TimeEnergy srv = compute_time_energy_server(a.server_freq[n], a.extraction_rate[n],
                                                    sys.server_capacitance, sys);
        row.t_compute_user = local.time;
        row.e_compute_user = local.energy;
        row.t_uplink = up.time;
        row.e_uplink = up.energy;
        row.t_compute_server = srv.time;
        row.e_compute_server = srv.energy;
        row.utility = utility_user(a.bandwidth[n], a.extraction_rate[n], a.user_freq[n], u,
                                   sys.utility_scale);
        out.system_delay = std::max(out.system_delay, row.total_time());
        out.total_energy += row.total_energy();
        out.system_utility += row.utility;
    }
    out.total_cost = sys.cost_weight_time * out.system_delay +
                     sys.cost_weight_energy * out.total_energy;
    out.ucr = out.system_utility / out.total_cost;
    return out;
}

}  // namespace edgetune
