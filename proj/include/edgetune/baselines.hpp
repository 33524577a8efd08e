#pragma once

// Reference allocators: the all-caps average point, two restricted solves that
// optimize complementary variable blocks, and a brute-force grid oracle for
// desk-scale verification of the solver.

#include <stdexcept>
#include <string>
#include <vector>

#include "edgetune/cost_model.hpp"
#include "edgetune/scenario.hpp"
#include "edgetune/solver.hpp"

namespace edgetune {

enum class BaselineKind { average_allocation, comm_only, freq_only, grid_oracle };

inline const char* to_string(BaselineKind kind) {
    switch (kind) {
        case BaselineKind::average_allocation: return "average_allocation";
        case BaselineKind::comm_only: return "comm_only";
        case BaselineKind::freq_only: return "freq_only";
        case BaselineKind::grid_oracle: return "grid_oracle";
    }
    return "unknown";
}

// Baseline 1: every cap saturated, extraction rate 0.5 clamped into its
// feasible window, server budget split evenly. No optimization.
inline SolveResult average_allocation(const Scenario& sc) {
    sc.validate();
    SolveResult out;
    out.allocation = average_point(sc);
    out.cost = evaluate(sc, out.allocation);
    out.retention.reserve(sc.size());
    for (int n = 0; n < sc.size(); ++n)
        out.retention.push_back(choose_retention_repaired(out.allocation.extraction_rate[n],
                                                          sc.users[n], sc.system));
    out.converged = true;
    out.outer_iterations = 0;
    out.state.alloc = out.allocation;
    out.state.retention = out.retention;
    out.state.mult.resize(sc.size());
    out.state.y = out.cost.ucr;
    return out;
}

// Baseline 2: optimizes bandwidth, power, and extraction rate with both
// frequency blocks frozen at the average point's values.
inline SolveResult comm_only(const Scenario& sc, const SolverOptions& opt = {}) {
    return restricted_solve(sc, opt, VariableMask::comm_and_extraction());
}

// Baseline 3: optimizes both frequency blocks with communication variables at
// their caps and the extraction rate pinned to the clamped 0.5 reference.
inline SolveResult freq_only(const Scenario& sc, const SolverOptions& opt = {}) {
    return restricted_solve(sc, opt, VariableMask::frequencies_only());
}

struct OracleResult {
    Allocation allocation;
    std::vector<EmulatorChoice> retention;
    double ucr = 0.0;
};

namespace detail {

struct GridCombo {
    double t = 0.0, e = 0.0, u = 0.0;
    double p = 0.0, phi = 0.0, f = 0.0, fm = 0.0;
};

inline std::vector<GridCombo> user_grid_combos(const Scenario& sc, int n, int points) {
    const auto& sys = sc.system;
    const auto& usr = sc.users[n];
    double chi_floor = retention_grid_ceil(retention_lower_bound(usr, sys));
    double phi_lo = phi_min(chi_floor, usr.efficiency_min);
    double phi_hi = usr.phi_max(sys.layer_count);
    if (phi_lo > phi_hi * (1.0 + 1e-12))
        throw infeasible_error("grid_oracle: extraction window empty for user " +
                               std::to_string(n));
    phi_lo = std::min(phi_lo, phi_hi);

    auto cap_axis = [points](double cap) {
        std::vector<double> v(points);
        for (int i = 0; i < points; ++i) v[i] = cap * (i + 1) / points;
        return v;
    };
    // power and server-frequency optima spread over orders of magnitude
    // below their caps, so those axes cover three decades up to the cap;
    // a single point degenerates to the cap itself
    auto log_axis = [points](double cap) {
        std::vector<double> v(points);
        for (int i = 0; i < points; ++i) {
            double t = points == 1 ? 1.0 : static_cast<double>(i) / (points - 1);
            v[i] = cap * std::pow(10.0, -3.0 * (1.0 - t));
        }
        return v;
    };
    std::vector<double> phi_axis(points);
    for (int i = 0; i < points; ++i)
        phi_axis[i] = points == 1 ? phi_lo : phi_lo + (phi_hi - phi_lo) * i / (points - 1);
    auto p_axis = log_axis(usr.power_max);
    auto f_axis = cap_axis(usr.freq_max);
    auto fm_axis = log_axis(sys.server_freq_max);

    std::vector<GridCombo> combos;
    combos.reserve(static_cast<std::size_t>(points) * points * points * points);
    for (double p : p_axis) {
        double rs = secrecy_rate(usr.bandwidth_max, p, sc.channels[n], sys);
        if (!(rs > 0.0)) continue;  // transmission fails at this power
        for (double phi : phi_axis) {
            double cyc_u = cycles_user(phi, sys);
            double cyc_s = cycles_server(phi, sys);
            double d = payload_bits(phi, sys);
            double t_up = d / rs;
            double e_up = p * t_up;
            for (double f : f_axis) {
                double u_val = utility_user(usr.bandwidth_max, phi, f, usr, sys.utility_scale);
                double t_user = cyc_u / f;
                double e_user = usr.user_capacitance * cyc_u * f * f;
                for (double fm : fm_axis) {
                    GridCombo c;
                    c.t = t_user + t_up + cyc_s / fm;
                    c.e = e_user + e_up + sys.server_capacitance * cyc_s * fm * fm;
                    c.u = u_val;
                    c.p = p;
                    c.phi = phi;
                    c.f = f;
                    c.fm = fm;
                    combos.push_back(c);
                }
            }
        }
    }
    return combos;
}

}  // namespace detail

// Exhaustive search over per-user tensor grids of (p, phi, f, fm) with
// bandwidth fixed at its cap and the shared server budget enforced by
// filtering. Deterministic: ties keep the first combination in axis order.
inline OracleResult grid_oracle(const Scenario& sc, int grid_points_per_axis) {
    sc.validate();
    int n_users = sc.size();
    if (n_users > 3)
        throw std::invalid_argument("grid_oracle: refusing " + std::to_string(n_users) +
                                    " users; cost grows as points^(4N), limit is 3");
    if (grid_points_per_axis < 1)
        throw std::invalid_argument("grid_oracle: grid_points_per_axis must be >= 1");

    std::vector<std::vector<detail::GridCombo>> combos(n_users);
    for (int n = 0; n < n_users; ++n) {
        combos[n] = detail::user_grid_combos(sc, n, grid_points_per_axis);
        if (combos[n].empty())
            throw infeasible_error("grid_oracle: no feasible grid point for user " +
                                   std::to_string(n));
    }

    const double ct = sc.system.cost_weight_time;
    const double ce = sc.system.cost_weight_energy;
    const double fm_cap = sc.system.server_freq_max * (1.0 + 1e-12);
    double best = -1.0;
    std::vector<const detail::GridCombo*> pick(n_users, nullptr);

    if (n_users == 1) {
        for (const auto& c : combos[0]) {
            double ucr = c.u / (ct * c.t + ce * c.e);
            if (ucr > best) {
                best = ucr;
                pick[0] = &c;
            }
        }
    } else if (n_users == 2) {
        for (const auto& a : combos[0]) {
            for (const auto& b : combos[1]) {
                if (a.fm + b.fm > fm_cap) continue;
                double t = a.t > b.t ? a.t : b.t;
                double ucr = (a.u + b.u) / (ct * t + ce * (a.e + b.e));
                if (ucr > best) {
                    best = ucr;
                    pick[0] = &a;
                    pick[1] = &b;
                }
            }
        }
    } else {
        for (const auto& a : combos[0]) {
            for (const auto& b : combos[1]) {
                if (a.fm + b.fm > fm_cap) continue;
                double t_ab = a.t > b.t ? a.t : b.t;
                for (const auto& c : combos[2]) {
                    if (a.fm + b.fm + c.fm > fm_cap) continue;
                    double t = t_ab > c.t ? t_ab : c.t;
                    double ucr = (a.u + b.u + c.u) / (ct * t + ce * (a.e + b.e + c.e));
                    if (ucr > best) {
                        best = ucr;
                        pick[0] = &a;
                        pick[1] = &b;
                        pick[2] = &c;
                    }
                }
            }
        }
    }

    if (best < 0.0)
        throw infeasible_error("grid_oracle: no feasible grid combination (server budget "
                               "or secrecy filters removed every candidate)");

    OracleResult out;
    out.allocation = Allocation::sized(n_users);
    for (int n = 0; n < n_users; ++n) {
        out.allocation.bandwidth[n] = sc.users[n].bandwidth_max;
        out.allocation.power[n] = pick[n]->p;
        out.allocation.extraction_rate[n] = pick[n]->phi;
        out.allocation.user_freq[n] = pick[n]->f;
        out.allocation.server_freq[n] = pick[n]->fm;
        out.retention.push_back(choose_retention_repaired(pick[n]->phi, sc.users[n], sc.system));
    }
    // the deadline is the achieved delay; set it before the validating evaluate
    out.allocation.delay_bound = detail::true_cost(sc, out.allocation).delay;
    auto bd = evaluate(sc, out.allocation);
    out.ucr = bd.ucr;  // canonical arithmetic, consistent with evaluate everywhere
    return out;
}

}  // namespace edgetune
