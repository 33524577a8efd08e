#pragma once

// Fractional-programming solver for the joint allocation problem. The outer
// loop is a Dinkelbach iteration on the utility-consumption ratio; each inner
// problem alternates between a per-user convex extraction-rate step and a
// resource step that combines a quadratic-transform rewrite of the uplink
// energy, a first-order model of the secrecy rate, and a three-step KKT
// procedure driven by nested monotone root searches.

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "edgetune/cost_model.hpp"
#include "edgetune/root_finding.hpp"
#include "edgetune/scenario.hpp"

namespace edgetune {

struct SolverOptions {
    double dinkelbach_tol = 1e-6;   // relative change of the ratio
    int dinkelbach_max_iter = 50;
    int ao_max_iter = 10;           // alternating passes per ratio update
    int sca_max_iter = 20;          // model refits per resource step
    double sca_tol = 1e-5;          // relative objective change cutoff
    double bisection_tol = 1e-8;    // absolute tolerance on multiplier searches
    int root_max_iter = 200;

    // numerical guards, not physics
    double power_floor = 1e-6;       // W; keeps the ratio rewrite defined
    double server_freq_floor = 1.0;  // cycles/s; degenerate zero-weight fallback
    int polish_iters = 4;            // fixed-point passes after convergence
    bool multi_start = true;         // also start from baseline-shaped points
};

// Which variable blocks the pipeline may move. Restricted allocators freeze
// the rest at reference values.
struct VariableMask {
    bool comm = true;         // bandwidth and power
    bool user_freq = true;
    bool server_freq = true;
    bool extraction = true;   // phi

    static VariableMask all() { return {}; }
    static VariableMask comm_and_extraction() { return {true, false, false, true}; }
    static VariableMask frequencies_only() { return {false, true, true, false}; }
};

struct Multipliers {
    std::vector<double> alpha;  // bandwidth cap
    std::vector<double> beta;   // power cap
    std::vector<double> delta;  // user frequency cap
    std::vector<double> rho;    // per-user delay coupling
    std::vector<double> eta;    // delay coupling of the extraction step
    double zeta = 0.0;          // shared server frequency budget

    void resize(int n) {
        alpha.assign(n, 0.0);
        beta.assign(n, 0.0);
        delta.assign(n, 0.0);
        rho.assign(n, 0.0);
        eta.assign(n, 0.0);
        zeta = 0.0;
    }
};

// Affine secrecy-rate model r(b, p) ~ r0 + db*(b - b0) + dp*(p - p0).
struct ScaModel {
    double r0 = 0.0, db = 0.0, dp = 0.0, b0 = 0.0, p0 = 0.0;
    double at(double b, double p) const { return r0 + db * (b - b0) + dp * (p - p0); }
};

struct TraceRow {
    int iteration = 0;
    double y = 0.0;          // ratio used for this inner solve
    double objective = 0.0;  // U - y * S at the accepted point
    double ucr = 0.0;
    double cs_residual = 0.0;  // worst relative complementary-slackness defect
    int phi_iterations = 0;
    int sca_iterations = 0;
};

struct Trace {
    std::vector<TraceRow> rows;
};

struct SolverState {
    double y = 0.0;               // ratio used by the most recent inner solve
    std::vector<double> x;        // quadratic-transform auxiliaries
    Multipliers mult;
    std::vector<ScaModel> sca;    // last linearization anchors
    Allocation alloc;
    std::vector<EmulatorChoice> retention;
    std::vector<double> phi_lo;   // per-user extraction floor from the retention bounds
    std::vector<double> phi_hi;
    VariableMask mask;
    int outer_iterations = 0;
    bool converged = false;
    bool delay_weight_degenerate = false;  // y * c_t below the search floor
    bool phi_window_projected = false;     // extraction step hit an empty delay window
};

struct SolveResult {
    Allocation allocation;
    std::vector<EmulatorChoice> retention;
    CostBreakdown cost;
    Trace trace;
    SolverState state;
    bool converged = false;
    int outer_iterations = 0;
};

// ---- shared helpers ------------------------------------------------------------

// Linearizes the secrecy rate at (b0, p0) with closed-form partials.
inline ScaModel sca_linearize(double b0, double p0, const Channel& ch, const SystemConfig& sys) {
    double r0 = secrecy_rate(b0, p0, ch, sys);
    if (!(r0 > 0.0))
        throw std::domain_error("sca_linearize: expansion point has zero secrecy rate");
    const double ln2 = 0.6931471805599453;
    double g = ch.gain_to_server, ge = ch.gain_to_eve;
    double s2 = sys.noise_psd_server, se2 = sys.noise_psd_eve;
    ScaModel m;
    m.b0 = b0;
    m.p0 = p0;
    m.r0 = r0;
    m.dp = (b0 * g / (s2 * b0 + g * p0) - b0 * ge / (se2 * b0 + ge * p0)) / ln2;
    double q1 = g * p0 / (s2 * b0), q2 = ge * p0 / (se2 * b0);
    auto per_hz = [&](double q) { return std::log2(1.0 + q) - q / ((1.0 + q) * ln2); };
    m.db = per_hz(q1) - per_hz(q2);
    return m;
}

// Quadratic-transform auxiliary that makes the rewritten uplink energy equal
// the true one at the current point.
inline double fp_aux(double rs, double p, double payload, double power_floor) {
    double pe = std::max(p, power_floor);
    return 1.0 / (2.0 * rs * pe * payload);
}

// Rewritten uplink energy at auxiliary x and modeled rate r.
inline double fp_uplink_energy(double p, double payload, double x, double r) {
    double a = p * payload;
    return a * a * x + 1.0 / (4.0 * r * r * x);
}

namespace detail {

struct TrueCost {
    double utility = 0.0;
    double energy = 0.0;
    double delay = 0.0;             // max over users
    std::vector<double> times;      // per-user totals
    std::vector<double> secrecy;    // per-user true rates
};

// Same arithmetic as evaluate() but without validation; used on interior
// iterates that are feasible by construction.
inline TrueCost true_cost(const Scenario& sc, const Allocation& a) {
    TrueCost tc;
    int n_users = sc.size();
    tc.times.resize(n_users);
    tc.secrecy.resize(n_users);
    for (int n = 0; n < n_users; ++n) {
        const auto& sys = sc.system;
        const auto& u = sc.users[n];
        double rs = secrecy_rate(a.bandwidth[n], a.power[n], sc.channels[n], sys);
        tc.secrecy[n] = rs;
        double cu = cycles_user(a.extraction_rate[n], sys);
        double cs = cycles_server(a.extraction_rate[n], sys);
        double d = payload_bits(a.extraction_rate[n], sys);
        double t = cu / a.user_freq[n] + d / rs + cs / a.server_freq[n];
        double e = u.user_capacitance * cu * a.user_freq[n] * a.user_freq[n] +
                   a.power[n] * d / rs +
                   sys.server_capacitance * cs * a.server_freq[n] * a.server_freq[n];
        tc.times[n] = t;
        tc.energy += e;
        tc.delay = std::max(tc.delay, t);
        tc.utility += utility_user(a.bandwidth[n], a.extraction_rate[n], a.user_freq[n], u,
                                   sys.utility_scale);
    }
    return tc;
}

inline double parametric_objective(const Scenario& sc, const TrueCost& tc, double y) {
    return tc.utility -
           y * (sc.system.cost_weight_time * tc.delay + sc.system.cost_weight_energy * tc.energy);
}

}  // namespace detail

// Parametric objective U - y * (c_e * E + c_t * T) for an explicit delay bound.
inline double dinkelbach_objective(const Scenario& sc, const Allocation& a, double delay_bound,
                                   double y) {
    auto tc = detail::true_cost(sc, a);
    return tc.utility - y * (sc.system.cost_weight_time * delay_bound +
                             sc.system.cost_weight_energy * tc.energy);
}

// Retention choice the solver commits to: the rounded value is lifted back to
// the smallest grid point that still satisfies the loss budget, so both
// retention constraints hold at every returned solution.
inline EmulatorChoice choose_retention_repaired(double phi, const UserConfig& user,
                                                const SystemConfig& sys) {
    EmulatorChoice c = select_retention(phi, user, sys);
    double floor_grid = retention_grid_ceil(c.lower_bound);
    if (c.retention_rate < floor_grid) c.retention_rate = floor_grid;
    return c;
}

// Reference point used by the average-allocation baseline and as a warm start:
// every cap saturated, extraction rate 0.5 clamped into its feasible window.
inline Allocation average_point(const Scenario& sc) {
    int n_users = sc.size();
    Allocation a = Allocation::sized(n_users);
    for (int n = 0; n < n_users; ++n) {
        const auto& u = sc.users[n];
        double chi_floor = retention_grid_ceil(retention_lower_bound(u, sc.system));
        double lo = phi_min(chi_floor, u.efficiency_min);
        double hi = u.phi_max(sc.system.layer_count);
        if (lo > hi * (1.0 + 1e-12))
            throw infeasible_error("average_point: extraction window empty for user " +
                                   std::to_string(n));
        a.bandwidth[n] = u.bandwidth_max;
        a.power[n] = u.power_max;
        a.extraction_rate[n] = std::clamp(0.5, lo, hi);
        a.user_freq[n] = u.freq_max;
        a.server_freq[n] = sc.system.server_freq_max / n_users;
    }
    a.delay_bound = detail::true_cost(sc, a).delay;
    return a;
}

namespace detail {

// Everything the KKT steps need at fixed extraction rates, refreshed once per
// model refit.
struct ResourceContext {
    const Scenario* sc = nullptr;
    const SolverOptions* opt = nullptr;
    VariableMask mask;
    double y = 0.0;
    double ce = 0.0, ct = 0.0;
    std::vector<double> cyc_u, cyc_s, payload, theta_base;  // theta at f = 0
    std::vector<double> x;
    std::vector<ScaModel> sca;
    std::vector<double> frozen_f, frozen_fm, frozen_p, frozen_uplink_time;
    // warm starts and per-user outputs of the delay search
    std::vector<double> rho, f, fm, p, delta, beta, t_model;
    double zeta = 0.0;
};

inline ResourceContext make_context(const Scenario& sc, const SolverState& st,
                                    const SolverOptions& opt) {
    ResourceContext cx;
    int n_users = sc.size();
    cx.sc = &sc;
    cx.opt = &opt;
    cx.mask = st.mask;
    cx.y = st.y;
    cx.ce = sc.system.cost_weight_energy;
    cx.ct = sc.system.cost_weight_time;
    cx.cyc_u.resize(n_users);
    cx.cyc_s.resize(n_users);
    cx.payload.resize(n_users);
    cx.theta_base.resize(n_users);
    cx.frozen_f = st.alloc.user_freq;
    cx.frozen_fm = st.alloc.server_freq;
    cx.frozen_p = st.alloc.power;
    cx.frozen_uplink_time.assign(n_users, 0.0);
    cx.x = st.x;
    cx.sca = st.sca;
    cx.rho.assign(n_users, 0.0);
    cx.f = st.alloc.user_freq;
    cx.fm = st.alloc.server_freq;
    cx.p = st.alloc.power;
    cx.delta.assign(n_users, 0.0);
    cx.beta.assign(n_users, 0.0);
    cx.t_model.assign(n_users, 0.0);
    for (int n = 0; n < n_users; ++n) {
        double phi = st.alloc.extraction_rate[n];
        cx.cyc_u[n] = cycles_user(phi, sc.system);
        cx.cyc_s[n] = cycles_server(phi, sc.system);
        cx.payload[n] = payload_bits(phi, sc.system);
        // bandwidth rides its cap, so theta = theta_base + f / freq_max
        cx.theta_base[n] = 2.0 + phi;
        if (!cx.mask.comm) {
            double rs = secrecy_rate(st.alloc.bandwidth[n], st.alloc.power[n], sc.channels[n],
                                     sc.system);
            cx.frozen_uplink_time[n] = cx.payload[n] / rs;
        }
    }
    return cx;
}

// Stationarity gap of the user frequency: positive once the energy slope
// outweighs utility and delay pressure. Strictly increasing in f.
inline double user_freq_gap(const ResourceContext& cx, int n, double rho, double f) {
    const auto& u = cx.sc->users[n];
    double theta = cx.theta_base[n] + f / u.freq_max;
    return 2.0 * cx.y * cx.ce * u.user_capacitance * cx.cyc_u[n] * f -
           rho * cx.cyc_u[n] / (f * f) -
           cx.sc->system.utility_scale / (u.freq_max * theta);
}

// Step 1a: optimal user frequency for multiplier rho, plus the cap multiplier.
inline std::pair<double, double> user_freq_for_rho(const ResourceContext& cx, int n, double rho) {
    const auto& u = cx.sc->users[n];
    double cap = u.freq_max;
    double gap_cap = user_freq_gap(cx, n, rho, cap);
    if (gap_cap <= 0.0) return {cap, -gap_cap};
    auto g = [&](double f) { return user_freq_gap(cx, n, rho, f); };
    double lo = cap, glo = gap_cap;
    if (!expand_bracket_down(g, lo, glo, cap, gap_cap))
        return {cap, 0.0};  // unreachable: the gap is negative near zero
    RootOptions ro;
    ro.x_rel_tol = 1e-13;
    ro.max_iter = cx.opt->root_max_iter;
    // the previous expansion step still had a positive gap, so it tightens the bracket
    double hi = std::min(cap, lo * 4.0);
    auto res = bracketed_root(g, lo, hi, glo, g(hi), ro);
    return {res.x, 0.0};
}

// Step 1b: optimal server frequency for multiplier rho at budget price zeta.
// With zeta = 0 the per-user cycle count cancels and the root is a cube root.
inline double server_freq_for_rho(const ResourceContext& cx, int n, double rho, double zeta) {
    if (rho <= 0.0) return 0.0;
    double c3 = 2.0 * cx.y * cx.ce * cx.sc->system.server_capacitance;
    double c2 = zeta > 0.0 ? zeta / cx.cyc_s[n] : 0.0;
    if (c3 <= 0.0 && c2 <= 0.0) return std::numeric_limits<double>::infinity();
    return increasing_cubic_root(c3, c2, rho);
}

// Step 2 stationarity gap for transmit power under the affine rate model.
// Strictly increasing in p on the region where the modeled rate is positive.
inline double power_gap(const ResourceContext& cx, int n, double rho, double p) {
    const auto& m = cx.sca[n];
    double r = m.at(m.b0, p);
    double d = cx.payload[n];
    double x = cx.x[n];
    return 2.0 * cx.y * cx.ce * d * d * x * p -
           m.dp * (cx.y * cx.ce / (2.0 * x * r * r * r) + rho * d / (r * r));
}

// Step 2: power for multiplier rho, plus the cap multiplier. Bandwidth always
// rides its cap; see kkt_step2_bandwidth_power.
inline std::pair<double, double> power_for_rho(const ResourceContext& cx, int n, double rho) {
    const auto& u = cx.sc->users[n];
    const auto& m = cx.sca[n];
    double cap = u.power_max;
    if (m.dp <= 0.0) return {cap, 0.0};  // defensive; feasible links have dp > 0
    double lo = cx.opt->power_floor;
    double p_zero = m.p0 - m.r0 / m.dp;  // modeled rate vanishes here
    if (p_zero >= lo) lo = p_zero + (cap - p_zero) * 1e-9;
    double gcap = power_gap(cx, n, rho, cap);
    if (gcap <= 0.0) return {cap, -gcap};
    double glo = power_gap(cx, n, rho, lo);
    if (glo >= 0.0) return {lo, 0.0};  // pinned at the floor
    RootOptions ro;
    ro.x_rel_tol = 1e-13;
    ro.max_iter = cx.opt->root_max_iter;
    auto g = [&](double p) { return power_gap(cx, n, rho, p); };
    auto res = bracketed_root(g, lo, cap, glo, gcap, ro);
    return {res.x, 0.0};
}

// Total completion time of user n as a function of its delay multiplier.
// Strictly decreasing: every resource grows with rho.
inline double time_for_rho(ResourceContext& cx, int n, double rho, double zeta) {
    double f, fm, p, uplink;
    if (cx.mask.user_freq) {
        auto [fv, dv] = user_freq_for_rho(cx, n, rho);
        f = fv;
        cx.delta[n] = dv;
    } else {
        f = cx.frozen_f[n];
        cx.delta[n] = 0.0;
    }
    fm = cx.mask.server_freq ? server_freq_for_rho(cx, n, rho, zeta) : cx.frozen_fm[n];
    if (cx.mask.comm) {
        auto [pv, bv] = power_for_rho(cx, n, rho);
        p = pv;
        cx.beta[n] = bv;
        uplink = cx.payload[n] / cx.sca[n].at(cx.sca[n].b0, p);
    } else {
        p = cx.frozen_p[n];
        cx.beta[n] = 0.0;
        uplink = cx.frozen_uplink_time[n];
    }
    cx.f[n] = f;
    cx.fm[n] = fm;
    cx.p[n] = p;
    // fm = 0 means no delay pressure on this user yet; its modeled time is unbounded
    double server_t = fm > 0.0 ? cx.cyc_s[n] / fm : std::numeric_limits<double>::infinity();
    cx.t_model[n] = cx.cyc_u[n] / f + uplink + server_t;
    return cx.t_model[n];
}

// Inverts time_for_rho: the multiplier at which user n finishes exactly at T.
// Returns 0 when the user meets T with no delay pressure.
inline double rho_for_time(ResourceContext& cx, int n, double T, double zeta) {
    auto g = [&](double r) { return time_for_rho(cx, n, r, zeta) - T; };
    double g0 = g(0.0);
    if (g0 <= 0.0) {  // already fast enough at zero pressure
        cx.rho[n] = 0.0;
        return 0.0;
    }
    // at any balanced deadline the multipliers sum to y*c_t, so a sane warm
    // start never exceeds that; stale escape values from unreachable-T probes
    // get clamped back here
    double target = std::max(cx.y * cx.ct, 1e-12);
    double warm = cx.rho[n] > 0.0 && std::isfinite(cx.rho[n])
                      ? std::min(cx.rho[n], target)
                      : target / cx.sc->size();
    double lo = 0.0, glo = g0;
    double hi = warm, ghi = g(warm);
    for (int k = 0; k < 400 && ghi > 0.0; ++k) {
        if (hi > 1e280) { cx.rho[n] = hi; return hi; }  // T below the asymptotic floor
        lo = hi;
        glo = ghi;
        hi *= 8.0;
        ghi = g(hi);
    }
    RootOptions ro;
    ro.x_rel_tol = 1e-12;
    ro.max_iter = cx.opt->root_max_iter;
    auto res = bracketed_root(g, lo, hi, glo, ghi, ro);
    cx.rho[n] = res.x;
    // leave the per-user outputs evaluated at the returned multiplier
    time_for_rho(cx, n, cx.rho[n], zeta);
    return cx.rho[n];
}

// Multiplier balance at deadline T: sum of per-user delay multipliers minus
// the Dinkelbach-weighted time price. Non-increasing in T.
inline double delay_balance(ResourceContext& cx, double T, double zeta) {
    double s = 0.0;
    for (int n = 0; n < cx.sc->size(); ++n) s += rho_for_time(cx, n, T, zeta);
    return s - cx.y * cx.ct;
}

// Solves the deadline so the delay multipliers absorb exactly the time price.
// Returns the deadline; per-user variables and multipliers stay in cx.
inline double deadline_for_zeta(ResourceContext& cx, double T_init, double zeta) {
    double target = cx.y * cx.ct;
    double t_lo = T_init, t_hi = T_init;
    double bal_lo = delay_balance(cx, t_lo, zeta);
    if (bal_lo == 0.0) return t_lo;
    double bal_hi = bal_lo;
    if (bal_lo < 0.0) {  // deadline too loose: tighten until pressure appears
        for (int k = 0; k < 60 && bal_lo < 0.0; ++k) {
            t_hi = t_lo;
            bal_hi = bal_lo;
            t_lo *= 0.5;
            bal_lo = delay_balance(cx, t_lo, zeta);
        }
        if (bal_lo < 0.0) return t_lo;
    } else {
        for (int k = 0; k < 60 && bal_hi > 0.0; ++k) {
            t_lo = t_hi;
            bal_lo = bal_hi;
            t_hi *= 2.0;
            bal_hi = delay_balance(cx, t_hi, zeta);
        }
        if (bal_hi > 0.0) {
            // pressure persists beyond any sane deadline (an extreme budget
            // price probe): report the loosest deadline probed, sign intact
            delay_balance(cx, t_hi, zeta);
            return t_hi;
        }
    }
    RootOptions ro;
    // the balance residual is what the certificate's multiplier-sum identity
    // sees, so the width tolerance must never preempt the residual one
    ro.x_rel_tol = 1e-15;
    ro.f_tol = 1e-9 * std::max(target, 1e-300);
    ro.max_iter = cx.opt->root_max_iter;
    auto g = [&](double T) { return delay_balance(cx, T, zeta); };
    auto res = bracketed_root(g, t_lo, t_hi, bal_lo, bal_hi, ro);
    // refresh per-user outputs at the returned deadline
    delay_balance(cx, res.x, zeta);
    return res.x;
}

}  // namespace detail

// ---- public solver operations ---------------------------------------------------

// Refreshes the quadratic-transform auxiliaries at the current point.
inline void update_fp_aux(const Scenario& sc, SolverState& st, const SolverOptions& opt) {
    int n_users = sc.size();
    st.x.resize(n_users);
    for (int n = 0; n < n_users; ++n) {
        double rs = secrecy_rate(st.alloc.bandwidth[n], st.alloc.power[n], sc.channels[n],
                                 sc.system);
        if (!(rs > 0.0)) throw transmission_failure(n);
        st.x[n] = fp_aux(rs, st.alloc.power[n], payload_bits(st.alloc.extraction_rate[n],
                                                             sc.system),
                         opt.power_floor);
    }
}

// Step 1 for one user frequency at a given delay multiplier.
inline std::pair<double, double> kkt_step1_user_freq(double rho, int n, const Scenario& sc,
                                                     const SolverState& st,
                                                     const SolverOptions& opt) {
    auto cx = detail::make_context(sc, st, opt);
    return detail::user_freq_for_rho(cx, n, rho);
}

// Step 1 for the shared server budget at fixed delay multipliers: price zero
// when the unconstrained frequencies fit, otherwise the budget price that
// makes them sum to the cap.
inline std::pair<std::vector<double>, double> kkt_step1_server_freq(
    const std::vector<double>& rho, const Scenario& sc, const SolverState& st,
    const SolverOptions& opt) {
    auto cx = detail::make_context(sc, st, opt);
    int n_users = sc.size();
    std::vector<double> fm(n_users);
    bool all_zero = true;
    for (double r : rho)
        if (r > 0.0) all_zero = false;
    if (all_zero) {
        fm.assign(n_users, opt.server_freq_floor);
        return {fm, 0.0};
    }
    auto fill = [&](double zeta) {
        double s = 0.0;
        for (int n = 0; n < n_users; ++n) {
            fm[n] = detail::server_freq_for_rho(cx, n, rho[n], zeta);
            s += fm[n];
        }
        return s;
    };
    double cap = sc.system.server_freq_max;
    double sum0 = fill(0.0);
    if (sum0 <= cap * (1.0 + 1e-12)) return {fm, 0.0};
    // bracket the budget price; sqrt(rho*cyc/zeta) ~ cap/N gives the scale
    double z_lo = 0.0, g_lo = sum0 - cap;
    double z_hi = 0.0;
    for (int n = 0; n < n_users; ++n)
        if (rho[n] > 0.0)
            z_hi = std::max(z_hi, rho[n] * cx.cyc_s[n] * n_users * n_users / (cap * cap));
    z_hi = std::max(z_hi, 1e-300);
    double g_hi = fill(z_hi) - cap;
    while (g_hi > 0.0 && z_hi < 1e290) {
        z_lo = z_hi;
        g_lo = g_hi;
        z_hi *= 4.0;
        g_hi = fill(z_hi) - cap;
    }
    RootOptions ro;
    ro.x_rel_tol = 1e-12;
    ro.f_tol = 1e-9 * cap;
    ro.max_iter = opt.root_max_iter;
    auto g = [&](double z) { return fill(z) - cap; };
    auto res = bracketed_root(g, z_lo, z_hi, g_lo, g_hi, ro);
    fill(res.x);
    return {fm, res.x};
}

// Step 2: bandwidth rides its cap (its utility and rate slopes are both
// positive, so the cap multiplier absorbs the whole gradient), and power
// solves the rewritten stationarity equation.
inline std::tuple<double, double, double, double> kkt_step2_bandwidth_power(
    double rho, int n, const Scenario& sc, const SolverState& st, const SolverOptions& opt) {
    auto cx = detail::make_context(sc, st, opt);
    auto [p, beta] = detail::power_for_rho(cx, n, rho);
    const auto& u = sc.users[n];
    const auto& m = cx.sca[n];
    double r = m.at(m.b0, p);
    double f = st.alloc.user_freq[n];
    double theta = cx.theta_base[n] + f / u.freq_max;
    double alpha = sc.system.utility_scale / (u.bandwidth_max * theta) +
                   m.db * (st.y * cx.ce / (2.0 * cx.x[n] * r * r * r) +
                           rho * cx.payload[n] / (r * r));
    return {u.bandwidth_max, p, alpha, beta};
}

namespace detail {

// Step 3 with the server budget folded in: solve the deadline at price zero,
// then raise the price until the server frequencies fit the cap.
inline void run_delay_step(const Scenario& sc, SolverState& st, const SolverOptions& opt,
                           ResourceContext& cx) {
    double target = st.y * sc.system.cost_weight_time;
    int n_users = sc.size();
    if (target <= 1e-280) {
        // no delay pressure: frequencies fall back to floors, power to its
        // energy-only stationary point
        st.delay_weight_degenerate = true;
        for (int n = 0; n < n_users; ++n) {
            cx.rho[n] = 0.0;
            time_for_rho(cx, n, 0.0, 0.0);  // writes f and p at zero pressure
            if (cx.mask.server_freq) cx.fm[n] = opt.server_freq_floor;
        }
        cx.zeta = 0.0;
        return;
    }
    double T0 = st.alloc.delay_bound > 0 ? st.alloc.delay_bound : 1.0;
    double T = deadline_for_zeta(cx, T0, 0.0);
    if (cx.mask.server_freq) {
        double cap = sc.system.server_freq_max;
        double sum = 0.0;
        for (double v : cx.fm) sum += v;
        if (sum > cap * (1.0 + 1e-12)) {
            // price the budget: the re-solved sum falls as the price rises
            double z = 0.0;
            for (int n = 0; n < n_users; ++n)
                z = std::max(z, cx.rho[n] * cx.cyc_s[n] * n_users * n_users / (cap * cap));
            z = std::max(z * 1e-3, 1e-300);
            auto fitted_sum = [&](double zeta) {
                T = deadline_for_zeta(cx, T, zeta);
                double s = 0.0;
                for (double v : cx.fm) s += v;
                return s;
            };
            double lo = 0.0, g_lo = sum - cap;
            double hi = z, g_hi = fitted_sum(hi) - cap;
            int guard = 0;
            while (g_hi > 0.0 && hi < 1e290 && guard++ < 400) {
                lo = hi;
                g_lo = g_hi;
                hi *= 8.0;
                g_hi = fitted_sum(hi) - cap;
            }
            RootOptions ro;
            ro.x_rel_tol = 1e-12;
            ro.f_tol = 1e-9 * cap;
            ro.max_iter = opt.root_max_iter;
            auto g = [&](double zeta) { return fitted_sum(zeta) - cap; };
            auto res = bracketed_root(g, lo, hi, g_lo, g_hi, ro);
            cx.zeta = res.x;
            T = deadline_for_zeta(cx, T, cx.zeta);
        } else {
            cx.zeta = 0.0;
        }
    } else {
        cx.zeta = 0.0;
    }
    st.alloc.delay_bound = T;
}

// Writes the context outputs back into the solver state and recomputes the
// multipliers that close the KKT system at the new point.
inline void commit_resources(const Scenario& sc, SolverState& st, ResourceContext& cx) {
    int n_users = sc.size();
    for (int n = 0; n < n_users; ++n) {
        const auto& u = sc.users[n];
        if (cx.mask.comm) {
            st.alloc.bandwidth[n] = u.bandwidth_max;
            st.alloc.power[n] = cx.p[n];
        }
        if (cx.mask.user_freq) st.alloc.user_freq[n] = cx.f[n];
        if (cx.mask.server_freq) st.alloc.server_freq[n] = cx.fm[n];
        st.mult.rho[n] = cx.rho[n];
        st.mult.delta[n] = cx.mask.user_freq ? cx.delta[n] : 0.0;
        st.mult.beta[n] = cx.mask.comm ? cx.beta[n] : 0.0;
        if (cx.mask.comm) {
            const auto& m = cx.sca[n];
            double r = m.at(m.b0, st.alloc.power[n]);
            double theta = cx.theta_base[n] + st.alloc.user_freq[n] / u.freq_max;
            st.mult.alpha[n] = sc.system.utility_scale / (u.bandwidth_max * theta) +
                               m.db * (st.y * cx.ce / (2.0 * cx.x[n] * r * r * r) +
                                       cx.rho[n] * cx.payload[n] / (r * r));
        } else {
            st.mult.alpha[n] = 0.0;
        }
    }
    st.mult.zeta = cx.mask.server_freq ? cx.zeta : 0.0;
    // the committed deadline is the true completion time of the slowest user
    auto tc = true_cost(sc, st.alloc);
    st.alloc.delay_bound = tc.delay;
}

}  // namespace detail

// Step 3: deadline and per-user delay multipliers such that each pressured
// user finishes exactly at the deadline and the multipliers absorb the time
// price. Leaves all step-1/2 variables in the state.
inline std::pair<double, std::vector<double>> kkt_step3_delay(const Scenario& sc, SolverState& st,
                                                              const SolverOptions& opt) {
    auto cx = detail::make_context(sc, st, opt);
    detail::run_delay_step(sc, st, opt, cx);
    detail::commit_resources(sc, st, cx);
    return {st.alloc.delay_bound, st.mult.rho};
}

// Resource subproblem: refit the rate model and the ratio rewrite at the
// current point, re-solve the KKT system, and keep the step only if the true
// parametric objective does not fall.
inline int solve_resource_subproblem(const Scenario& sc, SolverState& st,
                                     const SolverOptions& opt, int forced_iters = 0) {
    int n_users = sc.size();
    auto best = st.alloc;
    auto best_mult = st.mult;
    auto best_x = st.x;
    auto best_sca = st.sca;
    auto tc = detail::true_cost(sc, st.alloc);
    double h_best = detail::parametric_objective(sc, tc, st.y);
    int iters = 0;
    int max_iters = std::max(opt.sca_max_iter, forced_iters);
    for (int it = 0; it < max_iters; ++it) {
        update_fp_aux(sc, st, opt);
        for (int n = 0; n < n_users; ++n)
            st.sca[n] = sca_linearize(st.alloc.bandwidth[n],
                                      std::max(st.alloc.power[n], opt.power_floor),
                                      sc.channels[n], sc.system);
        auto cx = detail::make_context(sc, st, opt);
        detail::run_delay_step(sc, st, opt, cx);
        detail::commit_resources(sc, st, cx);
        ++iters;
        tc = detail::true_cost(sc, st.alloc);
        double h = detail::parametric_objective(sc, tc, st.y);
        double scale = std::max(1.0, std::fabs(h_best));
        // forced iterations commit even on noise-level objective dips: they
        // re-anchor the fitted models at the incumbent so the multiplier
        // state matches the final point. A non-finite refit always restores.
        if (!std::isfinite(h) || (it >= forced_iters && h < h_best - 1e-12 * scale)) {
            // the refit overshot (or went non-finite): restore the last
            // accepted point
            st.alloc = best;
            st.mult = best_mult;
            st.x = best_x;
            st.sca = best_sca;
            break;
        }
        double gain = h - h_best;
        best = st.alloc;
        best_mult = st.mult;
        best_x = st.x;
        best_sca = st.sca;
        h_best = h;
        if (it >= forced_iters && gain <= opt.sca_tol * scale) break;
    }
    return iters;
}

// Extraction-rate subproblem: per user, minimize the exact parametric cost of
// phi over the window where the user still meets the current deadline. The
// objective is convex, so a derivative bisection lands on the clipped
// stationary point.
inline int solve_phi_subproblem(const Scenario& sc, SolverState& st, const SolverOptions& opt) {
    const auto& sys = sc.system;
    int total_iters = 0;
    double T = st.alloc.delay_bound;
    for (int n = 0; n < sc.size(); ++n) {
        const auto& u = sc.users[n];
        double f = st.alloc.user_freq[n];
        double fm = st.alloc.server_freq[n];
        double b = st.alloc.bandwidth[n];
        double p = st.alloc.power[n];
        double rs = secrecy_rate(b, p, sc.channels[n], sys);
        if (!(rs > 0.0)) throw transmission_failure(n);
        double lw = sys.layer_count * sys.bits_per_layer;
        double theta_rest = 1.0 + f / u.freq_max + b / u.bandwidth_max;
        double yce = st.y * sys.cost_weight_energy;
        double kn = u.user_capacitance, km = sys.server_capacitance;

        auto time_of = [&](double phi) {
            return cycles_user(phi, sys) / f + phi * lw / rs + cycles_server(phi, sys) / fm;
        };
        auto dtime = [&](double phi) {
            return sys.C1 * sys.C2 * std::pow(phi, sys.C2 - 1.0) / f + lw / rs -
                   sys.C3 * sys.C4 * std::pow(phi, -sys.C4 - 1.0) / fm;
        };
        auto dcost = [&](double phi) {
            // derivative of -utility + y*c_e*energy in phi
            return -sys.utility_scale / (theta_rest + phi) +
                   yce * (kn * sys.C1 * sys.C2 * std::pow(phi, sys.C2 - 1.0) * f * f +
                          p * lw / rs -
                          km * sys.C3 * sys.C4 * std::pow(phi, -sys.C4 - 1.0) * fm * fm);
        };
        auto cost_of = [&](double phi) {
            return -utility_user(b, phi, f, u, sys.utility_scale) +
                   yce * (kn * cycles_user(phi, sys) * f * f + p * phi * lw / rs +
                          km * cycles_server(phi, sys) * fm * fm);
        };

        double lo = st.phi_lo[n], hi = st.phi_hi[n];
        double phi_old = st.alloc.extraction_rate[n];
        RootOptions ro;
        ro.x_rel_tol = 1e-13;
        ro.max_iter = opt.root_max_iter;

        // completion-time window: the time curve is convex with a unique
        // minimum, so each side is a monotone root problem
        double d_lo = dtime(lo), d_hi = dtime(hi);
        double phi_t = lo;  // argmin of the time curve, clamped to the box
        if (d_lo >= 0.0) phi_t = lo;
        else if (d_hi <= 0.0) phi_t = hi;
        else {
            auto res = bracketed_root(dtime, lo, hi, d_lo, d_hi, ro);
            phi_t = res.x;
            total_iters += res.iterations;
        }
        if (time_of(phi_t) > T) {
            // no feasible extraction rate meets the deadline: park at the
            // fastest point and let the next resource step stretch it
            st.alloc.extraction_rate[n] = phi_t;
            st.mult.eta[n] = 0.0;
            st.phi_window_projected = true;
            continue;
        }
        double w_lo = lo, w_hi = hi;
        if (time_of(lo) > T) {
            auto res = bracketed_root([&](double x) { return time_of(x) - T; }, lo, phi_t, ro);
            w_lo = res.x;
            total_iters += res.iterations;
        }
        if (time_of(hi) > T) {
            auto res = bracketed_root([&](double x) { return time_of(x) - T; }, phi_t, hi, ro);
            w_hi = res.x;
            total_iters += res.iterations;
        }

        double phi_new;
        double g_lo = dcost(w_lo), g_hi = dcost(w_hi);
        if (g_lo >= 0.0) phi_new = w_lo;
        else if (g_hi <= 0.0) phi_new = w_hi;
        else {
            auto res = bracketed_root(dcost, w_lo, w_hi, g_lo, g_hi, ro);
            phi_new = res.x;
            total_iters += res.iterations;
        }
        // delay-coupling multiplier of this step: active only when the upper
        // window edge clipped a still-falling objective
        st.mult.eta[n] = 0.0;
        if (phi_new >= w_hi * (1.0 - 1e-12) && w_hi < hi && dcost(w_hi) < 0.0)
            st.mult.eta[n] = -dcost(w_hi) / std::max(dtime(w_hi), 1e-300);
        // keep the old rate on a numerically void improvement
        if (cost_of(phi_new) <= cost_of(phi_old) || time_of(phi_old) > T)
            st.alloc.extraction_rate[n] = phi_new;
    }
    return total_iters;
}

namespace detail {

// Worst relative complementary-slackness defect at the current state, using
// true completion times.
inline double cs_defect(const Scenario& sc, const SolverState& st) {
    auto tc = true_cost(sc, st.alloc);
    double worst = 0.0;
    double T = st.alloc.delay_bound;
    double fm_sum = 0.0;
    for (int n = 0; n < sc.size(); ++n) {
        const auto& u = sc.users[n];
        fm_sum += st.alloc.server_freq[n];
        auto rel = [&](double mult, double slack, double scale) {
            double denom = std::fabs(mult) * scale;
            return denom > 0.0 ? std::fabs(mult * slack) / denom : 0.0;
        };
        worst = std::max(worst, rel(st.mult.alpha[n], u.bandwidth_max - st.alloc.bandwidth[n],
                                    u.bandwidth_max));
        worst = std::max(worst, rel(st.mult.beta[n], u.power_max - st.alloc.power[n],
                                    u.power_max));
        worst = std::max(worst, rel(st.mult.delta[n], u.freq_max - st.alloc.user_freq[n],
                                    u.freq_max));
        worst = std::max(worst, rel(st.mult.rho[n], T - tc.times[n], std::max(T, 1e-300)));
    }
    worst = std::max(worst, st.mult.zeta > 0.0
                                ? std::fabs(sc.system.server_freq_max - fm_sum) /
                                      sc.system.server_freq_max
                                : 0.0);
    return worst;
}

inline void init_retention_bounds(const Scenario& sc, SolverState& st) {
    int n_users = sc.size();
    st.phi_lo.resize(n_users);
    st.phi_hi.resize(n_users);
    st.retention.resize(n_users);
    for (int n = 0; n < n_users; ++n) {
        const auto& u = sc.users[n];
        double chi_lower = retention_lower_bound(u, sc.system);
        double chi_floor = retention_grid_ceil(chi_lower);  // throws if empty
        double lo = phi_min(chi_floor, u.efficiency_min);
        double hi = u.phi_max(sc.system.layer_count);
        if (lo > hi * (1.0 + 1e-12))
            throw infeasible_error("solver: extraction window empty for user " +
                                   std::to_string(n));
        st.phi_lo[n] = std::min(lo, hi);
        st.phi_hi[n] = hi;
    }
}

inline void refresh_retention(const Scenario& sc, SolverState& st) {
    for (int n = 0; n < sc.size(); ++n)
        st.retention[n] =
            choose_retention_repaired(st.alloc.extraction_rate[n], sc.users[n], sc.system);
}

}  // namespace detail

// Default starting point. Free blocks start interior (caps halved, mid-window
// extraction, server budget split evenly); frozen blocks carry the reference
// values the restricted allocators pin them to.
inline Allocation default_start(const Scenario& sc, const SolverOptions& /*opt*/,
                                const VariableMask& mask = VariableMask::all()) {
    int n_users = sc.size();
    Allocation a = Allocation::sized(n_users);
    for (int n = 0; n < n_users; ++n) {
        const auto& u = sc.users[n];
        double chi_floor = retention_grid_ceil(retention_lower_bound(u, sc.system));
        double lo = phi_min(chi_floor, u.efficiency_min);
        double hi = u.phi_max(sc.system.layer_count);
        a.bandwidth[n] = u.bandwidth_max;
        a.power[n] = mask.comm ? 0.5 * u.power_max : u.power_max;
        a.extraction_rate[n] = mask.extraction ? std::min(0.5 * (lo + hi), hi)
                                               : std::clamp(0.5, std::min(lo, hi), hi);
        a.user_freq[n] = mask.user_freq ? 0.5 * u.freq_max : u.freq_max;
        a.server_freq[n] = sc.system.server_freq_max / n_users;
    }
    a.delay_bound = detail::true_cost(sc, a).delay;
    return a;
}

// One Dinkelbach run from an explicit starting point.
inline SolveResult dinkelbach_solve_from(const Scenario& sc, const SolverOptions& opt,
                                         const VariableMask& mask, Allocation start) {
    sc.validate();
    auto feas = secrecy_feasibility(sc);
    for (int n = 0; n < sc.size(); ++n)
        if (!feas[n])
            throw infeasible_error("solver: user " + std::to_string(n) +
                                   " cannot achieve a positive secrecy rate");

    SolveResult out;
    SolverState& st = out.state;
    st.mask = mask;
    st.mult.resize(sc.size());
    st.sca.resize(sc.size());
    st.x.assign(sc.size(), 1.0);
    detail::init_retention_bounds(sc, st);
    st.alloc = std::move(start);
    // clamp the start into the extraction window and refresh its deadline
    for (int n = 0; n < sc.size(); ++n)
        st.alloc.extraction_rate[n] =
            std::clamp(st.alloc.extraction_rate[n], st.phi_lo[n], st.phi_hi[n]);
    st.alloc.delay_bound = detail::true_cost(sc, st.alloc).delay;

    auto bd = evaluate(sc, st.alloc);
    double y = bd.ucr;
    bool converged = false;
    int outer = 0;
    for (int k = 0; k < opt.dinkelbach_max_iter; ++k) {
        st.y = y;
        ++outer;
        int phi_iters = 0, sca_iters = 0;
        double h_prev = -std::numeric_limits<double>::infinity();
        for (int ao = 0; ao < opt.ao_max_iter; ++ao) {
            if (mask.extraction) phi_iters += solve_phi_subproblem(sc, st, opt);
            sca_iters += solve_resource_subproblem(sc, st, opt);
            auto tc = detail::true_cost(sc, st.alloc);
            double h = detail::parametric_objective(sc, tc, st.y);
            if (h - h_prev <= opt.sca_tol * std::max(1.0, std::fabs(h))) { h_prev = h; break; }
            h_prev = h;
        }
        detail::refresh_retention(sc, st);
        bd = evaluate(sc, st.alloc);
        double y_next = bd.ucr;
        out.trace.rows.push_back({k, y, h_prev, bd.ucr, detail::cs_defect(sc, st), phi_iters,
                                  sca_iters});
        if (std::fabs(y_next - y) <= opt.dinkelbach_tol * std::max(std::fabs(y), 1e-12)) {
            converged = true;
            break;
        }
        y = y_next;
    }
    // fixed-anchor polish: forced refits contract the fitted models onto the
    // returned point until the certificate's complementary-slackness products
    // are clean. Each pass then absorbs the exact ratio of the improved point
    // into y, so the returned multipliers are fitted at the returned ratio
    // and y matches the returned cost within the outer tolerance.
    if (opt.polish_iters > 0) {
        const int tail_cap = 4 * opt.polish_iters;
        for (int tail = 0; tail < tail_cap; ++tail) {
            for (int round = 0; round < 8 * opt.polish_iters; ++round) {
                solve_resource_subproblem(sc, st, opt, opt.polish_iters);
                if (detail::cs_defect(sc, st) <= 1e-9) break;
            }
            bd = evaluate(sc, st.alloc);
            bool settled = std::fabs(bd.ucr - st.y) <=
                           opt.dinkelbach_tol * std::max(std::fabs(st.y), 1e-12);
            if (settled && detail::cs_defect(sc, st) <= 1e-9) break;
            // the last pass keeps the ratio its multipliers were fitted at
            if (tail + 1 < tail_cap) st.y = bd.ucr;
        }
    }
    detail::refresh_retention(sc, st);
    st.outer_iterations = outer;
    st.converged = converged;
    out.allocation = st.alloc;
    out.retention = st.retention;
    out.cost = bd;
    out.converged = converged;
    out.outer_iterations = outer;
    return out;
}

// Runs one Dinkelbach solve from each start and re-solves from the best
// incumbent. Scout runs skip the certificate polish; the winner re-run keeps
// its ratio (the restart is monotone) and leaves a self-consistent multiplier
// state under the caller's full options.
inline SolveResult dinkelbach_solve_with_starts(const Scenario& sc, const SolverOptions& opt,
                                                const std::vector<Allocation>& starts,
                                                const VariableMask& mask = VariableMask::all()) {
    if (starts.empty())
        throw std::invalid_argument("dinkelbach_solve_with_starts: empty start list");
    if (starts.size() == 1) return dinkelbach_solve_from(sc, opt, mask, starts.front());
    SolverOptions scout = opt;
    scout.polish_iters = 0;
    double best_ucr = -std::numeric_limits<double>::infinity();
    Allocation best_alloc;
    for (const auto& start : starts) {
        auto r = dinkelbach_solve_from(sc, scout, mask, start);
        if (r.cost.ucr > best_ucr) {
            best_ucr = r.cost.ucr;
            best_alloc = std::move(r.allocation);
        }
    }
    return dinkelbach_solve_from(sc, opt, mask, std::move(best_alloc));
}

// Restricted allocator used by the baselines: optimizes only the unmasked
// blocks, starting from both the interior default and the all-caps point.
// Both starts carry identical frozen coordinates, so they describe the same
// restricted problem.
inline SolveResult restricted_solve(const Scenario& sc, const SolverOptions& opt,
                                    const VariableMask& mask) {
    std::vector<Allocation> starts;
    starts.push_back(default_start(sc, opt, mask));
    if (opt.multi_start) starts.push_back(average_point(sc));
    return dinkelbach_solve_with_starts(sc, opt, starts, mask);
}

// Joint allocator. With multi_start it also launches from the two restricted
// solutions, so the result dominates both of them, and each of those dominates
// the all-caps reference point through its own start list. Extraction-extreme
// starts round out the pool: the extraction step only moves each rate inside
// the incumbent deadline window, so mid-window seeds can be trapped away from
// basins where users extract very unevenly. One start puts every user on the
// window floor; one per user stars that user at the window ceiling with the
// rest floored, which reaches basins where a single slow, cheap, maximally
// extracting user anchors the deadline while the others run fast.
inline SolveResult dinkelbach_solve(const Scenario& sc, const SolverOptions& opt = {}) {
    std::vector<Allocation> starts;
    starts.push_back(default_start(sc, opt));
    if (opt.multi_start) {
        starts.push_back(restricted_solve(sc, opt, VariableMask::comm_and_extraction()).allocation);
        starts.push_back(restricted_solve(sc, opt, VariableMask::frequencies_only()).allocation);
        // zero rates land on each user's window floor through the start clamp
        Allocation floor_phi = starts.front();
        std::fill(floor_phi.extraction_rate.begin(), floor_phi.extraction_rate.end(), 0.0);
        for (int star = 0; star < sc.size(); ++star) {
            Allocation s = floor_phi;
            s.extraction_rate[star] = sc.users[star].phi_max(sc.system.layer_count);
            starts.push_back(std::move(s));
        }
        starts.push_back(std::move(floor_phi));
    }
    return dinkelbach_solve_with_starts(sc, opt, starts);
}

// ---- solution certificate --------------------------------------------------------

struct KktReport {
    double min_multiplier = 0.0;      // most negative multiplier seen
    double max_cs_rel = 0.0;          // worst |mult * slack| / (|mult| * scale)
    double sum_rho_rel_err = 0.0;     // |sum(rho) - y*c_t| / (y*c_t)
    double max_stationarity_rel = 0.0;  // informational: scaled gradient gaps
    std::vector<std::string> violations;

    bool ok(double cs_tol = 1e-6, double rho_tol = 1e-8, double mult_tol = -1e-12) const {
        return violations.empty() && min_multiplier >= mult_tol && max_cs_rel <= cs_tol &&
               sum_rho_rel_err <= rho_tol;
    }
};

// Checks the returned solution against the first-order conditions and every
// hard constraint, with the rate model re-anchored at the point itself.
inline KktReport kkt_certificate(const Scenario& sc, const SolveResult& res,
                                 const SolverOptions& opt = {}) {
    KktReport rep;
    const auto& st = res.state;
    const auto& a = res.allocation;
    try {
        validate_allocation(sc, a);
    } catch (const std::exception& e) {
        rep.violations.push_back(e.what());
    }
    auto tc = detail::true_cost(sc, a);
    double T = a.delay_bound;
    double fm_sum = 0.0;
    double rho_sum = 0.0;
    double min_mult = 0.0;
    double worst_cs = 0.0;
    for (int n = 0; n < sc.size(); ++n) {
        const auto& u = sc.users[n];
        if (!(tc.secrecy[n] > 0.0))
            rep.violations.push_back("user " + std::to_string(n) + ": zero secrecy rate");
        if (tc.times[n] > T * (1.0 + 1e-9))
            rep.violations.push_back("user " + std::to_string(n) + ": misses the deadline");
        const auto& emu = res.retention[n];
        bool on_grid = false;
        for (double g : retention_grid)
            if (emu.retention_rate == g) on_grid = true;
        if (!on_grid)
            rep.violations.push_back("user " + std::to_string(n) + ": retention off the grid");
        if (efficiency_G(a.extraction_rate[n], emu.retention_rate) <
            u.efficiency_min * (1.0 - 1e-9))
            rep.violations.push_back("user " + std::to_string(n) + ": efficiency floor violated");
        if (mse_loss_surrogate(emu.retention_rate, sc.system.loss_l0, sc.system.loss_q) >
            u.loss_max * (1.0 + 1e-9))
            rep.violations.push_back("user " + std::to_string(n) + ": loss budget violated");

        for (double m : {st.mult.alpha[n], st.mult.beta[n], st.mult.delta[n], st.mult.rho[n],
                         st.mult.eta[n]})
            min_mult = std::min(min_mult, m);
        auto cs = [&](double mult, double slack, double scale) {
            double denom = std::fabs(mult) * scale;
            if (denom <= 0.0) return 0.0;
            return std::fabs(mult * slack) / denom;
        };
        worst_cs = std::max(worst_cs, cs(st.mult.alpha[n], u.bandwidth_max - a.bandwidth[n],
                                         u.bandwidth_max));
        worst_cs = std::max(worst_cs, cs(st.mult.beta[n], u.power_max - a.power[n], u.power_max));
        worst_cs = std::max(worst_cs, cs(st.mult.delta[n], u.freq_max - a.user_freq[n],
                                         u.freq_max));
        worst_cs = std::max(worst_cs, cs(st.mult.rho[n], T - tc.times[n], std::max(T, 1e-300)));
        // eta prices the extraction step's deadline window, which the later
        // resource passes move; only its sign survives to the final point,
        // and rho carries the delay coupling that is gated here
        fm_sum += a.server_freq[n];
        rho_sum += st.mult.rho[n];

        // scaled stationarity gaps, recomputed from scratch at the point
        if (st.mask.user_freq) {
            double f = a.user_freq[n];
            double theta = 2.0 + a.extraction_rate[n] + f / u.freq_max;
            double cyc = cycles_user(a.extraction_rate[n], sc.system);
            double grad = 2.0 * st.y * sc.system.cost_weight_energy * u.user_capacitance * cyc * f +
                          st.mult.delta[n] - st.mult.rho[n] * cyc / (f * f) -
                          sc.system.utility_scale / (u.freq_max * theta);
            double scale = 2.0 * st.y * sc.system.cost_weight_energy * u.user_capacitance * cyc * f +
                           st.mult.rho[n] * cyc / (f * f) +
                           sc.system.utility_scale / (u.freq_max * theta) + st.mult.delta[n];
            rep.max_stationarity_rel =
                std::max(rep.max_stationarity_rel, std::fabs(grad) / std::max(scale, 1e-300));
        }
        if (st.mask.server_freq && st.mult.rho[n] > 0.0) {
            double fm = a.server_freq[n];
            double cyc = cycles_server(a.extraction_rate[n], sc.system);
            double grad = 2.0 * st.y * sc.system.cost_weight_energy *
                              sc.system.server_capacitance * fm +
                          st.mult.zeta / cyc - st.mult.rho[n] / (fm * fm);
            double scale = 2.0 * st.y * sc.system.cost_weight_energy *
                               sc.system.server_capacitance * fm +
                           st.mult.zeta / cyc + st.mult.rho[n] / (fm * fm);
            rep.max_stationarity_rel =
                std::max(rep.max_stationarity_rel, std::fabs(grad) / std::max(scale, 1e-300));
        }
        if (st.mask.comm) {
            auto m = sca_linearize(a.bandwidth[n], std::max(a.power[n], opt.power_floor),
                                   sc.channels[n], sc.system);
            double x = fp_aux(tc.secrecy[n], a.power[n],
                              payload_bits(a.extraction_rate[n], sc.system), opt.power_floor);
            double d = payload_bits(a.extraction_rate[n], sc.system);
            double r = m.r0;
            double term_e = 2.0 * st.y * sc.system.cost_weight_energy * d * d * x * a.power[n];
            double term_r = m.dp * (st.y * sc.system.cost_weight_energy / (2.0 * x * r * r * r) +
                                    st.mult.rho[n] * d / (r * r));
            double grad = term_e - term_r + st.mult.beta[n];
            double scale = term_e + term_r + st.mult.beta[n];
            rep.max_stationarity_rel =
                std::max(rep.max_stationarity_rel, std::fabs(grad) / std::max(scale, 1e-300));
        }
    }
    min_mult = std::min(min_mult, st.mult.zeta);
    worst_cs = std::max(worst_cs, [&] {
        double denom = std::fabs(st.mult.zeta) * sc.system.server_freq_max;
        if (denom <= 0.0) return 0.0;
        return std::fabs(st.mult.zeta * (sc.system.server_freq_max - fm_sum)) / denom;
    }());
    rep.min_multiplier = min_mult;
    rep.max_cs_rel = worst_cs;
    double target = st.y * sc.system.cost_weight_time;
    rep.sum_rho_rel_err =
        target > 0.0 ? std::fabs(rho_sum - target) / target : std::fabs(rho_sum);
    if (st.delay_weight_degenerate) rep.sum_rho_rel_err = 0.0;
    return rep;
}

}  // namespace edgetune
