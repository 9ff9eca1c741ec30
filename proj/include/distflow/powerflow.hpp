#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "distflow/errors.hpp"
#include "distflow/linalg.hpp"
#include "distflow/loads.hpp"
#include "distflow/network.hpp"

namespace distflow {

enum class SolverKind { ac_bfs, ldf_cp, iter_zip, zp_closed };

inline std::string_view to_string(SolverKind s) {
    switch (s) {
        case SolverKind::ac_bfs: return "AC_BFS";
        case SolverKind::ldf_cp: return "LDF_CP";
        case SolverKind::iter_zip: return "ITER_ZIP";
        case SolverKind::zp_closed: return "ZP_CLOSED";
    }
    return "unknown";
}

struct SolverOptions {
    double source_v = 1.0;  // slack voltage, p.u.
    double tol = 1e-8;      // infinity-norm voltage convergence
    int max_iter = 100;
};

/// Per-bus voltage magnitudes plus solver provenance. v and u are indexed by
/// bus-1 (slot 0 is the root).
struct VoltageSolution {
    std::vector<double> v;  // |V_i|, p.u.
    std::vector<double> u;  // V_i^2
    SolverKind solver = SolverKind::ldf_cp;
    int iterations = 0;
    bool converged = true;
    double max_mismatch = 0.0;

    double v_at(int bus) const { return v.at(static_cast<std::size_t>(bus) - 1); }
    double u_at(int bus) const { return u.at(static_cast<std::size_t>(bus) - 1); }
    double min_v() const { return *std::min_element(v.begin(), v.end()); }
};

namespace detail {

/// Nominal (p0, q0) per bus, summed over coincident loads.
inline std::vector<complex_t> nominal_by_bus(const RadialNetwork& net, std::span<const LoadSpec> loads) {
    std::vector<complex_t> s(net.bus_count() + 1, complex_t{0.0, 0.0});
    for (const LoadSpec& l : loads) {
        if (!net.has_bus(l.bus)) fail(errc::unknown_bus, "load references bus " + std::to_string(l.bus));
        s[l.bus] += complex_t{l.p0, l.q0};
    }
    return s;
}

/// Model-evaluated (P, Q) per bus at the given voltage magnitudes.
inline std::vector<complex_t> evaluate_by_bus(const RadialNetwork& net, std::span<const LoadSpec> loads,
                                              const std::vector<double>& v) {
    std::vector<complex_t> s(net.bus_count() + 1, complex_t{0.0, 0.0});
    for (const LoadSpec& l : loads) {
        if (!net.has_bus(l.bus)) fail(errc::unknown_bus, "load references bus " + std::to_string(l.bus));
        s[l.bus] += evaluate_load(l, v[static_cast<std::size_t>(l.bus) - 1]);
    }
    return s;
}

/// LinDistFlow solve with frozen per-bus complex demands: lossless downstream
/// aggregation, then squared-voltage drops along each path.
inline VoltageSolution ldf_frozen(const RadialNetwork& net, std::vector<complex_t> demand, double source_v) {
    const int n = net.bus_count();
    const auto& order = net.depth_order();
    for (auto it = order.rbegin(); it != order.rend(); ++it)
        if (*it != 1) demand[static_cast<std::size_t>(net.parent_of(*it))] += demand[static_cast<std::size_t>(*it)];

    VoltageSolution sol;
    sol.solver = SolverKind::ldf_cp;
    sol.v.assign(static_cast<std::size_t>(n), 0.0);
    sol.u.assign(static_cast<std::size_t>(n), 0.0);
    sol.u[0] = source_v * source_v;
    sol.v[0] = source_v;
    for (int bus : order) {
        if (bus == 1) continue;
        const auto z = net.branch_impedance(bus);
        const complex_t f = demand[static_cast<std::size_t>(bus)];
        const double u = sol.u[static_cast<std::size_t>(net.parent_of(bus)) - 1] -
                         2.0 * (z.r * f.real() + z.x * f.imag());
        if (u <= 0.0)
            fail(errc::negative_squared_voltage,
                 "squared voltage collapsed at bus " + std::to_string(bus));
        sol.u[static_cast<std::size_t>(bus) - 1] = u;
        sol.v[static_cast<std::size_t>(bus) - 1] = std::sqrt(u);
    }
    return sol;
}

}  // namespace detail

/// LinDistFlow with constant-power loads: one-shot path-sum evaluation.
inline VoltageSolution solve_ldf_cp(const RadialNetwork& net, std::span<const LoadSpec> loads,
                                    const SolverOptions& opts = {}) {
    for (const LoadSpec& l : loads)
        if (l.model != LoadModel::cp)
            throw std::invalid_argument("solve_ldf_cp requires constant-power loads");
    return detail::ldf_frozen(net, detail::nominal_by_bus(net, loads), opts.source_v);
}

/// Full AC backward-forward sweep (branch losses included). Voltage-dependent
/// loads are re-evaluated from the previous iterate each sweep. This is the
/// ground-truth oracle for the linearized solvers.
inline VoltageSolution solve_ac_bfs(const RadialNetwork& net, std::span<const LoadSpec> loads,
                                    const SolverOptions& opts = {}) {
    const int n = net.bus_count();
    if (opts.tol <= 0.0) throw std::invalid_argument("tol must be positive");
    const auto& order = net.depth_order();

    std::vector<complex_t> volt(static_cast<std::size_t>(n) + 1, complex_t{opts.source_v, 0.0});
    std::vector<complex_t> ibr(static_cast<std::size_t>(n) + 1, complex_t{0.0, 0.0});
    std::vector<double> vmag(static_cast<std::size_t>(n), opts.source_v);

    VoltageSolution sol;
    sol.solver = SolverKind::ac_bfs;
    int it = 0;
    double mismatch = 0.0;
    bool converged = false;
    for (it = 1; it <= opts.max_iter; ++it) {
        const auto demand = detail::evaluate_by_bus(net, loads, vmag);
        // backward: accumulate branch currents from the leaves
        for (auto rit = order.rbegin(); rit != order.rend(); ++rit) {
            const int bus = *rit;
            const auto ubus = static_cast<std::size_t>(bus);
            if (std::abs(volt[ubus]) < 1e-9)
                fail(errc::singular_network, "voltage collapsed to zero at bus " + std::to_string(bus));
            complex_t i = std::conj(demand[ubus] / volt[ubus]);
            for (int c : net.children_of(bus)) i += ibr[static_cast<std::size_t>(c)];
            ibr[ubus] = i;
        }
        // forward: update voltages from the source
        mismatch = 0.0;
        for (int bus : order) {
            if (bus == 1) continue;
            const auto ubus = static_cast<std::size_t>(bus);
            const auto z = net.branch_impedance(bus);
            const complex_t vnew =
                volt[static_cast<std::size_t>(net.parent_of(bus))] - complex_t{z.r, z.x} * ibr[ubus];
            mismatch = std::max(mismatch, std::abs(vnew - volt[ubus]));
            volt[ubus] = vnew;
            vmag[ubus - 1] = std::abs(vnew);
        }
        if (mismatch < opts.tol) {
            converged = true;
            break;
        }
    }
    if (!converged) fail(errc::not_converged, "AC sweep did not converge in " +
                                                  std::to_string(opts.max_iter) + " iterations");
    sol.iterations = it;
    sol.converged = true;
    sol.max_mismatch = mismatch;
    sol.v = vmag;
    sol.u.resize(sol.v.size());
    for (std::size_t i = 0; i < sol.v.size(); ++i) sol.u[i] = sol.v[i] * sol.v[i];
    return sol;
}

enum class IterEngine { ac_bfs, ldf };

/// Fixed-point iteration for voltage-dependent loads: evaluate every load at
/// the current voltages, solve with the chosen engine at frozen demands,
/// repeat until the voltage profile settles. The ldf engine isolates the load
/// -model approximation from branch-loss effects.
inline VoltageSolution solve_iter_zip(const RadialNetwork& net, std::span<const LoadSpec> loads,
                                      const SolverOptions& opts = {},
                                      IterEngine engine = IterEngine::ac_bfs,
                                      std::span<const double> initial = {}) {
    if (opts.tol <= 0.0) throw std::invalid_argument("tol must be positive");
    const int n = net.bus_count();
    std::vector<double> v(static_cast<std::size_t>(n), opts.source_v);
    if (!initial.empty()) {
        if (initial.size() != v.size()) throw std::invalid_argument("initial profile size mismatch");
        v.assign(initial.begin(), initial.end());
    }
    VoltageSolution inner;
    int it = 0;
    double mismatch = 0.0;
    bool converged = false;
    for (it = 1; it <= opts.max_iter; ++it) {
        const auto demand = detail::evaluate_by_bus(net, loads, v);
        if (engine == IterEngine::ldf) {
            inner = detail::ldf_frozen(net, demand, opts.source_v);
        } else {
            std::vector<LoadSpec> frozen;
            frozen.reserve(loads.size());
            for (int bus = 2; bus <= n; ++bus) {
                const complex_t s = demand[static_cast<std::size_t>(bus)];
                if (s != complex_t{0.0, 0.0})
                    frozen.push_back(LoadSpec::constant_power(bus, s.real(), s.imag()));
            }
            inner = solve_ac_bfs(net, frozen, opts);
        }
        mismatch = 0.0;
        for (std::size_t i = 0; i < v.size(); ++i) mismatch = std::max(mismatch, std::abs(inner.v[i] - v[i]));
        v = inner.v;
        if (mismatch < opts.tol) {
            converged = true;
            break;
        }
    }
    if (!converged) fail(errc::not_converged, "load fixed point did not converge in " +
                                                  std::to_string(opts.max_iter) + " iterations");
    VoltageSolution sol = inner;
    sol.solver = SolverKind::iter_zip;
    sol.iterations = it;
    sol.converged = true;
    sol.max_mismatch = mismatch;
    return sol;
}

/// Linear system U = Omega''[the constant column] + Omega' U over buses 2..N,
/// produced by substituting ZP loads into the LinDistFlow path equations.
/// Row/column index i corresponds to bus i+2.
struct OmegaSystem {
    int n = 0;  // N-1
    DenseMatrix omega_prime;          // (N-1) x (N-1)
    std::vector<double> omega_dprime; // N-1

    int row_bus(int index) const { return index + 2; }
    int index_of(int bus) const { return bus - 2; }

    double max_abs_prime() const {
        double m = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) m = std::max(m, std::abs(omega_prime(static_cast<std::size_t>(i), static_cast<std::size_t>(j))));
        return m;
    }

    /// Residual r = U - (Omega'' + Omega' U) for a candidate squared-voltage
    /// vector (indexed over buses 2..N).
    std::vector<double> residual(const std::vector<double>& u) const {
        std::vector<double> r(static_cast<std::size_t>(n), 0.0);
        for (int i = 0; i < n; ++i) {
            double s = omega_dprime[static_cast<std::size_t>(i)];
            for (int j = 0; j < n; ++j)
                s += omega_prime(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) * u[static_cast<std::size_t>(j)];
            r[static_cast<std::size_t>(i)] = u[static_cast<std::size_t>(i)] - s;
        }
        return r;
    }
};

/// Assemble the ZP voltage system. Loads of any model are admitted through
/// their ZP view (cp contributes only to the constant column). Nominal branch
/// flows are the flat-voltage downstream sums.
inline OmegaSystem assemble_zp_system(const RadialNetwork& net, std::span<const LoadSpec> loads,
                                      double source_v = 1.0) {
    const int n = net.bus_count();
    OmegaSystem sys;
    sys.n = n - 1;
    sys.omega_prime = DenseMatrix(static_cast<std::size_t>(n - 1));
    sys.omega_dprime.assign(static_cast<std::size_t>(n - 1), 0.0);

    // Per-bus alpha'- and gamma'-weighted nominal demands.
    std::vector<double> ap(static_cast<std::size_t>(n) + 1, 0.0), aq(ap), gp(ap), gq(ap);
    for (const LoadSpec& l : loads) {
        if (!net.has_bus(l.bus)) fail(errc::unknown_bus, "load references bus " + std::to_string(l.bus));
        const ZpCoefficients c = effective_zp(l);
        const auto b = static_cast<std::size_t>(l.bus);
        ap[b] += c.alpha_p * l.p0;
        aq[b] += c.alpha_q * l.q0;
        gp[b] += c.gamma_p * l.p0;
        gq[b] += c.gamma_q * l.q0;
    }

    // Constant column: accumulate 2(r*alphaP_flow + x*alphaQ_flow) along paths.
    std::vector<double> fp(ap), fq(aq);
    const auto& order = net.depth_order();
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        if (*it == 1) continue;
        const auto u = static_cast<std::size_t>(*it);
        fp[static_cast<std::size_t>(net.parent_of(*it))] += fp[u];
        fq[static_cast<std::size_t>(net.parent_of(*it))] += fq[u];
    }
    std::vector<double> cum(static_cast<std::size_t>(n) + 1, 0.0);
    for (int bus : order) {
        if (bus == 1) continue;
        const auto z = net.branch_impedance(bus);
        const auto u = static_cast<std::size_t>(bus);
        cum[u] = cum[static_cast<std::size_t>(net.parent_of(bus))] +
                 2.0 * (z.r * fp[u] + z.x * fq[u]);
        sys.omega_dprime[static_cast<std::size_t>(bus - 2)] = source_v * source_v - cum[u];
    }

    // U-coefficient block: entry (i, k) couples row bus i to the gamma'-part
    // of the demand at bus k through their shared path impedance.
    for (int k = 2; k <= n; ++k) {
        const auto uk = static_cast<std::size_t>(k);
        if (gp[uk] == 0.0 && gq[uk] == 0.0) continue;
        for (int i = 2; i <= n; ++i) {
            const auto z = net.shared_path_impedance(i, k);
            sys.omega_prime(static_cast<std::size_t>(i - 2), static_cast<std::size_t>(k - 2)) =
                -2.0 * (z.r * gp[uk] + z.x * gq[uk]);
        }
    }
    return sys;
}

namespace detail {

inline VoltageSolution solve_omega(const RadialNetwork& net, const OmegaSystem& sys, double source_v) {
    const int m = sys.n;
    DenseMatrix a(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j)
            a(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) =
                (i == j ? 1.0 : 0.0) - sys.omega_prime(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
    const std::vector<double> u = solve_dense(std::move(a), sys.omega_dprime);

    VoltageSolution sol;
    sol.solver = SolverKind::zp_closed;
    sol.v.assign(static_cast<std::size_t>(net.bus_count()), 0.0);
    sol.u.assign(static_cast<std::size_t>(net.bus_count()), 0.0);
    sol.u[0] = source_v * source_v;
    sol.v[0] = source_v;
    for (int i = 0; i < m; ++i) {
        const double ui = u[static_cast<std::size_t>(i)];
        if (ui <= 0.0)
            fail(errc::negative_squared_voltage,
                 "squared voltage collapsed at bus " + std::to_string(sys.row_bus(i)));
        sol.u[static_cast<std::size_t>(i) + 1] = ui;
        sol.v[static_cast<std::size_t>(i) + 1] = std::sqrt(ui);
    }
    return sol;
}

}  // namespace detail

/// One-shot closed-form voltages under the ZP load view: solve
/// (I - Omega') U = Omega'' once, no iteration.
inline VoltageSolution solve_zp_closed_form(const RadialNetwork& net, std::span<const LoadSpec> loads,
                                            const SolverOptions& opts = {}) {
    const OmegaSystem sys = assemble_zp_system(net, loads, opts.source_v);
    return detail::solve_omega(net, sys, opts.source_v);
}

}  // namespace distflow
