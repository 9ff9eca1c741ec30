#pragma once

#include <cmath>
#include <future>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "distflow/errors.hpp"
#include "distflow/loads.hpp"
#include "distflow/network.hpp"
#include "distflow/powerflow.hpp"

namespace distflow {

/// One load-altering attack: a block of identical devices switched on at a
/// single bus. `model` selects whether the injected demand is voltage-blind
/// (cp) or follows the device's ZIP characteristic.
struct AttackSpec {
    int bus = 0;
    DeviceSpec device;
    long count = 0;
    LoadModel model = LoadModel::cp;  // cp or zip
};

/// Nominal injected power of the attack (p.u. on base_mva), before any
/// voltage dependence.
inline complex_t attack_nominal(const AttackSpec& attack, double base_mva) {
    if (attack.count < 1) fail(errc::zero_count, "attack requires at least one device");
    if (attack.device.p_per_device_kw <= 0.0)
        fail(errc::nonpositive_power, "device " + attack.device.name + " has nonpositive P rating");
    const double scale = static_cast<double>(attack.count) / 1000.0 / base_mva;
    return {attack.device.p_per_device_kw * scale, attack.device.q_per_device_kvar * scale};
}

/// The attack expressed as an additional bus load (added to, never replacing,
/// the base loads).
inline LoadSpec attack_load(const AttackSpec& attack, double base_mva) {
    const complex_t s = attack_nominal(attack, base_mva);
    if (attack.model == LoadModel::zip)
        return LoadSpec::zip_load(attack.bus, s.real(), s.imag(), attack.device.zip);
    return LoadSpec::constant_power(attack.bus, s.real(), s.imag());
}

/// Post-attack LinDistFlow voltages with constant-power loads and a
/// voltage-blind injection (p_atk, q_atk) at `bus`: every bus k drops by
/// 2*(p_atk*r_{k,a} + q_atk*x_{k,a}) in squared voltage, where (r,x) is the
/// shared-path impedance. Buses with disjoint paths keep the baseline bits.
inline VoltageSolution voltage_under_attack_cp_raw(const RadialNetwork& net,
                                                   std::span<const LoadSpec> loads, int bus,
                                                   double p_atk, double q_atk,
                                                   const SolverOptions& opts = {}) {
    if (!net.has_bus(bus) || bus == 1) fail(errc::unknown_bus, "attack bus " + std::to_string(bus));
    VoltageSolution sol = solve_ldf_cp(net, loads, opts);
    for (int k = 2; k <= net.bus_count(); ++k) {
        const auto z = net.shared_path_impedance(k, bus);
        const double u = sol.u_at(k) - 2.0 * (p_atk * z.r + q_atk * z.x);
        if (u <= 0.0)
            fail(errc::negative_squared_voltage,
                 "squared voltage collapsed at bus " + std::to_string(k));
        sol.u[static_cast<std::size_t>(k) - 1] = u;
        sol.v[static_cast<std::size_t>(k) - 1] = std::sqrt(u);
    }
    return sol;
}

inline VoltageSolution voltage_under_attack_cp(const RadialNetwork& net,
                                               std::span<const LoadSpec> loads,
                                               const AttackSpec& attack,
                                               const SolverOptions& opts = {}) {
    const complex_t s = attack_nominal(attack, net.base_mva());
    return voltage_under_attack_cp_raw(net, loads, attack.bus, s.real(), s.imag(), opts);
}

/// ZP system of the attacked network: the base system plus an attack part
/// that touches the constant column (alpha' terms) and the attacked bus's
/// column (gamma' terms), both weighted by shared-path impedances.
inline OmegaSystem assemble_zp_attack_system_raw(const RadialNetwork& net,
                                                 std::span<const LoadSpec> loads, int bus,
                                                 double p_atk, double q_atk,
                                                 const ZpCoefficients& device_zp,
                                                 double source_v = 1.0) {
    if (!net.has_bus(bus) || bus == 1) fail(errc::unknown_bus, "attack bus " + std::to_string(bus));
    OmegaSystem sys = assemble_zp_system(net, loads, source_v);
    const int n = net.bus_count();
    const int col = sys.index_of(bus);
    for (int i = 2; i <= n; ++i) {
        const auto z = net.shared_path_impedance(i, bus);
        sys.omega_dprime[static_cast<std::size_t>(i - 2)] +=
            -2.0 * (p_atk * device_zp.alpha_p * z.r + q_atk * device_zp.alpha_q * z.x);
        sys.omega_prime(static_cast<std::size_t>(i - 2), static_cast<std::size_t>(col)) +=
            -2.0 * (p_atk * device_zp.gamma_p * z.r + q_atk * device_zp.gamma_q * z.x);
    }
    return sys;
}

inline OmegaSystem assemble_zp_attack_system(const RadialNetwork& net,
                                             std::span<const LoadSpec> loads,
                                             const AttackSpec& attack, double source_v = 1.0) {
    const complex_t s = attack_nominal(attack, net.base_mva());
    const ZpCoefficients zp = attack.model == LoadModel::zip
                                  ? to_zp(attack.device.zip)
                                  : ZpCoefficients{1.0, 0.0, 1.0, 0.0};
    return assemble_zp_attack_system_raw(net, loads, attack.bus, s.real(), s.imag(), zp, source_v);
}

/// One-shot closed-form post-attack voltages from the attacked ZP system.
inline VoltageSolution solve_zp_under_attack(const RadialNetwork& net,
                                             std::span<const LoadSpec> loads,
                                             const AttackSpec& attack,
                                             const SolverOptions& opts = {}) {
    const OmegaSystem sys = assemble_zp_attack_system(net, loads, attack, opts.source_v);
    return detail::solve_omega(net, sys, opts.source_v);
}

/// Inverse solve output: the injected power and device count that pin the
/// attacked bus at the safety threshold, plus the voltage profile there.
struct CriticalAttackResult {
    int bus = 0;
    DeviceSpec device;
    double p_attack = 0.0;  // p.u.
    double q_attack = 0.0;  // p.u.
    long device_count = 0;
    VoltageSolution voltages;
    double threshold = 0.0;
    std::string method;  // "closed_form_cp" | "closed_form_zp" | "search"
};

namespace detail {

inline long devices_for_power(double p_attack_pu, double base_mva, double p_per_device_kw) {
    const double exact = p_attack_pu * base_mva * 1000.0 / p_per_device_kw;
    const double n = std::ceil(exact - 1e-9);
    return n < 0.0 ? 0 : static_cast<long>(n);
}

inline double device_q_ratio(const DeviceSpec& d) {
    if (d.p_per_device_kw <= 0.0)
        fail(errc::nonpositive_power, "device " + d.name + " has nonpositive P rating");
    return d.q_per_device_kvar / d.p_per_device_kw;
}

}  // namespace detail

/// Closed-form critical injection under constant-power modeling: the drop
/// needed at the attacked bus divided by its full path impedance (weighted by
/// the device's Q/P ratio). Counts are rounded up.
inline CriticalAttackResult critical_devices_cp(const RadialNetwork& net,
                                                std::span<const LoadSpec> loads, int bus,
                                                const DeviceSpec& device, double v_th,
                                                const SolverOptions& opts = {}) {
    if (!net.has_bus(bus) || bus == 1) fail(errc::unknown_bus, "attack bus " + std::to_string(bus));
    if (v_th <= 0.0 || v_th >= opts.source_v)
        throw std::invalid_argument("v_th must lie in (0, source_v)");
    const double rho = detail::device_q_ratio(device);
    const VoltageSolution base = solve_ldf_cp(net, loads, opts);
    const double u_base = base.u_at(bus);
    const double u_th = v_th * v_th;
    // tolerance absorbs the sqrt/square round trip when v_th is quoted from a solve
    if (u_base < u_th - 1e-12)
        fail(errc::already_violated, "baseline voltage at bus " + std::to_string(bus) +
                                         " is already below the threshold");
    const auto z = net.path_impedance(bus);
    const double den = z.r + rho * z.x;
    if (den <= 0.0) fail(errc::nonpositive_denominator, "degenerate path impedance");
    const double p_atk = std::max(0.0, (u_base - u_th) / (2.0 * den));

    CriticalAttackResult res;
    res.bus = bus;
    res.device = device;
    res.p_attack = p_atk;
    res.q_attack = rho * p_atk;
    res.device_count = detail::devices_for_power(p_atk, net.base_mva(), device.p_per_device_kw);
    res.voltages = voltage_under_attack_cp_raw(net, loads, bus, res.p_attack, res.q_attack, opts);
    res.threshold = v_th;
    res.method = "closed_form_cp";
    return res;
}

/// Critical injection with voltage-dependent (ZP-reduced) base loads and
/// device characteristic, restricted to leaf buses: the attacked bus's
/// squared voltage is fixed at v_th^2 and the nominal attack power takes its
/// place as the unknown in the linear system. The device column carries both
/// its alpha' part and its gamma' part evaluated at the pinned voltage.
inline CriticalAttackResult critical_devices_zip(const RadialNetwork& net,
                                                 std::span<const LoadSpec> loads, int leaf_bus,
                                                 const DeviceSpec& device, double v_th,
                                                 const SolverOptions& opts = {}) {
    if (!net.has_bus(leaf_bus) || leaf_bus == 1)
        fail(errc::unknown_bus, "attack bus " + std::to_string(leaf_bus));
    if (!net.is_leaf(leaf_bus))
        fail(errc::not_leaf, "bus " + std::to_string(leaf_bus) + " has children");
    if (v_th <= 0.0 || v_th >= opts.source_v)
        throw std::invalid_argument("v_th must lie in (0, source_v)");
    const double rho = detail::device_q_ratio(device);
    const ZpCoefficients dzp = to_zp(device.zip);
    const double u_th = v_th * v_th;

    const OmegaSystem sys = assemble_zp_system(net, loads, opts.source_v);
    const int m = sys.n;
    const int ai = sys.index_of(leaf_bus);

    DenseMatrix a(static_cast<std::size_t>(m));
    std::vector<double> rhs(static_cast<std::size_t>(m), 0.0);
    for (int i = 0; i < m; ++i) {
        const int bus_i = sys.row_bus(i);
        const auto z = net.shared_path_impedance(bus_i, leaf_bus);
        // coefficient of the unknown attack power in row i
        const double ci = -2.0 * (z.r * (dzp.alpha_p + dzp.gamma_p * u_th) +
                                  rho * z.x * (dzp.alpha_q + dzp.gamma_q * u_th));
        for (int j = 0; j < m; ++j) {
            const double identity = (i == j && i != ai) ? 1.0 : 0.0;
            const double omega =
                (j == ai) ? ci : sys.omega_prime(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
            a(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) = identity - omega;
        }
        rhs[static_cast<std::size_t>(i)] =
            sys.omega_dprime[static_cast<std::size_t>(i)] +
            u_th * sys.omega_prime(static_cast<std::size_t>(i), static_cast<std::size_t>(ai)) -
            (i == ai ? u_th : 0.0);
    }
    const std::vector<double> x = solve_dense(std::move(a), rhs);

    const double p_atk = std::max(0.0, x[static_cast<std::size_t>(ai)]);
    if (x[static_cast<std::size_t>(ai)] < -1e-12)
        fail(errc::negative_critical_power,
             "baseline voltage at bus " + std::to_string(leaf_bus) + " is below the threshold");

    CriticalAttackResult res;
    res.bus = leaf_bus;
    res.device = device;
    res.p_attack = p_atk;
    res.q_attack = rho * p_atk;
    res.device_count = detail::devices_for_power(p_atk, net.base_mva(), device.p_per_device_kw);
    res.threshold = v_th;
    res.method = "closed_form_zp";

    VoltageSolution sol;
    sol.solver = SolverKind::zp_closed;
    const int n = net.bus_count();
    sol.v.assign(static_cast<std::size_t>(n), 0.0);
    sol.u.assign(static_cast<std::size_t>(n), 0.0);
    sol.u[0] = opts.source_v * opts.source_v;
    sol.v[0] = opts.source_v;
    for (int i = 0; i < m; ++i) {
        const double ui = (i == ai) ? u_th : x[static_cast<std::size_t>(i)];
        if (ui <= 0.0)
            fail(errc::negative_squared_voltage,
                 "squared voltage collapsed at bus " + std::to_string(sys.row_bus(i)));
        sol.u[static_cast<std::size_t>(i) + 1] = ui;
        sol.v[static_cast<std::size_t>(i) + 1] = std::sqrt(ui);
    }
    res.voltages = std::move(sol);
    return res;
}

/// Fallback inverse solve for configurations the closed forms do not cover
/// (non-leaf victims under the zip model): doubling plus binary search over
/// the forward solver, breaching when the system-wide minimum voltage falls
/// to v_th.
inline CriticalAttackResult critical_devices_search(const RadialNetwork& net,
                                                    std::span<const LoadSpec> loads, int bus,
                                                    const DeviceSpec& device, double v_th,
                                                    LoadModel model, const SolverOptions& opts = {}) {
    if (!net.has_bus(bus) || bus == 1) fail(errc::unknown_bus, "attack bus " + std::to_string(bus));
    if (v_th <= 0.0 || v_th >= opts.source_v)
        throw std::invalid_argument("v_th must lie in (0, source_v)");

    const auto breaches = [&](long count) -> std::optional<VoltageSolution> {
        AttackSpec atk{bus, device, count, model};
        try {
            VoltageSolution s = model == LoadModel::cp
                                    ? voltage_under_attack_cp(net, loads, atk, opts)
                                    : solve_zp_under_attack(net, loads, atk, opts);
            if (s.min_v() <= v_th) return s;
            return std::nullopt;
        } catch (const error& e) {
            if (e.code() == errc::negative_squared_voltage) {
                VoltageSolution collapsed;
                collapsed.converged = false;
                return collapsed;  // physically infeasible: counts as breached
            }
            throw;
        }
    };

    long lo = 1, hi = 1;
    constexpr long kMaxCount = 1L << 40;
    while (!breaches(hi)) {
        lo = hi + 1;
        hi *= 2;
        if (hi > kMaxCount) fail(errc::not_converged, "no breach up to " + std::to_string(kMaxCount));
    }
    while (lo < hi) {
        const long mid = lo + (hi - lo) / 2;
        if (breaches(mid))
            hi = mid;
        else
            lo = mid + 1;
    }

    CriticalAttackResult res;
    res.bus = bus;
    res.device = device;
    res.device_count = lo;
    const complex_t s = attack_nominal(AttackSpec{bus, device, lo, model}, net.base_mva());
    res.p_attack = s.real();
    res.q_attack = s.imag();
    auto sol = breaches(lo);
    res.voltages = sol ? *sol : VoltageSolution{};
    res.threshold = v_th;
    res.method = "search";
    return res;
}

/// Physical-unit demand the attack adds at its bus, evaluated at the solved
/// post-attack voltage (iterative solve, AC engine).
struct DemandReport {
    double additional_p_kw = 0.0;
    double additional_q_kvar = 0.0;
    double attacked_bus_v = 0.0;
    VoltageSolution voltages;
};

inline DemandReport attack_demand_report(const RadialNetwork& net, std::span<const LoadSpec> loads,
                                         const AttackSpec& attack, const SolverOptions& opts = {}) {
    std::vector<LoadSpec> combined(loads.begin(), loads.end());
    combined.push_back(attack_load(attack, net.base_mva()));
    const VoltageSolution sol = solve_iter_zip(net, combined, opts, IterEngine::ac_bfs);

    DemandReport rep;
    rep.attacked_bus_v = sol.v_at(attack.bus);
    const complex_t inj =
        attack_injection(attack.device, attack.count, rep.attacked_bus_v, attack.model, net.base_mva());
    rep.additional_p_kw = inj.real() * net.base_mva() * 1000.0;
    rep.additional_q_kvar = inj.imag() * net.base_mva() * 1000.0;
    rep.voltages = sol;
    return rep;
}

/// One sweep cell; `error_message` is set (and `result` empty) when the cell's
/// inverse solve failed.
struct SweepCell {
    int bus = 0;
    std::string device;
    LoadModel model = LoadModel::cp;
    std::optional<CriticalAttackResult> result;
    std::string error_message;
};

/// Run the matching inverse solve for every (bus, device) pair. Cells execute
/// concurrently; the output order is deterministic (bus-major, device-minor)
/// regardless of scheduling.
inline std::vector<SweepCell> sweep_critical(const RadialNetwork& net,
                                             std::span<const LoadSpec> loads,
                                             std::span<const int> buses,
                                             std::span<const DeviceSpec> devices, double v_th,
                                             LoadModel model, const SolverOptions& opts = {}) {
    struct Job {
        int bus;
        const DeviceSpec* device;
    };
    std::vector<Job> jobs;
    for (int bus : buses)
        for (const DeviceSpec& d : devices) jobs.push_back({bus, &d});

    std::vector<std::future<SweepCell>> futures;
    futures.reserve(jobs.size());
    for (const Job& job : jobs) {
        futures.push_back(std::async(std::launch::async, [&, job]() {
            SweepCell cell;
            cell.bus = job.bus;
            cell.device = job.device->name;
            cell.model = model;
            try {
                cell.result = model == LoadModel::cp
                                  ? critical_devices_cp(net, loads, job.bus, *job.device, v_th, opts)
                                  : critical_devices_zip(net, loads, job.bus, *job.device, v_th, opts);
            } catch (const std::exception& e) {
                cell.error_message = e.what();
            }
            return cell;
        }));
    }
    std::vector<SweepCell> cells;
    cells.reserve(futures.size());
    for (auto& f : futures) cells.push_back(f.get());
    return cells;
}

}  // namespace distflow
