#pragma once

#include <cmath>
#include <complex>
#include <string>

#include "distflow/errors.hpp"

namespace distflow {

using complex_t = std::complex<double>;

inline constexpr double kCoefficientSumTol = 1e-9;

/// Voltage-dependence coefficients of a ZIP load:
///   S(V) = P0*(alpha_p + beta_p*V + gamma_p*V^2) + j*Q0*(alpha_q + beta_q*V + gamma_q*V^2)
/// alpha = constant-power share, beta = constant-current, gamma = constant-impedance.
/// Each triple sums to 1.
struct ZipCoefficients {
    double alpha_p = 1.0, beta_p = 0.0, gamma_p = 0.0;
    double alpha_q = 1.0, beta_q = 0.0, gamma_q = 0.0;

    bool valid() const {
        return std::abs(alpha_p + beta_p + gamma_p - 1.0) <= kCoefficientSumTol &&
               std::abs(alpha_q + beta_q + gamma_q - 1.0) <= kCoefficientSumTol;
    }
};

/// ZP reduction of a ZIP load: the constant-current term is split evenly
/// between the constant-power and constant-impedance parts, so the load is
/// linear in the squared voltage magnitude:
///   S(U) = P0*(alpha_p + gamma_p*U) + j*Q0*(alpha_q + gamma_q*U),  U = V^2.
/// Each pair sums to 1 (alpha may be negative for strongly current-like loads).
struct ZpCoefficients {
    double alpha_p = 1.0, gamma_p = 0.0;
    double alpha_q = 1.0, gamma_q = 0.0;
};

inline ZpCoefficients to_zp(const ZipCoefficients& c) {
    return ZpCoefficients{
        c.alpha_p + c.beta_p / 2.0, c.gamma_p + c.beta_p / 2.0,
        c.alpha_q + c.beta_q / 2.0, c.gamma_q + c.beta_q / 2.0,
    };
}

enum class LoadModel { cp, zip, zp };

inline std::string_view to_string(LoadModel m) {
    switch (m) {
        case LoadModel::cp: return "cp";
        case LoadModel::zip: return "zip";
        case LoadModel::zp: return "zp";
    }
    return "unknown";
}

/// One bus load: nominal demand (p.u., consumption-positive) plus the model
/// describing how it responds to voltage. For cp the coefficient members are
/// unused.
struct LoadSpec {
    int bus = 0;
    double p0 = 0.0;  // p.u.
    double q0 = 0.0;  // p.u.
    LoadModel model = LoadModel::cp;
    ZipCoefficients zip{};
    ZpCoefficients zp{};

    static LoadSpec constant_power(int bus, double p0, double q0) {
        return LoadSpec{bus, p0, q0, LoadModel::cp, {}, {}};
    }
    static LoadSpec zip_load(int bus, double p0, double q0, const ZipCoefficients& c) {
        return LoadSpec{bus, p0, q0, LoadModel::zip, c, {}};
    }
    static LoadSpec zp_load(int bus, double p0, double q0, const ZpCoefficients& c) {
        return LoadSpec{bus, p0, q0, LoadModel::zp, {}, c};
    }
};

/// One appliance class an attacker can switch in bulk.
struct DeviceSpec {
    std::string name;
    double p_per_device_kw = 0.0;   // > 0
    double q_per_device_kvar = 0.0; // >= 0
    ZipCoefficients zip{};
};

/// ZIP load value at voltage magnitude v.
inline complex_t zip_power(const LoadSpec& load, double v) {
    if (v <= 0.0) fail(errc::nonpositive_voltage, "zip_power requires v > 0");
    const ZipCoefficients& c = load.zip;
    const double p = load.p0 * (c.alpha_p + c.beta_p * v + c.gamma_p * v * v);
    const double q = load.q0 * (c.alpha_q + c.beta_q * v + c.gamma_q * v * v);
    return {p, q};
}

/// ZP load value at squared voltage magnitude u.
inline complex_t zp_power(double p0, double q0, const ZpCoefficients& c, double u) {
    if (u <= 0.0) fail(errc::negative_squared_voltage, "zp_power requires u > 0");
    return {p0 * (c.alpha_p + c.gamma_p * u), q0 * (c.alpha_q + c.gamma_q * u)};
}

/// Load value under its own model at voltage magnitude v. This is what the
/// solvers call; cp loads ignore v.
inline complex_t evaluate_load(const LoadSpec& load, double v) {
    switch (load.model) {
        case LoadModel::cp: return {load.p0, load.q0};
        case LoadModel::zip: return zip_power(load, v);
        case LoadModel::zp: return zp_power(load.p0, load.q0, load.zp, v * v);
    }
    return {load.p0, load.q0};
}

/// ZP view of any load model: cp maps to (1, 0), zip is reduced via to_zp.
inline ZpCoefficients effective_zp(const LoadSpec& load) {
    switch (load.model) {
        case LoadModel::cp: return ZpCoefficients{1.0, 0.0, 1.0, 0.0};
        case LoadModel::zip: return to_zp(load.zip);
        case LoadModel::zp: return load.zp;
    }
    return ZpCoefficients{1.0, 0.0, 1.0, 0.0};
}

/// Demand injected by `count` switched devices at voltage v, in p.u. on
/// base_mva. The cp model is voltage-blind; zip applies the device's own
/// coefficients.
inline complex_t attack_injection(const DeviceSpec& device, long count, double v,
                                  LoadModel model, double base_mva) {
    if (count < 1) fail(errc::zero_count, "attack requires at least one device");
    if (v <= 0.0) fail(errc::nonpositive_voltage, "attack_injection requires v > 0");
    const double p0 = static_cast<double>(count) * device.p_per_device_kw / 1000.0 / base_mva;
    const double q0 = static_cast<double>(count) * device.q_per_device_kvar / 1000.0 / base_mva;
    if (model == LoadModel::cp) return {p0, q0};
    LoadSpec as_load = LoadSpec::zip_load(0, p0, q0, device.zip);
    return zip_power(as_load, v);
}

}  // namespace distflow
