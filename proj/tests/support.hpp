#pragma once

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "distflow/distflow.hpp"

namespace testsupport {

inline std::string data_path(const std::string& name) {
    return std::string(DISTFLOW_DATA_DIR) + "/" + name;
}

inline distflow::CaseData ieee33(double scale = 0.5) {
    distflow::CaseData d = distflow::parse_case(data_path("ieee33.case"));
    d.loads = distflow::scale_loads(std::move(d.loads), scale);
    return d;
}

inline distflow::Catalog catalog() {
    return distflow::parse_device_catalog(data_path("devices.json"));
}

struct RandomCase {
    distflow::RadialNetwork net;
    std::vector<distflow::LoadSpec> loads;  // constant-power records
};

/// Random radial feeder: each bus i>1 hangs off a uniformly chosen earlier
/// bus, with small p.u. impedances and loads so voltages stay well away from
/// collapse.
inline RandomCase random_case(std::mt19937& rng, int max_buses = 20, double max_load = 0.05) {
    std::uniform_int_distribution<int> nd(2, max_buses);
    const int n = nd(rng);
    std::uniform_real_distribution<double> zd(0.002, 0.03);
    std::uniform_real_distribution<double> ld(0.0, max_load);

    std::vector<distflow::Bus> buses;
    std::vector<distflow::Branch> branches;
    for (int i = 1; i <= n; ++i) buses.push_back({i, ""});
    for (int i = 2; i <= n; ++i) {
        std::uniform_int_distribution<int> pd(1, i - 1);
        branches.push_back({pd(rng), i, zd(rng), zd(rng)});
    }
    RandomCase rc;
    rc.net = distflow::build_network(std::move(buses), std::move(branches), 1.0, 1.0);
    for (int i = 2; i <= n; ++i)
        rc.loads.push_back(distflow::LoadSpec::constant_power(i, ld(rng), 0.6 * ld(rng)));
    return rc;
}

/// Random ZIP coefficient triple summing to 1. With force_beta_zero the
/// constant-current share is zero (the regime where the ZP view is exact).
inline distflow::ZipCoefficients random_zip(std::mt19937& rng, bool force_beta_zero) {
    std::uniform_real_distribution<double> ud(0.0, 1.0);
    const auto triple = [&](double& a, double& b, double& g) {
        a = ud(rng);
        b = force_beta_zero ? 0.0 : ud(rng) - 0.5;
        g = 1.0 - a - b;
    };
    distflow::ZipCoefficients c;
    triple(c.alpha_p, c.beta_p, c.gamma_p);
    triple(c.alpha_q, c.beta_q, c.gamma_q);
    return c;
}

/// Exact two-bus AC operating point for a constant-power load: the larger
/// root of  U^2 + (2(rP+xQ) - V1^2) U + (rP+xQ)^2 + (xP-rQ)^2 = 0.
inline double two_bus_exact_u(double r, double x, double p, double q, double v1 = 1.0) {
    const double a = r * p + x * q;
    const double b = x * p - r * q;
    const double disc = (2.0 * a - v1 * v1) * (2.0 * a - v1 * v1) - 4.0 * (a * a + b * b);
    return (v1 * v1 - 2.0 * a + std::sqrt(disc)) / 2.0;
}

}  // namespace testsupport
