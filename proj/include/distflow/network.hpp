#pragma once

#include <algorithm>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "distflow/errors.hpp"
#include "distflow/loads.hpp"

namespace distflow {

struct Bus {
    int id = 0;  // 1-based; bus 1 is the root (substation)
    std::string name;
};

struct Branch {
    int parent = 0;
    int child = 0;
    double r = 0.0;  // p.u.
    double x = 0.0;  // p.u.
};

struct Impedance {
    double r = 0.0;
    double x = 0.0;
};

/// Radial feeder as a rooted tree. Immutable after construction; all
/// topological queries are precomputed or O(depth). Branch direction is
/// normalized parent->child at ingestion, impedances are p.u.
class RadialNetwork {
public:
    RadialNetwork() = default;

    int bus_count() const { return static_cast<int>(buses_.size()); }
    double base_mva() const { return base_mva_; }
    double base_kv() const { return base_kv_; }

    const std::vector<Bus>& buses() const { return buses_; }
    const std::vector<Branch>& branches() const { return branches_; }

    bool has_bus(int bus) const { return bus >= 1 && bus <= bus_count(); }

    int parent_of(int bus) const {
        require_bus(bus);
        return parent_[bus];
    }

    const std::vector<int>& children_of(int bus) const {
        require_bus(bus);
        return children_[bus];
    }

    bool is_leaf(int bus) const { return children_of(bus).empty(); }

    int depth_of(int bus) const {
        require_bus(bus);
        return depth_[bus];
    }

    /// Impedance of the branch feeding `bus` from its parent.
    Impedance branch_impedance(int bus) const {
        require_bus(bus);
        if (bus == 1) fail(errc::unknown_bus, "bus 1 has no feeding branch");
        return {branch_r_[bus], branch_x_[bus]};
    }

    /// Buses on the unique root-to-k path, excluding bus 1, including k,
    /// ordered root-side first.
    const std::vector<int>& path_to(int bus) const {
        require_bus(bus);
        if (bus == 1) fail(errc::unknown_bus, "path_to is defined for buses 2..N");
        return paths_[bus];
    }

    /// Deepest bus common to the paths of k and a (bus 1 if the paths are
    /// disjoint below the root).
    int meet_of(int k, int a) const {
        require_bus(k);
        require_bus(a);
        while (depth_[k] > depth_[a]) k = parent_[k];
        while (depth_[a] > depth_[k]) a = parent_[a];
        while (k != a) {
            k = parent_[k];
            a = parent_[a];
        }
        return k;
    }

    /// Total (r, x) over the branches shared by the paths to k and a.
    Impedance shared_path_impedance(int k, int a) const {
        const int m = meet_of(k, a);
        return {cum_r_[m], cum_x_[m]};
    }

    /// Total (r, x) along the full path to k.
    Impedance path_impedance(int k) const {
        require_bus(k);
        return {cum_r_[k], cum_x_[k]};
    }

    /// Bus ids ordered root-first (parents before children). The reverse is
    /// a valid leaves-first order for backward sweeps.
    const std::vector<int>& depth_order() const { return depth_order_; }

    friend RadialNetwork build_network(std::vector<Bus> buses, std::vector<Branch> branches,
                                       double base_mva, double base_kv);

private:
    void require_bus(int bus) const {
        if (!has_bus(bus)) fail(errc::unknown_bus, "bus " + std::to_string(bus));
    }

    std::vector<Bus> buses_;
    std::vector<Branch> branches_;
    double base_mva_ = 1.0;
    double base_kv_ = 1.0;

    // All arrays indexed by bus id (slot 0 unused).
    std::vector<int> parent_;
    std::vector<std::vector<int>> children_;
    std::vector<int> depth_;
    std::vector<double> branch_r_, branch_x_;  // branch feeding each bus
    std::vector<double> cum_r_, cum_x_;        // accumulated along the path
    std::vector<std::vector<int>> paths_;
    std::vector<int> depth_order_;
};

/// Validates and assembles the rooted tree. Bus ids must be the contiguous
/// range 1..N; branches must form a spanning tree rooted at bus 1.
inline RadialNetwork build_network(std::vector<Bus> buses, std::vector<Branch> branches,
                                   double base_mva, double base_kv) {
    const int n = static_cast<int>(buses.size());
    if (n < 1) fail(errc::disconnected, "network needs at least the root bus");

    std::vector<Bus> sorted(buses);
    std::sort(sorted.begin(), sorted.end(), [](const Bus& a, const Bus& b) { return a.id < b.id; });
    for (int i = 0; i < n; ++i) {
        if (sorted[i].id != i + 1)
            fail(errc::unknown_bus, "bus ids must be contiguous 1..N (missing or duplicate id " +
                                        std::to_string(i + 1) + ")");
    }

    RadialNetwork net;
    net.buses_ = std::move(sorted);
    net.base_mva_ = base_mva;
    net.base_kv_ = base_kv;
    net.parent_.assign(n + 1, 0);
    net.children_.assign(n + 1, {});
    net.branch_r_.assign(n + 1, 0.0);
    net.branch_x_.assign(n + 1, 0.0);

    std::vector<bool> has_parent(n + 1, false);
    for (Branch br : branches) {
        if (br.parent < 1 || br.parent > n || br.child < 1 || br.child > n)
            fail(errc::unknown_bus, "branch endpoint out of range");
        if (br.parent == br.child) fail(errc::cycle_detected, "self-loop branch");
        if (br.r < 0.0 || br.x < 0.0 || (br.r == 0.0 && br.x == 0.0))
            fail(errc::parse_error, "branch impedance must be nonnegative and nonzero");
        net.branches_.push_back(br);
    }

    // Orient every branch away from the root with a BFS over the undirected
    // edges, catching duplicates and back-edges as we go.
    std::vector<std::vector<std::pair<int, int>>> adj(n + 1);  // (neighbor, branch index)
    for (int bi = 0; bi < static_cast<int>(net.branches_.size()); ++bi) {
        const Branch& br = net.branches_[bi];
        for (const auto& [u, v] : adj[br.parent])
            if (u == br.child) fail(errc::duplicate_branch, "parallel branch between " +
                                                                std::to_string(br.parent) + " and " +
                                                                std::to_string(br.child));
        adj[br.parent].emplace_back(br.child, bi);
        adj[br.child].emplace_back(br.parent, bi);
    }

    net.depth_.assign(n + 1, -1);
    net.depth_[1] = 0;
    std::vector<int> order{1};
    order.reserve(n);
    for (size_t qi = 0; qi < order.size(); ++qi) {
        const int u = order[qi];
        for (const auto& [v, bi] : adj[u]) {
            if (v == net.parent_[u] && u != 1) continue;
            if (net.depth_[v] >= 0) {
                if (v == 1) fail(errc::bad_root, "bus 1 must not appear as a child");
                fail(errc::cycle_detected, "loop through bus " + std::to_string(v));
            }
            net.depth_[v] = net.depth_[u] + 1;
            net.parent_[v] = u;
            net.children_[u].push_back(v);
            net.branch_r_[v] = net.branches_[bi].r;
            net.branch_x_[v] = net.branches_[bi].x;
            order.push_back(v);
        }
    }
    if (static_cast<int>(order.size()) != n) {
        // reachable buses held no loop; classify by branch count
        if (static_cast<int>(net.branches_.size()) != n - 1)
            fail(errc::non_radial, "a radial network with N buses has exactly N-1 branches");
        fail(errc::disconnected, "not all buses reachable from bus 1");
    }

    // Normalize stored branch direction to parent->child.
    for (Branch& br : net.branches_) {
        if (net.parent_[br.parent] == br.child) std::swap(br.parent, br.child);
    }

    net.depth_order_ = std::move(order);
    net.cum_r_.assign(n + 1, 0.0);
    net.cum_x_.assign(n + 1, 0.0);
    net.paths_.assign(n + 1, {});
    for (int u : net.depth_order_) {
        if (u == 1) continue;
        const int p = net.parent_[u];
        net.cum_r_[u] = net.cum_r_[p] + net.branch_r_[u];
        net.cum_x_[u] = net.cum_x_[p] + net.branch_x_[u];
        net.paths_[u] = net.paths_[p];
        net.paths_[u].push_back(u);
    }
    for (auto& kids : net.children_) std::sort(kids.begin(), kids.end());
    return net;
}

/// Total nominal complex demand of `bus` and all of its descendants (the
/// lossless flow through the branch feeding `bus` at flat voltage).
inline complex_t downstream_loads(const RadialNetwork& net, std::span<const LoadSpec> loads, int bus) {
    if (!net.has_bus(bus)) fail(errc::unknown_bus, "bus " + std::to_string(bus));
    std::vector<complex_t> acc(net.bus_count() + 1, complex_t{0.0, 0.0});
    for (const LoadSpec& l : loads) {
        if (!net.has_bus(l.bus)) fail(errc::unknown_bus, "load references bus " + std::to_string(l.bus));
        acc[l.bus] += complex_t{l.p0, l.q0};
    }
    const auto& order = net.depth_order();
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        const int u = *it;
        if (u != 1) acc[net.parent_of(u)] += acc[u];
    }
    return acc[bus];
}

}  // namespace distflow
