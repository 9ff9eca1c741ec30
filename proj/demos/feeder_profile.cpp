// Library usage in a nutshell: build a small feeder, compare the voltage
// profile under constant-power and ZIP loads, then size an attack on its
// deepest bus.

#include <cstdio>

#include "distflow/distflow.hpp"

using namespace distflow;

int main() {
    // 1 - 2 - 3 - 4 main run with a short lateral 2 - 5
    RadialNetwork net = build_network(
        {{1, "sub"}, {2, ""}, {3, ""}, {4, ""}, {5, ""}},
        {{1, 2, 0.02, 0.015}, {2, 3, 0.025, 0.02}, {3, 4, 0.03, 0.02}, {2, 5, 0.01, 0.01}},
        /*base_mva=*/1.0, /*base_kv=*/12.66);

    const ZipCoefficients residential{1.81, -2.31, 1.50, 5.55, -11.97, 7.42};
    std::vector<LoadSpec> cp_loads;
    for (int bus : {2, 3, 4, 5}) cp_loads.push_back(LoadSpec::constant_power(bus, 0.03, 0.012));
    const std::vector<LoadSpec> zip_loads = with_zip_model(cp_loads, residential);

    const VoltageSolution ac_cp = solve_ac_bfs(net, cp_loads);
    const VoltageSolution ac_zip = solve_ac_bfs(net, zip_loads);
    const VoltageSolution zp = solve_zp_closed_form(net, zip_loads);

    std::printf("bus   cp        zip       zp-closed\n");
    for (int bus = 1; bus <= net.bus_count(); ++bus)
        std::printf("%3d   %.6f  %.6f  %.6f\n", bus, ac_cp.v_at(bus), ac_zip.v_at(bus), zp.v_at(bus));

    DeviceSpec heater{"resistive_heater", 1.5, 0.0, ZipCoefficients{0, 0, 1, 0, 0, 1}};
    const CriticalAttackResult crit = critical_devices_zip(net, zip_loads, 4, heater, 0.95);
    std::printf("\nheaters needed at bus 4 to reach %.2f p.u.: %ld (%.1f kW nominal)\n",
                crit.threshold, crit.device_count, crit.p_attack * net.base_mva() * 1000.0);
    return 0;
}
