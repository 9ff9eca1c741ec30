// distflow: radial feeder voltage analysis under load-altering attacks.
//
// Subcommands: solve, attack, critical, sweep, demand, validate. Every run
// writes <out>.csv and <out>.json; --plot-data adds a gnuplot-ready file.

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "distflow/distflow.hpp"

namespace df = distflow;
using ordered_json = nlohmann::ordered_json;

namespace {

struct CommonOpts {
    std::string case_path;
    std::string catalog_path;
    std::string model = "cp";
    std::string zip_set = "residential-type-F";
    std::string attack_coeffs = "device";  // zip coefficients of the injected load
    double scale = 0.5;
    double vth = 0.95;
    double source_v = 1.0;
    double tol = 1e-8;
    int max_iter = 100;
    std::string out = "distflow_out";
    std::string plot_path;
};

void add_common(CLI::App* cmd, CommonOpts& o, bool need_catalog) {
    cmd->add_option("--case", o.case_path, "case file (native or MATPOWER-style)")->required();
    auto* cat = cmd->add_option("--catalog", o.catalog_path, "device catalog (JSON)");
    if (need_catalog) cat->required();
    cmd->add_option("--model", o.model, "load model: cp|zip")->check(CLI::IsMember({"cp", "zip"}));
    cmd->add_option("--zip-set", o.zip_set, "named ZIP coefficient set for bus loads");
    cmd->add_option("--attack-coeffs", o.attack_coeffs,
                    "ZIP coefficients for the injected load: device|bus")
        ->check(CLI::IsMember({"device", "bus"}));
    cmd->add_option("--scale", o.scale, "load scaling factor")->check(CLI::PositiveNumber);
    cmd->add_option("--vth", o.vth, "voltage safety threshold, p.u.");
    cmd->add_option("--source", o.source_v, "source (bus 1) voltage, p.u.");
    cmd->add_option("--tol", o.tol, "iterative convergence tolerance");
    cmd->add_option("--max-iter", o.max_iter, "iteration cap");
    cmd->add_option("--out", o.out, "output prefix for .csv/.json artifacts");
    cmd->add_option("--plot-data", o.plot_path, "write two-column plot data to this path");
}

df::SolverOptions solver_opts(const CommonOpts& o) {
    if (o.vth <= 0.5 || o.vth >= 1.0) throw df::error(df::errc::parse_error, "--vth must lie in (0.5, 1.0)");
    return df::SolverOptions{o.source_v, o.tol, o.max_iter};
}

struct Scenario {
    df::CaseData kase;
    std::vector<df::LoadSpec> loads;  // scaled, model-tagged
    df::Catalog catalog;
    bool has_catalog = false;
};

Scenario load_scenario(const CommonOpts& o) {
    Scenario s;
    s.kase = df::parse_case(o.case_path);
    s.loads = df::scale_loads(s.kase.loads, o.scale);
    if (!o.catalog_path.empty()) {
        s.catalog = df::parse_device_catalog(o.catalog_path);
        s.has_catalog = true;
    }
    if (o.model == "zip") {
        if (!s.has_catalog)
            throw df::error(df::errc::parse_error, "--model zip needs --catalog for the coefficient set");
        s.loads = df::with_zip_model(s.loads, s.catalog.find_load_model(o.zip_set));
    }
    return s;
}

// device with the configured ZIP view for the injected load (its own
// characteristic by default, the bus coefficient set on request)
df::DeviceSpec resolve_device(const Scenario& s, const CommonOpts& o, const std::string& name) {
    df::DeviceSpec dev = s.catalog.find_device(name);
    if (o.attack_coeffs == "bus") dev.zip = s.catalog.find_load_model(o.zip_set);
    return dev;
}

ordered_json solution_json(const df::VoltageSolution& sol) {
    ordered_json j;
    j["solver"] = std::string(df::to_string(sol.solver));
    j["iterations"] = sol.iterations;
    j["converged"] = sol.converged;
    j["max_mismatch"] = sol.max_mismatch;
    j["min_v"] = sol.min_v();
    return j;
}

void emit(const CommonOpts& o, const std::string& csv, ordered_json summary,
          const df::VoltageSolution* plot_sol) {
    df::write_file(o.out + ".csv", csv);
    summary["artifacts"] = {o.out + ".csv", o.out + ".json"};
    if (!o.plot_path.empty() && plot_sol != nullptr) {
        df::write_file(o.plot_path, df::plot_data(*plot_sol));
        summary["artifacts"].push_back(o.plot_path);
    }
    df::write_file(o.out + ".json", summary.dump(2) + "\n");
    std::cout << summary.dump(2) << "\n";
}

double kw(const df::RadialNetwork& net, double pu) { return pu * net.base_mva() * 1000.0; }

int run_solve(const CommonOpts& o, const std::string& solver) {
    Scenario s = load_scenario(o);
    const df::SolverOptions opts = solver_opts(o);
    df::VoltageSolution sol;
    if (solver == "ac") sol = df::solve_ac_bfs(s.kase.network, s.loads, opts);
    else if (solver == "ldf") sol = df::solve_ldf_cp(s.kase.network, s.loads, opts);
    else if (solver == "iter") sol = df::solve_iter_zip(s.kase.network, s.loads, opts, df::IterEngine::ac_bfs);
    else sol = df::solve_zp_closed_form(s.kase.network, s.loads, opts);

    ordered_json j;
    j["command"] = "solve";
    j["case"] = o.case_path;
    j["model"] = o.model;
    j["scale"] = o.scale;
    j["solution"] = solution_json(sol);
    emit(o, df::voltage_csv({{"v_pu", &sol}}), std::move(j), &sol);
    return 0;
}

int run_attack(const CommonOpts& o, int bus, const std::string& device_name, long count) {
    Scenario s = load_scenario(o);
    const df::SolverOptions opts = solver_opts(o);
    const df::DeviceSpec dev = resolve_device(s, o, device_name);
    const df::ZipCoefficients& bus_zip = s.catalog.find_load_model(o.zip_set);

    const std::vector<df::LoadSpec> cp_loads = df::scale_loads(s.kase.loads, o.scale);
    const std::vector<df::LoadSpec> zip_loads = df::with_zip_model(cp_loads, bus_zip);
    const df::AttackSpec atk_cp{bus, dev, count, df::LoadModel::cp};
    const df::AttackSpec atk_zip{bus, dev, count, df::LoadModel::zip};

    const df::VoltageSolution cp_base = df::solve_ac_bfs(s.kase.network, cp_loads, opts);
    std::vector<df::LoadSpec> cp_attacked = cp_loads;
    cp_attacked.push_back(df::attack_load(atk_cp, s.kase.network.base_mva()));
    const df::VoltageSolution cp_atk = df::solve_ac_bfs(s.kase.network, cp_attacked, opts);

    const df::VoltageSolution zip_base =
        df::solve_iter_zip(s.kase.network, zip_loads, opts, df::IterEngine::ac_bfs);
    std::vector<df::LoadSpec> zip_attacked = zip_loads;
    zip_attacked.push_back(df::attack_load(atk_zip, s.kase.network.base_mva()));
    const df::VoltageSolution zip_atk =
        df::solve_iter_zip(s.kase.network, zip_attacked, opts, df::IterEngine::ac_bfs);

    ordered_json j;
    j["command"] = "attack";
    j["case"] = o.case_path;
    j["attack"] = {{"bus", bus}, {"device", device_name}, {"count", count}};
    j["cp"] = {{"base", solution_json(cp_base)}, {"attacked", solution_json(cp_atk)}};
    j["zip"] = {{"base", solution_json(zip_base)}, {"attacked", solution_json(zip_atk)}};
    emit(o,
         df::voltage_csv({{"cp_base", &cp_base},
                          {"cp_attack", &cp_atk},
                          {"zip_base", &zip_base},
                          {"zip_attack", &zip_atk}}),
         std::move(j), &zip_atk);
    return 0;
}

ordered_json critical_json(const df::RadialNetwork& net, const df::CriticalAttackResult& r) {
    ordered_json j;
    j["bus"] = r.bus;
    j["device"] = r.device.name;
    j["method"] = r.method;
    j["device_count"] = r.device_count;
    j["p_attack_kw"] = kw(net, r.p_attack);
    j["q_attack_kvar"] = kw(net, r.q_attack);
    j["threshold"] = r.threshold;
    if (!r.voltages.v.empty()) j["attacked_bus_v"] = r.voltages.v_at(r.bus);
    return j;
}

int run_critical(const CommonOpts& o, int bus, const std::string& device_name) {
    Scenario s = load_scenario(o);
    const df::SolverOptions opts = solver_opts(o);
    const df::DeviceSpec dev = resolve_device(s, o, device_name);

    df::CriticalAttackResult res;
    if (o.model == "cp") {
        res = df::critical_devices_cp(s.kase.network, s.loads, bus, dev, o.vth, opts);
    } else if (s.kase.network.is_leaf(bus)) {
        res = df::critical_devices_zip(s.kase.network, s.loads, bus, dev, o.vth, opts);
    } else {
        // closed form only covers leaf victims; fall back to forward search
        res = df::critical_devices_search(s.kase.network, s.loads, bus, dev, o.vth,
                                          df::LoadModel::zip, opts);
    }

    ordered_json j;
    j["command"] = "critical";
    j["case"] = o.case_path;
    j["model"] = o.model;
    j["result"] = critical_json(s.kase.network, res);
    std::string csv = "bus,device,model,method,device_count,p_attack_kw\n";
    {
        char buf[160];
        std::snprintf(buf, sizeof buf, "%d,%s,%s,%s,%ld,%.6f\n", res.bus, res.device.name.c_str(),
                      o.model.c_str(), res.method.c_str(), res.device_count,
                      kw(s.kase.network, res.p_attack));
        csv += buf;
    }
    emit(o, csv, std::move(j), res.voltages.v.empty() ? nullptr : &res.voltages);
    return 0;
}

int run_sweep(const CommonOpts& o, std::vector<int> buses, std::vector<std::string> device_names,
              std::vector<std::string> models) {
    Scenario s = load_scenario(o);
    const df::SolverOptions opts = solver_opts(o);
    if (models.empty()) models = {"cp", "zip"};
    std::vector<df::DeviceSpec> devices;
    if (device_names.empty())
        for (const df::DeviceSpec& d : s.catalog.devices) devices.push_back(resolve_device(s, o, d.name));
    else
        for (const auto& n : device_names) devices.push_back(resolve_device(s, o, n));

    const std::vector<df::LoadSpec> cp_loads = df::scale_loads(s.kase.loads, o.scale);
    const std::vector<df::LoadSpec> zip_loads =
        df::with_zip_model(cp_loads, s.catalog.find_load_model(o.zip_set));

    std::string csv = "bus,device,model,method,device_count,p_attack_kw,error\n";
    ordered_json rows = ordered_json::array();
    for (const std::string& model : models) {
        const bool zip = model == "zip";
        const auto cells =
            df::sweep_critical(s.kase.network, zip ? zip_loads : cp_loads, buses, devices, o.vth,
                               zip ? df::LoadModel::zip : df::LoadModel::cp, opts);
        for (const auto& cell : cells) {
            ordered_json row;
            row["bus"] = cell.bus;
            row["device"] = cell.device;
            row["model"] = model;
            char buf[200];
            if (cell.result) {
                row["device_count"] = cell.result->device_count;
                row["p_attack_kw"] = kw(s.kase.network, cell.result->p_attack);
                row["method"] = cell.result->method;
                std::snprintf(buf, sizeof buf, "%d,%s,%s,%s,%ld,%.6f,\n", cell.bus,
                              cell.device.c_str(), model.c_str(), cell.result->method.c_str(),
                              cell.result->device_count, kw(s.kase.network, cell.result->p_attack));
            } else {
                row["error"] = cell.error_message;
                std::snprintf(buf, sizeof buf, "%d,%s,%s,,,,\"%s\"\n", cell.bus, cell.device.c_str(),
                              model.c_str(), cell.error_message.c_str());
            }
            csv += buf;
            rows.push_back(std::move(row));
        }
    }
    ordered_json j;
    j["command"] = "sweep";
    j["case"] = o.case_path;
    j["vth"] = o.vth;
    j["rows"] = std::move(rows);
    emit(o, csv, std::move(j), nullptr);
    return 0;
}

int run_demand(const CommonOpts& o, int bus, const std::string& device_name, long count) {
    Scenario s = load_scenario(o);
    const df::SolverOptions opts = solver_opts(o);
    const df::DeviceSpec dev = resolve_device(s, o, device_name);
    const df::AttackSpec atk{bus, dev, count,
                             o.model == "zip" ? df::LoadModel::zip : df::LoadModel::cp};
    const df::DemandReport rep = df::attack_demand_report(s.kase.network, s.loads, atk, opts);

    ordered_json j;
    j["command"] = "demand";
    j["case"] = o.case_path;
    j["model"] = o.model;
    j["attack"] = {{"bus", bus}, {"device", device_name}, {"count", count}};
    j["additional_p_kw"] = rep.additional_p_kw;
    j["additional_q_kvar"] = rep.additional_q_kvar;
    j["attacked_bus_v"] = rep.attacked_bus_v;
    j["solution"] = solution_json(rep.voltages);
    char buf[160];
    std::snprintf(buf, sizeof buf, "%d,%s,%ld,%.4f,%.4f,%.6f\n", bus, device_name.c_str(), count,
                  rep.additional_p_kw, rep.additional_q_kvar, rep.attacked_bus_v);
    emit(o, std::string("bus,device,count,additional_p_kw,additional_q_kvar,attacked_bus_v\n") + buf,
         std::move(j), &rep.voltages);
    return 0;
}

int run_validate(const CommonOpts& o) {
    Scenario s = load_scenario(o);
    const df::SolverOptions opts = solver_opts(o);
    const df::ZipCoefficients& bus_zip = s.catalog.find_load_model(o.zip_set);
    const std::vector<df::LoadSpec> cp_loads = df::scale_loads(s.kase.loads, o.scale);
    const std::vector<df::LoadSpec> zip_loads = df::with_zip_model(cp_loads, bus_zip);

    df::SolverOptions tight = opts;
    tight.tol = std::min(opts.tol, 1e-10);
    tight.max_iter = std::max(opts.max_iter, 200);

    const df::VoltageSolution ac_zip = df::solve_ac_bfs(s.kase.network, zip_loads, tight);
    const df::VoltageSolution zp = df::solve_zp_closed_form(s.kase.network, zip_loads, opts);
    const df::VoltageSolution ac_cp = df::solve_ac_bfs(s.kase.network, cp_loads, tight);
    const df::VoltageSolution ldf_cp = df::solve_ldf_cp(s.kase.network, cp_loads, opts);
    const df::VoltageSolution iter_ldf =
        df::solve_iter_zip(s.kase.network, zip_loads, tight, df::IterEngine::ldf);

    const auto max_rel_err = [](const df::VoltageSolution& ref, const df::VoltageSolution& other) {
        double m = 0.0;
        for (std::size_t i = 0; i < ref.v.size(); ++i)
            m = std::max(m, std::abs(ref.v[i] - other.v[i]) / ref.v[i] * 100.0);
        return m;
    };
    const double err_zp = max_rel_err(ac_zip, zp);
    const double err_ldf = max_rel_err(ac_cp, ldf_cp);
    const double err_iter = max_rel_err(ac_zip, iter_ldf);

    const df::OmegaSystem sys = df::assemble_zp_system(s.kase.network, zip_loads, opts.source_v);
    const double omega_max = sys.max_abs_prime();

    std::printf("zp_closed_form vs ac_bfs (zip loads): max rel error %.4f %%\n", err_zp);
    std::printf("ldf vs ac_bfs (cp loads):             max rel error %.4f %%\n", err_ldf);
    std::printf("iter_zip(ldf) vs ac_bfs (zip loads):  max rel error %.4f %%\n", err_iter);
    if (omega_max > 0.5)
        std::printf("warning: |omega| entries reach %.3f; system may be poorly scaled\n", omega_max);

    ordered_json j;
    j["command"] = "validate";
    j["case"] = o.case_path;
    j["zip_set"] = o.zip_set;
    j["scale"] = o.scale;
    j["max_rel_error_percent"] = {{"zp_vs_ac", err_zp}, {"ldf_vs_ac_cp", err_ldf}, {"iter_ldf_vs_ac", err_iter}};
    j["omega_prime_max_abs"] = omega_max;
    j["ac_zip"] = solution_json(ac_zip);
    emit(o, df::voltage_csv({{"ac_zip", &ac_zip}, {"zp_closed", &zp}, {"ac_cp", &ac_cp}, {"ldf_cp", &ldf_cp}}),
         std::move(j), &zp);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"radial distribution feeder voltage analysis under load-altering attacks"};
    app.require_subcommand(1);

    CommonOpts o;
    std::string solver = "ac";
    int attack_bus = 0;
    std::string device_name;
    long count = 0;
    std::vector<int> buses;
    std::vector<std::string> device_names, models;

    auto* c_solve = app.add_subcommand("solve", "baseline voltage profile");
    add_common(c_solve, o, false);
    c_solve->add_option("--solver", solver, "ac|ldf|iter|zp")->check(CLI::IsMember({"ac", "ldf", "iter", "zp"}));

    auto* c_attack = app.add_subcommand("attack", "forward attack, cp and zip side by side");
    add_common(c_attack, o, true);
    c_attack->add_option("--attack-bus", attack_bus, "attacked bus")->required();
    c_attack->add_option("--device", device_name, "device class")->required();
    c_attack->add_option("--count", count, "device count")->required();

    auto* c_critical = app.add_subcommand("critical", "minimum devices to breach the threshold");
    add_common(c_critical, o, true);
    c_critical->add_option("--attack-bus", attack_bus, "attacked bus")->required();
    c_critical->add_option("--device", device_name, "device class")->required();

    auto* c_sweep = app.add_subcommand("sweep", "critical counts over buses x devices x models");
    add_common(c_sweep, o, true);
    c_sweep->add_option("--buses", buses, "attacked buses")->required()->delimiter(',');
    c_sweep->add_option("--devices", device_names, "device classes (default: all)")->delimiter(',');
    c_sweep->add_option("--models", models, "cp,zip (default both)")->delimiter(',');

    auto* c_demand = app.add_subcommand("demand", "injected demand at the solved voltage");
    add_common(c_demand, o, true);
    c_demand->add_option("--attack-bus", attack_bus, "attacked bus")->required();
    c_demand->add_option("--device", device_name, "device class")->required();
    c_demand->add_option("--count", count, "device count")->required();

    auto* c_validate = app.add_subcommand("validate", "solver cross-checks, prints max relative errors");
    add_common(c_validate, o, true);

    CLI11_PARSE(app, argc, argv);

    try {
        if (c_solve->parsed()) return run_solve(o, solver);
        if (c_attack->parsed()) return run_attack(o, attack_bus, device_name, count);
        if (c_critical->parsed()) return run_critical(o, attack_bus, device_name);
        if (c_sweep->parsed()) return run_sweep(o, buses, device_names, models);
        if (c_demand->parsed()) return run_demand(o, attack_bus, device_name, count);
        if (c_validate->parsed()) return run_validate(o);
    } catch (const df::error& e) {
        std::cerr << "error[" << df::to_string(e.code()) << "]: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
