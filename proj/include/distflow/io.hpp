#pragma once

#include <cctype>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "distflow/errors.hpp"
#include "distflow/loads.hpp"
#include "distflow/network.hpp"
#include "distflow/powerflow.hpp"

namespace distflow {

struct CaseData {
    RadialNetwork network;
    std::vector<LoadSpec> loads;  // constant-power records, p.u.
    std::string name;
};

namespace io_detail {

[[noreturn]] inline void parse_fail(const std::string& file, int line, const std::string& what) {
    fail(errc::parse_error, file + ":" + std::to_string(line) + ": " + what);
}

inline std::vector<std::string> tokenize(const std::string& line) {
    std::vector<std::string> out;
    std::istringstream is(line);
    std::string tok;
    while (is >> tok) out.push_back(tok);
    return out;
}

inline double to_number(const std::string& file, int line, const std::string& tok) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(tok, &pos);
        if (pos != tok.size()) parse_fail(file, line, "bad number '" + tok + "'");
        return v;
    } catch (const std::logic_error&) {
        parse_fail(file, line, "bad number '" + tok + "'");
    }
}

inline int to_int(const std::string& file, int line, const std::string& tok) {
    const double v = to_number(file, line, tok);
    const int i = static_cast<int>(v);
    if (static_cast<double>(i) != v) parse_fail(file, line, "expected integer, got '" + tok + "'");
    return i;
}

enum class ImpedanceUnit { ohm, pu };
enum class PowerUnit { kw, mw, pu };

struct Units {
    ImpedanceUnit impedance;
    PowerUnit power;
};

/// Native line-oriented case format. A `units` header is mandatory; files
/// without one are rejected rather than guessed at.
inline CaseData parse_native_case(const std::string& file, std::istream& in) {
    std::optional<Units> units;
    std::optional<double> base_mva, base_kv;
    double scale = 1.0;
    std::string case_name;
    std::vector<Bus> buses;
    std::vector<std::tuple<int, int, double, double, int>> branches;  // + line no
    std::vector<std::tuple<int, double, double, int>> raw_loads;

    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        auto tok = tokenize(line);
        if (tok.empty()) continue;
        const std::string& kw = tok[0];
        if (kw == "case") {
            if (tok.size() >= 2) case_name = tok[1];
        } else if (kw == "units") {
            Units u{};
            bool have_imp = false, have_pow = false;
            for (std::size_t i = 1; i < tok.size(); ++i) {
                const auto eq = tok[i].find('=');
                const std::string key = tok[i].substr(0, eq);
                const std::string val = eq == std::string::npos ? "" : tok[i].substr(eq + 1);
                if (key == "impedance") {
                    if (val == "ohm") u.impedance = ImpedanceUnit::ohm;
                    else if (val == "pu") u.impedance = ImpedanceUnit::pu;
                    else fail(errc::unit_ambiguity, file + ": unknown impedance unit '" + val + "'");
                    have_imp = true;
                } else if (key == "power") {
                    if (val == "kw") u.power = PowerUnit::kw;
                    else if (val == "mw") u.power = PowerUnit::mw;
                    else if (val == "pu") u.power = PowerUnit::pu;
                    else fail(errc::unit_ambiguity, file + ": unknown power unit '" + val + "'");
                    have_pow = true;
                } else {
                    fail(errc::unit_ambiguity, file + ": unknown units key '" + key + "'");
                }
            }
            if (!have_imp || !have_pow)
                fail(errc::unit_ambiguity, file + ": units line must declare impedance= and power=");
            units = u;
        } else if (kw == "base") {
            for (std::size_t i = 1; i < tok.size(); ++i) {
                const auto eq = tok[i].find('=');
                if (eq == std::string::npos) parse_fail(file, lineno, "expected key=value in base line");
                const std::string key = tok[i].substr(0, eq);
                const double val = to_number(file, lineno, tok[i].substr(eq + 1));
                if (key == "mva") base_mva = val;
                else if (key == "kv") base_kv = val;
                else parse_fail(file, lineno, "unknown base key '" + key + "'");
            }
        } else if (kw == "scale") {
            if (tok.size() != 2) parse_fail(file, lineno, "scale takes one factor");
            scale = to_number(file, lineno, tok[1]);
            if (scale <= 0.0) parse_fail(file, lineno, "scale must be positive");
        } else if (kw == "bus") {
            if (tok.size() < 2) parse_fail(file, lineno, "bus needs an id");
            Bus b;
            b.id = to_int(file, lineno, tok[1]);
            if (tok.size() >= 3) b.name = tok[2];
            buses.push_back(b);
        } else if (kw == "branch") {
            if (tok.size() != 5) parse_fail(file, lineno, "branch needs: from to r x");
            branches.emplace_back(to_int(file, lineno, tok[1]), to_int(file, lineno, tok[2]),
                                  to_number(file, lineno, tok[3]), to_number(file, lineno, tok[4]),
                                  lineno);
        } else if (kw == "load") {
            if (tok.size() != 4) parse_fail(file, lineno, "load needs: bus p q");
            raw_loads.emplace_back(to_int(file, lineno, tok[1]), to_number(file, lineno, tok[2]),
                                   to_number(file, lineno, tok[3]), lineno);
        } else {
            parse_fail(file, lineno, "unknown directive '" + kw + "'");
        }
    }

    if (!units) fail(errc::unit_ambiguity, file + ": missing mandatory units header");
    const bool needs_bases = units->impedance == ImpedanceUnit::ohm || units->power != PowerUnit::pu;
    if (!base_mva || !base_kv) {
        if (needs_bases) fail(errc::unit_ambiguity, file + ": declared units require a base line");
        base_mva = base_mva.value_or(1.0);
        base_kv = base_kv.value_or(1.0);
    }

    const double z_base = (*base_kv) * (*base_kv) / (*base_mva);
    std::vector<bool> known(buses.size() + 1, false);
    for (const Bus& b : buses)
        if (b.id >= 1 && b.id <= static_cast<int>(buses.size())) known[static_cast<std::size_t>(b.id)] = true;

    std::vector<Branch> conv;
    for (const auto& [from, to, r, x, ln] : branches) {
        if (from < 1 || from > static_cast<int>(buses.size()) || !known[static_cast<std::size_t>(from)])
            parse_fail(file, ln, "branch references unknown bus " + std::to_string(from));
        if (to < 1 || to > static_cast<int>(buses.size()) || !known[static_cast<std::size_t>(to)])
            parse_fail(file, ln, "branch references unknown bus " + std::to_string(to));
        const double f = units->impedance == ImpedanceUnit::ohm ? 1.0 / z_base : 1.0;
        conv.push_back(Branch{from, to, r * f, x * f});
    }

    CaseData data;
    data.name = case_name;
    data.network = build_network(std::move(buses), std::move(conv), *base_mva, *base_kv);

    const double pf = units->power == PowerUnit::kw   ? 1.0 / 1000.0 / *base_mva
                      : units->power == PowerUnit::mw ? 1.0 / *base_mva
                                                      : 1.0;
    for (const auto& [bus, p, q, ln] : raw_loads) {
        if (!data.network.has_bus(bus)) parse_fail(file, ln, "load references unknown bus " + std::to_string(bus));
        if (p < 0.0 || q < 0.0) parse_fail(file, ln, "loads must be nonnegative (no generation)");
        data.loads.push_back(LoadSpec::constant_power(bus, p * pf * scale, q * pf * scale));
    }
    return data;
}

/// Minimal MATPOWER-style ingestion: baseMVA scalar plus the bus and branch
/// tables. Impedances are p.u., demands are MW/MVAr, the slack (type 3) bus
/// must be bus 1.
inline CaseData parse_matpower_case(const std::string& file, std::istream& in) {
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    for (auto& c : text)
        if (c == '\t') c = ' ';

    const auto find_scalar = [&](const std::string& key) -> double {
        const auto pos = text.find(key);
        if (pos == std::string::npos) fail(errc::parse_error, file + ": missing " + key);
        const auto eq = text.find('=', pos);
        const auto sc = text.find(';', eq);
        if (eq == std::string::npos || sc == std::string::npos)
            fail(errc::parse_error, file + ": malformed " + key);
        return to_number(file, 0, std::string(text.substr(eq + 1, sc - eq - 1)));
    };
    const auto find_table = [&](const std::string& key) -> std::vector<std::vector<double>> {
        const auto pos = text.find(key);
        if (pos == std::string::npos) fail(errc::parse_error, file + ": missing " + key);
        const auto open = text.find('[', pos);
        const auto close = text.find(']', open);
        if (open == std::string::npos || close == std::string::npos)
            fail(errc::parse_error, file + ": malformed " + key);
        std::vector<std::vector<double>> rows;
        std::string body = text.substr(open + 1, close - open - 1);
        std::istringstream bs(body);
        std::string row;
        while (std::getline(bs, row, ';')) {
            // strip matlab % comments
            const auto cm = row.find('%');
            if (cm != std::string::npos) row.erase(cm);
            auto tok = tokenize(row);
            if (tok.empty()) continue;
            std::vector<double> vals;
            for (const auto& t : tok) vals.push_back(to_number(file, 0, t));
            rows.push_back(std::move(vals));
        }
        return rows;
    };

    const double base_mva = find_scalar("mpc.baseMVA");
    const auto bus_rows = find_table("mpc.bus");
    const auto br_rows = find_table("mpc.branch");
    if (bus_rows.empty()) fail(errc::parse_error, file + ": empty bus table");

    CaseData data;
    std::vector<Bus> buses;
    std::vector<Branch> branches;
    double base_kv = 1.0;
    for (const auto& row : bus_rows) {
        if (row.size() < 10) fail(errc::parse_error, file + ": bus row too short");
        const int id = static_cast<int>(row[0]);
        const int type = static_cast<int>(row[1]);
        if (type == 3 && id != 1)
            fail(errc::bad_root, file + ": slack bus must be bus 1, got " + std::to_string(id));
        if (id == 1) base_kv = row[9];
        buses.push_back(Bus{id, ""});
        const double pd = row[2], qd = row[3];
        if (pd != 0.0 || qd != 0.0)
            data.loads.push_back(LoadSpec::constant_power(id, pd / base_mva, qd / base_mva));
    }
    for (const auto& row : br_rows) {
        if (row.size() < 4) fail(errc::parse_error, file + ": branch row too short");
        branches.push_back(Branch{static_cast<int>(row[0]), static_cast<int>(row[1]), row[2], row[3]});
    }
    data.network = build_network(std::move(buses), std::move(branches), base_mva, base_kv);
    for (const LoadSpec& l : data.loads)
        if (!data.network.has_bus(l.bus)) fail(errc::parse_error, file + ": load on unknown bus");
    return data;
}

}  // namespace io_detail

/// Parse a case file, auto-detecting the native format vs MATPOWER-style
/// content. Loads come back as constant-power records in p.u.; the caller
/// applies scaling and load-model tagging.
inline CaseData parse_case(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(errc::parse_error, path + ": cannot open");
    std::string head(512, '\0');
    in.read(head.data(), static_cast<std::streamsize>(head.size()));
    const bool matpower = head.find("mpc.baseMVA") != std::string::npos ||
                          head.find("function mpc") != std::string::npos;
    in.clear();
    in.seekg(0);
    return matpower ? io_detail::parse_matpower_case(path, in)
                    : io_detail::parse_native_case(path, in);
}

/// Multiply every load by `factor` (applied to both P and Q).
inline std::vector<LoadSpec> scale_loads(std::vector<LoadSpec> loads, double factor) {
    if (factor <= 0.0) throw std::invalid_argument("scale factor must be positive");
    for (LoadSpec& l : loads) {
        l.p0 *= factor;
        l.q0 *= factor;
    }
    return loads;
}

/// Re-tag constant-power records with a ZIP coefficient set.
inline std::vector<LoadSpec> with_zip_model(std::vector<LoadSpec> loads, const ZipCoefficients& c) {
    for (LoadSpec& l : loads) {
        l.model = LoadModel::zip;
        l.zip = c;
    }
    return loads;
}

/// Native-format serialization (p.u. units). parse_case of the output
/// reproduces the in-memory model exactly.
inline std::string serialize_case(const CaseData& data) {
    std::ostringstream os;
    const auto num = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return std::string(buf);
    };
    os << "case " << (data.name.empty() ? "unnamed" : data.name) << "\n";
    os << "units impedance=pu power=pu\n";
    os << "base mva=" << num(data.network.base_mva()) << " kv=" << num(data.network.base_kv()) << "\n";
    for (const Bus& b : data.network.buses()) {
        os << "bus " << b.id;
        if (!b.name.empty()) os << " " << b.name;
        os << "\n";
    }
    for (const Branch& br : data.network.branches())
        os << "branch " << br.parent << " " << br.child << " " << num(br.r) << " " << num(br.x) << "\n";
    for (const LoadSpec& l : data.loads)
        os << "load " << l.bus << " " << num(l.p0) << " " << num(l.q0) << "\n";
    return os.str();
}

inline CaseData parse_case_text(const std::string& text, const std::string& label = "<memory>") {
    std::istringstream in(text);
    return io_detail::parse_native_case(label, in);
}

/// Device catalog plus named bus-load coefficient sets.
struct Catalog {
    std::vector<DeviceSpec> devices;
    std::map<std::string, ZipCoefficients> load_models;

    const DeviceSpec& find_device(const std::string& name) const {
        for (const DeviceSpec& d : devices)
            if (d.name == name) return d;
        fail(errc::parse_error, "unknown device '" + name + "'");
    }
    const ZipCoefficients& find_load_model(const std::string& name) const {
        const auto it = load_models.find(name);
        if (it == load_models.end()) fail(errc::parse_error, "unknown load model '" + name + "'");
        return it->second;
    }
};

namespace io_detail {

inline ZipCoefficients zip_from_json(const nlohmann::json& j, const std::string& label) {
    ZipCoefficients c;
    c.alpha_p = j.at("alpha_p").get<double>();
    c.beta_p = j.at("beta_p").get<double>();
    c.gamma_p = j.at("gamma_p").get<double>();
    c.alpha_q = j.at("alpha_q").get<double>();
    c.beta_q = j.at("beta_q").get<double>();
    c.gamma_q = j.at("gamma_q").get<double>();
    if (!c.valid())
        fail(errc::coefficient_sum_error, label + ": ZIP triples must each sum to 1");
    return c;
}

}  // namespace io_detail

inline Catalog parse_device_catalog(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(errc::parse_error, path + ": cannot open");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        fail(errc::parse_error, path + ": " + e.what());
    }
    Catalog cat;
    try {
        for (const auto& d : j.at("devices")) {
            DeviceSpec dev;
            dev.name = d.at("name").get<std::string>();
            dev.p_per_device_kw = d.at("p_kw").get<double>();
            dev.q_per_device_kvar = d.at("q_kvar").get<double>();
            if (dev.p_per_device_kw <= 0.0)
                fail(errc::nonpositive_power, dev.name + ": p_kw must be positive");
            if (dev.q_per_device_kvar < 0.0)
                fail(errc::nonpositive_power, dev.name + ": q_kvar must be nonnegative");
            dev.zip = io_detail::zip_from_json(d.at("zip"), dev.name);
            cat.devices.push_back(std::move(dev));
        }
        if (j.contains("load_models"))
            for (const auto& [name, body] : j.at("load_models").items())
                cat.load_models[name] = io_detail::zip_from_json(body, name);
    } catch (const nlohmann::json::exception& e) {
        fail(errc::parse_error, path + ": " + e.what());
    }
    return cat;
}

/// Deterministic CSV of one or more voltage profiles, bus-major.
inline std::string voltage_csv(const std::vector<std::pair<std::string, const VoltageSolution*>>& cols) {
    std::ostringstream os;
    os << "bus";
    for (const auto& [label, sol] : cols) os << "," << label;
    os << "\n";
    if (cols.empty()) return os.str();
    const std::size_t n = cols.front().second->v.size();
    char buf[32];
    for (std::size_t i = 0; i < n; ++i) {
        os << (i + 1);
        for (const auto& [label, sol] : cols) {
            std::snprintf(buf, sizeof buf, "%.9f", sol->v[i]);
            os << "," << buf;
        }
        os << "\n";
    }
    return os.str();
}

/// Two-column gnuplot data: bus index and voltage (p.u.).
inline std::string plot_data(const VoltageSolution& sol) {
    std::ostringstream os;
    char buf[32];
    for (std::size_t i = 0; i < sol.v.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.9f", sol.v[i]);
        os << (i + 1) << " " << buf << "\n";
    }
    return os.str();
}

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(errc::parse_error, path + ": cannot write");
    out << content;
}

}  // namespace distflow
