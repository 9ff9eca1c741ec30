#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <fstream>

#include "support.hpp"

using namespace distflow;
using testsupport::data_path;

namespace {

std::string write_temp(const std::string& name, const std::string& content) {
    const std::string path = "io_tmp_" + name;
    std::ofstream out(path, std::ios::binary);
    out << content;
    return path;
}

}  // namespace

TEST_CASE("native fixture parses with the expected totals") {
    const CaseData d = parse_case(data_path("ieee33.case"));
    REQUIRE(d.network.bus_count() == 33);
    REQUIRE(d.network.branches().size() == 32);
    CHECK(d.name == "ieee33");
    double p = 0.0, q = 0.0;
    for (const LoadSpec& l : d.loads) {
        p += l.p0;
        q += l.q0;
        CHECK(l.model == LoadModel::cp);
    }
    // 3715 kW + j2300 kVAr on a 100 MVA base
    CHECK(p == Catch::Approx(0.03715).epsilon(1e-12));
    CHECK(q == Catch::Approx(0.02300).epsilon(1e-12));
    // ohm -> p.u. conversion of the first branch
    CHECK(d.network.branch_impedance(2).r == Catch::Approx(0.0922 / (12.66 * 12.66 / 100.0)).epsilon(1e-12));
}

TEST_CASE("matpower-style fixture parses to the same model") {
    const CaseData native = parse_case(data_path("ieee33.case"));
    const CaseData mp = parse_case(data_path("case33bw.m"));
    REQUIRE(mp.network.bus_count() == native.network.bus_count());
    REQUIRE(mp.network.base_mva() == native.network.base_mva());
    REQUIRE(mp.network.base_kv() == native.network.base_kv());
    for (int bus = 2; bus <= 33; ++bus) {
        CHECK(mp.network.branch_impedance(bus).r ==
              Catch::Approx(native.network.branch_impedance(bus).r).epsilon(1e-9));
        CHECK(mp.network.branch_impedance(bus).x ==
              Catch::Approx(native.network.branch_impedance(bus).x).epsilon(1e-9));
    }
    REQUIRE(mp.loads.size() == native.loads.size());
    for (std::size_t i = 0; i < mp.loads.size(); ++i) {
        CHECK(mp.loads[i].bus == native.loads[i].bus);
        CHECK(mp.loads[i].p0 == Catch::Approx(native.loads[i].p0).epsilon(1e-9));
    }
}

TEST_CASE("case parse failures") {
    SECTION("missing units header") {
        const std::string text = "case t\nbase mva=1 kv=1\nbus 1\nbus 2\nbranch 1 2 0.1 0.1\n";
        try {
            parse_case_text(text);
            FAIL("expected unit_ambiguity");
        } catch (const error& e) {
            CHECK(e.code() == errc::unit_ambiguity);
        }
    }
    SECTION("empty branch table is not radial") {
        const std::string text =
            "units impedance=pu power=pu\nbase mva=1 kv=1\nbus 1\nbus 2\nbus 3\nload 2 0.1 0.1\n";
        try {
            parse_case_text(text);
            FAIL("expected non_radial");
        } catch (const error& e) {
            CHECK(e.code() == errc::non_radial);
        }
    }
    SECTION("branch referencing an unknown bus") {
        const std::string text =
            "units impedance=pu power=pu\nbase mva=1 kv=1\nbus 1\nbus 2\nbranch 1 7 0.1 0.1\n";
        try {
            parse_case_text(text);
            FAIL("expected parse_error");
        } catch (const error& e) {
            CHECK(e.code() == errc::parse_error);
        }
    }
    SECTION("malformed number reports line position") {
        const std::string text =
            "units impedance=pu power=pu\nbase mva=1 kv=1\nbus 1\nbus 2\nbranch 1 2 abc 0.1\n";
        try {
            parse_case_text(text, "case.txt");
            FAIL("expected parse_error");
        } catch (const error& e) {
            CHECK(e.code() == errc::parse_error);
            CHECK(std::string(e.what()).find("case.txt:5") != std::string::npos);
        }
    }
}

TEST_CASE("round trip: parse -> serialize -> parse is the identity") {
    CaseData d = parse_case(data_path("ieee33.case"));
    d.loads = scale_loads(std::move(d.loads), 0.5);
    const std::string text = serialize_case(d);
    const CaseData again = parse_case_text(text);

    REQUIRE(again.network.bus_count() == d.network.bus_count());
    REQUIRE(again.network.base_mva() == d.network.base_mva());
    REQUIRE(again.network.base_kv() == d.network.base_kv());
    for (int bus = 2; bus <= d.network.bus_count(); ++bus) {
        REQUIRE(again.network.parent_of(bus) == d.network.parent_of(bus));
        REQUIRE(again.network.branch_impedance(bus).r == d.network.branch_impedance(bus).r);
        REQUIRE(again.network.branch_impedance(bus).x == d.network.branch_impedance(bus).x);
    }
    REQUIRE(again.loads.size() == d.loads.size());
    for (std::size_t i = 0; i < d.loads.size(); ++i) {
        REQUIRE(again.loads[i].bus == d.loads[i].bus);
        REQUIRE(again.loads[i].p0 == d.loads[i].p0);
        REQUIRE(again.loads[i].q0 == d.loads[i].q0);
    }
}

TEST_CASE("device catalog") {
    SECTION("shipped catalog loads") {
        const Catalog cat = parse_device_catalog(data_path("devices.json"));
        REQUIRE(cat.devices.size() == 3);
        const DeviceSpec& ac = cat.find_device("air_conditioner");
        CHECK(ac.p_per_device_kw == 0.5);
        CHECK(ac.zip.alpha_q == Catch::Approx(12.47));
        CHECK(cat.load_models.count("residential-type-F") == 1);
        CHECK_THROWS_AS(cat.find_device("toaster"), error);
    }
    SECTION("coefficient sum must be 1") {
        const std::string path = write_temp("badsum.json", R"({"devices":[
            {"name":"d","p_kw":1.0,"q_kvar":0.0,
             "zip":{"alpha_p":0.5,"beta_p":0.3,"gamma_p":0.19,
                    "alpha_q":1.0,"beta_q":0.0,"gamma_q":0.0}}]})");
        try {
            parse_device_catalog(path);
            FAIL("expected coefficient_sum_error");
        } catch (const error& e) {
            CHECK(e.code() == errc::coefficient_sum_error);
        }
        std::remove(path.c_str());
    }
    SECTION("nonpositive device power") {
        const std::string path = write_temp("badp.json", R"({"devices":[
            {"name":"d","p_kw":0.0,"q_kvar":0.0,
             "zip":{"alpha_p":1.0,"beta_p":0.0,"gamma_p":0.0,
                    "alpha_q":1.0,"beta_q":0.0,"gamma_q":0.0}}]})");
        try {
            parse_device_catalog(path);
            FAIL("expected nonpositive_power");
        } catch (const error& e) {
            CHECK(e.code() == errc::nonpositive_power);
        }
        std::remove(path.c_str());
    }
}

TEST_CASE("csv and plot output are deterministic and fixed-format") {
    const CaseData d = parse_case(data_path("ieee33.case"));
    const auto loads = scale_loads(d.loads, 0.5);
    const VoltageSolution sol = solve_ldf_cp(d.network, loads);
    const std::string a = voltage_csv({{"v_pu", &sol}});
    const std::string b = voltage_csv({{"v_pu", &sol}});
    REQUIRE(a == b);
    CHECK(a.substr(0, 9) == "bus,v_pu\n");
    CHECK(a.find("1,1.000000000\n") != std::string::npos);

    const std::string p = plot_data(sol);
    CHECK(p.find("1 1.000000000\n") == 0);
}
