#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "support.hpp"

using namespace distflow;

TEST_CASE("zip_power") {
    const ZipCoefficients c{0.2, 0.3, 0.5, 0.4, 0.1, 0.5};
    const LoadSpec load = LoadSpec::zip_load(2, 1.0, 0.5, c);

    SECTION("nominal voltage gives the base load for any valid coefficients") {
        const complex_t s = zip_power(load, 1.0);
        CHECK(s.real() == Catch::Approx(1.0).epsilon(1e-14));
        CHECK(s.imag() == Catch::Approx(0.5).epsilon(1e-14));
    }
    SECTION("alpha=1 degenerates to constant power") {
        const LoadSpec cp = LoadSpec::zip_load(2, 1.0, 0.5, ZipCoefficients{});
        const complex_t s = zip_power(cp, 0.87);
        CHECK(s.real() == 1.0);
        CHECK(s.imag() == 0.5);
    }
    SECTION("hand-evaluated quadratic") {
        // 0.2 + 0.3*0.95 + 0.5*0.95^2
        const complex_t s = zip_power(load, 0.95);
        CHECK(s.real() == Catch::Approx(0.93625).epsilon(1e-14));
    }
    SECTION("nonpositive voltage is rejected") {
        CHECK_THROWS_AS(zip_power(load, 0.0), error);
        CHECK_THROWS_AS(zip_power(load, -1.0), error);
    }
}

TEST_CASE("to_zp") {
    SECTION("constant power is a fixed point") {
        const ZpCoefficients z = to_zp(ZipCoefficients{1, 0, 0, 1, 0, 0});
        CHECK(z.alpha_p == 1.0);
        CHECK(z.gamma_p == 0.0);
    }
    SECTION("pure constant current splits evenly") {
        const ZpCoefficients z = to_zp(ZipCoefficients{0, 1, 0, 0, 1, 0});
        CHECK(z.alpha_p == 0.5);
        CHECK(z.gamma_p == 0.5);
    }
    SECTION("direct formula") {
        const ZpCoefficients z = to_zp(ZipCoefficients{0.2, 0.3, 0.5, 0.2, 0.3, 0.5});
        CHECK(z.alpha_p == Catch::Approx(0.35).epsilon(1e-14));
        CHECK(z.gamma_p == Catch::Approx(0.65).epsilon(1e-14));
    }
    SECTION("pairs keep summing to 1") {
        std::mt19937 rng(7);
        for (int i = 0; i < 50; ++i) {
            const ZipCoefficients c = testsupport::random_zip(rng, false);
            const ZpCoefficients z = to_zp(c);
            CHECK(z.alpha_p + z.gamma_p == Catch::Approx(1.0).margin(1e-12));
            CHECK(z.alpha_q + z.gamma_q == Catch::Approx(1.0).margin(1e-12));
        }
    }
}

TEST_CASE("zp_power") {
    const ZpCoefficients z{0.35, 0.65, 0.35, 0.65};
    SECTION("nominal identity") {
        const complex_t s = zp_power(1.0, 0.5, z, 1.0);
        CHECK(s.real() == Catch::Approx(1.0).epsilon(1e-14));
        CHECK(s.imag() == Catch::Approx(0.5).epsilon(1e-14));
    }
    SECTION("gamma'=0 is voltage independent") {
        const ZpCoefficients cp{0.35, 0.0, 0.35, 0.0};
        CHECK(zp_power(1.0, 0.0, cp, 0.5).real() == Catch::Approx(0.35));
        CHECK(zp_power(1.0, 0.0, cp, 1.3).real() == Catch::Approx(0.35));
    }
    SECTION("direct evaluation at u = 0.95^2") {
        const complex_t s = zp_power(1.0, 0.0, z, 0.9025);
        CHECK(s.real() == Catch::Approx(0.35 + 0.65 * 0.9025).epsilon(1e-14));
    }
    SECTION("nonpositive squared voltage is rejected") {
        CHECK_THROWS_AS(zp_power(1.0, 0.0, z, 0.0), error);
    }
}

TEST_CASE("zip/zp gap is exactly -beta/2 * (v-1)^2 per unit of base power") {
    std::mt19937 rng(99);
    std::uniform_real_distribution<double> vd(0.9, 1.1);
    for (int i = 0; i < 100; ++i) {
        const ZipCoefficients c = testsupport::random_zip(rng, i % 3 == 0);
        const double v = vd(rng);
        const LoadSpec l = LoadSpec::zip_load(2, 1.7, 0.9, c);
        const complex_t zipv = zip_power(l, v);
        const complex_t zpv = zp_power(l.p0, l.q0, to_zp(c), v * v);
        const double gap_p = zipv.real() - zpv.real();
        const double expect_p = -l.p0 * c.beta_p / 2.0 * (v - 1.0) * (v - 1.0);
        CHECK(gap_p == Catch::Approx(expect_p).margin(1e-12));
        if (c.beta_p == 0.0) CHECK(gap_p == Catch::Approx(0.0).margin(1e-15));
    }
}

TEST_CASE("attack_injection") {
    DeviceSpec ac;
    ac.name = "ac";
    ac.p_per_device_kw = 0.5;
    ac.q_per_device_kvar = 0.128;
    ac.zip = ZipCoefficients{1.66, -1.83, 1.17, 12.47, -27.15, 15.68};

    SECTION("zero count is rejected") {
        CHECK_THROWS_AS(attack_injection(ac, 0, 1.0, LoadModel::cp, 100.0), error);
    }
    SECTION("one cp device") {
        const complex_t s = attack_injection(ac, 1, 0.93, LoadModel::cp, 100.0);
        CHECK(s.real() == Catch::Approx(0.5 / 1000.0 / 100.0).epsilon(1e-14));
        CHECK(s.imag() == Catch::Approx(0.128 / 1000.0 / 100.0).epsilon(1e-14));
    }
    SECTION("zip at nominal voltage equals cp") {
        const complex_t cp = attack_injection(ac, 40, 1.0, LoadModel::cp, 100.0);
        const complex_t zip = attack_injection(ac, 40, 1.0, LoadModel::zip, 100.0);
        CHECK(zip.real() == Catch::Approx(cp.real()).epsilon(1e-12));
        CHECK(zip.imag() == Catch::Approx(cp.imag()).epsilon(1e-12));
    }
    SECTION("linear in count at fixed voltage") {
        const complex_t one = attack_injection(ac, 1, 0.95, LoadModel::zip, 100.0);
        const complex_t many = attack_injection(ac, 250, 0.95, LoadModel::zip, 100.0);
        CHECK(many.real() == Catch::Approx(250.0 * one.real()).epsilon(1e-12));
        CHECK(many.imag() == Catch::Approx(250.0 * one.imag()).epsilon(1e-12));
    }
}
