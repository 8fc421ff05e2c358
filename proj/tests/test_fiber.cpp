#include <gtest/gtest.h>

#include <cmath>

#include "uwbnli/fiber.hpp"

using namespace uwbnli;

namespace {

FiberSpec flat_fiber(double db_per_km) {
    FiberSpec f;
    f.loss_db_per_km = LinearTable({150.0, 250.0}, {db_per_km, db_per_km});
    return f;
}

} // namespace

TEST(Attenuation, FlatCurveConvertsToFieldNepers) {
    const auto f = flat_fiber(0.2);
    EXPECT_NEAR(attenuation(f, 193.4), 0.2 / 8.685889638, 1e-12);
    EXPECT_NEAR(attenuation(f, 193.4), 0.023026, 1e-6);
}

TEST(Attenuation, InterpolatesLinearly) {
    FiberSpec f;
    f.loss_db_per_km = LinearTable({191.0, 196.0}, {0.20, 0.18});
    EXPECT_NEAR(attenuation(f, 193.5), 0.19 / kDbPerFieldNeper, 1e-15);
}

TEST(Attenuation, RefusesToExtrapolate) {
    FiberSpec f;
    f.loss_db_per_km = LinearTable({191.0, 196.0}, {0.20, 0.18});
    EXPECT_THROW(attenuation(f, 190.0), RangeError);
    EXPECT_THROW(attenuation(FiberSpec{}, 300.0), RangeError);
}

TEST(EffectiveArea, MarcuseAtReferenceFrequency) {
    const MarcuseParams m{0.124, 4.1};
    // 2 pi 4.1e-6 0.124 193.4e12 / c
    EXPECT_NEAR(v_number(m, 193.4), 2.0607, 5e-5);
    const double v = 2.0 * kPi * 4.1e-6 * 0.124 * 193.4e12 / 2.99792458e8;
    const double w = 4.1 * (0.65 + 1.619 * std::pow(v, -1.5) + 2.879 * std::pow(v, -6.0));
    EXPECT_NEAR(effective_area(FiberSpec{}, 193.4), kPi * w * w, 1e-9);
    EXPECT_NEAR(effective_area(FiberSpec{}, 193.4), 80.53, 0.01);
}

TEST(EffectiveArea, TableReturnsGridValues) {
    FiberSpec f;
    f.effective_area = LinearTable({180.0, 200.0, 240.0}, {90.0, 80.0, 60.0});
    EXPECT_EQ(effective_area(f, 200.0), 80.0);
    EXPECT_EQ(effective_area(f, 190.0), 85.0);
}

TEST(EffectiveArea, MarcuseDecreasesWithFrequency) {
    const FiberSpec f;
    double prev = effective_area(f, 180.0);
    for (double x = 180.1; x <= 240.0; x += 0.1) {
        const double a = effective_area(f, x);
        EXPECT_LT(a, prev) << x;
        prev = a;
    }
}

TEST(EffectiveArea, NoJumpsBetweenGigahertzNeighbours) {
    const FiberSpec f;
    double prev = effective_area(f, 179.0);
    for (int k = 1; k <= 59000; ++k) {
        const double a = effective_area(f, 179.0 + 1e-3 * k);
        ASSERT_LT(std::abs(a - prev), 0.1);
        prev = a;
    }
}

TEST(EffectiveArea, RejectsNonPositiveV) {
    FiberSpec f;
    f.effective_area = MarcuseParams{0.124, 4.1};
    EXPECT_THROW(effective_area(f, 0.0), RangeError);
}

TEST(Gamma, MatchesHandValueForEightySquareMicrons) {
    // (2 pi 193.4e12 / c) * 5.2e-20 / 1.6e-10 -> 1/(W m), times 1e3
    const double g = gamma_from_areas(2.6e-20, 193.4, 80.0, 80.0);
    EXPECT_NEAR(g, 1.3173, 5e-4);
    EXPECT_NEAR(g, 2.0 * kPi * 193.4e12 / 2.99792458e8 * 5.2e-20 / 1.6e-10 * 1e3, 1e-12);
}

TEST(Gamma, FrequencyRatioIdentity) {
    const FiberSpec f;
    for (double fn : {185.0, 193.4, 210.0})
        for (double fm : {181.0, 199.0, 220.0})
            EXPECT_NEAR(gamma(f, fn, fm) / fn, gamma(f, fm, fn) / fm, 1e-15 * gamma(f, fn, fm) / fn);
}

TEST(Gamma, ZeroAndPositiveNonlinearIndex) {
    FiberSpec f;
    EXPECT_GT(gamma(f, 193.4, 200.0), 0.0);
    f.n2 = 0.0;
    EXPECT_EQ(gamma(f, 193.4, 200.0), 0.0);
}

TEST(EffectiveBeta2, ReducesToBeta2AtReference) {
    const FiberSpec f;
    EXPECT_EQ(effective_beta2(f, 193.4, 193.4), f.beta2);
    FiberSpec g;
    g.beta3 = 0.0;
    g.beta4 = 0.0;
    EXPECT_EQ(effective_beta2(g, 181.0, 215.0), g.beta2);
}

TEST(EffectiveBeta2, ThirdOrderHandValue) {
    FiberSpec f;
    f.beta2 = 0.0;
    f.beta3 = 0.1;
    f.beta4 = 0.0;
    EXPECT_NEAR(effective_beta2(f, 194.4, 194.4), 0.6283, 5e-5);
}

TEST(EffectiveBeta2, SymmetricInPair) {
    const FiberSpec f;
    for (double a = 180.0; a < 238.0; a += 3.7)
        for (double b = 181.0; b < 238.0; b += 5.3) EXPECT_EQ(effective_beta2(f, a, b), effective_beta2(f, b, a));
}

TEST(RamanGain, ZeroShiftIsZero) {
    RamanModel p;
    EXPECT_EQ(raman_gain(p, 193.4, 0.0), 0.0);
    RamanModel m;
    m.form = RamanModel::Measured{{190.0, 200.0}, {0.0, 13.0, 40.0}, {0.0, 0.4, 0.0, 0.0, 0.5, 0.0}};
    EXPECT_EQ(raman_gain(m, 195.0, 0.0), 0.0);
}

TEST(RamanGain, ParametricPeakAtReference) {
    const RamanModel p;
    EXPECT_DOUBLE_EQ(raman_gain(p, defaults::kRamanReferencePump, defaults::kRamanPeakShift), defaults::kRamanPeakValue);
}

TEST(RamanGain, LinearInPumpScaling) {
    const RamanModel p;
    EXPECT_GT(raman_gain(p, 200.0, 10.0), raman_gain(p, 190.0, 10.0));
    EXPECT_NEAR(raman_gain(p, 200.0, 10.0) / raman_gain(p, 190.0, 10.0), 200.0 / 190.0, 1e-14);
    RamanModel n;
    n.scaling = RamanScaling::None;
    EXPECT_EQ(raman_gain(n, 200.0, 10.0), raman_gain(n, 190.0, 10.0));
}

TEST(RamanGain, OutsideSupportIsZero) {
    const RamanModel p;
    EXPECT_EQ(raman_gain(p, 193.4, 60.0), 0.0);
}

TEST(RamanGain, MeasuredBilinear) {
    RamanModel m;
    m.scaling = RamanScaling::None;
    m.form = RamanModel::Measured{{190.0, 200.0}, {0.0, 10.0, 20.0}, {0.0, 0.4, 0.2, 0.0, 0.6, 0.4}};
    EXPECT_NEAR(raman_gain(m, 195.0, 5.0), 0.5 * (0.2 + 0.3), 1e-15);
    EXPECT_NEAR(raman_gain(m, 190.0, 10.0), 0.4, 1e-15);
    EXPECT_NEAR(raman_gain(m, 185.0, 10.0), 0.4, 1e-15); // nearest row
    EXPECT_EQ(raman_gain(m, 195.0, 25.0), 0.0);
}

TEST(RamanGain, NonNegativeOverSupport) {
    const RamanModel p;
    for (double d = 0.0; d < 50.0; d += 0.05) EXPECT_GE(raman_gain(p, 193.4, d), 0.0);
}

TEST(FiberValidation, RejectsBadSpecs) {
    FiberSpec f;
    EXPECT_NO_THROW(validate(f));
    f.length_km = 0.0;
    EXPECT_THROW(validate(f), InvariantError);
    f = FiberSpec{};
    f.n2 = 0.0;
    EXPECT_THROW(validate(f), InvariantError);
    f = FiberSpec{};
    f.effective_area = MarcuseParams{0.0, 4.1};
    EXPECT_THROW(validate(f), InvariantError);
    f = FiberSpec{};
    f.loss_db_per_km = LinearTable({190.0, 200.0}, {0.2, 0.0});
    EXPECT_THROW(validate(f), InvariantError);
    f = FiberSpec{};
    f.raman.form = RamanModel::Measured{{190.0}, {0.0, 10.0}, {0.1, 0.4}};
    EXPECT_THROW(validate(f), InvariantError);
}
