#include <gtest/gtest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/airy.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <limits>
#include <numbers>

#include "ratchet/special.hpp"

namespace sp = ratchet::special;

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kInf = std::numeric_limits<double>::infinity();

// Reference values from tests/oracles/airy_oracle.py (mpmath, 40 digits).
struct AiryRef {
  double x, ai, aip, bi, bip;
};
constexpr AiryRef kAiryRefs[] = {
    {0.0, 0.35502805388781723926, -0.25881940379280679841,
     0.61492662744600073515, 0.44828835735382635791},
    {0.5, 0.23169360648083348977, -0.22491053266468389314,
     0.8542770431031554933, 0.54457256414059230183},
    {1.0, 0.13529241631288141552, -0.15914744129679321279,
     1.2074235949528712594, 0.93243593339277563296},
    {2.0, 0.034924130423274379135, -0.053090384433653631704,
     3.2980949999782147103, 4.1006820499328898894},
    {5.0, 0.00010834442813607441735, -0.000247413890868462476,
     657.79204417117118244, 1435.8190802179825187},
    {8.0, 4.6922076160992316256e-8, -1.3414392979067865743e-7,
     1199586.0041244599309, 3354342.3127445388765},
    {10.0, 1.1047532552898685934e-10, -3.5206336767389236366e-10,
     455641153.548225141, 1429236134.4828657761},
    {12.0, 1.393184688875360839e-13, -4.854736554985308463e-13,
     329807225829.07417618, 1135507502443.3707424},
    {25.0, 8.1160268246913866838e-38, -4.0660893372432810053e-37,
     3.9220307780413817738e+35, 1.957073508323330897e+36},
    {40.0, 6.3657426585529149096e-75, -4.0300179776006780423e-74,
     3.9531393024385935335e+72, 2.497707968170696875e+73},
};

double rel_err(double got, double want) {
  return std::fabs(got - want) / std::fabs(want);
}

double second_difference(double (*f)(double), double x, double h) {
  return (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h);
}

double ai_of(double x) { return sp::airy(x).ai; }
double bi_of(double x) { return sp::airy(x).bi; }
double gi_of(double x) { return sp::scorer_gi(x); }

template <class F>
double boost_integral(F f, double a, double b) {
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
      f, a, b, 15, 1e-14);
}

}  // namespace

TEST(Gamma, LanczosMatchesReflectionFormula) {
  const auto& g = sp::gamma_thirds();
  EXPECT_NEAR(g.one_third * g.two_thirds, kPi / std::sin(kPi / 3.0), 1e-13);
  EXPECT_NEAR(g.one_third, 2.6789385347077476337, 1e-13);
  EXPECT_NEAR(g.two_thirds, 1.3541179394264004169, 1e-13);
  for (double z : {0.1, 0.7, 1.5, 4.25, 10.0})
    EXPECT_LT(rel_err(sp::lanczos_gamma(z), boost::math::tgamma(z)), 1e-13);
}

TEST(Airy, OriginClosedForms) {
  const auto a = sp::airy(0.0);
  EXPECT_NEAR(a.ai, 0.35502805388781723926, 1e-15);
  EXPECT_NEAR(a.ai_prime, -0.25881940379280679841, 1e-15);
  EXPECT_NEAR(a.bi, std::numbers::sqrt3 * a.ai, 1e-15);
  EXPECT_NEAR(a.bi_prime, -std::numbers::sqrt3 * a.ai_prime, 1e-15);
  EXPECT_NEAR(a.bi, 0.6149266274460007, 1e-15);
  EXPECT_NEAR(a.bi_prime, 0.4482883573538264, 1e-15);
}

TEST(Airy, MatchesHighPrecisionReference) {
  for (const auto& ref : kAiryRefs) {
    const auto a = sp::airy(ref.x);
    const double tol = ref.x <= 10.0 ? 1e-10 : 1e-8;
    EXPECT_LT(rel_err(a.ai, ref.ai), tol) << "x=" << ref.x;
    EXPECT_LT(rel_err(a.ai_prime, ref.aip), tol) << "x=" << ref.x;
    EXPECT_LT(rel_err(a.bi, ref.bi), tol) << "x=" << ref.x;
    EXPECT_LT(rel_err(a.bi_prime, ref.bip), tol) << "x=" << ref.x;
  }
}

TEST(Airy, MatchesBoostOnDenseGrid) {
  for (double x = 0.0; x <= 40.0; x += 0.173) {
    const auto a = sp::airy(x);
    const double tol = x <= 10.0 ? 1e-10 : 1e-8;
    EXPECT_LT(rel_err(a.ai, boost::math::airy_ai(x)), tol) << x;
    EXPECT_LT(rel_err(a.ai_prime, boost::math::airy_ai_prime(x)), tol) << x;
    EXPECT_LT(rel_err(a.bi, boost::math::airy_bi(x)), tol) << x;
    EXPECT_LT(rel_err(a.bi_prime, boost::math::airy_bi_prime(x)), tol) << x;
  }
}

TEST(Airy, WronskianIsOneOverPi) {
  for (int i = 0; i < 100; ++i) {
    const double x = 10.0 * i / 99.0;
    const auto a = sp::airy(x);
    EXPECT_NEAR(a.bi_prime * a.ai - a.ai_prime * a.bi, 1.0 / kPi, 1e-10) << x;
  }
}

TEST(Airy, BranchesAgreeAtSwitchPoints) {
  // series/table switch for Ai at 1, table/asymptotic switch at 12
  for (double x : {1.0, 12.0}) {
    const auto below = sp::airy(std::nextafter(x, 0.0));
    const auto above = sp::airy(std::nextafter(x, 100.0));
    EXPECT_LT(rel_err(below.ai, above.ai), 1e-12);
    EXPECT_LT(rel_err(below.bi, above.bi), 1e-12);
  }
}

TEST(Airy, SolvesTheAiryEquation) {
  const double h = 1e-3;
  for (double x = 0.25; x <= 5.0; x += 0.25) {
    EXPECT_NEAR(second_difference(ai_of, x, h), x * ai_of(x), 1e-6) << x;
    // Bi grows like exp(2x^{3/2}/3); its residual is measured relative to Bi.
    const double bi_residual =
        second_difference(bi_of, x, 1e-4) / bi_of(x) - x;
    EXPECT_LE(std::fabs(bi_residual), 1e-6) << x;
  }
}

TEST(Airy, MonotoneAndPositive) {
  double prev_ai = kInf;
  double prev_bi = 0.0;
  for (double x = 0.0; x <= 20.0; x += 0.05) {
    const auto a = sp::airy(x);
    EXPECT_GT(a.ai, 0.0);
    EXPECT_GT(a.bi, 0.0);
    EXPECT_LT(a.ai, prev_ai);
    EXPECT_GT(a.bi, prev_bi);
    prev_ai = a.ai;
    prev_bi = a.bi;
  }
}

TEST(Airy, LargeArgumentAsymptotics) {
  const double x = 25.0;
  const double leading = 0.5 / std::sqrt(kPi) * std::pow(x, -0.25) *
                         std::exp(-2.0 * std::pow(x, 1.5) / 3.0);
  const double ratio = sp::airy(x).ai / leading;
  EXPECT_GE(ratio, 0.99);
  EXPECT_LE(ratio, 1.0);
}

TEST(Airy, RejectsInvalidArguments) {
  EXPECT_THROW(sp::airy(-0.1), std::domain_error);
  EXPECT_THROW(sp::airy(std::nan("")), std::domain_error);
  EXPECT_THROW(sp::airy(kInf), std::domain_error);
}

TEST(Airy, ScaledValuesStayFiniteFarOut) {
  const auto s = sp::airy_scaled(500.0);
  EXPECT_TRUE(std::isfinite(s.ai));
  EXPECT_TRUE(std::isfinite(s.bi));
  EXPECT_NEAR(s.ai * s.bi, 1.0 / (2.0 * kPi * std::sqrt(500.0)), 1e-8);
}

TEST(AiTailIntegral, ReferenceValues) {
  EXPECT_NEAR(sp::ai_tail_integral(0.0), 1.0 / 3.0, 1e-12);
  EXPECT_NEAR(sp::ai_tail_integral(1.0), 0.097015991416223553731, 1e-12);
  EXPECT_NEAR(sp::ai_tail_integral(2.0), 0.020800577552653641681, 1e-12);
  EXPECT_NEAR(sp::ai_tail_integral(5.0), 0.000045743027415453846677, 1e-13);
  EXPECT_LT(rel_err(sp::ai_tail_integral(10.0), 3.4164317390540094304e-11), 1e-8);
  EXPECT_LT(rel_err(sp::ai_tail_integral(20.0), 3.7518121989540651704e-28), 1e-8);
  const double far = sp::ai_tail_integral(40.0);
  EXPECT_GE(far, 0.0);
  EXPECT_LT(far, 1e-100 * 1e30);  // ~1e-75
  EXPECT_LT(rel_err(far, 1.0035569020050349972e-75), 1e-8);
  EXPECT_EQ(sp::ai_tail_integral(2000.0), 0.0);
}

TEST(AiTailIntegral, AgreesWithIndependentQuadrature) {
  for (double x : {0.0, 0.3, 1.7, 2.5, 4.0, 7.0}) {
    const double ref = boost_integral(
        [](double u) { return boost::math::airy_ai(u); }, x, x + 40.0);
    EXPECT_NEAR(sp::ai_tail_integral(x), ref, 1e-10) << x;
  }
  EXPECT_THROW(sp::ai_tail_integral(std::nan("")), std::domain_error);
}

TEST(Scorer, ReferenceValues) {
  const std::pair<double, double> refs[] = {
      {0.0, 0.20497554248200024505}, {0.5, 0.24472104327655819769},
      {1.0, 0.2352184398104379376},  {2.0, 0.16895356565401036277},
      {5.0, 0.064919784093853112432}, {10.0, 0.031896005100679587981},
      {30.0, 0.01061111607319382823}};
  for (auto [x, want] : refs) EXPECT_NEAR(sp::scorer_gi(x), want, 1e-9) << x;
}

TEST(Scorer, OriginCollapsesToAiOverRoot3) {
  const double ai0 = sp::airy(0.0).ai;
  EXPECT_NEAR(sp::scorer_gi(0.0), ai0 / std::numbers::sqrt3, 1e-10);
  EXPECT_NEAR(sp::scorer_gi(0.0), sp::airy(0.0).bi / 3.0, 1e-10);
}

TEST(Scorer, SolvesInhomogeneousEquation) {
  const double h = 1e-4;
  for (double x : {0.5, 1.0, 2.0}) {
    const double residual =
        second_difference(gi_of, x, h) - x * gi_of(x) + 1.0 / kPi;
    EXPECT_LE(std::fabs(residual), 1e-6) << x;
  }
}

TEST(Scorer, AsymptoticBranchIsContinuous) {
  const double below = sp::scorer_gi(std::nextafter(12.0, 0.0));
  const double above = sp::scorer_gi(12.0);
  EXPECT_NEAR(below, above, 1e-11);
}

TEST(Green, PlugInValues) {
  const double ai0 = sp::airy(0.0).ai;
  EXPECT_NEAR(sp::green(0, 0).value, kPi * 2.0 * std::numbers::sqrt3 * ai0 * ai0,
              1e-12);
  EXPECT_NEAR(sp::green(0, 0).value, 1.3717211641984483473, 1e-10);
  EXPECT_NEAR(sp::green(0, 1).value, 0.52272903163468886264, 1e-10);
  EXPECT_NEAR(sp::green(0.3, 1.7).value, 0.21083996639539221751, 1e-10);
  EXPECT_NEAR(sp::green(1, 5).value, 0.00049073666038401430098, 1e-13);
}

TEST(Green, SymmetricAndPositive) {
  EXPECT_EQ(sp::green(0.3, 1.7).value, sp::green(1.7, 0.3).value);
  for (double x = 0.0; x <= 30.0; x += 1.3)
    for (double y = 0.0; y <= 30.0; y += 0.9) {
      const double g = sp::green(x, y).value;
      EXPECT_GT(g, 0.0);
      EXPECT_EQ(g, sp::green(y, x).value);
    }
  EXPECT_THROW(sp::green(-1.0, 0.0), std::domain_error);
  EXPECT_THROW(sp::green(0.0, kInf), std::domain_error);
}

TEST(KillingPosition, DensityVanishesAtZero) {
  for (double x : {0.0, 1.0, 7.0}) EXPECT_EQ(sp::killing_position_density(x, 0.0), 0.0);
}

TEST(KillingPosition, DensityNormalises) {
  for (double x : {0.0, 0.5, 1.0, 2.0, 4.0}) {
    auto f = [x](double y) { return sp::killing_position_density(x, y); };
    const double mass = boost_integral(f, 0.0, x) + boost_integral(f, x, x + 40.0);
    EXPECT_NEAR(mass, 1.0, 1e-6) << x;
  }
}

TEST(KillingPosition, ClosedFormCdfMatchesQuadrature) {
  // oracle: mpmath quadrature of y G(1, y)
  const std::pair<double, double> refs[] = {{0.5, 0.065887058147267096095},
                                            {1.0, 0.27915551178542592294},
                                            {2.0, 0.75953172300883751028},
                                            {4.0, 0.99112850623395798572}};
  for (auto [y, want] : refs) {
    EXPECT_NEAR(sp::killing_position_cdf(1.0, y), want, 1e-10) << y;
    EXPECT_NEAR(sp::killing_position_survival(1.0, y), 1.0 - want, 1e-10) << y;
  }
  for (double x : {0.0, 3.0, 10.0}) {
    EXPECT_NEAR(sp::killing_position_cdf(x, 0.0), 0.0, 1e-12);
    EXPECT_NEAR(sp::killing_position_survival(x, x + 60.0), 0.0, 1e-12);
  }
}

TEST(JumpPosition, ClosedForm) {
  EXPECT_NEAR(sp::expected_jump_position(0.0), 1.3717211641984483473, 1e-10);
  EXPECT_NEAR(sp::expected_jump_position(0.0), sp::green(0, 0).value, 1e-12);
  EXPECT_NEAR(sp::expected_jump_position(1.0), 1.5227290316346888626, 1e-10);
  const double at10 = sp::expected_jump_position(10.0);
  EXPECT_GT(at10, 10.0);
  EXPECT_LT(at10 - 10.0, 1e-8);
  const double excess = 2.0 * kPi * 1.1047532552898685934e-10 * 0.61492662744600073515;
  EXPECT_NEAR(at10 - 10.0, excess, 1e-14);
}

TEST(JumpPosition, MatchesSecondMomentOfGreenFunction) {
  for (double x : {0.0, 1.0}) {
    auto f = [x](double y) { return y * y * sp::green(x, y).value; };
    const double quad = boost_integral(f, 0.0, x) + boost_integral(f, x, x + 40.0);
    EXPECT_NEAR(quad, sp::expected_jump_position(x), 1e-6) << x;
  }
}

TEST(JumpPosition, ExcessDecreasesInX) {
  double prev = kInf;
  for (double x = 0.0; x < 6.0; x += 0.25) {
    const double excess = sp::expected_jump_position(x) - x;
    EXPECT_GT(excess, 0.0);
    EXPECT_LT(excess, prev);
    prev = excess;
  }
}

TEST(JumpPosition, MeanOfKillingDensityAtOrigin) {
  auto f = [](double y) { return y * sp::killing_position_density(0.0, y); };
  EXPECT_NEAR(boost_integral(f, 0.0, 40.0), sp::expected_jump_position(0.0), 1e-6);
}

TEST(JumpTime, ClosedForm) {
  const double ai0 = sp::airy(0.0).ai;
  EXPECT_NEAR(sp::expected_jump_time(0.0), 4.0 * kPi * ai0 / std::numbers::sqrt3,
              1e-10);
  EXPECT_NEAR(sp::expected_jump_time(0.0), 2.5757986337081381744, 1e-9);
  EXPECT_NEAR(sp::expected_jump_time(1.0), 1.9687076423826804365, 1e-9);
  EXPECT_NEAR(sp::expected_jump_time(3.0), 0.74163115962589841427, 1e-9);
  EXPECT_THROW(sp::expected_jump_time(std::nan("")), std::domain_error);
}

TEST(JumpTime, MatchesGreenFunctionMass) {
  for (double x : {0.0, 1.0}) {
    auto f = [x](double y) { return 2.0 * sp::green(x, y).value; };
    const double quad = boost_integral(f, 0.0, x) + boost_integral(f, x, x + 40.0);
    EXPECT_NEAR(quad, sp::expected_jump_time(x), 1e-6) << x;
  }
}

TEST(JumpTime, StationaryAverageIsSixAiZero) {
  auto f = [](double x) {
    return 3.0 * boost::math::airy_ai(x) * sp::expected_jump_time(x);
  };
  const double avg = boost_integral(f, 0.0, 12.0) + boost_integral(f, 12.0, 40.0);
  EXPECT_NEAR(avg, 6.0 * sp::airy(0.0).ai, 1e-6);
  EXPECT_NEAR(avg, 2.1301683233269034356, 1e-6);
}

TEST(InvariantDensity, Values) {
  EXPECT_NEAR(sp::invariant_density(0.0), 1.0650841616634517178, 1e-12);
  auto f = [](double z) { return sp::invariant_density(z); };
  EXPECT_NEAR(boost_integral(f, 0.0, 40.0), 1.0, 1e-10);
  auto m = [](double z) { return z * sp::invariant_density(z); };
  EXPECT_NEAR(boost_integral(m, 0.0, 40.0), 0.77645821137842039522, 1e-10);
  EXPECT_NEAR(boost_integral(m, 0.0, 40.0), -3.0 * sp::airy(0.0).ai_prime, 1e-10);
  double prev = kInf;
  for (double z = 0.0; z < 20.0; z += 0.1) {
    EXPECT_LT(sp::invariant_density(z), prev);
    prev = sp::invariant_density(z);
  }
  EXPECT_NEAR(sp::invariant_cdf(0.0), 0.0, 1e-12);
  EXPECT_NEAR(sp::invariant_cdf(30.0), 1.0, 1e-12);
}

TEST(AsymptoticConstants, SpeedAndSigma) {
  const auto c1 = sp::asymptotic_constants(1.0);
  EXPECT_NEAR(c1.speed, 0.459248, 1e-6);
  EXPECT_NEAR(c1.speed, 0.45924823600396058988, 1e-13);
  EXPECT_NEAR(c1.sigma_conjectured, 0.60281, 1e-5);
  EXPECT_NEAR(sp::asymptotic_constants(8.0).speed / c1.speed, 2.0, 1e-14);
  EXPECT_EQ(sp::asymptotic_constants(4.0).sigma_conjectured, c1.sigma_conjectured);
  EXPECT_THROW(sp::asymptotic_constants(0.0), std::domain_error);
  EXPECT_THROW(sp::asymptotic_constants(-1.0), std::domain_error);
}

TEST(AsymptoticConstants, HalfGammaEqualsStationaryRatio) {
  const auto a = sp::airy(0.0);
  const double speed = sp::asymptotic_constants(0.5).speed;
  EXPECT_NEAR(speed, 0.364505, 1e-6);
  EXPECT_NEAR(speed, -a.ai_prime / (2.0 * a.ai), 1e-10);
  EXPECT_NEAR(speed, (-3.0 * a.ai_prime) / (6.0 * a.ai), 1e-10);
}

TEST(GammaUnits, RescalesHalfGammaAnalytics) {
  const sp::GammaUnits half(0.5);
  EXPECT_DOUBLE_EQ(half.length(), 1.0);
  EXPECT_DOUBLE_EQ(half.expected_jump_time(0.7), sp::expected_jump_time(0.7));
  const sp::GammaUnits four(4.0);
  EXPECT_NEAR(four.length(), 0.5, 1e-15);
  EXPECT_NEAR(four.time(), 0.25, 1e-15);
  // stationary mean gap over mean waiting time reproduces C_gamma
  const auto a = sp::airy(0.0);
  const double ratio = four.length() * (-3.0 * a.ai_prime) / (four.time() * 6.0 * a.ai);
  EXPECT_NEAR(ratio, sp::asymptotic_constants(4.0).speed, 1e-12);
}
