#pragma once

// Airy and Scorer functions on the non-negative half line, and the closed-form
// quantities of the killed reflected Brownian motion that drives the ratchet
// between boundary jumps.
//
// Everything below the "killed process" banner is stated for binding rate
// gamma = 1/2, where the killing rate of the reflected motion at height y is
// y/2. GammaUnits converts to and from a general gamma.

#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "ratchet/quadrature.hpp"

namespace ratchet::special {

// ---------------------------------------------------------------------------
// Gamma function

/// Lanczos approximation (g = 7, 9 terms), ~1e-15 relative on the real line.
inline double lanczos_gamma(double z) {
  static constexpr std::array<double, 9> kCoeff = {
      0.99999999999980993,     676.5203681218851,     -1259.1392167224028,
      771.32342877765313,      -176.61502916214059,   12.507343278686905,
      -0.13857109526572012,    9.9843695780195716e-6, 1.5056327351493116e-7};
  constexpr double pi = std::numbers::pi;
  if (z < 0.5) return pi / (std::sin(pi * z) * lanczos_gamma(1.0 - z));
  z -= 1.0;
  double sum = kCoeff[0];
  for (int i = 1; i < 9; ++i) sum += kCoeff[i] / (z + i);
  const double t = z + 7.5;
  return std::sqrt(2.0 * pi) * std::pow(t, z + 0.5) * std::exp(-t) * sum;
}

struct GammaThirds {
  double one_third;
  double two_thirds;
};

inline const GammaThirds& gamma_thirds() {
  static const GammaThirds values{lanczos_gamma(1.0 / 3.0),
                                  lanczos_gamma(2.0 / 3.0)};
  return values;
}

// ---------------------------------------------------------------------------
// Airy functions

struct AiryBundle {
  double ai;
  double ai_prime;
  double bi;
  double bi_prime;
};

/// Airy values with the exponential factor removed: Ai and Ai' are multiplied
/// by exp(zeta), Bi and Bi' by exp(-zeta), zeta = 2 x^{3/2} / 3.
struct ScaledAiry {
  double ai;
  double ai_prime;
  double bi;
  double bi_prime;
  double zeta;
};

struct AiryOrigin {
  double ai;
  double ai_prime;
  double bi;
  double bi_prime;
};

/// Ai(0), Ai'(0), Bi(0), Bi'(0) from the Gamma-function closed forms.
inline const AiryOrigin& airy_origin() {
  static const AiryOrigin origin = [] {
    const auto& g = gamma_thirds();
    const double ai0 = 1.0 / (std::cbrt(9.0) * g.two_thirds);
    const double aip0 = -1.0 / (std::cbrt(3.0) * g.one_third);
    return AiryOrigin{ai0, aip0, std::numbers::sqrt3 * ai0,
                      -std::numbers::sqrt3 * aip0};
  }();
  return origin;
}

inline double airy_zeta(double x) { return 2.0 / 3.0 * x * std::sqrt(x); }

namespace detail {

inline constexpr double kSeriesLimitAi = 1.0;
inline constexpr double kAsymptoticStart = 12.0;
inline constexpr int kNodesPerUnit = 16;

inline void check_argument(double x, const char* who) {
  if (!std::isfinite(x) || x < 0.0)
    throw std::domain_error(std::string(who) +
                            ": argument must be finite and non-negative");
}

/// The two Maclaurin solutions f, g of u'' = x u with f(0)=1, f'(0)=0,
/// g(0)=0, g'(0)=1, and their derivatives.
struct MaclaurinPair {
  double f, fp, g, gp;
};

inline MaclaurinPair maclaurin(double x) {
  const double x3 = x * x * x;
  double a = 1.0;  // coefficient of x^{3k} in f
  double b = 1.0;  // coefficient of x^{3k+1} in g
  double f = 1.0, fp = 0.0, g = x, gp = 1.0;
  double pow3k = 1.0;  // x^{3k}
  for (int k = 1; k < 200; ++k) {
    a /= (3.0 * k - 1.0) * (3.0 * k);
    b /= (3.0 * k) * (3.0 * k + 1.0);
    pow3k *= x3;
    const double tf = a * pow3k;
    const double tg = b * pow3k * x;
    f += tf;
    g += tg;
    fp += 3.0 * k * a * pow3k / (x == 0.0 ? 1.0 : x);
    gp += (3.0 * k + 1.0) * b * pow3k;
    if (tf <= 1e-18 * f && tg <= 1e-18 * (g + 1e-300)) break;
  }
  if (x == 0.0) fp = 0.0;
  return {f, fp, g, gp};
}

/// Local Taylor step for u'' = x u + forcing: given (u, u') at a, returns
/// (u, u') at a+h.
inline std::array<double, 2> taylor_step(double a, double u, double up,
                                         double h, double forcing = 0.0) {
  // c_{n+2} (n+2)(n+1) = a c_n + c_{n-1} (+ forcing for n = 0)
  double cm1 = 0.0;  // c_{n-1}
  double c0 = u;     // c_n
  double c1 = up;    // c_{n+1}
  double value = u + up * h;
  double deriv = up;
  double hp = h;  // h^{n+1}
  for (int n = 0; n < 80; ++n) {
    const double c2 = (a * c0 + cm1 + (n == 0 ? forcing : 0.0)) /
                      ((n + 2.0) * (n + 1.0));
    deriv += (n + 2.0) * c2 * hp;
    hp *= h;
    const double term = c2 * hp;
    value += term;
    cm1 = c0;
    c0 = c1;
    c1 = c2;
    if (n > 4 && std::fabs(term) <= 1e-19 * std::fabs(value) &&
        std::fabs(c1 * hp * h) <= 1e-19 * std::fabs(value))
      break;
  }
  return {value, deriv};
}

/// Asymptotic expansions for large x, already scaled.
inline ScaledAiry asymptotic(double x) {
  const double zeta = airy_zeta(x);
  const double inv_zeta = 1.0 / zeta;
  double uk = 1.0;
  double sum_ai = 1.0, sum_aip = 1.0, sum_bi = 1.0, sum_bip = 1.0;
  double power = 1.0;
  double last = 1.0;
  for (int k = 1; k < 60; ++k) {
    uk *= (6.0 * k - 5.0) * (6.0 * k - 3.0) * (6.0 * k - 1.0) /
          ((2.0 * k - 1.0) * 216.0 * k);
    const double vk = -(6.0 * k + 1.0) / (6.0 * k - 1.0) * uk;
    power *= inv_zeta;
    const double tu = uk * power;
    const double tv = vk * power;
    if (std::fabs(tu) > last) break;  // asymptotic series started to diverge
    last = std::fabs(tu);
    const double sign = (k % 2 == 0) ? 1.0 : -1.0;
    sum_ai += sign * tu;
    sum_bi += tu;
    sum_aip += sign * tv;
    sum_bip += tv;
    if (last < 1e-18) break;
  }
  const double root_pi = std::sqrt(std::numbers::pi);
  const double quarter = std::sqrt(std::sqrt(x));
  return {sum_ai / (2.0 * root_pi * quarter), -quarter * sum_aip / (2.0 * root_pi),
          sum_bi / (root_pi * quarter), quarter * sum_bip / root_pi, zeta};
}

/// Ai and Ai' at the nodes k/16 on [0, 12], integrated downward from the
/// asymptotic values at 12 (the stable direction for the recessive solution).
struct AiTable {
  std::vector<double> ai;
  std::vector<double> ai_prime;

  AiTable() {
    const int n = static_cast<int>(kAsymptoticStart * kNodesPerUnit);
    ai.resize(n + 1);
    ai_prime.resize(n + 1);
    const ScaledAiry top = asymptotic(kAsymptoticStart);
    const double decay = std::exp(-top.zeta);
    ai[n] = top.ai * decay;
    ai_prime[n] = top.ai_prime * decay;
    const double h = 1.0 / kNodesPerUnit;
    for (int k = n; k > 0; --k) {
      const auto next = taylor_step(static_cast<double>(k) * h, ai[k],
                                    ai_prime[k], -h);
      ai[k - 1] = next[0];
      ai_prime[k - 1] = next[1];
    }
  }
};

inline const AiTable& ai_table() {
  static const AiTable table;
  return table;
}

inline std::array<double, 2> ai_from_table(double x) {
  const auto& table = ai_table();
  const auto k = static_cast<int>(std::lround(x * kNodesPerUnit));
  const double node = static_cast<double>(k) / kNodesPerUnit;
  return taylor_step(node, table.ai[k], table.ai_prime[k], x - node);
}

}  // namespace detail

/// Ai, Ai', Bi, Bi' at x >= 0.
///
/// Maclaurin series near the origin (all of Bi below 12, where the series has
/// no cancellation), a Taylor-propagated table for Ai on (1, 12], and the
/// asymptotic expansions beyond 12.
inline AiryBundle airy(double x) {
  detail::check_argument(x, "airy");
  const auto& origin = airy_origin();
  if (x >= detail::kAsymptoticStart) {
    const ScaledAiry s = detail::asymptotic(x);
    const double decay = std::exp(-s.zeta);
    const double growth = std::exp(s.zeta);
    return {s.ai * decay, s.ai_prime * decay, s.bi * growth,
            s.bi_prime * growth};
  }
  const auto series = detail::maclaurin(x);
  AiryBundle out{};
  out.bi = origin.bi * series.f + origin.bi_prime * series.g;
  out.bi_prime = origin.bi * series.fp + origin.bi_prime * series.gp;
  if (x <= detail::kSeriesLimitAi) {
    out.ai = origin.ai * series.f + origin.ai_prime * series.g;
    out.ai_prime = origin.ai * series.fp + origin.ai_prime * series.gp;
  } else {
    const auto a = detail::ai_from_table(x);
    out.ai = a[0];
    out.ai_prime = a[1];
  }
  return out;
}

/// Exponentially scaled Airy values; finite for every x >= 0.
inline ScaledAiry airy_scaled(double x) {
  detail::check_argument(x, "airy_scaled");
  if (x >= detail::kAsymptoticStart) return detail::asymptotic(x);
  const AiryBundle a = airy(x);
  const double zeta = airy_zeta(x);
  const double growth = std::exp(zeta);
  const double decay = std::exp(-zeta);
  return {a.ai * growth, a.ai_prime * growth, a.bi * decay, a.bi_prime * decay,
          zeta};
}

inline double airy_ai(double x) { return airy(x).ai; }

// ---------------------------------------------------------------------------
// Integrals of Ai and Bi, Scorer's Gi

/// exp(zeta(x)) * integral_x^inf Ai(u) du.
inline double ai_tail_integral_scaled(double x) {
  detail::check_argument(x, "ai_tail_integral");
  const double zeta_x = airy_zeta(x);
  if (x <= 2.0) {
    const double head =
        quadrature::integrate([](double u) { return airy_ai(u); }, 0.0, x, 1e-15);
    return (1.0 / 3.0 - head) * std::exp(zeta_x);
  }
  // The scaled integrand decays like exp(-sqrt(x) (u - x)).
  const double span = 60.0 / std::sqrt(x);
  auto integrand = [zeta_x](double u) {
    const ScaledAiry s = airy_scaled(u);
    return s.ai * std::exp(zeta_x - s.zeta);
  };
  return quadrature::integrate(integrand, x, x + span, 1e-16);
}

/// integral_x^inf Ai(u) du; underflows gracefully to 0 for large x.
inline double ai_tail_integral(double x) {
  const double scaled = ai_tail_integral_scaled(x);
  return scaled * std::exp(-airy_zeta(x));
}

/// integral_0^x Bi(u) du.
inline double bi_integral(double x) {
  detail::check_argument(x, "bi_integral");
  return quadrature::integrate([](double u) { return airy(u).bi; }, 0.0, x,
                               1e-13 * std::max(1.0, airy(x).bi));
}

namespace detail {

/// Gi and Gi' from their integral representations.
inline std::array<double, 2> scorer_direct(double x) {
  const AiryBundle a = airy(x);
  const double head = bi_integral(x);
  const double tail = ai_tail_integral(x);
  return {a.ai * head + a.bi * tail, a.ai_prime * head + a.bi_prime * tail};
}

/// Gi and Gi' at the nodes k/16 on [0, 12]; values in between come from a
/// local Taylor expansion of Gi'' = x Gi - 1/pi.
struct GiTable {
  std::vector<double> gi;
  std::vector<double> gi_prime;

  GiTable() {
    const int n = static_cast<int>(kAsymptoticStart * kNodesPerUnit);
    gi.resize(n + 1);
    gi_prime.resize(n + 1);
    for (int k = 0; k <= n; ++k) {
      const auto v = scorer_direct(static_cast<double>(k) / kNodesPerUnit);
      gi[k] = v[0];
      gi_prime[k] = v[1];
    }
  }
};

inline const GiTable& gi_table() {
  static const GiTable table;
  return table;
}

}  // namespace detail

/// Scorer's Gi(x) = Ai(x) int_0^x Bi + Bi(x) int_x^inf Ai.
inline double scorer_gi(double x) {
  detail::check_argument(x, "scorer_gi");
  if (x >= detail::kAsymptoticStart) {
    // Gi(x) ~ 1/(pi x) sum_k (3k)! / (k! (3 x^3)^k)
    const double w = 3.0 * x * x * x;
    double term = 1.0;
    double sum = 1.0;
    for (int k = 0; k < 40; ++k) {
      const double next = term * (3.0 * k + 1.0) * (3.0 * k + 2.0) *
                          (3.0 * k + 3.0) / ((k + 1.0) * w);
      if (next > term) break;
      term = next;
      sum += term;
      if (term < 1e-18) break;
    }
    return sum / (std::numbers::pi * x);
  }
  const auto& table = detail::gi_table();
  const auto k = static_cast<int>(std::lround(x * detail::kNodesPerUnit));
  const double node = static_cast<double>(k) / detail::kNodesPerUnit;
  return detail::taylor_step(node, table.gi[k], table.gi_prime[k], x - node,
                             -1.0 / std::numbers::pi)[0];
}

// ---------------------------------------------------------------------------
// Killed reflected Brownian motion (gamma = 1/2)

struct GreenEval {
  double x;
  double y;
  double value;
};

namespace detail {

inline void check_pair(double x, double y, const char* who) {
  if (!std::isfinite(x) || !std::isfinite(y) || x < 0.0 || y < 0.0)
    throw std::domain_error(std::string(who) +
                            ": arguments must be finite and non-negative");
}

/// psi(a) phi(b) = (Bi(a) + sqrt3 Ai(a)) Ai(b), evaluated without overflow.
inline double psi_phi(double a, double b) {
  const ScaledAiry sa = airy_scaled(a);
  const ScaledAiry sb = airy_scaled(b);
  return sb.ai * (sa.bi * std::exp(sa.zeta - sb.zeta) +
                  std::numbers::sqrt3 * sa.ai * std::exp(-sa.zeta - sb.zeta));
}

}  // namespace detail

/// Green function of reflected Brownian motion killed at rate y/2, density
/// with respect to the speed measure 2 dy: G(x, y) = pi psi(x ^ y) phi(x v y)
/// with phi = Ai, psi = Bi + sqrt3 Ai and Wronskian 1/pi.
inline GreenEval green(double x, double y) {
  detail::check_pair(x, y, "green");
  const double lo = std::min(x, y);
  const double hi = std::max(x, y);
  return {x, y, std::numbers::pi * detail::psi_phi(lo, hi)};
}

/// Lebesgue density of the killing position started from x: y G(x, y).
inline double killing_position_density(double x, double y) {
  detail::check_pair(x, y, "killing_position_density");
  if (y == 0.0) return 0.0;
  return y * green(x, y).value;
}

/// P_x(killing position > y), in closed form via int t Ai(t) dt = Ai'(t) and
/// the same identity for Bi.
inline double killing_position_survival(double x, double y) {
  detail::check_pair(x, y, "killing_position_survival");
  constexpr double pi = std::numbers::pi;
  const ScaledAiry sx = airy_scaled(x);
  const ScaledAiry sy = airy_scaled(y);
  if (y >= x) {
    // -pi psi(x) Ai'(y)
    const double psi_x = sx.bi * std::exp(sx.zeta - sy.zeta) +
                         std::numbers::sqrt3 * sx.ai * std::exp(-sx.zeta - sy.zeta);
    return -pi * psi_x * sy.ai_prime;
  }
  // 1 - pi Ai(x) psi'(y)
  const double dpsi_y = sy.bi_prime * std::exp(sy.zeta - sx.zeta) +
                        std::numbers::sqrt3 * sy.ai_prime * std::exp(-sy.zeta - sx.zeta);
  return 1.0 - pi * sx.ai * dpsi_y;
}

inline double killing_position_cdf(double x, double y) {
  detail::check_pair(x, y, "killing_position_cdf");
  constexpr double pi = std::numbers::pi;
  if (y < x) {
    const ScaledAiry sx = airy_scaled(x);
    const ScaledAiry sy = airy_scaled(y);
    const double dpsi_y = sy.bi_prime * std::exp(sy.zeta - sx.zeta) +
                          std::numbers::sqrt3 * sy.ai_prime * std::exp(-sy.zeta - sx.zeta);
    return pi * sx.ai * dpsi_y;
  }
  return 1.0 - killing_position_survival(x, y);
}

/// E_x[position just before killing] = x + 2 pi Ai(x) Bi(0).
inline double expected_jump_position(double x) {
  detail::check_argument(x, "expected_jump_position");
  return x + 2.0 * std::numbers::pi * airy_ai(x) * airy_origin().bi;
}

/// E_x[killing time] = 2 pi (Gi(x) + Ai(x) / sqrt3).
inline double expected_jump_time(double x) {
  detail::check_argument(x, "expected_jump_time");
  return 2.0 * std::numbers::pi *
         (scorer_gi(x) + airy_ai(x) / std::numbers::sqrt3);
}

/// Stationary density of the gap at jump times: 3 Ai(z).
inline double invariant_density(double z) {
  detail::check_argument(z, "invariant_density");
  return 3.0 * airy_ai(z);
}

inline double invariant_cdf(double z) {
  detail::check_argument(z, "invariant_cdf");
  return 1.0 - 3.0 * ai_tail_integral(z);
}

// ---------------------------------------------------------------------------
// General gamma

struct AsymptoticConstants {
  double speed;
  double sigma_conjectured;
};

/// Speed C_gamma = Gamma(2/3)/Gamma(1/3) (3 gamma / 4)^{1/3}, and the
/// conjectured diffusion constant sqrt(1 - 2/pi) (gamma-free).
inline AsymptoticConstants asymptotic_constants(double gamma) {
  if (!(gamma > 0.0) || !std::isfinite(gamma))
    throw std::domain_error("asymptotic_constants: gamma must be positive");
  const auto& g = gamma_thirds();
  return {g.two_thirds / g.one_third * std::cbrt(0.75 * gamma),
          std::sqrt(1.0 - 2.0 / std::numbers::pi)};
}

/// Unit conversion between a gamma-ratchet and the gamma = 1/2 ratchet:
/// lengths scale by (2 gamma)^{-1/3}, times by (2 gamma)^{-2/3}.
struct GammaUnits {
  double gamma;

  explicit GammaUnits(double g) : gamma(g) {
    if (!(g > 0.0) || !std::isfinite(g))
      throw std::domain_error("GammaUnits: gamma must be positive");
  }
  double length() const { return 1.0 / std::cbrt(2.0 * gamma); }
  double time() const { return length() * length(); }

  double expected_jump_position(double x) const {
    return length() * special::expected_jump_position(x / length());
  }
  double expected_jump_time(double x) const {
    return time() * special::expected_jump_time(x / length());
  }
  double invariant_density(double z) const {
    return special::invariant_density(z / length()) / length();
  }
  double invariant_cdf(double z) const {
    return special::invariant_cdf(z / length());
  }
};

}  // namespace ratchet::special
