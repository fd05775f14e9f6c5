#pragma once

// Adaptive Gauss-Kronrod (7/15) quadrature on finite intervals.

#include <array>
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <queue>
#include <stdexcept>

namespace ratchet::quadrature {

namespace detail {

inline constexpr std::array<double, 8> kKronrodNodes = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0};
inline constexpr std::array<double, 8> kKronrodWeights = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
// Gauss weights for the odd-indexed Kronrod nodes (1, 3, 5, 7).
inline constexpr std::array<double, 4> kGaussWeights = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Estimate {
  double value;
  double error;
};

template <class F>
Estimate kronrod15(F& f, double a, double b) {
  const double center = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const double fc = f(center);
  double kronrod = fc * kKronrodWeights[7];
  double gauss = fc * kGaussWeights[3];
  for (int i = 0; i < 7; ++i) {
    const double dx = half * kKronrodNodes[i];
    const double sum = f(center - dx) + f(center + dx);
    kronrod += kKronrodWeights[i] * sum;
    if (i % 2 == 1) gauss += kGaussWeights[i / 2] * sum;
  }
  return {kronrod * half, std::fabs((kronrod - gauss) * half)};
}

}  // namespace detail

/// Integrates f over [a, b]. Globally adaptive: the interval with the largest
/// error estimate is bisected until the summed estimate is below
/// max(abs_tol, rel_tol * |result|) or the interval budget is spent.
template <class F>
double integrate(F&& f, double a, double b, double abs_tol = 1e-12,
                 double rel_tol = 1e-14, std::size_t max_intervals = 4000) {
  if (!(std::isfinite(a) && std::isfinite(b)))
    throw std::invalid_argument("integrate: bounds must be finite");
  if (a == b) return 0.0;
  if (b < a) return -integrate(f, b, a, abs_tol, rel_tol, max_intervals);

  struct Piece {
    double lo, hi;
    detail::Estimate est;
    bool operator<(const Piece& other) const {
      return est.error < other.est.error;
    }
  };
  std::priority_queue<Piece> pieces;
  const auto whole = detail::kronrod15(f, a, b);
  pieces.push({a, b, whole});
  double value = whole.value;
  double error = whole.error;
  while (error > std::max(abs_tol, rel_tol * std::fabs(value)) &&
         pieces.size() < max_intervals) {
    const Piece worst = pieces.top();
    const double mid = 0.5 * (worst.lo + worst.hi);
    if (mid <= worst.lo || mid >= worst.hi) break;
    pieces.pop();
    const Piece left{worst.lo, mid, detail::kronrod15(f, worst.lo, mid)};
    const Piece right{mid, worst.hi, detail::kronrod15(f, mid, worst.hi)};
    value += left.est.value + right.est.value - worst.est.value;
    error += left.est.error + right.est.error - worst.est.error;
    pieces.push(left);
    pieces.push(right);
  }
  // Re-sum to shed the drift of the running updates.
  double total = 0.0;
  while (!pieces.empty()) {
    total += pieces.top().est.value;
    pieces.pop();
  }
  return total;
}

}  // namespace ratchet::quadrature
