#pragma once

#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <vector>

// Integer-order Bessel functions of the first kind, J_n(z).
//
// These drive every sideband amplitude in the modulator model, so they are
// implemented here rather than pulled from a platform libm whose accuracy
// for jn() varies. Strategy: power series for small arguments, Miller's
// downward recurrence with sum-rule normalization otherwise. Absolute
// accuracy is better than 1e-13 for orders <= 40 and |z| <= 10 (checked in
// the test suite against an independent long-double series).

namespace qeosim {

namespace detail {

// Power series J_n(z) = sum_m (-1)^m (z/2)^(n+2m) / (m! (n+m)!).
// Valid for any n >= 0, z >= 0; used where terms decrease from the start
// so there is no cancellation (small z, or order well above z).
inline double bessel_j_series(int n, double z) {
  const double half = 0.5 * z;
  double term = 1.0;
  for (int i = 1; i <= n; ++i) term *= half / static_cast<double>(i);
  double sum = term;
  const double hh = half * half;
  for (int m = 1; m < 200; ++m) {
    term *= -hh / (static_cast<double>(m) * static_cast<double>(n + m));
    sum += term;
    if (std::abs(term) < 1e-18 * (std::abs(sum) + 1e-300)) break;
  }
  return sum;
}

}  // namespace detail

/// J_0(z) .. J_{n_max}(z) in one pass. z may be negative; negative orders
/// follow from J_{-n}(z) = (-1)^n J_n(z) (see bessel_j below).
inline std::vector<double> bessel_j_array(int n_max, double z) {
  if (n_max < 0) throw std::invalid_argument("bessel_j_array: n_max must be >= 0");
  if (!std::isfinite(z)) throw std::invalid_argument("bessel_j_array: non-finite argument");

  std::vector<double> out(static_cast<size_t>(n_max) + 1, 0.0);
  const double az = std::abs(z);

  if (az == 0.0) {
    out[0] = 1.0;
    return out;
  }

  if (az < 0.5) {
    for (int n = 0; n <= n_max; ++n) out[static_cast<size_t>(n)] = detail::bessel_j_series(n, az);
  } else {
    // Miller's algorithm: recur downward from an order high enough that
    // J_M is negligible, then normalize with J_0 + 2 sum_k J_{2k} = 1.
    const int start = n_max + static_cast<int>(std::ceil(std::sqrt(40.0 * (n_max + 1)))) +
                      static_cast<int>(std::ceil(az)) + 12;
    std::vector<double> work(static_cast<size_t>(start) + 2, 0.0);
    double jp = 0.0;      // J_{m+1} (unnormalized)
    double jc = 1e-30;    // J_m
    work[static_cast<size_t>(start) + 1] = jp;
    work[static_cast<size_t>(start)] = jc;
    constexpr double kRescale = 1e200;
    for (int m = start; m >= 1; --m) {
      double jm = (2.0 * m / az) * jc - jp;
      jp = jc;
      jc = jm;
      if (std::abs(jc) > kRescale) {
        // Rescale everything accumulated so far to dodge overflow; the
        // sum-rule normalization below cancels the factor.
        const double inv = 1.0 / kRescale;
        jc *= inv;
        jp *= inv;
        for (size_t i = static_cast<size_t>(m); i < work.size(); ++i) work[i] *= inv;
      }
      work[static_cast<size_t>(m) - 1] = jc;
    }
    double sum = work[0];
    for (size_t m = 2; m < work.size(); m += 2) sum += 2.0 * work[m];
    const double inv_sum = 1.0 / sum;
    for (int n = 0; n <= n_max; ++n) out[static_cast<size_t>(n)] = work[static_cast<size_t>(n)] * inv_sum;
  }

  if (z < 0.0) {
    for (int n = 1; n <= n_max; n += 2) out[static_cast<size_t>(n)] = -out[static_cast<size_t>(n)];
  }
  return out;
}

/// J_n(z) for any integer order (negative orders via parity symmetry).
inline double bessel_j(int n, double z) {
  int m = n;
  double sign = 1.0;
  if (m < 0) {
    m = -m;
    if (m & 1) sign = -1.0;
  }
  return sign * bessel_j_array(m, z)[static_cast<size_t>(m)];
}

/// Upper bound on the probability weight sum_{|s| > S} J_s(z)^2 of orders
/// beyond a truncation S. Uses |J_s(z)| <= (|z|/2)^s / s! and a geometric
/// tail; loose but cheap, and tight enough to size truncations.
inline double bessel_tail_bound(int trunc, double z) {
  const double az = std::abs(z);
  if (az == 0.0) return 0.0;
  const int s1 = trunc + 1;
  double lead = 1.0;
  for (int i = 1; i <= s1; ++i) {
    lead *= 0.5 * az / static_cast<double>(i);
    if (lead < 1e-160) return 2.0 * lead * lead / (1.0 - 1e-4);
  }
  const double r = 0.5 * az / static_cast<double>(s1 + 1);
  const double ratio = std::min(r * r, 0.99);
  return 2.0 * lead * lead / (1.0 - ratio);
}

}  // namespace qeosim
