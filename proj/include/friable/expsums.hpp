#pragma once

// Kloosterman-type exponential sums: complete sums, incomplete sums of
// e(b n^{-1}/c) over intervals, and the smooth-number average Kl_y(M, x; a, q)
// together with its upper-bound comparator.

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <vector>

#include "friable/arith.hpp"
#include "friable/detail/int128.hpp"
#include "friable/detail/kahan.hpp"
#include "friable/errors.hpp"
#include "friable/smooth.hpp"

namespace friable {

inline constexpr std::uint64_t kDefaultBudget = 1'000'000'000ull;

namespace detail {

// e(k/m) for an already reduced residue k.
inline std::complex<double> unit_root(std::int64_t k, std::int64_t m) {
  const double t = 2 * std::numbers::pi * double(k) / double(m);
  return {std::cos(t), std::sin(t)};
}

inline std::int64_t mulmod(std::int64_t a, std::int64_t b, std::int64_t m) {
  return static_cast<std::int64_t>(mod_floor(i128(a) * b, m));
}

}  // namespace detail

// S(a, b; c) = sum_{n mod c, (n,c)=1} e((a n + b n^{-1})/c); real-valued.
inline double complete_kloosterman(std::int64_t a, std::int64_t b, std::int64_t c) {
  detail::require(c >= 1, "complete_kloosterman: c must be positive");
  const std::int64_t ar = detail::mod_floor(a, c), br = detail::mod_floor(b, c);
  detail::KahanSum<long double> re, im;
  for (std::int64_t n = 0; n < c; ++n) {
    if (std::gcd(n, c) != 1) continue;
    const std::int64_t inv = mod_inverse(n, c);
    const std::int64_t k = (detail::mulmod(ar, n, c) + detail::mulmod(br, inv, c)) % c;
    const auto z = detail::unit_root(k, c);
    re += z.real();
    im += z.imag();
  }
  detail::require<ConvergenceError>(std::abs(im.value()) <= 1e-9L,
                                    "complete_kloosterman: imaginary residue above 1e-9");
  return double(re.value());
}

// sum_{Z1 < n <= Z2, (n,c)=1} e(b n^{-1}/c), whole periods folded.
inline std::complex<double> incomplete_inverse_sum(std::int64_t b, std::int64_t c, double Z1, double Z2) {
  detail::require(c >= 1, "incomplete_inverse_sum: c must be positive");
  const auto lo = static_cast<std::int64_t>(std::floor(Z1)) + 1;
  const auto hi = static_cast<std::int64_t>(std::floor(Z2));
  if (hi < lo) return {0, 0};
  const std::int64_t br = detail::mod_floor(b, c);
  auto term = [&](std::int64_t n) {
    const std::int64_t nr = detail::mod_floor(n, c);
    if (std::gcd(nr, c) != 1) return std::complex<double>{0, 0};
    return detail::unit_root(detail::mulmod(br, mod_inverse(nr, c), c), c);
  };
  const std::int64_t len = hi - lo + 1;
  const std::int64_t periods = len / c;
  detail::KahanSum<std::complex<double>> total;
  if (periods > 0) {
    detail::KahanSum<std::complex<double>> period;
    for (std::int64_t r = 0; r < c; ++r) period += term(r);
    total += period.value() * double(periods);
  }
  for (std::int64_t n = lo + periods * c; n <= hi; ++n) total += term(n);
  return total.value();
}

namespace detail {

// sum over m ~ M of |sum_{lo_excl < n < x, P+(n)<=y, (n, m q)=1} e(a n^{-1}/m)|
inline double kl_average_from(double M, double x, std::int64_t a, std::uint64_t q, double y, double lo_excl,
                              std::uint64_t budget) {
  require(M >= 2, "kl_smooth_average: need M >= 2");
  require(a != 0, "kl_smooth_average: a must be nonzero");
  require(q >= 1, "kl_smooth_average: q must be positive");
  const auto m_lo = static_cast<std::int64_t>(std::floor(M)) + 1;
  const auto m_hi = static_cast<std::int64_t>(std::floor(2 * M));
  const auto n_max = static_cast<std::int64_t>(std::ceil(x)) - 1;  // n < x
  std::vector<std::int64_t> ns;
  if (n_max >= 1) {
    const auto sieve = smooth_sieve(1, std::uint64_t(n_max), y, q);
    for (std::uint64_t n : sieve.members())
      if (double(n) > lo_excl) ns.push_back(std::int64_t(n));
  }
  const std::uint64_t m_count = m_hi >= m_lo ? std::uint64_t(m_hi - m_lo + 1) : 0;
  require<BudgetError>(u128(m_count) * ns.size() <= budget, "kl_smooth_average: budget exceeded");
  KahanSum<long double> total;
  for (std::int64_t m = m_lo; m <= m_hi; ++m) {
    const std::int64_t am = mod_floor(a, m);
    KahanSum<std::complex<double>> inner;
    for (std::int64_t n : ns) {
      const std::int64_t nr = n % m;
      if (std::gcd(nr, m) != 1) continue;
      inner += unit_root(mulmod(am, mod_inverse(nr, m), m), m);
    }
    total += std::abs(inner.value());
  }
  return double(total.value());
}

}  // namespace detail

// Kl_y(M, x; a, q) = sum_{m ~ M} | sum_{n < x, P+(n) <= y, (n, m q) = 1} e(a n^{-1} / m) |.
inline double kl_smooth_average(double M, double x, std::int64_t a, std::uint64_t q, double y,
                                std::uint64_t budget = kDefaultBudget) {
  return detail::kl_average_from(M, x, a, q, y, 0.0, budget);
}

// The same average with the inner sum restricted to n > z.
inline double kl_smooth_average_above(double M, double x, std::int64_t a, std::uint64_t q, double y, double z,
                                      std::uint64_t budget = kDefaultBudget) {
  return detail::kl_average_from(M, x, a, q, y, z, budget);
}

struct KloostermanParams {
  double M = 2;
  double x = 3;
  std::int64_t a = 1;
  std::uint64_t q = 1;
  double y = 2;
  double z = 2;
  double eta = 0.05;
};

// Right-hand side of the Kl_y bound with implied constant 1:
// (|a|xM)^eta (1 + |a|/(xM))^{1/2} (M x^{1/2} y^{1/2} z^{1/2} + x^{3/2} M^{1/2} z^{-1/4}) + M z.
inline double kloos_bound_rhs(const KloostermanParams& k) {
  detail::require(k.M >= 2, "kloos_bound_rhs: need M >= 2");
  detail::require(k.a != 0, "kloos_bound_rhs: a must be nonzero");
  detail::require(2 <= k.y && k.y <= k.z && k.z < k.x, "kloos_bound_rhs: need 2 <= y <= z < x");
  detail::require(k.eta > 0, "kloos_bound_rhs: eta must be positive");
  const double aa = std::abs(double(k.a));
  const double xm = k.x * k.M;
  const double pre = std::pow(aa * xm, k.eta) * std::sqrt(1 + aa / xm);
  const double t1 = k.M * std::sqrt(k.x * k.y * k.z);
  const double t2 = std::pow(k.x, 1.5) * std::sqrt(k.M) * std::pow(k.z, -0.25);
  return pre * (t1 + t2) + k.M * k.z;
}

// z = x^{2/3} clamped into [y, x).
inline double optimal_z(double /*M*/, double x, double y) {
  detail::require(y < x, "optimal_z: need y < x");
  const double c = std::cbrt(x);
  double z = c * c;
  z = std::max(z, y);
  if (z >= x) z = std::nextafter(x, 0.0);
  return z;
}

}  // namespace friable
