#pragma once

// Integer substrate: prime tables, trial-division factorization, P+(n),
// modular inverses and the exact gcd-sum oracle.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <mutex>
#include <numeric>
#include <utility>
#include <vector>

#include "friable/detail/int128.hpp"
#include "friable/errors.hpp"

namespace friable {

struct PrimeTable {
  std::uint64_t limit = 0;
  std::vector<std::uint32_t> primes;  // every prime <= limit, increasing

  bool empty() const { return primes.empty(); }
  std::size_t size() const { return primes.size(); }
};

struct Factorization {
  std::uint64_t n = 1;
  std::vector<std::pair<std::uint64_t, unsigned>> factors;  // (prime, exponent), primes increasing

  // Product of prime^exponent; equals n by construction.
  std::uint64_t value() const {
    std::uint64_t v = 1;
    for (auto [p, e] : factors)
      for (unsigned i = 0; i < e; ++i) v *= p;
    return v;
  }
  std::uint64_t largest_prime() const { return factors.empty() ? 1 : factors.back().first; }
  std::size_t omega() const { return factors.size(); }
};

inline constexpr std::uint64_t kPrimeTableMax = 4'000'000'000ull;
inline constexpr std::uint64_t kTrialDivisionMax = 100'000'000'000'000ull;  // 1e14
inline constexpr std::uint64_t kGcdSumMaxU = 100'000;

// Sieve of Eratosthenes over odd numbers.
inline PrimeTable sieve_primes(std::uint64_t limit) {
  detail::require<CapacityError>(limit <= kPrimeTableMax, "sieve_primes: limit beyond capacity");
  PrimeTable t;
  t.limit = limit;
  if (limit < 2) return t;
  t.primes.reserve(limit < 100 ? 32 : std::size_t(1.2 * double(limit) / std::log(double(limit))));
  t.primes.push_back(2);
  // index i stands for 2i+1
  const std::uint64_t half = (limit - 1) / 2;
  std::vector<bool> composite(half + 1, false);
  for (std::uint64_t i = 1; i <= half; ++i) {
    if (composite[i]) continue;
    const std::uint64_t p = 2 * i + 1;
    t.primes.push_back(static_cast<std::uint32_t>(p));
    for (std::uint64_t j = (p * p - 1) / 2; j <= half; j += p) composite[j] = true;
  }
  return t;
}

// Process-wide table covering at least `limit`; grows geometrically, never shrinks.
inline std::shared_ptr<const PrimeTable> cached_primes(std::uint64_t limit) {
  static std::mutex mu;
  static std::shared_ptr<const PrimeTable> cache;
  std::lock_guard lock(mu);
  if (!cache || cache->limit < limit) {
    std::uint64_t target = std::max<std::uint64_t>(limit, 1 << 16);
    if (cache) target = std::max(target, std::min(kPrimeTableMax, 2 * cache->limit));
    cache = std::make_shared<const PrimeTable>(sieve_primes(target));
  }
  return cache;
}

inline Factorization factorize(std::uint64_t n, const PrimeTable& table) {
  detail::require(n >= 1, "factorize: n must be positive");
  Factorization f;
  f.n = n;
  std::uint64_t rem = n;
  bool exhausted = true;
  for (std::uint64_t p : table.primes) {
    if (p * p > rem) {
      exhausted = false;
      break;
    }
    if (rem % p) continue;
    unsigned e = 0;
    while (rem % p == 0) {
      rem /= p;
      ++e;
    }
    f.factors.emplace_back(p, e);
  }
  if (rem > 1) {
    // Every prime <= limit is gone; rem is prime only if below (limit+1)^2.
    if (exhausted) {
      const u128 bound = u128(table.limit + 1) * u128(table.limit + 1);
      detail::require(u128(rem) < bound, "factorize: prime table does not cover n");
    }
    f.factors.emplace_back(rem, 1);
  }
  return f;
}

inline Factorization factorize(std::uint64_t n) {
  detail::require<CapacityError>(n <= kTrialDivisionMax, "factorize: n beyond trial-division capacity");
  auto table = cached_primes(static_cast<std::uint64_t>(std::sqrt(double(n))) + 2);
  return factorize(n, *table);
}

// P+(n) with P+(1) = 1.
inline std::uint64_t largest_prime_factor(std::uint64_t n) {
  detail::require(n >= 1, "largest_prime_factor: n must be positive");
  return factorize(n).largest_prime();
}

inline std::uint64_t euler_phi(std::uint64_t n) {
  std::uint64_t r = n;
  for (auto [p, e] : factorize(n).factors) r = r / p * (p - 1);
  return r;
}

// Distinct prime divisors of q, increasing.
inline std::vector<std::uint64_t> prime_divisors(std::uint64_t q) {
  std::vector<std::uint64_t> out;
  for (auto [p, e] : factorize(q).factors) out.push_back(p);
  return out;
}

// Inverse of a modulo q normalised into [1, q].
inline std::int64_t mod_inverse(std::int64_t a, std::int64_t q) {
  detail::require(q >= 1, "mod_inverse: modulus must be positive");
  i128 r0 = q, r1 = detail::mod_floor(a, q);
  i128 s0 = 0, s1 = 1;
  while (r1 != 0) {
    i128 t = r0 / r1;
    std::tie(r0, r1) = std::pair{r1, r0 - t * r1};
    std::tie(s0, s1) = std::pair{s1, s0 - t * s1};
  }
  if (q == 1) return 1;
  detail::require(r0 == 1, "mod_inverse: argument not invertible modulo q");
  auto inv = static_cast<std::int64_t>(detail::mod_floor(s0, q));
  return inv == 0 ? q : inv;
}

// Exact sum over u1 != u2 in (U, 2U], gcd(u1 u2, q) = 1, of gcd(u1 - u2, k u1 u2).
inline std::uint64_t gcd_sum(std::uint64_t U, std::int64_t k, std::uint64_t q) {
  detail::require(U >= 1, "gcd_sum: U must be positive");
  detail::require(k != 0, "gcd_sum: k must be nonzero");
  detail::require<CapacityError>(U <= kGcdSumMaxU, "gcd_sum: U beyond oracle cap");
  const u128 absk = k < 0 ? u128(-(i128)k) : u128(k);
  std::vector<std::uint64_t> us;
  for (std::uint64_t u = U + 1; u <= 2 * U; ++u)
    if (std::gcd(u, q) == 1) us.push_back(u);
  std::uint64_t total = 0;
  for (std::uint64_t u1 : us) {
    for (std::uint64_t u2 : us) {
      if (u1 == u2) continue;
      const std::uint64_t d = u1 > u2 ? u1 - u2 : u2 - u1;
      const auto rest = static_cast<std::uint64_t>((absk % d) * u1 % d * u2 % d);
      total += std::gcd(d, rest);
    }
  }
  return total;
}

// gcd_sum / ((phi(q)/q) U^{2+eta}); a bounded-shape diagnostic, not a theorem check.
inline double gcd_sum_ratio(std::uint64_t U, std::int64_t k, std::uint64_t q, double eta = 0.1) {
  const double s = double(gcd_sum(U, k, q));
  return s / ((double(euler_phi(q)) / double(q)) * std::pow(double(U), 2.0 + eta));
}

}  // namespace friable
