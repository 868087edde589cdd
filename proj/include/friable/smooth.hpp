#pragma once

// Smooth (friable) numbers: progression sieves for P+(n), exact counts
// Psi(x,y) and Psi_q(x,y), local densities, the Dickman function, the
// saddle point alpha(x,y) and the classical estimates built on them.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <numeric>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "friable/arith.hpp"
#include "friable/detail/int128.hpp"
#include "friable/detail/kahan.hpp"
#include "friable/errors.hpp"

namespace friable {

inline constexpr std::uint64_t kSieveMaxValue = 100'000'000'000'000ull;  // 1e14
inline constexpr std::uint64_t kMaterializedSpanMax = 1ull << 28;
inline constexpr std::uint64_t kSieveBlock = 1ull << 18;
inline constexpr double kSaddlePrimeCap = 1e8;

namespace detail {

// Integer part of a nonnegative real bound, saturating at the sieve cap.
inline std::uint64_t floor_bound(double x) {
  if (!(x >= 0)) return 0;
  if (x >= double(kSieveMaxValue)) return kSieveMaxValue + 1;
  return static_cast<std::uint64_t>(std::floor(x));
}

// Sieve for progressions first + j*step with a fixed step; the inverses of
// step modulo each small prime are computed once.
class ProgressionSieve {
 public:
  ProgressionSieve(std::uint64_t step, std::uint64_t max_value) : step_(step) {
    require(step >= 1, "ProgressionSieve: step must be positive");
    require<CapacityError>(max_value <= kSieveMaxValue, "sieve: values beyond sieve capacity");
    root_ = static_cast<std::uint64_t>(isqrt(i128(std::max<std::uint64_t>(max_value, 1))));
    table_ = cached_primes(std::max<std::uint64_t>(root_, 2));
    for (std::uint64_t p : table_->primes) {
      if (p > root_) break;
      inv_.push_back(step % p == 0 ? 0
                                   : static_cast<std::uint32_t>(mod_inverse(std::int64_t(step % p), std::int64_t(p))));
    }
    max_value_ = max_value;
  }

  // Removes every prime p <= prime_cap with p^2 <= last term.  On return
  // rem[j] is the unsieved cofactor and lpf[j] the largest prime removed.
  void run(std::uint64_t first, std::uint64_t prime_cap, std::span<std::uint64_t> rem,
           std::span<std::uint64_t> lpf) const {
    const std::size_t count = rem.size();
    if (count == 0) return;
    require(first >= 1, "sieve: first term must be positive");
    const u128 last128 = u128(first) + u128(count - 1) * step_;
    require<CapacityError>(last128 <= max_value_, "sieve: progression exceeds configured bound");
    const auto last = static_cast<std::uint64_t>(last128);
    for (std::size_t j = 0; j < count; ++j) {
      rem[j] = first + j * step_;
      lpf[j] = 1;
    }
    const std::uint64_t cap =
        std::min({prime_cap, static_cast<std::uint64_t>(isqrt(i128(last))), root_});
    for (std::size_t i = 0; i < inv_.size(); ++i) {
      const std::uint64_t p = table_->primes[i];
      if (p > cap) break;
      std::size_t j0, stride;
      if (inv_[i] == 0) {
        if (first % p) continue;
        j0 = 0;
        stride = 1;
      } else {
        const std::uint64_t need = (p - first % p) % p;
        j0 = static_cast<std::size_t>(need * inv_[i] % p);
        stride = p;
      }
      for (std::size_t j = j0; j < count; j += stride) {
        std::uint64_t r = rem[j] / p;
        while (r % p == 0) r /= p;
        rem[j] = r;
        lpf[j] = p;
      }
    }
  }

  // out[j] = 1 iff P+(first + j*step) <= y.
  void smooth(std::uint64_t first, double y, std::span<std::uint8_t> out) const;
  // out[j] = P+(first + j*step).
  void largest_prime(std::uint64_t first, std::span<std::uint64_t> out) const {
    std::vector<std::uint64_t> rem(out.size());
    run(first, std::numeric_limits<std::uint64_t>::max(), rem, out);
    for (std::size_t j = 0; j < out.size(); ++j) out[j] = std::max(out[j], rem[j]);
  }

  std::uint64_t step() const { return step_; }

 private:
  std::uint64_t step_;
  std::uint64_t root_ = 1;
  std::uint64_t max_value_ = 0;
  std::shared_ptr<const PrimeTable> table_;
  std::vector<std::uint32_t> inv_;  // 0 marks p | step
};

inline std::uint64_t prime_cap_for(double y) {
  if (!(y >= 2)) return 1;
  if (y >= double(kSieveMaxValue)) return kSieveMaxValue;
  return static_cast<std::uint64_t>(std::floor(y));
}

inline void ProgressionSieve::smooth(std::uint64_t first, double y, std::span<std::uint8_t> out) const {
  const std::size_t count = out.size();
  if (count == 0) return;
  std::vector<std::uint64_t> rem(count), lpf(count);
  const std::uint64_t cap = prime_cap_for(y);
  run(first, cap, rem, lpf);
  const std::uint64_t last = first + (count - 1) * step_;
  const auto root = static_cast<std::uint64_t>(isqrt(i128(last)));
  // With every prime <= sqrt(last) removed the cofactor is 1 or a prime.
  const bool all_small_removed = cap >= root;
  for (std::size_t j = 0; j < count; ++j)
    out[j] = rem[j] == 1 || (all_small_removed && double(rem[j]) <= y);
}

inline void smooth_interval(std::uint64_t first, double y, std::span<std::uint8_t> out) {
  if (out.empty()) return;
  ProgressionSieve(1, first + out.size() - 1).smooth(first, y, out);
}

}  // namespace detail

// P+(first + j*step) for j < count.
inline std::vector<std::uint64_t> largest_prime_factors(std::uint64_t first, std::uint64_t step,
                                                        std::size_t count) {
  std::vector<std::uint64_t> out(count);
  if (count == 0) return out;
  detail::ProgressionSieve(step, first + (count - 1) * step).largest_prime(first, out);
  return out;
}

struct SmoothSieve {
  static constexpr std::uint8_t kSmooth = 1;
  static constexpr std::uint8_t kCoprime = 2;

  std::uint64_t lo = 1, hi = 0;
  double y = 0;
  std::uint64_t q = 1;
  std::vector<std::uint8_t> flags;

  bool contains(std::uint64_t n) const { return n >= lo && n <= hi; }
  bool is_smooth(std::uint64_t n) const { return flags.at(n - lo) & kSmooth; }
  bool coprime(std::uint64_t n) const { return flags.at(n - lo) & kCoprime; }
  // Membership in S_q(y).
  bool in_sq(std::uint64_t n) const { return (flags.at(n - lo) & (kSmooth | kCoprime)) == (kSmooth | kCoprime); }

  std::vector<std::uint64_t> members() const {
    std::vector<std::uint64_t> out;
    for (std::uint64_t n = lo; n <= hi; ++n)
      if (in_sq(n)) out.push_back(n);
    return out;
  }
  std::uint64_t count() const {
    std::uint64_t c = 0;
    for (auto f : flags) c += (f & 3) == 3;
    return c;
  }
};

inline SmoothSieve smooth_sieve(std::uint64_t lo, std::uint64_t hi, double y, std::uint64_t q = 1) {
  detail::require(lo >= 1 && lo <= hi, "smooth_sieve: need 1 <= lo <= hi");
  detail::require(q >= 1, "smooth_sieve: q must be positive");
  detail::require<CapacityError>(hi - lo < kMaterializedSpanMax, "smooth_sieve: span beyond capacity");
  SmoothSieve s;
  s.lo = lo;
  s.hi = hi;
  s.y = y;
  s.q = q;
  const std::size_t len = hi - lo + 1;
  s.flags.assign(len, 0);
  for (std::size_t off = 0; off < len; off += kSieveBlock) {
    const std::size_t n = std::min<std::size_t>(kSieveBlock, len - off);
    detail::smooth_interval(lo + off, y, std::span(s.flags).subspan(off, n));
  }
  for (std::size_t j = 0; j < len; ++j)
    if (std::gcd(lo + j, q) == 1) s.flags[j] |= SmoothSieve::kCoprime;
  return s;
}

// #{lo <= n <= hi : P+(n) <= y, gcd(n, q) = 1}, sieved block by block.
inline std::uint64_t count_smooth(std::uint64_t lo, std::uint64_t hi, double y, std::uint64_t q = 1) {
  if (lo < 1) lo = 1;
  if (hi < lo) return 0;
  detail::require<CapacityError>(hi <= kSieveMaxValue, "count_smooth: bound beyond capacity");
  if (q == 1 && y >= double(hi)) return hi - lo + 1;
  std::uint64_t total = 0;
  std::vector<std::uint8_t> buf(kSieveBlock);
  for (std::uint64_t start = lo; start <= hi; start += kSieveBlock) {
    const std::size_t n = static_cast<std::size_t>(std::min<std::uint64_t>(kSieveBlock, hi - start + 1));
    auto span = std::span(buf).first(n);
    detail::smooth_interval(start, y, span);
    for (std::size_t j = 0; j < n; ++j)
      if (span[j] && (q == 1 || std::gcd(start + j, q) == 1)) ++total;
  }
  return total;
}

inline std::uint64_t psi(double x, double y) {
  detail::require(x >= 0, "psi: x must be nonnegative");
  return count_smooth(1, detail::floor_bound(x), y, 1);
}

inline std::uint64_t psi_q(double x, double y, std::uint64_t q) {
  detail::require(x >= 0, "psi_q: x must be nonnegative");
  detail::require(q >= 1, "psi_q: q must be positive");
  return count_smooth(1, detail::floor_bound(x), y, q);
}

// Number of n ~ N (N < n <= 2N) in S_q(Y).
inline std::uint64_t count_dyadic(double N, double Y, std::uint64_t q) {
  return count_smooth(detail::floor_bound(N) + 1, detail::floor_bound(2 * N), Y, q);
}

// K(N, Y) = N^{-1} #{n ~ N : n in S_q(Y)}.
inline double local_density(double N, double Y, std::uint64_t q = 1) {
  detail::require(N >= 1, "local_density: N must be at least 1");
  return double(count_dyadic(N, Y, q)) / N;
}

// ---------------------------------------------------------------------------
// Dickman rho
//
// On [k-1, k], k >= 2, rho is a power series in t = k - u.  With d the
// coefficients of the piece on [k-2, k-1] (in the same t), u rho'(u) =
// -rho(u-1) gives
//   c_{j+1} = (d_j + j c_j) / (k (j+1)),
// and k rho(k) = int_{k-1}^k rho fixes c_0 = rho(k) = sum_{j>=1} c_j/(j+1) / (k-1),
// a sum of positive terms.  Each piece is singular only at 0, ..., k-2, so
// on t in [0, 1] the terms fall off like 2^-j.

inline constexpr double kRhoMaxU = 500;
inline constexpr int kRhoTerms = 80;

class RhoTable {
 public:
  // Series pieces up to u_max, plus samples of rho on the grid of spacing `step`.
  explicit RhoTable(double u_max, double step = 1.0 / 256) : step_(step) {
    detail::require(u_max >= 0 && u_max <= kRhoMaxU, "RhoTable: u_max outside [0, 500]");
    detail::require(step > 0 && step <= 1, "RhoTable: step must be in (0, 1]");
    const auto units = std::max<std::size_t>(2, static_cast<std::size_t>(std::ceil(u_max)));
    u_max_ = u_max;
    pieces_.assign(units + 1, std::vector<long double>(kRhoTerms, 0.0L));
    pieces_[1][0] = 1;  // rho = 1 on [0, 1]
    for (std::size_t k = 2; k <= units; ++k) {
      const auto& d = pieces_[k - 1];
      auto& c = pieces_[k];
      const long double kk = (long double)k;
      for (int j = 0; j + 1 < kRhoTerms; ++j) c[j + 1] = (d[j] + j * c[j]) / (kk * (j + 1));
      long double acc = 0;
      for (int j = kRhoTerms - 1; j >= 1; --j) acc += c[j] / (j + 1);
      c[0] = acc / (kk - 1);
    }
    const auto n = static_cast<std::size_t>(std::floor(u_max / step + 1e-9));
    values_.reserve(n + 1);
    for (std::size_t i = 0; i <= n; ++i) values_.push_back((*this)(double(i) * step));
  }

  double step() const { return step_; }
  double u_max() const { return u_max_; }
  std::span<const long double> values() const { return values_; }

  long double operator()(double u) const {
    detail::require(u >= 0 && u <= u_max_, "RhoTable: u outside table range");
    if (u <= 1) return 1.0L;
    const auto k = static_cast<std::size_t>(std::ceil(u));
    const long double t = (long double)k - (long double)u;
    const auto& c = pieces_[k];
    long double v = 0;
    for (int j = kRhoTerms - 1; j >= 0; --j) v = v * t + c[j];
    return v;
  }

  // Size of the first dropped term relative to the value; bounds the tail.
  long double truncation(double u) const {
    if (u <= 1) return 0;
    const auto k = static_cast<std::size_t>(std::ceil(u));
    const long double t = (long double)k - (long double)u;
    return pieces_[k][kRhoTerms - 1] * std::pow(t, (long double)kRhoTerms - 1) * 2;
  }

 private:
  double step_;
  double u_max_ = 0;
  std::vector<std::vector<long double>> pieces_;
  std::vector<long double> values_;
};

namespace detail {

inline const RhoTable& rho_table() {
  static const RhoTable table(kRhoMaxU, 1.0);
  return table;
}

}  // namespace detail

struct RhoValue {
  long double value;
  double error_estimate;  // bound on |value - rho(u)| from truncation and rounding
};

inline RhoValue dickman_rho_checked(double u, double tol = 1e-12) {
  detail::require(u >= 0 && u <= kRhoMaxU, "dickman_rho: u outside [0, 500]");
  detail::require(tol > 0, "dickman_rho: tol must be positive");
  if (u <= 1) return {1.0L, 0.0};
  const auto& t = detail::rho_table();
  const long double v = t(u);
  const double est = double(t.truncation(u) + 64 * std::numeric_limits<long double>::epsilon() * v);
  detail::require<ConvergenceError>(est <= tol, "dickman_rho: tolerance not reached");
  return {v, est};
}

inline double dickman_rho(double u, double tol = 1e-12) { return double(dickman_rho_checked(u, tol).value); }

// CSV rows "u,rho,tol" on the grid u = 0, step, 2 step, ... <= u_max.
inline void write_rho_csv(std::ostream& os, double u_max, double step, double tol = 1e-12) {
  detail::require(step > 0, "write_rho_csv: step must be positive");
  os << "u,rho,tol\n";
  char buf[96];
  const auto n = static_cast<std::size_t>(std::floor(u_max / step + 1e-9));
  for (std::size_t i = 0; i <= n; ++i) {
    const double u = double(i) * step;
    const auto r = dickman_rho_checked(u, tol);
    std::snprintf(buf, sizeof buf, "%.10g,%.17Lg,%.3g\n", u, r.value, r.error_estimate);
    os << buf;
  }
}

// ---------------------------------------------------------------------------
// Saddle point alpha(x, y)

struct SaddlePoint {
  double x = 0, y = 0;
  double alpha = 0;
  double residual = 0;  // sum_{p<=y} log p/(p^alpha - 1) - log x
  int iterations = 0;
};

namespace detail {

struct SaddleSum {
  std::vector<long double> logs;

  explicit SaddleSum(double y) {
    const auto table = cached_primes(static_cast<std::uint64_t>(y));
    for (std::uint64_t p : table->primes) {
      if (double(p) > y) break;
      logs.push_back(std::log((long double)p));
    }
  }
  // value and derivative of sum log p/(p^a - 1)
  std::pair<long double, long double> eval(long double a) const {
    KahanSum<long double> f, df;
    for (long double lp : logs) {
      const long double pa = std::exp(a * lp);
      const long double den = pa - 1;
      f += lp / den;
      df += -lp * lp * pa / (den * den);
    }
    return {f.value(), df.value()};
  }
};

}  // namespace detail

inline SaddlePoint saddle_alpha(double x, double y) {
  detail::require(y >= 2, "saddle_alpha: need y >= 2");
  detail::require(x > 1, "saddle_alpha: need x > 1");
  detail::require<CapacityError>(y <= kSaddlePrimeCap, "saddle_alpha: y beyond prime-sum capacity");
  const detail::SaddleSum sum(y);
  const long double logx = std::log((long double)x);
  auto g = [&](long double a) {
    auto [f, df] = sum.eval(a);
    return std::pair{f - logx, df};
  };

  long double lo = 0.01L, hi = 1.5L;
  while (g(lo).first < 0) {
    lo /= 10;
    detail::require<ConvergenceError>(lo > 1e-12L, "saddle_alpha: root below bracket");
  }
  while (g(hi).first > 0) {
    hi *= 2;
    detail::require<ConvergenceError>(hi < 1e6L, "saddle_alpha: root above bracket");
  }

  const double u = std::log(x) / std::log(y);
  long double a = 1.0L;
  if (u * std::log(u) > 1) a = 1 - std::log(u * std::log(u)) / std::log(y);
  a = std::clamp<long double>(a, lo, hi);

  const long double target = 1e-10L * logx;
  SaddlePoint out{x, y, 0, 0, 0};
  for (int it = 1; it <= 200; ++it) {
    auto [f, df] = g(a);
    out.iterations = it;
    if (std::abs(f) <= 0.5L * target) {
      out.alpha = double(a);
      out.residual = double(f);
      return out;
    }
    if (f > 0)
      lo = a;
    else
      hi = a;
    long double next = a - f / df;
    if (!(next > lo && next < hi)) next = (lo + hi) / 2;
    if (hi - lo < 1e-18L) {
      out.alpha = double(next);
      out.residual = double(g(next).first);
      if (std::abs(out.residual) <= target) return out;
      break;
    }
    a = next;
  }
  throw ConvergenceError("saddle_alpha: no convergence after 200 iterations");
}

inline double doubling_factor(double x, double y) { return std::exp2(saddle_alpha(x, y).alpha); }

// ---------------------------------------------------------------------------
// Estimates

struct Estimate {
  double value = 0;
  std::vector<std::string> warnings;
};

inline Estimate hildebrand_estimate(double x, double y) {
  detail::require(y >= 2, "hildebrand_estimate: need y >= 2");
  detail::require(x >= 1, "hildebrand_estimate: need x >= 1");
  Estimate e;
  if (y >= x) {
    e.value = x;
    return e;
  }
  const double u = std::log(x) / std::log(y);
  e.value = x * dickman_rho(u, 1e-12);
  if (x > std::exp(1.0)) {
    const double lower = std::exp(std::pow(std::log(std::log(x)), 5.0 / 3.0));
    if (y < lower) e.warnings.push_back("y below exp((log log x)^{5/3}); outside Hildebrand range");
  }
  return e;
}

inline constexpr double kExactPsiMax = 1ull << 28;

// Psi(x,y) prod_{p|q, p<=y} (1 - p^{-alpha(x,y)}); exact Psi when sievable.
inline Estimate psi_q_estimate(double x, double y, std::uint64_t q,
                               std::optional<double> alpha_override = std::nullopt) {
  detail::require(q >= 1, "psi_q_estimate: q must be positive");
  detail::require(y >= 2 && x >= 2, "psi_q_estimate: need x, y >= 2");
  Estimate e;
  double base;
  if (x <= kExactPsiMax) {
    base = double(psi(x, y));
  } else {
    auto h = hildebrand_estimate(x, y);
    base = h.value;
    e.warnings.push_back("Psi(x,y) replaced by x rho(u)");
    e.warnings.insert(e.warnings.end(), h.warnings.begin(), h.warnings.end());
  }
  const double lx = std::log(x);
  if (!(std::pow(lx, 4) <= y && y <= x)) e.warnings.push_back("y outside [(log x)^4, x]");
  const auto primes = prime_divisors(q);
  if (double(primes.size()) > lx) e.warnings.push_back("omega(q) exceeds log x");
  if (!primes.empty() && double(primes.back()) > y)
    e.warnings.push_back("P+(q) > y; product restricted to p <= y");
  double prod = 1;
  std::optional<double> alpha = alpha_override;
  for (std::uint64_t p : primes) {
    if (double(p) > y) break;
    if (!alpha) alpha = saddle_alpha(x, y).alpha;
    prod *= 1 - std::pow(double(p), -*alpha);
  }
  e.value = base * prod;
  return e;
}

// ---------------------------------------------------------------------------
// Unique decomposition of a smooth number

struct SmoothDecomposition {
  std::uint64_t p = 0, u = 0, v = 0;
  bool operator==(const SmoothDecomposition&) const = default;
};

// n = u v with z < v <= z p, p the least prime of v, all primes of v in
// [p, y], and P+(u) <= p.  Built by taking prime factors of n from the top
// until the product first exceeds z.
inline SmoothDecomposition smooth_decompose(std::uint64_t n, std::uint64_t x, double y, double z) {
  detail::require(2 <= y && y <= z && z < double(n) && n <= x,
                  "smooth_decompose: need 2 <= y <= z < n <= x");
  const auto f = factorize(n);
  detail::require(double(f.largest_prime()) <= y, "smooth_decompose: n is not y-smooth");
  std::uint64_t v = 1, p = 0;
  for (auto it = f.factors.rbegin(); it != f.factors.rend(); ++it) {
    for (unsigned e = 0; e < it->second; ++e) {
      v *= it->first;
      p = it->first;
      if (double(v) > z) return {p, n / v, v};
    }
  }
  throw PreconditionError("smooth_decompose: unreachable since n > z");
}

}  // namespace friable
