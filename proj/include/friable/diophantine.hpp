#pragma once

// Exact quadratic irrationals, continued-fraction convergents, exact
// distance to the nearest integer, and the approximation parameters
// X, R, Y together with the target set they define.

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "friable/arith.hpp"
#include "friable/detail/int128.hpp"
#include "friable/errors.hpp"
#include "friable/smooth.hpp"

namespace friable {

// alpha = (p + s sqrt(d)) / r, d positive and not a square.
struct QuadIrr {
  std::int64_t p = 0, s = 1, d = 2, r = 1;

  static QuadIrr make(std::int64_t p, std::int64_t s, std::int64_t d, std::int64_t r) {
    detail::require(s != 0, "QuadIrr: s must be nonzero");
    detail::require(r != 0, "QuadIrr: r must be nonzero");
    detail::require(d > 0, "QuadIrr: d must be positive");
    const auto root = detail::isqrt(d);
    detail::require(root * root != d, "QuadIrr: d must not be a perfect square");
    if (r < 0) {
      p = -p;
      s = -s;
      r = -r;
    }
    const std::int64_t g = std::gcd(std::gcd(p, s), r);
    return QuadIrr{p / g, s / g, d, r / g};
  }
  static QuadIrr golden_ratio() { return make(1, 1, 5, 2); }
  static QuadIrr sqrt2() { return make(0, 1, 2, 1); }

  QuadIrr negated() const { return make(-p, -s, d, r); }
  long double value() const { return ((long double)p + (long double)s * std::sqrt((long double)d)) / r; }
  std::string text() const {
    return "quad:" + std::to_string(p) + "," + std::to_string(s) + "," + std::to_string(d) + "," +
           std::to_string(r);
  }
  bool operator==(const QuadIrr&) const = default;
};

// alpha known only as digits / 10^scale with |alpha - digits/10^scale| <= 10^-precision.
struct DecimalAlpha {
  i128 digits = 0;
  int scale = 0;
  int precision = 0;

  i128 denominator() const {
    i128 d = 1;
    for (int i = 0; i < scale; ++i) d *= 10;
    return d;
  }
  long double value() const { return (long double)digits / (long double)denominator(); }
  long double radius() const { return std::pow(10.0L, -precision); }
};

using AlphaSpec = std::variant<QuadIrr, DecimalAlpha>;

namespace detail {

inline std::int64_t parse_int(std::string_view s, const char* what) {
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  require(ec == std::errc() && ptr == s.data() + s.size(), std::string("cannot parse integer for ") + what);
  return v;
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = s.find(sep, start);
    out.push_back(s.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

}  // namespace detail

// "quad:p,s,d,r" or "dec:<digits>:<precision-exponent>".
inline AlphaSpec parse_alpha(std::string_view text) {
  if (text.starts_with("quad:")) {
    auto parts = detail::split(text.substr(5), ',');
    detail::require(parts.size() == 4, "alpha: quad form needs four integers p,s,d,r");
    return QuadIrr::make(detail::parse_int(parts[0], "p"), detail::parse_int(parts[1], "s"),
                         detail::parse_int(parts[2], "d"), detail::parse_int(parts[3], "r"));
  }
  if (text.starts_with("dec:")) {
    auto parts = detail::split(text.substr(4), ':');
    detail::require(parts.size() == 2, "alpha: dec form is dec:<digits>:<precision>");
    std::string_view num = parts[0];
    DecimalAlpha out;
    bool neg = false;
    if (!num.empty() && (num[0] == '-' || num[0] == '+')) {
      neg = num[0] == '-';
      num.remove_prefix(1);
    }
    detail::require(!num.empty(), "alpha: empty decimal");
    bool seen_point = false;
    int ndigits = 0;
    for (char c : num) {
      if (c == '.') {
        detail::require(!seen_point, "alpha: repeated decimal point");
        seen_point = true;
        continue;
      }
      detail::require(std::isdigit(static_cast<unsigned char>(c)), "alpha: bad decimal digit");
      out.digits = out.digits * 10 + (c - '0');
      if (seen_point) ++out.scale;
      ++ndigits;
    }
    detail::require(ndigits >= 1 && ndigits <= 36, "alpha: decimal must have 1..36 digits");
    detail::require(out.scale <= 18, "alpha: at most 18 fractional digits");
    if (neg) out.digits = -out.digits;
    out.precision = static_cast<int>(detail::parse_int(parts[1], "precision"));
    detail::require(out.precision >= 1 && out.precision <= 18, "alpha: precision exponent must be in [1, 18]");
    return out;
  }
  throw PreconditionError("alpha: expected quad:p,s,d,r or dec:<digits>:<precision>");
}

// |c + b sqrt(d)| computed without cancellation (conjugate form when the
// two parts have opposite signs).
inline long double surd_abs(i128 c, i128 b, std::int64_t d) {
  const long double root = std::sqrt((long double)d);
  if (b == 0) return std::abs((long double)c);
  if (c == 0 || (c > 0) == (b > 0)) return std::abs((long double)c + (long double)b * root);
  const i128 num = detail::checked_add(detail::checked_mul(c, c), -detail::checked_mul(detail::checked_mul(b, b), d));
  const long double den = (long double)c - (long double)b * root;
  return std::abs((long double)num / den);
}

// a/q with |alpha - a/q| <= err_num/err_den; err_num/err_den <= 1/q^2.
struct Convergent {
  std::int64_t a = 0;
  std::int64_t q = 1;
  i128 err_num = 1;
  i128 err_den = 1;
};

namespace detail {

// Continued fraction of (P + sqrt(D))/Q with Q | D - P^2.
class SurdExpansion {
 public:
  explicit SurdExpansion(const QuadIrr& a) {
    i128 P = a.p, Q = a.r;
    const i128 D = checked_mul(checked_mul(a.s, a.s), a.d);
    if (a.s < 0) {
      P = -P;
      Q = -Q;
    }
    D_ = D;
    if (mod_floor(D - P * P, Q < 0 ? -Q : Q) != 0) {
      const i128 absq = Q < 0 ? -Q : Q;
      P = checked_mul(P, absq);
      D_ = checked_mul(D_, checked_mul(Q, Q));
      Q = checked_mul(Q, absq);
    }
    P_ = P;
    Q_ = Q;
    root_ = isqrt(D_);
  }

  i128 next_quotient() {
    i128 a;
    if (Q_ > 0)
      a = floor_div(P_ + root_, Q_);
    else
      a = -(floor_div(P_ + root_, -Q_) + 1);
    const i128 P = a * Q_ - P_;
    const i128 Q = (D_ - P * P) / Q_;
    P_ = P;
    Q_ = Q;
    return a;
  }

 private:
  i128 P_ = 0, Q_ = 1, D_ = 0, root_ = 0;
};

// Convergent numerators/denominators h_k/k_k of a quadratic irrational.
class ConvergentStream {
 public:
  explicit ConvergentStream(const QuadIrr& a) : cf_(a) {}

  std::pair<i128, i128> next() {
    const i128 a = cf_.next_quotient();
    const i128 h = checked_add(checked_mul(a, h1_), h2_);
    const i128 k = checked_add(checked_mul(a, k1_), k2_);
    h2_ = h1_;
    h1_ = h;
    k2_ = k1_;
    k1_ = k;
    return {h, k};
  }

 private:
  SurdExpansion cf_;
  i128 h1_ = 1, h2_ = 0, k1_ = 0, k2_ = 1;
};

}  // namespace detail

// Convergents a_k/q_k in order while q_k <= q_max (at most max_count of them).
inline std::vector<Convergent> convergents_up_to(const QuadIrr& alpha, std::int64_t q_max,
                                                 std::size_t max_count = std::numeric_limits<std::size_t>::max()) {
  std::vector<Convergent> out;
  detail::ConvergentStream stream(alpha);
  auto [h, k] = stream.next();
  int sign = (alpha.value() >= (long double)h / (long double)k) ? 1 : -1;
  while (out.size() < max_count && k <= q_max) {
    std::pair<i128, i128> nxt;
    bool have_next = true;
    try {
      nxt = stream.next();
    } catch (const CapacityError&) {
      have_next = false;
    }
    Convergent c;
    c.a = detail::checked_narrow(h);
    c.q = detail::checked_narrow(k);
    c.err_num = sign;
    c.err_den = detail::checked_mul(k, have_next ? nxt.second : k);
    out.push_back(c);
    if (!have_next) break;
    std::tie(h, k) = nxt;
    sign = -sign;
  }
  return out;
}

inline std::vector<Convergent> cf_convergents(const QuadIrr& alpha, std::size_t count) {
  detail::require(count >= 1, "cf_convergents: count must be positive");
  auto out = convergents_up_to(alpha, std::numeric_limits<std::int64_t>::max(), count);
  detail::require<CapacityError>(out.size() == count, "cf_convergents: exact representation overflowed");
  return out;
}

// Convergents of the decimal centre that remain valid (|alpha - a/q| <= 1/q^2)
// for every alpha in the uncertainty interval.
inline std::vector<Convergent> convergents_up_to(const DecimalAlpha& alpha, std::int64_t q_max) {
  std::vector<Convergent> out;
  const i128 D = alpha.denominator();
  i128 pow_e = 1;
  for (int i = 0; i < alpha.precision; ++i) pow_e *= 10;
  i128 num = alpha.digits, den = D;
  i128 h1 = 1, h2 = 0, k1 = 0, k2 = 1;
  while (den != 0) {
    const i128 a = detail::floor_div(num, den);
    std::tie(num, den) = std::pair{den, num - a * den};
    const i128 h = a * h1 + h2, k = a * k1 + k2;
    std::tie(h2, h1) = std::pair{h1, h};
    std::tie(k2, k1) = std::pair{k1, k};
    if (k > q_max) break;
    // |digits/D - h/k| + 10^-e  <=  1/k^2  with everything scaled by D k^2 10^e
    try {
      i128 diff = detail::checked_add(detail::checked_mul(alpha.digits, k), -detail::checked_mul(h, D));
      if (diff < 0) diff = -diff;
      const i128 lhs = detail::checked_add(detail::checked_mul(detail::checked_mul(diff, k), pow_e),
                                           detail::checked_mul(D, detail::checked_mul(k, k)));
      const i128 rhs = detail::checked_mul(D, pow_e);
      if (lhs > rhs) continue;
      Convergent c;
      c.a = detail::checked_narrow(h);
      c.q = detail::checked_narrow(k);
      c.err_num = lhs;
      c.err_den = detail::checked_mul(detail::checked_mul(D, detail::checked_mul(k, k)), pow_e);
      out.push_back(c);
    } catch (const CapacityError&) {
      break;
    }
  }
  return out;
}

// ||n alpha|| exactly: the nearest integer is decided with integer square
// roots only, then the residual is evaluated in conjugate form.
inline long double dist_nearest(std::int64_t n, const QuadIrr& alpha) {
  detail::require(n >= 0, "dist_nearest: n must be nonnegative");
  if (n == 0) return 0.0L;
  const i128 A = detail::checked_mul(n, alpha.p);
  const i128 B = detail::checked_mul(n, alpha.s);
  const i128 r = alpha.r;
  const i128 BBd = detail::checked_mul(detail::checked_mul(B, B), alpha.d);
  const i128 root = detail::isqrt(BBd);
  const i128 floor_b = B > 0 ? root : -root - 1;  // floor(B sqrt d); B sqrt d is irrational
  const i128 k0 = detail::floor_div(detail::checked_add(A, floor_b), r);
  const i128 c0 = A - r * k0;  // 0 < c0 + B sqrt d < r
  // Is c0 + B sqrt d < r/2, i.e. 2 B sqrt d < r - 2 c0 =: T ?
  const i128 T = r - 2 * c0;
  const i128 lhs_sq = detail::checked_mul(4, BBd);
  bool below_half;
  if (B > 0)
    below_half = T > 0 && lhs_sq < detail::checked_mul(T, T);
  else
    below_half = T > 0 || lhs_sq > detail::checked_mul(T, T);
  const i128 c = below_half ? c0 : c0 - r;
  return surd_abs(c, B, alpha.d) / (long double)r;
}

struct DistInterval {
  long double value;  // ||n * centre||
  long double error;  // |  ||n alpha|| - value | <= error
  long double upper() const { return std::min(value + error, 0.5L); }
};

inline DistInterval dist_nearest(std::int64_t n, const DecimalAlpha& alpha) {
  detail::require(n >= 0, "dist_nearest: n must be nonnegative");
  const i128 D = alpha.denominator();
  const i128 rem = detail::mod_floor(detail::checked_mul(n, alpha.digits), D);
  const i128 d = std::min(rem, D - rem);
  return {(long double)d / (long double)D, (long double)n * alpha.radius()};
}

// Upper bound on ||n alpha|| valid for either representation.
inline long double dist_upper(std::int64_t n, const AlphaSpec& alpha) {
  return std::visit(
      [n](const auto& a) -> long double {
        using T = std::decay_t<decltype(a)>;
        if constexpr (std::is_same_v<T, QuadIrr>)
          return dist_nearest(n, a);
        else
          return dist_nearest(n, a).upper();
      },
      alpha);
}

inline std::vector<Convergent> convergents_up_to(const AlphaSpec& alpha, std::int64_t q_max) {
  return std::visit([q_max](const auto& a) { return convergents_up_to(a, q_max); }, alpha);
}

// ---------------------------------------------------------------------------

struct Rational {
  std::int64_t num = 0;
  std::int64_t den = 1;

  double value() const { return double(num) / double(den); }
  std::string text() const { return std::to_string(num) + "/" + std::to_string(den); }
};

// "p/q", an integer, or a terminating decimal such as "0.3".
inline Rational parse_rational(std::string_view s) {
  Rational r;
  if (auto slash = s.find('/'); slash != std::string_view::npos) {
    r.num = detail::parse_int(s.substr(0, slash), "rational numerator");
    r.den = detail::parse_int(s.substr(slash + 1), "rational denominator");
  } else if (auto dot = s.find('.'); dot != std::string_view::npos) {
    const auto frac = s.substr(dot + 1);
    detail::require(frac.size() <= 15, "rational: too many decimal digits");
    std::string digits(s.substr(0, dot));
    digits += frac;
    r.num = detail::parse_int(digits, "rational");
    r.den = 1;
    for (std::size_t i = 0; i < frac.size(); ++i) r.den *= 10;
  } else {
    r.num = detail::parse_int(s, "rational");
  }
  detail::require(r.den != 0, "rational: zero denominator");
  if (r.den < 0) {
    r.num = -r.num;
    r.den = -r.den;
  }
  const std::int64_t g = std::gcd(r.num, r.den);
  if (g > 1) {
    r.num /= g;
    r.den /= g;
  }
  return r;
}

struct ApproxParams {
  Rational theta;
  std::uint64_t q = 2;
  double X = 0;
  double R = 0;
  double Y = 0;
  double C = 10;

  // R/q + 4X/q^2: the bound on ||n alpha|| for members of the target set.
  double connection_bound() const { return R / double(q) + 4 * X / (double(q) * double(q)); }
};

inline constexpr double kDefaultSmoothExponent = 10;

inline bool theta_admissible(const Rational& theta) {
  return theta.den > 0 && theta.num > 0 && i128(theta.num) * 17 < i128(theta.den) * 6;
}

// X = q^{2/(1+theta)}, R = q^{(1-theta)/(1+theta)}, Y = (log X)^C unless overridden.
inline ApproxParams derive_params(std::uint64_t q, Rational theta, double C = kDefaultSmoothExponent,
                                  std::optional<double> Y = std::nullopt) {
  detail::require(theta_admissible(theta), "derive_params: theta must lie in (0, 6/17)");
  detail::require(q >= 2, "derive_params: q must be at least 2");
  detail::require(C > 0, "derive_params: C must be positive");
  const long double lq = std::log((long double)q);
  const long double sum = (long double)theta.den + (long double)theta.num;
  ApproxParams ap;
  ap.theta = theta;
  ap.q = q;
  ap.C = C;
  ap.X = double(std::exp(lq * 2 * theta.den / sum));
  ap.R = double(std::exp(lq * ((long double)theta.den - theta.num) / sum));
  ap.Y = Y ? *Y : std::pow(std::log(ap.X), C);
  return ap;
}

struct TargetMember {
  std::uint64_t n;
  std::uint64_t lpf;  // P+(n)
};

inline constexpr std::uint64_t kTargetCandidateMax = 1ull << 31;

// Members of S(X,Y,R,q) with their largest prime factors, ascending.
inline std::vector<TargetMember> target_members(const ApproxParams& ap, std::int64_t a) {
  const auto q = static_cast<std::int64_t>(ap.q);
  detail::require(std::gcd(a, q) == 1, "build_target_set: gcd(a, q) must be 1");
  const long double X = ap.X;
  const auto lo = static_cast<std::uint64_t>(std::max(1.0L, std::ceil(X / 4)));
  detail::require<CapacityError>(4 * X <= (long double)kSieveMaxValue, "build_target_set: X beyond sieve capacity");
  const auto hi = static_cast<std::uint64_t>(std::floor(4 * X));
  std::vector<TargetMember> out;
  if (hi < lo) return out;
  const auto rmax = static_cast<std::int64_t>(std::min<double>(std::floor(ap.R), double(q - 1)));
  const double expected = double(rmax) * (double(hi - lo) / double(q) + 1);
  detail::require<CapacityError>(expected <= double(kTargetCandidateMax), "build_target_set: too many candidates");
  const std::int64_t abar = mod_inverse(a, q) % q;
  const detail::ProgressionSieve sieve(ap.q, hi);
  std::vector<std::uint64_t> lpf;
  for (std::int64_t r = 1; r <= rmax; ++r) {
    if (std::gcd(r, q) != 1) continue;
    const auto cls = static_cast<std::uint64_t>(i128(r) * abar % q);
    // smallest n >= lo with n = cls (mod q)
    std::uint64_t first = lo + (cls + ap.q - lo % ap.q) % ap.q;
    if (first > hi) continue;
    const std::size_t count = (hi - first) / ap.q + 1;
    lpf.resize(count);
    sieve.largest_prime(first, lpf);
    for (std::size_t j = 0; j < count; ++j)
      if (double(lpf[j]) <= ap.Y) out.push_back({first + j * ap.q, lpf[j]});
  }
  std::sort(out.begin(), out.end(), [](const auto& x, const auto& y) { return x.n < y.n; });
  return out;
}

// S(X,Y,R,q) = { X/4 <= n <= 4X : P+(n) <= Y, gcd(n,q) = 1, a n mod q in [1, R] }.
inline std::vector<std::uint64_t> build_target_set(const ApproxParams& ap, std::int64_t a) {
  std::vector<std::uint64_t> out;
  for (const auto& m : target_members(ap, a)) out.push_back(m.n);
  return out;
}

}  // namespace friable
