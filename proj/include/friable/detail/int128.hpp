#pragma once

#include <cmath>
#include <cstdint>
#include <string>

#include "friable/errors.hpp"

namespace friable {

__extension__ using i128 = __int128;
__extension__ using u128 = unsigned __int128;

namespace detail {

inline i128 checked_mul(i128 a, i128 b) {
  i128 r;
  if (__builtin_mul_overflow(a, b, &r)) throw CapacityError("128-bit overflow in exact arithmetic");
  return r;
}

inline i128 checked_add(i128 a, i128 b) {
  i128 r;
  if (__builtin_add_overflow(a, b, &r)) throw CapacityError("128-bit overflow in exact arithmetic");
  return r;
}

inline std::int64_t checked_narrow(i128 v) {
  if (v > INT64_MAX || v < INT64_MIN) throw CapacityError("value does not fit in 64 bits");
  return static_cast<std::int64_t>(v);
}

// floor(sqrt(n)) for 0 <= n < 2^126.
inline i128 isqrt(i128 n) {
  if (n < 0) throw PreconditionError("isqrt of negative value");
  if (n < 2) return n;
  if (n >= (i128(1) << 126)) throw CapacityError("isqrt argument too large");
  auto r = static_cast<i128>(std::sqrt(static_cast<long double>(n)));
  while (r * r > n) --r;
  while ((r + 1) * (r + 1) <= n) ++r;
  return r;
}

inline i128 floor_div(i128 a, i128 b) {
  i128 q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

inline i128 mod_floor(i128 a, i128 m) {
  i128 r = a % m;
  return r < 0 ? r + m : r;
}

inline std::string to_string(i128 v) {
  if (v == 0) return "0";
  bool neg = v < 0;
  u128 u = neg ? u128(0) - u128(v) : u128(v);
  std::string s;
  while (u > 0) {
    s.insert(s.begin(), char('0' + int(u % 10)));
    u /= 10;
  }
  if (neg) s.insert(s.begin(), '-');
  return s;
}

}  // namespace detail
}  // namespace friable
