#pragma once

// The smooth bump phi, its Fourier transform, the residue weight Phi_a(n, R)
// and the bilinear / dispersion sums assembled from them.

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <chrono>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <map>
#include <numbers>
#include <numeric>
#include <optional>
#include <queue>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "friable/arith.hpp"
#include "friable/detail/int128.hpp"
#include "friable/detail/kahan.hpp"
#include "friable/diophantine.hpp"
#include "friable/errors.hpp"
#include "friable/expsums.hpp"
#include "friable/smooth.hpp"

namespace friable {

// ---------------------------------------------------------------------------
// The bump

namespace detail {

// C-infinity step: 0 for s <= 0, 1 for s >= 1, g(s) + g(1-s) = 1.
inline double smooth_step(double s) {
  if (s <= 0) return 0;
  if (s >= 1) return 1;
  const double a = std::exp(-1 / s);
  const double b = std::exp(-1 / (1 - s));
  return a / (a + b);
}

}  // namespace detail

// Supported on [1/4, 3/4], equal to 1 on [1/3, 2/3], symmetric about 1/2.
inline double bump_phi(double x) {
  if (x < 0.5) return detail::smooth_step(12 * (x - 0.25));
  return detail::smooth_step(12 * (0.75 - x));
}

inline constexpr double kBumpMass = 5.0 / 12.0;  // integral of bump_phi

namespace detail {

struct QuadratureResult {
  double value;
  double error;
};

// Globally adaptive Gauss-Kronrod 7/15 with an absolute error target; the
// error of each panel is |K15 - G7|.
template <typename F>
QuadratureResult integrate_gk15(F f, double a, double b, double tol, int max_panels = 4096) {
  using GK = boost::math::quadrature::gauss_kronrod<double, 15>;
  using G = boost::math::quadrature::gauss<double, 7>;
  const auto& xk = GK::abscissa();
  const auto& wk = GK::weights();
  const auto& wg = G::weights();
  struct Panel {
    double a, b, value, error;
    bool operator<(const Panel& o) const { return error < o.error; }
  };
  auto eval = [&](double lo, double hi) {
    const double c = (lo + hi) / 2, h = (hi - lo) / 2;
    const double f0 = f(c);
    double k = wk[0] * f0, g = wg[0] * f0;
    for (std::size_t i = 1; i < xk.size(); ++i) {
      const double s = f(c - h * xk[i]) + f(c + h * xk[i]);
      k += wk[i] * s;
      if (i % 2 == 0) g += wg[i / 2] * s;
    }
    return Panel{lo, hi, k * h, std::abs((k - g) * h)};
  };
  std::priority_queue<Panel> heap;
  heap.push(eval(a, b));
  double value = heap.top().value, error = heap.top().error;
  int panels = 1;
  while (error > tol) {
    require<ConvergenceError>(panels < max_panels, "quadrature: panel limit reached before tolerance");
    Panel worst = heap.top();
    heap.pop();
    const double mid = (worst.a + worst.b) / 2;
    Panel left = eval(worst.a, mid), right = eval(mid, worst.b);
    value += left.value + right.value - worst.value;
    error += left.error + right.error - worst.error;
    heap.push(left);
    heap.push(right);
    ++panels;
  }
  // Re-sum to shed the drift of the running updates.
  value = 0;
  error = 0;
  while (!heap.empty()) {
    value += heap.top().value;
    error += heap.top().error;
    heap.pop();
  }
  return {value, error};
}

}  // namespace detail

struct FourierSample {
  std::complex<double> value;
  double error;  // quadrature error bound
};

// phi^(xi) = int phi(t) e(-xi t) dt.  By symmetry about 1/2 this is
// e(-xi/2) * 2 int_0^{1/4} phi(1/2 + s) cos(2 pi xi s) ds; the plateau part
// is integrated in closed form, the transition [1/6, 1/4] adaptively.
inline FourierSample bump_fourier_sample(double xi, double tol = 1e-10) {
  detail::require(tol >= 1e-12, "bump_fourier: tol below 1e-12");
  const double w = 2 * std::numbers::pi * xi;
  const double plateau = xi == 0 ? 1.0 / 6 : std::sin(w / 6) / w;
  auto integrand = [w](double s) { return detail::smooth_step(12 * (0.25 - s)) * std::cos(w * s); };
  const auto tr = detail::integrate_gk15(integrand, 1.0 / 6, 0.25, tol / 2);
  const double amplitude = 2 * (plateau + tr.value);
  const double phase = -std::numbers::pi * xi;  // e(-xi/2)
  return {std::polar(amplitude, phase), 2 * tr.error};
}

inline std::complex<double> bump_fourier(double xi, double tol = 1e-10) {
  return bump_fourier_sample(xi, tol).value;
}

// Cached samples of phi^; immutable once built and safe to share.
class FourierTable {
 public:
  explicit FourierTable(double tol = 1e-10) : tol_(tol) {}

  static FourierTable build(std::span<const double> frequencies, double tol = 1e-10) {
    FourierTable t(tol);
    for (double xi : frequencies) t.insert(xi);
    return t;
  }
  // Samples at k * spacing for 0 <= k <= K.
  static FourierTable lattice(double spacing, std::int64_t K, double tol = 1e-10) {
    FourierTable t(tol);
    for (std::int64_t k = 0; k <= K; ++k) t.insert(double(k) * spacing);
    return t;
  }

  double tol() const { return tol_; }
  std::size_t size() const { return samples_.size(); }
  bool contains(double xi) const { return samples_.count(key(std::abs(xi))) > 0; }

  // phi^(xi); negative frequencies come from conjugation.
  FourierSample at(double xi) const {
    auto it = samples_.find(key(std::abs(xi)));
    detail::require(it != samples_.end(), "FourierTable: frequency not tabulated");
    FourierSample s = it->second;
    if (xi < 0) s.value = std::conj(s.value);
    return s;
  }

 private:
  static std::int64_t key(double xi) { return std::llround(xi * 16777216.0); }  // 2^-24 resolution
  void insert(double xi) {
    xi = std::abs(xi);
    const auto k = key(xi);
    if (!samples_.count(k)) samples_.emplace(k, bump_fourier_sample(xi, tol_));
  }

  double tol_;
  std::map<std::int64_t, FourierSample> samples_;
};

// ---------------------------------------------------------------------------
// Phi_a(n, R) = sum_{r = n a (mod q)} phi(r / R)

// With R < q only the least nonnegative residue can meet the support.
inline double phi_weight(std::int64_t n, double R, std::int64_t q, std::int64_t a) {
  detail::require(q >= 1, "phi_weight: q must be positive");
  detail::require(std::gcd(a, q) == 1, "phi_weight: gcd(a, q) must be 1");
  detail::require(R > 0 && R < double(q), "phi_weight: need 0 < R < q");
  const auto r = detail::mulmod(n, a, q);
  return bump_phi(double(r) / R);
}

struct PoissonValue {
  double value;
  double imag;  // must vanish by the +-k pairing
  std::int64_t Kmax;
};

// (R/q) sum_{|k| <= Kmax} phi^(kR/q) e(n a k / q), real part.
inline PoissonValue phi_weight_poisson_detail(std::int64_t n, double R, std::int64_t q, std::int64_t a,
                                              std::int64_t Kmax, const FourierTable* table = nullptr) {
  detail::require(q >= 1, "phi_weight_poisson: q must be positive");
  detail::require(std::gcd(a, q) == 1, "phi_weight_poisson: gcd(a, q) must be 1");
  detail::require(R > 0 && R < double(q), "phi_weight_poisson: need 0 < R < q");
  detail::require(Kmax >= 0, "phi_weight_poisson: Kmax must be nonnegative");
  const double spacing = R / double(q);
  auto hat = [&](std::int64_t k) {
    const double xi = double(k) * spacing;
    if (table && table->contains(xi)) return table->at(xi).value;
    return bump_fourier(xi);
  };
  const std::int64_t t = detail::mulmod(n, a, q);
  detail::KahanSum<long double> re, im;
  re += hat(0).real();
  im += hat(0).imag();
  for (std::int64_t k = 1; k <= Kmax; ++k) {
    const auto h = hat(k);
    const auto ph = detail::unit_root(detail::mulmod(t, k, q), q);
    const auto plus = h * ph;
    const auto minus = std::conj(h) * std::conj(ph);
    re += plus.real();
    re += minus.real();
    im += plus.imag();
    im += minus.imag();
  }
  const double v = double(re.value()) * spacing;
  const double i = double(im.value()) * spacing;
  detail::require<ConvergenceError>(std::abs(i) <= 1e-9, "phi_weight_poisson: imaginary residue above 1e-9");
  return {v, i, Kmax};
}

inline double phi_weight_poisson(std::int64_t n, double R, std::int64_t q, std::int64_t a, std::int64_t Kmax,
                                 const FourierTable* table = nullptr) {
  return phi_weight_poisson_detail(n, R, q, a, Kmax, table).value;
}

inline std::int64_t poisson_initial_kmax(double R, std::int64_t q) {
  return static_cast<std::int64_t>(std::ceil(10.0 * double(q) / R));
}

struct CertifiedPoisson {
  double value;
  std::int64_t Kmax;
  double last_change;  // |value(Kmax) - value(Kmax/2)|
};

// Doubles Kmax from ceil(10 q / R) until the value moves by at most `change_tol`.
inline CertifiedPoisson phi_weight_poisson_certified(std::int64_t n, double R, std::int64_t q, std::int64_t a,
                                                     double change_tol = 1e-8, std::int64_t kmax_cap = 1 << 22) {
  std::int64_t K = poisson_initial_kmax(R, q);
  double prev = phi_weight_poisson(n, R, q, a, K);
  for (;;) {
    detail::require<ConvergenceError>(2 * K <= kmax_cap, "phi_weight_poisson: truncation not certified below cap");
    const double next = phi_weight_poisson(n, R, q, a, 2 * K);
    const double change = std::abs(next - prev);
    K *= 2;
    if (change <= change_tol) return {next, K, change};
    prev = next;
  }
}

// ---------------------------------------------------------------------------
// Reports

namespace detail {

inline nlohmann::json real_json(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return nullptr;
  return v > 0 ? "inf" : "-inf";
}

}  // namespace detail

struct SumReport {
  double value = 0;
  double main_term = 0;
  double ratio = std::numeric_limits<double>::quiet_NaN();  // value / main_term; NaN when main_term == 0
  double truncation_error = 0;
  nlohmann::json params = nlohmann::json::object();
  double runtime_ms = 0;
  std::vector<std::string> warnings;
  nlohmann::json extra = nlohmann::json::object();

  bool ratio_defined() const { return main_term != 0; }

  void set(double v, double main) {
    value = v;
    main_term = main;
    ratio = main != 0 ? v / main : std::numeric_limits<double>::quiet_NaN();
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["value"] = detail::real_json(value);
    j["main_term"] = detail::real_json(main_term);
    j["ratio"] = detail::real_json(ratio);
    j["truncation_error"] = detail::real_json(truncation_error);
    j["params"] = params;
    j["runtime_ms"] = runtime_ms;
    if (!warnings.empty()) j["warnings"] = warnings;
    if (!extra.empty()) j["extra"] = extra;
    return j;
  }
};

struct DispersionParams {
  double M = 2, N = 2;
  std::int64_t q = 2;
  std::int64_t a = 1;
  double R = 1;
  double Y = std::numeric_limits<double>::infinity();
  std::optional<Rational> theta;
  double eta = 0.05;
  double delta = 0.1;

  double X() const { return double(q) * R; }

  void validate() const {
    detail::require(M >= 2 && N >= 2, "DispersionParams: need M, N >= 2");
    detail::require(q >= 1, "DispersionParams: q must be positive");
    detail::require(std::gcd(a, q) == 1, "DispersionParams: gcd(a, q) must be 1");
    detail::require(R > 0 && R < double(q), "DispersionParams: need 0 < R < q");
  }

  // Range conditions of the bilinear decomposition, reported rather than enforced.
  std::vector<std::string> warnings() const {
    std::vector<std::string> w;
    const double X = this->X(), MN = M * N;
    if (!(X / 4 <= MN && MN <= 4 * X)) w.push_back("MN outside [X/4, 4X]");
    if (!(double(q) / std::pow(R, 1 - delta) <= N)) w.push_back("N below q / R^{1-delta}");
    if (!(N <= std::pow(R, 12.0 / 11.0 - delta))) w.push_back("N above R^{12/11-delta}");
    if (!(eta < delta / 20)) w.push_back("eta not below delta/20");
    return w;
  }

  nlohmann::json to_json() const {
    nlohmann::json j{{"M", M}, {"N", N}, {"q", q}, {"a", a}, {"R", R}, {"Y", detail::real_json(Y)},
                     {"eta", eta}, {"delta", delta}};
    if (theta) j["theta"] = theta->text();
    return j;
  }
};

namespace detail {

inline std::int64_t floor_i(double v) { return static_cast<std::int64_t>(std::floor(v)); }
inline std::int64_t ceil_i(double v) { return static_cast<std::int64_t>(std::ceil(v)); }

// Indicator of S_q(Y) on the integers lo..hi (empty when hi < lo).
inline std::vector<std::uint8_t> sq_indicator(std::int64_t lo, std::int64_t hi, double Y, std::int64_t q) {
  std::vector<std::uint8_t> out;
  if (hi < lo) return out;
  const auto s = smooth_sieve(std::uint64_t(lo), std::uint64_t(hi), Y, std::uint64_t(q));
  out.resize(std::size_t(hi - lo + 1));
  for (std::int64_t n = lo; n <= hi; ++n) out[std::size_t(n - lo)] = s.in_sq(std::uint64_t(n));
  return out;
}

// Phi_a(m n, R) for n = n_lo..n_hi, by stepping the residue m a n (mod q).
inline void phi_row(std::int64_t m, std::int64_t n_lo, std::int64_t n_hi, const DispersionParams& p,
                    std::vector<double>& row) {
  row.resize(std::size_t(std::max<std::int64_t>(0, n_hi - n_lo + 1)));
  if (row.empty()) return;
  const std::int64_t stride = mulmod(m, p.a, p.q);
  std::int64_t r = mulmod(mulmod(m, n_lo, p.q), p.a, p.q);
  const double lo = p.R / 4, hi = 3 * p.R / 4;
  for (std::size_t j = 0; j < row.size(); ++j) {
    const double rr = double(r);
    row[j] = (rr <= lo || rr >= hi) ? 0.0 : bump_phi(rr / p.R);
    r += stride;
    if (r >= p.q) r -= p.q;
  }
}

struct DyadicRange {
  std::int64_t lo, hi;  // integers n with N < n <= 2N
  std::int64_t count() const { return std::max<std::int64_t>(0, hi - lo + 1); }
};

inline DyadicRange dyadic(double N) { return {floor_i(N) + 1, floor_i(2 * N)}; }

inline void check_budget(double work, std::uint64_t budget, const char* what) {
  require<BudgetError>(work <= double(budget), std::string(what) + ": budget exceeded");
}

using Clock = std::chrono::steady_clock;
inline double elapsed_ms(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

}  // namespace detail

// Sigma(q, R) = sum_{X/4 <= n <= 4X} 1_{S_q(Y)}(n) Phi_a(n, R), walking only
// the residue classes a n = r (mod q) with r in the support (R/4, 3R/4).
inline SumReport sigma_qR(const ApproxParams& ap, std::int64_t a) {
  const auto t0 = detail::Clock::now();
  const auto q = static_cast<std::int64_t>(ap.q);
  detail::require(std::gcd(a, q) == 1, "sigma_qR: gcd(a, q) must be 1");
  detail::require(ap.R < double(q), "sigma_qR: need R < q");
  detail::require<CapacityError>(4 * ap.X <= double(kSieveMaxValue), "sigma_qR: X beyond sieve capacity");
  const auto lo = static_cast<std::uint64_t>(std::max(1.0, std::ceil(ap.X / 4)));
  const auto hi = static_cast<std::uint64_t>(std::floor(4 * ap.X));
  const std::int64_t abar = mod_inverse(a, q) % q;
  detail::KahanSum<long double> total;
  std::uint64_t members = 0;
  if (hi >= lo) {
    const detail::ProgressionSieve sieve(ap.q, hi);
    std::vector<std::uint8_t> smooth;
    for (std::int64_t r = detail::floor_i(ap.R / 4) + 1; double(r) < 3 * ap.R / 4; ++r) {
      if (std::gcd(r, q) != 1) continue;
      const double w = bump_phi(double(r) / ap.R);
      if (w == 0) continue;
      const auto cls = static_cast<std::uint64_t>(detail::mulmod(r, abar, q));
      const std::uint64_t first = lo + (cls + ap.q - lo % ap.q) % ap.q;
      if (first > hi) continue;
      const std::size_t count = (hi - first) / ap.q + 1;
      std::uint64_t hits = count;
      if (ap.Y < double(hi)) {
        smooth.resize(count);
        sieve.smooth(first, ap.Y, smooth);
        hits = std::uint64_t(std::count(smooth.begin(), smooth.end(), std::uint8_t(1)));
      }
      members += hits;
      total += (long double)w * hits;
    }
  }
  SumReport rep;
  const double theta = ap.theta.value();
  rep.set(double(total.value()), std::pow(ap.R, 2 - (1 - theta) / (2 * ap.C)));
  rep.params = {{"q", ap.q}, {"a", a}, {"theta", ap.theta.text()}, {"X", ap.X}, {"R", ap.R},
                {"Y", detail::real_json(ap.Y)}, {"C", ap.C}};
  rep.extra["weighted_members"] = members;
  rep.runtime_ms = detail::elapsed_ms(t0);
  return rep;
}

// B(M, N) = sum_{m~M} 1_{S_q(Y)}(m) sum_{n~N} 1_{S_q(Y)}(n) Phi_a(mn, R).
inline SumReport bilinear_B(const DispersionParams& p, std::uint64_t budget = kDefaultBudget) {
  const auto t0 = detail::Clock::now();
  p.validate();
  const auto mr = detail::dyadic(p.M), nr = detail::dyadic(p.N);
  detail::check_budget(double(mr.count()) * double(nr.count()), budget, "bilinear_B");
  const auto im = detail::sq_indicator(mr.lo, mr.hi, p.Y, p.q);
  const auto in = detail::sq_indicator(nr.lo, nr.hi, p.Y, p.q);
  detail::KahanSum<long double> total;
  std::vector<double> row;
  for (std::int64_t m = mr.lo; m <= mr.hi; ++m) {
    if (!im[std::size_t(m - mr.lo)]) continue;
    detail::phi_row(m, nr.lo, nr.hi, p, row);
    long double s = 0;
    for (std::size_t j = 0; j < row.size(); ++j)
      if (in[j]) s += row[j];
    total += s;
  }
  SumReport rep;
  rep.set(double(total.value()), 0);
  rep.params = p.to_json();
  rep.warnings = p.warnings();
  rep.runtime_ms = detail::elapsed_ms(t0);
  return rep;
}

// Type I sum sum_{m~M} 1_{S_q(Y)}(m) sum_{n~N} Phi_a(mn, R) against
// phi^(0) (N R / q) sum_{m~M} 1_{S_q(Y)}(m).
inline SumReport type1_report(const DispersionParams& p, std::uint64_t budget = kDefaultBudget) {
  const auto t0 = detail::Clock::now();
  p.validate();
  const auto mr = detail::dyadic(p.M), nr = detail::dyadic(p.N);
  detail::check_budget(double(mr.count()) * double(nr.count()), budget, "type1_report");
  const auto im = detail::sq_indicator(mr.lo, mr.hi, p.Y, p.q);
  const auto smooth_m = std::count(im.begin(), im.end(), std::uint8_t(1));
  detail::KahanSum<long double> total;
  std::vector<double> row;
  for (std::int64_t m = mr.lo; m <= mr.hi; ++m) {
    if (!im[std::size_t(m - mr.lo)]) continue;
    detail::phi_row(m, nr.lo, nr.hi, p, row);
    long double s = 0;
    for (double v : row) s += v;
    total += s;
  }
  SumReport rep;
  const double phi0 = bump_fourier(0).real();
  rep.set(double(total.value()), phi0 * p.N * p.R / double(p.q) * double(smooth_m));
  rep.params = p.to_json();
  rep.warnings = p.warnings();
  rep.extra["smooth_m"] = smooth_m;
  rep.extra["phi_hat_0"] = phi0;
  rep.runtime_ms = detail::elapsed_ms(t0);
  return rep;
}

struct DispersionSums {
  double S1 = 0, S2 = 0, S3 = 0;
  double Sprime = 0;  // S1 - 2 S2 + S3
  double K = 0;       // K(N, Y)
};

namespace detail {

// Per-m row sums A_m = sum 1(n) Phi(mn), B_m = sum Phi(mn) over n ~ N, for
// m in [3M/4, 9M/4] with weight phi(m / 3M).
struct DispersionRows {
  std::vector<std::int64_t> m;
  std::vector<double> weight;
  std::vector<long double> A, B;
  std::vector<double> square;  // sum_n (1(n) - K) Phi(mn), accumulated directly
  double K = 0;
};

inline DispersionRows dispersion_rows(const DispersionParams& p, std::uint64_t budget) {
  p.validate();
  const auto nr = dyadic(p.N);
  const std::int64_t m_lo = std::max<std::int64_t>(1, ceil_i(3 * p.M / 4));
  const std::int64_t m_hi = floor_i(9 * p.M / 4);
  check_budget(double(std::max<std::int64_t>(0, m_hi - m_lo + 1)) * double(nr.count()), budget, "dispersion_sums");
  const auto in = sq_indicator(nr.lo, nr.hi, p.Y, p.q);
  DispersionRows rows;
  rows.K = local_density(p.N, p.Y, std::uint64_t(p.q));
  std::vector<double> row;
  for (std::int64_t m = m_lo; m <= m_hi; ++m) {
    const double w = bump_phi(double(m) / (3 * p.M));
    if (w == 0) continue;
    phi_row(m, nr.lo, nr.hi, p, row);
    long double a = 0, b = 0, d = 0;
    for (std::size_t j = 0; j < row.size(); ++j) {
      b += row[j];
      if (in[j]) a += row[j];
      d += ((in[j] ? 1.0L : 0.0L) - rows.K) * row[j];
    }
    rows.m.push_back(m);
    rows.weight.push_back(w);
    rows.A.push_back(a);
    rows.B.push_back(b);
    rows.square.push_back(double(d));
  }
  return rows;
}

}  // namespace detail

// S'_1, S'_2, S'_3 with the double sum over (n1, n2) factored into products
// of row sums.
inline DispersionSums dispersion_sums(const DispersionParams& p, std::uint64_t budget = kDefaultBudget) {
  const auto rows = detail::dispersion_rows(p, budget);
  long double s1 = 0, s2 = 0, s3 = 0;
  for (std::size_t i = 0; i < rows.m.size(); ++i) {
    const long double w = rows.weight[i];
    s1 += w * rows.A[i] * rows.A[i];
    s2 += w * rows.A[i] * rows.B[i];
    s3 += w * rows.B[i] * rows.B[i];
  }
  const long double K = rows.K;
  DispersionSums out;
  out.K = rows.K;
  out.S1 = double(s1);
  out.S2 = double(K * s2);
  out.S3 = double(K * K * s3);
  out.Sprime = double(s1 - 2 * K * s2 + K * K * s3);
  return out;
}

// sum_m phi(m/3M) (sum_{n~N} (1_{S_q(Y)}(n) - K) Phi_a(mn, R))^2, evaluated
// from the unexpanded square.
inline double dispersion_square_form(const DispersionParams& p, std::uint64_t budget = kDefaultBudget) {
  const auto rows = detail::dispersion_rows(p, budget);
  long double total = 0;
  for (std::size_t i = 0; i < rows.m.size(); ++i)
    total += (long double)rows.weight[i] * rows.square[i] * rows.square[i];
  return double(total);
}

// Discrepancy D = sum_{m~M} 1(m) sum_{n~N} (1(n) - K(N,Y)) Phi_a(mn, R)
// against R^{2-eta}, with the dispersion inequality D^2 <= M S' checked.
inline SumReport type2_report(const DispersionParams& p, std::uint64_t budget = kDefaultBudget) {
  const auto t0 = detail::Clock::now();
  p.validate();
  const auto mr = detail::dyadic(p.M), nr = detail::dyadic(p.N);
  detail::check_budget(double(mr.count()) * double(nr.count()), budget, "type2_report");
  const auto im = detail::sq_indicator(mr.lo, mr.hi, p.Y, p.q);
  const auto in = detail::sq_indicator(nr.lo, nr.hi, p.Y, p.q);
  const long double K = local_density(p.N, p.Y, std::uint64_t(p.q));
  detail::KahanSum<long double> total;
  std::vector<double> row;
  for (std::int64_t m = mr.lo; m <= mr.hi; ++m) {
    if (!im[std::size_t(m - mr.lo)]) continue;
    detail::phi_row(m, nr.lo, nr.hi, p, row);
    long double s = 0;
    for (std::size_t j = 0; j < row.size(); ++j) s += ((in[j] ? 1.0L : 0.0L) - K) * row[j];
    total += s;
  }
  const auto sums = dispersion_sums(p, budget);
  const double D = double(total.value());
  // #{m ~ M} <= max(M, count) keeps the inequality exact for fractional M.
  const double cs_factor = std::max(p.M, double(mr.count()));
  const double lhs = D * D;
  const double rhs = cs_factor * sums.Sprime;

  SumReport rep;
  rep.set(D, std::pow(p.R, 2 - p.eta));
  rep.params = p.to_json();
  rep.warnings = p.warnings();
  rep.extra = {{"K", sums.K},
               {"S1", sums.S1},
               {"S2", sums.S2},
               {"S3", sums.S3},
               {"Sprime", sums.Sprime},
               {"cs_lhs", lhs},
               {"cs_rhs", rhs},
               {"cs_holds", lhs <= rhs * (1 + 1e-9) + 1e-18},
               {"Sprime_M_over_R4", sums.Sprime * p.M / std::pow(p.R, 4)}};
  rep.runtime_ms = detail::elapsed_ms(t0);
  return rep;
}

}  // namespace friable
