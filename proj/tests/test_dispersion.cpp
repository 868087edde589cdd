#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "friable/dispersion.hpp"
#include "oracles.hpp"

using namespace friable;

namespace {

DispersionParams params(double M, double N, std::int64_t q, std::int64_t a, double R, double Y) {
  DispersionParams p;
  p.M = M;
  p.N = N;
  p.q = q;
  p.a = a;
  p.R = R;
  p.Y = Y;
  return p;
}

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

TEST(Bump, SupportPlateauSymmetry) {
  EXPECT_EQ(bump_phi(0.2), 0);
  EXPECT_EQ(bump_phi(0.5), 1);
  EXPECT_EQ(bump_phi(0.25), 0);
  EXPECT_EQ(bump_phi(0.75), 0);
  EXPECT_EQ(bump_phi(1.0 / 3), 1);
  EXPECT_EQ(bump_phi(2.0 / 3), 1);
  for (int i = 0; i <= 1000; ++i) {
    const double t = i / 12000.0;
    ASSERT_NEAR(bump_phi(0.25 + t) + bump_phi(1.0 / 3 - t), 1, 4e-15);
    const double x = -0.5 + 2.0 * i / 1000;
    ASSERT_GE(bump_phi(x), 0);
    ASSERT_LE(bump_phi(x), 1);
    ASSERT_NEAR(bump_phi(x), oracle::bump(x), 1e-15);
    ASSERT_NEAR(bump_phi(x), bump_phi(1 - x), 1e-15);
  }
}

TEST(Bump, DerivativesStayFinite) {
  // measured sup |phi'| and |phi''| by symmetric differences; recorded, not bounded
  double d1 = 0, d2 = 0;
  const double h = 1e-5;
  for (int i = 1; i < 20000; ++i) {
    const double x = 0.25 + 0.5 * i / 20000;
    d1 = std::max(d1, std::abs(bump_phi(x + h) - bump_phi(x - h)) / (2 * h));
    d2 = std::max(d2, std::abs(bump_phi(x + h) - 2 * bump_phi(x) + bump_phi(x - h)) / (h * h));
  }
  RecordProperty("sup_phi1", std::to_string(d1));
  RecordProperty("sup_phi2", std::to_string(d2));
  EXPECT_TRUE(std::isfinite(d1) && d1 > 12 && d1 < 100);
  EXPECT_TRUE(std::isfinite(d2) && d2 < 1e4);
}

TEST(BumpFourier, ZeroAndConjugation) {
  EXPECT_NEAR(bump_fourier(0).real(), 5.0 / 12, 1e-10);
  EXPECT_NEAR(bump_fourier(0).imag(), 0, 1e-15);
  for (double xi : {0.3, 1.0, 7.25, 33.0}) {
    const auto p = bump_fourier(xi), m = bump_fourier(-xi);
    EXPECT_NEAR(std::abs(p - std::conj(m)), 0, 1e-14);
    EXPECT_LE(std::abs(p), 5.0 / 12 + 1e-10);
  }
}

TEST(BumpFourier, MatchesDirectQuadrature) {
  // plain composite Simpson on [1/4, 3/4] with a fine grid
  for (double xi : {0.5, 2.0, 9.0, 41.5}) {
    const int n = 200000;
    const double h = 0.5 / n;
    std::complex<double> s = 0;
    for (int i = 0; i <= n; ++i) {
      const double t = 0.25 + i * h;
      const double w = (i == 0 || i == n) ? 1 : (i % 2 ? 4 : 2);
      s += w * oracle::bump(t) * oracle::e(-xi * t);
    }
    s *= h / 3;
    const auto got = bump_fourier_sample(xi);
    EXPECT_NEAR(std::abs(got.value - s), 0, 1e-10) << xi;
    EXPECT_LE(got.error, 1e-10);
  }
}

TEST(BumpFourier, Decay) {
  double worst = 0;
  for (double xi = 50; xi <= 1000; xi += 0.5) worst = std::max(worst, std::abs(bump_fourier(xi)));
  EXPECT_LE(worst, 1e-3);
}

TEST(FourierTable, LookupAndConjugation) {
  const auto t = FourierTable::lattice(0.37, 40);
  EXPECT_EQ(t.size(), 41u);
  EXPECT_EQ(t.at(0.37 * 5).value, bump_fourier(0.37 * 5));
  EXPECT_EQ(t.at(-0.37 * 5).value, std::conj(bump_fourier(0.37 * 5)));
  EXPECT_THROW(t.at(100), PreconditionError);
  const std::vector<double> xs{1.5, -1.5, 2.5};
  EXPECT_EQ(FourierTable::build(xs).size(), 2u);
}

TEST(PhiWeight, Examples) {
  const double R = 20;
  // a = 1, n = r picks out the residue directly
  EXPECT_EQ(phi_weight(10, R, 101, 1), 1);
  EXPECT_EQ(phi_weight(16, R, 101, 1), 0);
  EXPECT_EQ(phi_weight(101 + 10, R, 101, 1), 1);
  EXPECT_THROW(phi_weight(1, 101, 101, 1), PreconditionError);
  EXPECT_THROW(phi_weight(1, 20, 100, 5), PreconditionError);
}

TEST(PhiWeight, MatchesRepresentativeScan) {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 2000; ++i) {
    const std::int64_t q = 3 + std::int64_t(rng() % 5000);
    const double R = 1 + double(rng() % 1000000) / 1e6 * double(q - 2);
    std::int64_t a = std::int64_t(rng() % q);
    if (std::gcd(a, q) != 1) continue;
    const std::int64_t n = std::int64_t(rng() % 2'000'000) - 1'000'000;
    ASSERT_NEAR(phi_weight(n, R, q, a), oracle::phi_weight_scan(n, R, q, a), 1e-15);
  }
}

TEST(PhiWeightPoisson, ZeroTermAndPhaseCollapse) {
  EXPECT_NEAR(phi_weight_poisson(7, 40, 211, 3, 0), 5.0 / 12 * 40 / 211, 1e-12);
  // n a = 0 (mod q): every phase is 1
  const double R = 40;
  const std::int64_t q = 211, K = 30;
  double expect = bump_fourier(0).real();
  for (int k = 1; k <= K; ++k) expect += 2 * std::abs(bump_fourier(k * R / q)) * std::cos(std::arg(bump_fourier(k * R / q)));
  EXPECT_NEAR(phi_weight_poisson(211 * 5, R, q, 3, K), expect * R / q, 1e-12);
}

TEST(PhiWeightPoisson, ConvergesToDirectValue) {
  std::mt19937_64 rng(9);
  for (int i = 0; i < 20; ++i) {
    const std::int64_t q = 200 + std::int64_t(rng() % 800);
    const double R = 30 + double(rng() % 1000) / 1000 * double(q / 3 - 30);
    const std::int64_t a = 1 + std::int64_t(rng() % (q - 1));
    if (std::gcd(a, q) != 1) continue;
    const std::int64_t n = std::int64_t(rng() % 100000);
    const auto c = phi_weight_poisson_certified(n, R, q, a, 1e-9);
    EXPECT_NEAR(c.value, phi_weight(n, R, q, a), 1e-7) << n << " " << R << " " << q;
    const auto tab = FourierTable::lattice(R / double(q), c.Kmax);
    EXPECT_NEAR(phi_weight_poisson(n, R, q, a, c.Kmax, &tab), c.value, 1e-15);
  }
}

TEST(SigmaQR, SmallScanAndEmpty) {
  const auto ap = derive_params(13, {1, 3}, 10, kInf);
  const auto rep = sigma_qR(ap, 8);
  double expect = 0;
  for (std::int64_t n = 12; n <= 187; ++n)
    if (std::gcd(n, std::int64_t(13)) == 1) expect += oracle::phi_weight_scan(n, ap.R, 13, 8);
  EXPECT_NEAR(rep.value, expect, 1e-12);
  EXPECT_GT(rep.value, 0);
  EXPECT_EQ(sigma_qR(derive_params(13, {1, 3}, 10, 1.5), 8).value, 0);

  const auto ap2 = derive_params(1009, {1, 4}, 10, 20);
  double expect2 = 0;
  for (auto n = (std::int64_t)std::ceil(ap2.X / 4); double(n) <= 4 * ap2.X; ++n)
    if (oracle::in_sq(std::uint64_t(n), 20, 1009)) expect2 += oracle::phi_weight_scan(n, ap2.R, 1009, 17);
  const auto rep2 = sigma_qR(ap2, 17);
  EXPECT_NEAR(rep2.value, expect2, 1e-9);
  EXPECT_NEAR(rep2.main_term, std::pow(ap2.R, 2 - 0.75 / 20), 1e-9);
}

TEST(BilinearB, BruteForce) {
  const auto p = params(10, 10, 101, 1, 20, kInf);
  double expect = 0;
  for (int m = 11; m <= 20; ++m)
    for (int n = 11; n <= 20; ++n) expect += oracle::phi_weight_scan(m * n, 20, 101, 1);
  EXPECT_NEAR(bilinear_B(p).value, expect, 1e-12);
  EXPECT_EQ(bilinear_B(params(10, 10, 101, 1, 20, 1.9)).value, 0);
  EXPECT_THROW(bilinear_B(p, 50), BudgetError);
}

TEST(BilinearB, MonotoneInYAndBelowSigma) {
  double prev = 0;
  for (double Y : {2.0, 3.0, 5.0, 11.0, 40.0, kInf}) {
    const double v = bilinear_B(params(30, 25, 997, 5, 60, Y)).value;
    EXPECT_GE(v, prev - 1e-12);
    prev = v;
  }
  // factor ranges inside [X/4, 4X]: every mn is a term of Sigma(q, R)
  for (std::uint64_t q : {499ull, 1009ull, 2003ull}) {
    const auto ap = derive_params(q, {1, 4}, 10, 30);
    const double N = std::sqrt(ap.X) / 2, M = ap.X / (2 * N) / 2;  // mn in (X/2... 2X]
    auto p = params(M, N, std::int64_t(q), 7, ap.R, ap.Y);
    const auto b = bilinear_B(p);
    const auto s = sigma_qR(ap, 7);
    EXPECT_LE(b.value, s.value + 1e-9) << q;
  }
}

TEST(Type1, BruteForceAndEmpty) {
  const auto p = params(20, 20, 211, 1, 40, kInf);
  const auto rep = type1_report(p);
  double expect = 0;
  for (int m = 21; m <= 40; ++m)
    for (int n = 21; n <= 40; ++n) expect += oracle::phi_weight_scan(m * n, 40, 211, 1);
  EXPECT_NEAR(rep.value, expect, 1e-12);
  EXPECT_NEAR(rep.main_term, 5.0 / 12 * 20 * 40 / 211 * 20, 1e-8);
  EXPECT_NEAR(rep.ratio, rep.value / rep.main_term, 1e-15);

  // no 3-smooth integer coprime to 6 in (20, 40]
  const auto empty = type1_report(params(20, 20, 6 * 37, 1, 40, 3));
  EXPECT_EQ(empty.main_term, 0);
  EXPECT_FALSE(empty.ratio_defined());
  EXPECT_TRUE(std::isnan(empty.ratio));
  EXPECT_TRUE(empty.to_json()["ratio"].is_null());
}

TEST(DispersionSums, BruteForce) {
  const auto p = params(15, 15, 101, 2, 20, 5);
  const auto s = dispersion_sums(p);
  const auto o = oracle::dispersion(15, 15, 101, 2, 20, 5);
  EXPECT_NEAR(s.K, o.K, 1e-15);
  EXPECT_NEAR(s.S1, o.S1, 1e-9 * std::max(1.0, o.S1));
  EXPECT_NEAR(s.S2, o.S2, 1e-9 * std::max(1.0, o.S1));
  EXPECT_NEAR(s.S3, o.S3, 1e-9 * std::max(1.0, o.S1));
  EXPECT_NEAR(s.Sprime, o.Sprime, 1e-9 * std::max(1.0, o.S1));
  EXPECT_NEAR(type2_report(p).value, o.D, 1e-10);
}

TEST(DispersionSums, SquareIdentityAndPositivity) {
  std::mt19937_64 rng(3);
  int done = 0;
  while (done < 40) {
    const std::int64_t q = 50 + std::int64_t(rng() % 451);
    const double R = 10 + double(rng() % 1000) / 1000 * (double(q) / 2 - 10);
    const std::int64_t a = 1 + std::int64_t(rng() % (q - 1));
    if (std::gcd(a, q) != 1) continue;
    const double M = 2 + double(rng() % 60), N = 2 + double(rng() % 60);
    const double Ys[] = {2, 3, 5, 7, 11, kInf};
    const auto p = params(M, N, q, a, R, Ys[rng() % 6]);
    const auto s = dispersion_sums(p);
    const double sq = dispersion_square_form(p);
    ASSERT_NEAR(s.Sprime, sq, 1e-8 * std::max(1.0, std::abs(s.S1)));
    ASSERT_GE(s.Sprime, -1e-12 * std::max(1.0, std::abs(s.S1)));
    const auto t2 = type2_report(p);
    ASSERT_TRUE(t2.extra["cs_holds"].get<bool>());
    ++done;
  }
}

TEST(Type2, ConstantIndicatorGivesZero) {
  const auto rep = type2_report(params(12, 10, 1 + 0, 0, 0.5, 25));
  EXPECT_NEAR(rep.value, 0, 1e-12);
}

TEST(Type2, FractionalM) {
  const auto p = params(7.5, 9.5, 103, 4, 30, 7);
  const auto o = oracle::dispersion(7.5, 9.5, 103, 4, 30, 7);
  const auto rep = type2_report(p);
  EXPECT_NEAR(rep.value, o.D, 1e-10);
  EXPECT_NEAR(rep.extra["Sprime"].get<double>(), o.Sprime, 1e-9 * std::max(1.0, o.S1));
  EXPECT_TRUE(rep.extra["cs_holds"].get<bool>());
}

TEST(Params, WarningsAndJson) {
  auto p = params(10, 10, 101, 1, 20, kInf);
  p.eta = 0.01;
  p.delta = 0.1;
  EXPECT_TRUE(p.warnings().empty() == false);  // MN = 100 < X/4 = 505
  auto q = params(40, 50, 101, 1, 20, kInf);
  q.eta = 0.001;
  for (const auto& w : q.warnings()) EXPECT_EQ(w.find("eta"), std::string::npos);
  const auto j = p.to_json();
  EXPECT_EQ(j["Y"], "inf");
  EXPECT_EQ(j["q"], 101);
  const auto rep = type1_report(p).to_json();
  for (const char* k : {"value", "main_term", "ratio", "truncation_error", "params", "runtime_ms"})
    EXPECT_TRUE(rep.contains(k)) << k;
  EXPECT_THROW(type1_report(params(10, 10, 100, 5, 20, kInf)), PreconditionError);
  EXPECT_THROW(type1_report(params(10, 10, 101, 1, 120, kInf)), PreconditionError);
}
