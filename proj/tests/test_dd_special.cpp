// Unit tests for the double-double core and the complex Hankel evaluator,
// checked against an independent MPFR oracle.

#include <catch2/catch_amalgamated.hpp>
#include <cfloat>
#include <cmath>
#include <complex>
#include <random>
#include <vector>

#include "oracle_mpfr.hpp"
#include "pmlbie/dd.hpp"
#include "pmlbie/special.hpp"

using pmlbie::cplx;
using pmlbie::hankel1_0_1;
using pmlbie::HankelPair;
namespace ddm = pmlbie::ddm;

namespace {

// Relative error with the underflow rule: when the reference value is below
// the smallest normal double, the implementation must also be (sub)zero.
double rel_err_underflow_aware(cplx got, cplx ref) {
  const double aref = std::abs(ref);
  if (aref < DBL_MIN) return (std::abs(got) < DBL_MIN) ? 0.0 : 1.0;
  return std::abs(got - ref) / aref;
}

double dd_vs_mpfr(const ddm::dd& v, const mpfr_t ref, bool relative = true) {
  mpfr_t got, diff;
  mpfr_inits2(200, got, diff, (mpfr_ptr)nullptr);
  mpfr_set_d(got, v.hi, MPFR_RNDN);
  mpfr_add_d(got, got, v.lo, MPFR_RNDN);
  mpfr_sub(diff, got, ref, MPFR_RNDN);
  if (relative && !mpfr_zero_p(ref)) mpfr_div(diff, diff, ref, MPFR_RNDN);
  double r = std::abs(mpfr_get_d(diff, MPFR_RNDN));
  mpfr_clears(got, diff, (mpfr_ptr)nullptr);
  return r;
}

}  // namespace

TEST_CASE("double-double arithmetic basics") {
  using namespace ddm;
  dd a = add(from(1e16), from(1.0));
  dd b = sub(a, from(1e16));
  CHECK(to_double(b) == 1.0);

  // (1/3) * 3 == 1 to double-double accuracy
  dd third = div(from(1.0), from(3.0));
  dd one = mul(third, from(3.0));
  CHECK(std::abs(to_double(sub(one, from(1.0)))) < 1e-31);

  // accumulation stress: 10^5 copies of 0.25 (binary-exact) sum exactly
  dd s = from(0.0);
  for (int i = 0; i < 100000; ++i) s = add(s, 0.25);
  CHECK(s.hi == 25000.0);
  CHECK(s.lo == 0.0);
}

TEST_CASE("dd log / atan2 / sincos against MPFR") {
  mpfr_t x, ref;
  mpfr_inits2(200, x, ref, (mpfr_ptr)nullptr);

  for (double v : {0.7, 1.0 + 1e-14, 1.3, 4.5e-5, 123456.789, 1e-12, 42.0}) {
    mpfr_set_d(x, v, MPFR_RNDN);
    mpfr_log(ref, x, MPFR_RNDN);
    double err = dd_vs_mpfr(ddm::log(ddm::from(v)), ref);
    INFO("log v=" << v);
    CHECK(err < 1e-30);
  }

  for (double th : {0.0, 0.3, 0.7853981633974483, 1.2, 1.5707963267948966}) {
    ddm::dd s, c;
    ddm::sincos_taylor(th, s, c);
    // absolute metric: cos(pi/2) ~ 6e-17 makes a relative one meaningless
    mpfr_set_d(x, th, MPFR_RNDN);
    mpfr_sin(ref, x, MPFR_RNDN);
    CHECK(dd_vs_mpfr(s, ref, false) < 1e-30);
    mpfr_cos(ref, x, MPFR_RNDN);
    CHECK(dd_vs_mpfr(c, ref, false) < 1e-30);
  }

  std::mt19937 rng(12345);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  mpfr_t ymp;
  mpfr_init2(ymp, 200);
  for (int i = 0; i < 40; ++i) {
    double ang = uni(rng) * 1.5707963267948966;
    double r = std::pow(10.0, -3.0 + 6.0 * uni(rng));
    double xx = r * std::cos(ang), yy = r * std::sin(ang);
    mpfr_set_d(x, xx, MPFR_RNDN);
    mpfr_set_d(ymp, yy, MPFR_RNDN);
    mpfr_atan2(ref, ymp, x, MPFR_RNDN);
    double err = dd_vs_mpfr(ddm::atan2_dd(yy, xx), ref);
    INFO("atan2 y=" << yy << " x=" << xx);
    CHECK(err < 1e-30);
  }
  mpfr_clears(x, ref, ymp, (mpfr_ptr)nullptr);
}

TEST_CASE("hankel spot values (30-digit references)") {
  struct Spot {
    cplx z, h0, h1;
  };
  // References computed with an arbitrary-precision series evaluator and
  // frozen; 25+ significant digits each.
  const std::vector<Spot> spots = {
      {{0.5, 0.0},
       {0.9384698072408129042284047, -0.4445187335067065571483985},
       {0.2422684576748738863839546, -1.471472392670243069188585}},
      {{3.0, 2.0},
       {-0.01779327030399459517198344, 0.052819404497155380309044},
       {0.05506759533731471426682222, 0.02486728122475093827753008}},
      {{0.0, 5.0},
       {0.0, -0.002349826181204555088521714},
       {-0.002574880890958615657736575, 0.0}},
      {{10.0, 9.0},
       {-0.00002226931315757770250198876, 0.00001469101354265826032378878},
       {0.0000144562282994880437751913, 0.00002321996929352150155403553}},
      {{16.5, 0.5},
       {-0.1190412184071937361165792, 0.001910673569915374257369398},
       {-0.001684182494590855061635892, 0.1192620782733802697279206}},
      {{30.0, 0.0},
       {-0.08636798358104021133596232, -0.1172957316866640252512479},
       {-0.1187510626166229365202343, 0.0844255706617472348909229}},
      {{200.0, 150.0},
       {-2.039870406896299624282624e-67, -2.990124109657522034442398e-67},
       {-2.996973792692642200359258e-67, 2.037540912486889837946341e-67}},
      {{1000.0, 0.0},
       {0.02478668615242017456133073, 0.004715917977622813399773261},
       {0.004728311907089523917576072, -0.02478433129235177891486236}},
      {{12.0, 12.0},
       {-0.0000002103989546426487215757981, -0.000001165012151528401437603694},
       {-0.000001193560442510937373089227, 0.000000190992600082341994939796}}};

  for (const auto& s : spots) {
    HankelPair hp = hankel1_0_1(s.z);
    INFO("z = " << s.z);
    CHECK(rel_err_underflow_aware(hp.h0, s.h0) < 1e-12);
    CHECK(rel_err_underflow_aware(hp.h1, s.h1) < 1e-12);
  }

  // Classic real-axis sanity value H0(1) = J0(1) + i Y0(1).
  HankelPair at1 = hankel1_0_1({1.0, 0.0});
  CHECK(std::abs(at1.h0.real() - 0.7651976865579666) < 1e-12);
  CHECK(std::abs(at1.h0.imag() - 0.08825696421567696) < 1e-12);
}

TEST_CASE("hankel vs MPFR oracle on the sector grid") {
  // 200-point grid: |z| log-spaced in [1e-3, 1e3], arg in [0, pi/2].
  double worst = 0.0;
  cplx worst_z;
  for (int ir = 0; ir < 20; ++ir) {
    double r = std::pow(10.0, -3.0 + 6.0 * ir / 19.0);
    for (int ia = 0; ia < 10; ++ia) {
      double th = 1.5707963267948966 * ia / 9.0;
      cplx z = std::polar(r, th);
      if (z.real() < 0) z.real(0.0);  // clamp rounding at arg = pi/2
      HankelPair hp = hankel1_0_1(z);
      oracle::Result ref = oracle::hankel(z);
      double e0 = rel_err_underflow_aware(hp.h0, ref.h0);
      double e1 = rel_err_underflow_aware(hp.h1, ref.h1);
      double e = std::max(e0, e1);
      if (e > worst) {
        worst = e;
        worst_z = z;
      }
    }
  }
  INFO("worst rel err " << worst << " at z = " << worst_z);
  CHECK(worst < 1e-12);
}

TEST_CASE("hankel vs MPFR oracle, randomized up to |z|=1e5") {
  std::mt19937 rng(777);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  double worst = 0.0;
  cplx worst_z;
  for (int i = 0; i < 300; ++i) {
    double r = std::pow(10.0, -3.0 + 8.0 * uni(rng));
    double th = 1.5707963267948966 * uni(rng);
    cplx z = std::polar(r, th);
    if (z.real() < 0) z.real(0.0);
    HankelPair hp = hankel1_0_1(z);
    oracle::Result ref = oracle::hankel(z);
    double e = std::max(rel_err_underflow_aware(hp.h0, ref.h0),
                        rel_err_underflow_aware(hp.h1, ref.h1));
    if (e > worst) {
      worst = e;
      worst_z = z;
    }
  }
  INFO("worst rel err " << worst << " at z = " << worst_z);
  CHECK(worst < 1e-12);
}

TEST_CASE("Wronskian identity H0 J1 - H1 J0 = 2i/(pi z)") {
  for (cplx z : {cplx(2.0, 3.0), cplx(1.5, 0.0), cplx(0.01, 0.02),
                 cplx(6.0, 1.0), cplx(0.0, 2.5)}) {
    HankelPair hp = hankel1_0_1(z);
    oracle::Result ref = oracle::hankel(z);
    cplx w = hp.h0 * ref.j1 - hp.h1 * ref.j0;
    cplx target = cplx(0, 2.0) / (pmlbie::detail::PI * z);
    INFO("z = " << z);
    CHECK(std::abs(w - target) <= 1e-12 * std::abs(target) +
                                      1e-14 * (std::abs(hp.h0 * ref.j1) +
                                               std::abs(hp.h1 * ref.j0)));
  }
}

TEST_CASE("regime seams agree in overlap bands") {
  using pmlbie::detail::hankel_asymptotic;
  using pmlbie::detail::hankel_series_dd;
  using pmlbie::detail::hankel_series_double;

  // double vs dd below the first seam
  for (double r : {5.0, 6.5, 7.0}) {
    for (double th : {0.0, 0.2, 0.4}) {
      cplx z = std::polar(r, th);
      auto a = hankel_series_double(z);
      auto b = hankel_series_dd(z);
      CHECK(std::abs(a.h0 - b.h0) <= 1e-12 * std::abs(b.h0));
      CHECK(std::abs(a.h1 - b.h1) <= 1e-12 * std::abs(b.h1));
    }
  }
  // dd vs asymptotic across the second seam
  for (double r : {17.0, 18.5, 20.5}) {
    for (double th : {0.0, 0.7853981633974483, 1.4, 1.5707963267948966}) {
      cplx z = std::polar(r, th);
      if (z.real() < 0) z.real(0.0);
      auto a = hankel_series_dd(z);
      auto b = hankel_asymptotic(z);
      INFO("seam z = " << z);
      CHECK(std::abs(a.h0 - b.h0) <= 2e-12 * std::abs(b.h0));
      CHECK(std::abs(a.h1 - b.h1) <= 2e-12 * std::abs(b.h1));
    }
  }
}

TEST_CASE("derivative identity dH0/dz = -H1") {
  for (cplx z : {cplx(1.2, 0.4), cplx(8.0, 2.0), cplx(25.0, 5.0),
                 cplx(0.05, 0.01)}) {
    // step chosen so both O(h^2) truncation and cancellation stay ~1e-10
    const double h = 3e-6 * std::max(1.0, std::abs(z));
    cplx fd = (hankel1_0_1(z + h).h0 - hankel1_0_1(z - h).h0) / (2.0 * h);
    cplx h1 = hankel1_0_1(z).h1;
    INFO("z = " << z);
    CHECK(std::abs(fd + h1) <= 3e-9 * std::abs(h1));
  }
}

TEST_CASE("|H0| decays along rays of growing Im z") {
  for (double th : {0.7853981633974483, 1.5707963267948966}) {
    double prev = std::numeric_limits<double>::infinity();
    for (int i = 0; i <= 99; ++i) {
      double r = 1.0 + 99.0 * i / 99.0;
      cplx z = std::polar(r, th);
      if (z.real() < 0) z.real(0.0);
      double cur = std::abs(hankel1_0_1(z).h0);
      CHECK(cur < prev);
      prev = cur;
    }
  }
}

TEST_CASE("domain guards") {
  CHECK_THROWS_AS(hankel1_0_1({0.0, 0.0}), std::domain_error);
  CHECK_THROWS_AS(hankel1_0_1({2e5, 0.0}), std::domain_error);
  CHECK_THROWS_AS(hankel1_0_1({-1.0, 0.0}), std::domain_error);
  CHECK_THROWS_AS(hankel1_0_1({1.0, -0.1}), std::domain_error);
  // tiny jitter below the axis is tolerated
  CHECK_NOTHROW(hankel1_0_1({1.0, -1e-14}));
}

TEST_CASE("log kernel values and cut") {
  using pmlbie::log_kernel;
  const double tp = 2.0 * pmlbie::detail::PI;
  CHECK(std::abs(log_kernel({1.0, 0.0})) < 1e-16);
  CHECK(std::abs(log_kernel({std::exp(1.0), 0.0}) - cplx(-1.0 / tp, 0)) <
        1e-15);
  CHECK(std::abs(log_kernel({0.0, 1.0}) - cplx(0.0, -0.25)) < 1e-15);
  CHECK_THROWS_AS(log_kernel({-2.0, 0.0}), std::domain_error);
  CHECK_THROWS_AS(log_kernel({0.0, 0.0}), std::domain_error);
}
