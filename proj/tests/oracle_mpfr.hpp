#pragma once
// Test-only high-precision oracle for H0^(1), H1^(1) built directly on MPFR.
// Independent of the library implementation: ascending series carried at
// 256 + 3|z| bits for |z| <= 35 (enough to absorb the e^{2|z|} worst-case
// cancellation with hundreds of guard bits), and an optimally truncated
// asymptotic expansion above (truncation error ~ e^{-2|z|} <= e^{-70}).

#include <mpfr.h>

#include <algorithm>
#include <cmath>
#include <complex>

namespace oracle {

struct C {
  mpfr_t r, i;
};

inline void cinit(C& c, mpfr_prec_t p) {
  mpfr_init2(c.r, p);
  mpfr_init2(c.i, p);
  mpfr_set_zero(c.r, 1);
  mpfr_set_zero(c.i, 1);
}

inline void cclear(C& c) {
  mpfr_clear(c.r);
  mpfr_clear(c.i);
}

inline void cset_d(C& a, double re, double im) {
  mpfr_set_d(a.r, re, MPFR_RNDN);
  mpfr_set_d(a.i, im, MPFR_RNDN);
}

inline void cset(C& a, const C& b) {
  mpfr_set(a.r, b.r, MPFR_RNDN);
  mpfr_set(a.i, b.i, MPFR_RNDN);
}

inline void cadd(C& a, const C& b) {
  mpfr_add(a.r, a.r, b.r, MPFR_RNDN);
  mpfr_add(a.i, a.i, b.i, MPFR_RNDN);
}

inline void csub(C& a, const C& b) {
  mpfr_sub(a.r, a.r, b.r, MPFR_RNDN);
  mpfr_sub(a.i, a.i, b.i, MPFR_RNDN);
}

// out = a * b; out must be distinct from a and b.  t1 is scratch.
inline void cmul(C& out, const C& a, const C& b, mpfr_t t1) {
  mpfr_mul(out.r, a.r, b.r, MPFR_RNDN);
  mpfr_mul(t1, a.i, b.i, MPFR_RNDN);
  mpfr_sub(out.r, out.r, t1, MPFR_RNDN);
  mpfr_mul(out.i, a.r, b.i, MPFR_RNDN);
  mpfr_mul(t1, a.i, b.r, MPFR_RNDN);
  mpfr_add(out.i, out.i, t1, MPFR_RNDN);
}

inline void cneg(C& a) {
  mpfr_neg(a.r, a.r, MPFR_RNDN);
  mpfr_neg(a.i, a.i, MPFR_RNDN);
}

inline void cdiv_ui(C& a, unsigned long d) {
  mpfr_div_ui(a.r, a.r, d, MPFR_RNDN);
  mpfr_div_ui(a.i, a.i, d, MPFR_RNDN);
}

inline void cmul_fr(C& a, const mpfr_t s) {
  mpfr_mul(a.r, a.r, s, MPFR_RNDN);
  mpfr_mul(a.i, a.i, s, MPFR_RNDN);
}

inline void cmul_d(C& a, double s) {
  mpfr_mul_d(a.r, a.r, s, MPFR_RNDN);
  mpfr_mul_d(a.i, a.i, s, MPFR_RNDN);
}

// a *= i
inline void cmul_i(C& a, mpfr_t t1) {
  mpfr_set(t1, a.r, MPFR_RNDN);
  mpfr_neg(a.r, a.i, MPFR_RNDN);
  mpfr_set(a.i, t1, MPFR_RNDN);
}

inline long cmag_exp(const C& a) {
  long e = -1000000000L;
  if (!mpfr_zero_p(a.r)) e = std::max(e, static_cast<long>(mpfr_get_exp(a.r)));
  if (!mpfr_zero_p(a.i)) e = std::max(e, static_cast<long>(mpfr_get_exp(a.i)));
  return e;
}

struct Result {
  std::complex<double> h0, h1, j0, j1;
};

// Ascending-series branch at precision p.
inline Result hankel_series(double zr, double zi, mpfr_prec_t p) {
  mpfr_t t1, t2, gamma, hm, hm1, lnr, theta, tp;
  mpfr_inits2(p, t1, t2, gamma, hm, hm1, lnr, theta, tp, (mpfr_ptr)nullptr);
  C w, term, j0, pz, j1s, q1, tmp, lg, invz, j1, y0, y1, h0, h1, acc;
  for (C* c : {&w, &term, &j0, &pz, &j1s, &q1, &tmp, &lg, &invz, &j1, &y0,
               &y1, &h0, &h1, &acc})
    cinit(*c, p);

  // w = (z/2)^2
  cset_d(tmp, zr / 2.0, zi / 2.0);
  cmul(w, tmp, tmp, t1);

  // J0 and P = sum_{k>=1} (-1)^{k+1} H_k w^k / (k!)^2
  cset_d(term, 1.0, 0.0);
  cset(j0, term);
  mpfr_set_zero(hm, 1);
  long maxexp = 0;
  for (unsigned long m = 1; m < 100000; ++m) {
    cmul(acc, term, w, t1);
    cneg(acc);
    cdiv_ui(acc, m);
    cdiv_ui(acc, m);
    cset(term, acc);
    cadd(j0, term);
    mpfr_add_ui(t2, hm, 0, MPFR_RNDN);  // t2 = H_{m-1} (unused)
    mpfr_set_ui(t2, 1, MPFR_RNDN);
    mpfr_div_ui(t2, t2, m, MPFR_RNDN);
    mpfr_add(hm, hm, t2, MPFR_RNDN);  // hm = H_m
    cset(acc, term);
    cmul_fr(acc, hm);
    csub(pz, acc);
    long e = cmag_exp(term);
    maxexp = std::max(maxexp, e);
    if (e < maxexp - static_cast<long>(p) - 16) break;
  }

  // J1 series sum and Q = sum_k (H_k + H_{k+1}) (-w)^k / (k! (k+1)!)
  cset_d(term, 1.0, 0.0);
  cset(j1s, term);
  cset(q1, term);  // k=0: H_0 + H_1 = 1
  mpfr_set_zero(hm, 1);
  mpfr_set_ui(hm1, 1, MPFR_RNDN);
  maxexp = 0;
  for (unsigned long m = 1; m < 100000; ++m) {
    cmul(acc, term, w, t1);
    cneg(acc);
    cdiv_ui(acc, m);
    cdiv_ui(acc, m + 1);
    cset(term, acc);
    cadd(j1s, term);
    mpfr_set_ui(t2, 1, MPFR_RNDN);
    mpfr_div_ui(t2, t2, m, MPFR_RNDN);
    mpfr_add(hm, hm, t2, MPFR_RNDN);  // H_m
    mpfr_set_ui(t2, 1, MPFR_RNDN);
    mpfr_div_ui(t2, t2, m + 1, MPFR_RNDN);
    mpfr_add(hm1, hm1, t2, MPFR_RNDN);  // H_{m+1}
    cset(acc, term);
    mpfr_add(t2, hm, hm1, MPFR_RNDN);
    cmul_fr(acc, t2);
    cadd(q1, acc);
    long e = cmag_exp(term);
    maxexp = std::max(maxexp, e);
    if (e < maxexp - static_cast<long>(p) - 16) break;
  }
  cset_d(tmp, zr / 2.0, zi / 2.0);
  cmul(j1, tmp, j1s, t1);

  // lg = log(z/2) + gamma
  mpfr_set_d(t1, zr / 2.0, MPFR_RNDN);
  mpfr_set_d(t2, zi / 2.0, MPFR_RNDN);
  mpfr_atan2(theta, t2, t1, MPFR_RNDN);
  mpfr_sqr(t1, t1, MPFR_RNDN);
  mpfr_sqr(t2, t2, MPFR_RNDN);
  mpfr_add(lnr, t1, t2, MPFR_RNDN);
  mpfr_log(lnr, lnr, MPFR_RNDN);
  mpfr_div_ui(lnr, lnr, 2, MPFR_RNDN);
  mpfr_const_euler(gamma, MPFR_RNDN);
  mpfr_add(lnr, lnr, gamma, MPFR_RNDN);
  mpfr_set(lg.r, lnr, MPFR_RNDN);
  mpfr_set(lg.i, theta, MPFR_RNDN);

  // invz = 1/z
  mpfr_set_d(t1, zr, MPFR_RNDN);
  mpfr_set_d(t2, zi, MPFR_RNDN);
  mpfr_sqr(invz.r, t1, MPFR_RNDN);
  mpfr_sqr(invz.i, t2, MPFR_RNDN);
  mpfr_add(t1, invz.r, invz.i, MPFR_RNDN);  // |z|^2
  mpfr_set_d(invz.r, zr, MPFR_RNDN);
  mpfr_div(invz.r, invz.r, t1, MPFR_RNDN);
  mpfr_set_d(invz.i, -zi, MPFR_RNDN);
  mpfr_div(invz.i, invz.i, t1, MPFR_RNDN);

  mpfr_const_pi(tp, MPFR_RNDN);
  mpfr_ui_div(tp, 2, tp, MPFR_RNDN);  // 2/pi

  // y0 = (2/pi) (lg*j0 + pz)
  cmul(y0, lg, j0, t1);
  cadd(y0, pz);
  cmul_fr(y0, tp);

  // y1 = (2/pi) (lg*j1 - 1/z - (z/4) q1)
  cmul(y1, lg, j1, t1);
  csub(y1, invz);
  cset_d(tmp, zr / 4.0, zi / 4.0);
  cmul(acc, tmp, q1, t1);
  csub(y1, acc);
  cmul_fr(y1, tp);

  cset(h0, y0);
  cmul_i(h0, t1);
  cadd(h0, j0);
  cset(h1, y1);
  cmul_i(h1, t1);
  cadd(h1, j1);

  Result res;
  res.h0 = {mpfr_get_d(h0.r, MPFR_RNDN), mpfr_get_d(h0.i, MPFR_RNDN)};
  res.h1 = {mpfr_get_d(h1.r, MPFR_RNDN), mpfr_get_d(h1.i, MPFR_RNDN)};
  res.j0 = {mpfr_get_d(j0.r, MPFR_RNDN), mpfr_get_d(j0.i, MPFR_RNDN)};
  res.j1 = {mpfr_get_d(j1.r, MPFR_RNDN), mpfr_get_d(j1.i, MPFR_RNDN)};

  for (C* c : {&w, &term, &j0, &pz, &j1s, &q1, &tmp, &lg, &invz, &j1, &y0,
               &y1, &h0, &h1, &acc})
    cclear(*c);
  mpfr_clears(t1, t2, gamma, hm, hm1, lnr, theta, tp, (mpfr_ptr)nullptr);
  return res;
}

// Asymptotic branch (|z| > 35): truncation at the smallest term, error
// ~ e^{-2|z|} relative, negligible against the 1e-12 comparisons.
inline Result hankel_asymptotic(double zr, double zi, mpfr_prec_t p) {
  mpfr_t t1, t2, r2, rt, th, ey, cs, sn, pi;
  mpfr_inits2(p, t1, t2, r2, rt, th, ey, cs, sn, pi, (mpfr_ptr)nullptr);
  C f, term, sum0, sum1, pref, eiz, base, acc, h0, h1;
  for (C* c : {&f, &term, &sum0, &sum1, &pref, &eiz, &base, &acc, &h0, &h1})
    cinit(*c, p);

  // f = i/z
  mpfr_set_d(t1, zr, MPFR_RNDN);
  mpfr_set_d(t2, zi, MPFR_RNDN);
  mpfr_sqr(r2, t1, MPFR_RNDN);
  mpfr_sqr(rt, t2, MPFR_RNDN);
  mpfr_add(r2, r2, rt, MPFR_RNDN);  // |z|^2
  mpfr_set_d(f.r, zi, MPFR_RNDN);   // i/z = (y + i x) / |z|^2
  mpfr_div(f.r, f.r, r2, MPFR_RNDN);
  mpfr_set_d(f.i, zr, MPFR_RNDN);
  mpfr_div(f.i, f.i, r2, MPFR_RNDN);

  for (int nu = 0; nu <= 1; ++nu) {
    C& sum = (nu == 0) ? sum0 : sum1;
    cset_d(term, 1.0, 0.0);
    cset(sum, term);
    long prev = 1000000000L;
    for (int k = 1; k <= 2000; ++k) {
      double c = (4.0 * nu * nu - (2.0 * k - 1.0) * (2.0 * k - 1.0)) /
                 (8.0 * k);
      cmul(acc, term, f, t1);
      cmul_d(acc, c);
      cset(term, acc);
      long e = cmag_exp(term);
      if (e >= prev) break;
      cadd(sum, term);
      prev = e;
      if (e < -static_cast<long>(p) - 16) break;
    }
  }

  // pref = sqrt(2/(pi z)) via polar form
  mpfr_const_pi(pi, MPFR_RNDN);
  mpfr_sqrt(rt, r2, MPFR_RNDN);              // |z|
  mpfr_mul(rt, rt, pi, MPFR_RNDN);           // pi |z|
  mpfr_ui_div(rt, 2, rt, MPFR_RNDN);         // 2/(pi |z|)
  mpfr_sqrt(rt, rt, MPFR_RNDN);              // modulus of pref
  mpfr_set_d(t1, zr, MPFR_RNDN);
  mpfr_set_d(t2, zi, MPFR_RNDN);
  mpfr_atan2(th, t2, t1, MPFR_RNDN);
  mpfr_div_si(th, th, -2, MPFR_RNDN);        // arg = -arg(z)/2
  mpfr_sin_cos(sn, cs, th, MPFR_RNDN);
  mpfr_mul(pref.r, rt, cs, MPFR_RNDN);
  mpfr_mul(pref.i, rt, sn, MPFR_RNDN);

  // eiz = e^{iz} = e^{-y} (cos x + i sin x)
  mpfr_set_d(t1, zr, MPFR_RNDN);
  mpfr_sin_cos(sn, cs, t1, MPFR_RNDN);
  mpfr_set_d(t2, -zi, MPFR_RNDN);
  mpfr_exp(ey, t2, MPFR_RNDN);
  mpfr_mul(eiz.r, ey, cs, MPFR_RNDN);
  mpfr_mul(eiz.i, ey, sn, MPFR_RNDN);

  cmul(base, pref, eiz, t1);
  // times e^{-i pi/4} = (1 - i)/sqrt(2)
  mpfr_sqrt_ui(rt, 2, MPFR_RNDN);
  mpfr_ui_div(rt, 1, rt, MPFR_RNDN);
  cset_d(acc, 0, 0);
  mpfr_add(acc.r, base.r, base.i, MPFR_RNDN);
  mpfr_sub(acc.i, base.i, base.r, MPFR_RNDN);
  cmul_fr(acc, rt);
  cset(base, acc);

  cmul(h0, base, sum0, t1);
  cmul(h1, base, sum1, t1);
  cmul_i(h1, t1);
  cneg(h1);

  Result res;
  res.h0 = {mpfr_get_d(h0.r, MPFR_RNDN), mpfr_get_d(h0.i, MPFR_RNDN)};
  res.h1 = {mpfr_get_d(h1.r, MPFR_RNDN), mpfr_get_d(h1.i, MPFR_RNDN)};
  res.j0 = {0.0, 0.0};  // not produced on this branch
  res.j1 = {0.0, 0.0};

  for (C* c : {&f, &term, &sum0, &sum1, &pref, &eiz, &base, &acc, &h0, &h1})
    cclear(*c);
  mpfr_clears(t1, t2, r2, rt, th, ey, cs, sn, pi, (mpfr_ptr)nullptr);
  return res;
}

inline Result hankel(std::complex<double> z) {
  const double az = std::abs(z);
  if (az <= 35.0) {
    mpfr_prec_t p = static_cast<mpfr_prec_t>(256 + 3.0 * az);
    return hankel_series(z.real(), z.imag(), p);
  }
  return hankel_asymptotic(z.real(), z.imag(), 320);
}

}  // namespace oracle
