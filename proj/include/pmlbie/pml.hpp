// Vertical absorbing layer: coordinate complexification of the height x2,
// absorber profile sigma, complexified distance, and the branch of the
// square root used throughout the layer-potential kernels.
#pragma once

#include <boost/math/quadrature/gauss.hpp>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

namespace pmlbie {

using cplx = std::complex<double>;

enum class TopBc { Dirichlet, Neumann };

// Everything needed to complexify the height coordinate above the strip
// {x2 <= H}: absorber strength S, layer thickness L, strip height H,
// profile smoothness m (m = 0 means sigma == 1 across the whole layer),
// and the boundary condition imposed on the layer top.
struct PmlParams {
  double S = 1.0;
  double L = 1.0;
  double H = 1.0;
  int m = 0;
  TopBc top_bc = TopBc::Dirichlet;
};

// Point with a complexified height. x2 is the real height, x2t the image
// of x2 under the complex coordinate map (Im x2t >= 0, equality iff the
// point lies at or below the layer bottom H).
//
// Points sampled from a graded boundary parametrization additionally carry
// the identity of the nearest junction of smooth pieces ("anchor") and
// their EXACT offsets from it. Near a junction the graded map is so flat
// that the offset of a sample can be dozens of orders of magnitude below
// the rounding ulp of its absolute coordinates; differences of absolute
// coordinates are then pure rounding noise, while differences of the
// stored offsets stay relative-accurate at any depth. All kernel
// evaluations use the offset route whenever both points share an anchor.
struct ComplexPoint {
  double x1 = 0.0;
  double x2 = 0.0;
  cplx x2t{0.0, 0.0};
  int anchor = -1;       // nearest graded junction, -1 = none
  double off1 = 0.0;     // exact x1 - anchor_x1
  cplx off2t{0.0, 0.0};  // exact x2t - x2t(anchor); real part = x2 offset
};

inline bool shared_anchor(const ComplexPoint& x, const ComplexPoint& y) {
  return x.anchor >= 0 && x.anchor == y.anchor;
}
inline double diff_x1(const ComplexPoint& x, const ComplexPoint& y) {
  return shared_anchor(x, y) ? x.off1 - y.off1 : x.x1 - y.x1;
}
inline cplx diff_x2t(const ComplexPoint& x, const ComplexPoint& y) {
  return shared_anchor(x, y) ? x.off2t - y.off2t : x.x2t - y.x2t;
}

// Square root with nonnegative real part, arg(w) in [0, pi). The negative
// real axis (and zero) is excluded: arguments produced by the complexified
// distance never touch the cut.
inline cplx branch_sqrt(cplx z) {
  if (z.imag() == 0.0 && z.real() <= 0.0)
    throw std::domain_error("branch_sqrt: argument on the cut (-inf, 0]");
  cplx w = std::sqrt(z);
  if (w.real() < 0.0 || (w.real() == 0.0 && w.imag() < 0.0)) w = -w;
  return w;
}

// The absorber profile, its integral, and the complex stretch factor
// alpha = 1 + i S sigma. For m = 0 everything is closed-form; for m > 0 the
// profile ramps from 0 at H to 2 at H + L/2 (then stays 2) and its integral
// is tabulated once on a fine grid and queried through a cubic Hermite fit.
// The tabulation (rather than independent adaptive quadratures per height)
// keeps differences of the integral at nearby heights consistent, so the
// imaginary part of the complexified height is numerically nondecreasing —
// the property the square-root branch of the distance relies on.
class PmlMap {
 public:
  explicit PmlMap(const PmlParams& p) : p_(p) {
    if (!(p.S > 0.0)) throw std::invalid_argument("PmlMap: S must be > 0");
    if (!(p.L > 0.0)) throw std::invalid_argument("PmlMap: L must be > 0");
    if (p.m < 0) throw std::invalid_argument("PmlMap: m must be >= 0");
    if (p_.m > 0) build_ramp_table();
  }

  const PmlParams& params() const { return p_; }

  double sigma(double x2) const {
    if (x2 <= p_.H) return 0.0;
    if (p_.m == 0) return 1.0;
    const double half = p_.H + 0.5 * p_.L;
    if (x2 >= half) return 2.0;
    const double xi = (x2 - p_.H) / (0.25 * p_.L) - 1.0;  // [-1, 1]
    const double f1 = ramp_cubic(xi);
    const double f2 = ramp_cubic(-xi);
    const double a = ipow(f1, p_.m), b = ipow(f2, p_.m);
    double s = 2.0 * a / (a + b);
    // For m = 1 the cubic is not monotone on [-1, 1] and the raw ratio makes
    // small excursions below 0 (near H) and above 2 (near H + L/2). A
    // nonnegative profile is required for the absorber to absorb, so clamp.
    // Clamping keeps sigma(xi) + sigma(-xi) == 2, hence the exact ramp mass.
    if (s < 0.0) s = 0.0;
    if (s > 2.0) s = 2.0;
    return s;
  }

  // integral of sigma from 0 (equivalently from H) up to x2
  double sigma_integral(double x2) const {
    if (x2 <= p_.H) return 0.0;
    if (p_.m == 0) return x2 - p_.H;
    const double half = p_.H + 0.5 * p_.L;
    if (x2 >= half) return ramp_mass_ + 2.0 * (x2 - half);
    return ramp_integral(x2);
  }

  cplx complexify_height(double x2) const {
    return {x2, p_.S * sigma_integral(x2)};
  }

  // sigma_integral(a2 + delta) - sigma_integral(a2), computed without the
  // cancellation of subtracting two O(1) integrals: for a tiny delta that
  // difference can be far below the rounding ulp of the integrals
  // themselves. a2 is expected to be a junction height (wall foot, strip
  // height H, or the layer top), so the piecewise branches below hit the
  // closed-form regions exactly.
  double sigma_integral_diff(double a2, double delta) const {
    const double b = a2 + delta;
    if (a2 <= p_.H && b <= p_.H) return 0.0;
    if (p_.m == 0) {
      if (a2 >= p_.H && b >= p_.H) return delta;
      // one side below H: clip the overlap (offsets here are O(H - a2),
      // not tiny, so plain arithmetic is accurate)
      return std::max(b - p_.H, 0.0) - std::max(a2 - p_.H, 0.0);
    }
    const double half = p_.H + 0.5 * p_.L;
    if (a2 >= half && b >= half) return 2.0 * delta;
    if (a2 == p_.H) return b <= p_.H ? 0.0 : ramp_integral(b);
    return sigma_integral(b) - sigma_integral(a2);
  }

  // exact complexified offset x2t(a2 + delta) - x2t(a2)
  cplx complexify_offset(double a2, double delta) const {
    return {delta, p_.S * sigma_integral_diff(a2, delta)};
  }

  cplx alpha(double x2) const { return {1.0, p_.S * sigma(x2)}; }

  // diagonal coefficient matrix diag(alpha, 1/alpha) of the stretched PDE
  void pml_coefficients(double x2, cplx& alpha_out, cplx& a11, cplx& a22)
      const {
    alpha_out = alpha(x2);
    a11 = alpha_out;
    a22 = 1.0 / alpha_out;
  }

  ComplexPoint point(double x1, double x2) const {
    ComplexPoint cp;
    cp.x1 = x1;
    cp.x2 = x2;
    cp.x2t = complexify_height(x2);
    return cp;
  }

  // point carrying anchor identity and exact offsets (see ComplexPoint)
  ComplexPoint point_anchored(double x1, double x2, int anchor, double off1,
                              double off2, double anchor_x2) const {
    ComplexPoint cp = point(x1, x2);
    cp.anchor = anchor;
    if (anchor >= 0) {
      cp.off1 = off1;
      cp.off2t = complexify_offset(anchor_x2, off2);
    }
    return cp;
  }

  // complexified thickness of the layer: x2t(H+L) - H
  cplx layer_depth() const {
    return complexify_height(p_.H + p_.L) - cplx(p_.H, 0.0);
  }

 private:
  static double ipow(double v, int e) {
    double r = 1.0;
    for (int i = 0; i < e; ++i) r *= v;
    return r;
  }
  // cubic with value 0 at xi=-1, 1 at xi=+1, and even derivative
  double ramp_cubic(double xi) const {
    const double invm = 1.0 / p_.m;
    return (0.5 - invm) * xi * xi * xi + invm * xi + 0.5;
  }
  void build_ramp_table() {
    const int np = 4096;
    const double half_len = 0.5 * p_.L;
    const double hp = half_len / np;
    tab_f_.resize(np + 1);
    tab_d_.resize(np + 1);
    tab_f_[0] = 0.0;
    tab_d_[0] = 0.0;  // sigma(H+) = 0 by continuity of the ramp
    using G = boost::math::quadrature::gauss<double, 8>;
    for (int i = 0; i < np; ++i) {
      const double a = p_.H + i * hp, b = a + hp;
      const double v =
          G::integrate([this](double t) { return sigma(t); }, a, b);
      tab_f_[i + 1] = tab_f_[i] + v;
      tab_d_[i + 1] = sigma(b);
    }
    tab_hp_ = hp;
    ramp_mass_ = tab_f_[np];
  }

  double ramp_integral(double x2) const {
    const double s_all = (x2 - p_.H) / tab_hp_;
    int i = static_cast<int>(s_all);
    const int np = static_cast<int>(tab_f_.size()) - 1;
    if (i < 0) i = 0;
    if (i > np - 1) i = np - 1;
    const double s = s_all - i;  // [0, 1] within panel i
    const double s2 = s * s, s3 = s2 * s;
    const double h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
    const double h10 = s3 - 2.0 * s2 + s;
    const double h01 = -2.0 * s3 + 3.0 * s2;
    const double h11 = s3 - s2;
    return h00 * tab_f_[i] + h01 * tab_f_[i + 1] +
           tab_hp_ * (h10 * tab_d_[i] + h11 * tab_d_[i + 1]);
  }

  PmlParams p_;
  std::vector<double> tab_f_, tab_d_;
  double tab_hp_ = 0.0;
  double ramp_mass_ = 0.0;
};

// Squared complexified distance (x1-y1)^2 + (x2t-y2t)^2 with the sign of
// its imaginary part protected against cancellation noise. Analytically
// Im rho^2 = 2 (x2-y2) S (int sigma difference) >= 0 because the absorber
// integral is nondecreasing; in floating point the difference of two nearly
// equal integrals can come out a hair negative, which would push the
// argument across the square-root cut. Negative imaginary parts within a
// tight relative window of the term magnitudes are therefore flushed to 0;
// anything larger is a genuine usage error and is left for branch_sqrt /
// the Hankel evaluator to reject.
inline cplx complex_distance_sq(const ComplexPoint& x, const ComplexPoint& y) {
  const bool anch = shared_anchor(x, y);
  const double d1 = anch ? x.off1 - y.off1 : x.x1 - y.x1;
  const cplx d2 = anch ? x.off2t - y.off2t : x.x2t - y.x2t;
  cplx r2 = d1 * d1 + d2 * d2;
  if (r2.imag() < 0.0) {
    const double im_x = anch ? x.off2t.imag() : x.x2t.imag();
    const double im_y = anch ? y.off2t.imag() : y.x2t.imag();
    const double scale = d1 * d1 + d2.real() * d2.real() +
                         d2.imag() * d2.imag() +
                         std::abs(d2.real()) *
                             (std::abs(im_x) + std::abs(im_y));
    if (r2.imag() >= -1e-10 * scale) r2 = cplx(r2.real(), 0.0);
  }
  return r2;
}

// rho(x, y) = branch_sqrt((x1-y1)^2 + (x2t-y2t)^2); symmetric, reduces to
// the Euclidean distance when both points sit at or below the layer bottom.
inline cplx complex_distance(const ComplexPoint& x, const ComplexPoint& y) {
  const cplx r2 = complex_distance_sq(x, y);
  if (r2 == cplx(0.0, 0.0))
    throw std::domain_error("complex_distance: coincident points");
  return branch_sqrt(r2);
}

}  // namespace pmlbie
