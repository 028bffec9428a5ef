// Scattering surfaces, unit cells, and the graded Nystrom parametrization
// of a cell's closed boundary.
//
// A cell boundary is traversed counterclockwise (interior on the left),
// starting at the top-left corner: left wall downward, bottom surface left
// to right, right wall upward, layer top right to left. The global
// parameter t runs over [0,1); every smooth segment owns the same number of
// uniform t-intervals and is reparametrized by a graded map whose
// derivatives vanish to high order at segment junctions, so densities stay
// smooth through corners.
//
// Each lateral wall is additionally split at the strip height H into two
// graded halves. The complex stretch factor of the absorbing layer jumps
// at H, so kernels sampled on the walls are discontinuous there; the split
// makes the parametrization speed vanish at the junction, which restores
// the smoothness the corrected trapezoidal rule needs. Both walls share
// one precomputed height ladder, making their node sets exact translates.
#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace pmlbie {

// Smooth parametric arc q in [0,1] in cell-local coordinates (x1 measured
// from the cell center). Writes position and d/dq.
struct Arc {
  std::function<void(double q, double& x1, double& x2, double& dx1,
                     double& dx2)>
      eval;
};

// ---------------------------------------------------------------------------
// graded map
// ---------------------------------------------------------------------------

namespace gdetail {
// cubic v with v(-1)=0, v(1)=1 and even derivative, the grading generator
inline double grade_cubic(double xi, int p) {
  const double invp = 1.0 / p;
  return (0.5 - invp) * xi * xi * xi + invp * xi + 0.5;
}
inline double grade_cubic_d(double xi, int p) {
  const double invp = 1.0 / p;
  return 3.0 * (0.5 - invp) * xi * xi + invp;
}
inline double ipow(double v, int e) {
  double r = 1.0;
  for (int i = 0; i < e; ++i) r *= v;
  return r;
}
// normalized graded map g:[0,1]->[0,1], g(0)=0, g(1)=1, derivatives of
// orders 1..p-1 vanish at both endpoints. The complement gc = 1 - g is
// returned separately because it is computed WITHOUT cancellation: near
// tau = 1 the rounded g carries an absolute error of machine epsilon,
// which is a catastrophic RELATIVE error of the distance to the endpoint
// (the map is flat there, so that distance can be ~1e-12 many node
// spacings from the end).
inline void graded_unit(double tau, int p, double& g, double& gc,
                        double& gp) {
  if (tau <= 0.0) {
    g = 0.0;
    gc = 1.0;
    gp = 0.0;
    return;
  }
  if (tau >= 1.0) {
    g = 1.0;
    gc = 0.0;
    gp = 0.0;
    return;
  }
  const double xi = 2.0 * tau - 1.0;
  const double w1 = grade_cubic(xi, p);
  const double w2 = grade_cubic(-xi, p);
  const double a = ipow(w1, p), b = ipow(w2, p);
  const double denom = a + b;
  g = a / denom;
  gc = b / denom;
  // d/dtau; includes the factor 2 from xi(tau) inside grade_cubic_d usage
  const double w1d = 2.0 * grade_cubic_d(xi, p);
  gp = p * w1d * ipow(w1 * w2, p - 1) * (w1 + w2) / (denom * denom);
}
inline void graded_unit(double tau, int p, double& g, double& gp) {
  double gc;
  graded_unit(tau, p, g, gc, gp);
}
// lerp anchored at the nearer endpoint, so offsets from BOTH piece ends
// stay relative-accurate
inline double graded_lerp(double s0, double s1, double g, double gc) {
  return (g <= 0.5) ? s0 + (s1 - s0) * g : s1 - (s1 - s0) * gc;
}
}  // namespace gdetail

struct GradedValue {
  double s = 0.0;
  double dsdt = 0.0;
};

// Monotone map of [t0,t1] onto [s0,s1] with endpoint derivatives vanishing
// to order p; midpoint maps to the midpoint.
inline GradedValue graded_map(double t, double t0, double t1, double s0,
                              double s1, int p) {
  if (!(t1 > t0)) throw std::invalid_argument("graded_map: t1 <= t0");
  if (p < 2) throw std::invalid_argument("graded_map: p < 2");
  double g, gp;
  gdetail::graded_unit((t - t0) / (t1 - t0), p, g, gp);
  return {s0 + (s1 - s0) * g, (s1 - s0) * gp / (t1 - t0)};
}

// ---------------------------------------------------------------------------
// surfaces
// ---------------------------------------------------------------------------

enum class Profile { flat, sine, perturbed_sine, binary_grating };

struct SurfaceParams {
  double period = 1.0;
  double amplitude = 1.0;     // sine amplitude
  double groove_depth = 0.5;  // binary grating
  double groove_width = 0.25;
  double defect_level = 0.0;  // height of the flat replacement cell
  bool defected = false;      // replace the center cell by a flat bottom
};

// One period of the scattering surface, in cell-local coordinates, as a
// corner-to-corner chain of smooth arcs; plus the defected-cell variant.
struct PiecewiseCurve {
  double period = 1.0;
  std::vector<Arc> base_arcs;    // unperturbed cell bottom, left to right
  std::vector<Arc> defect_arcs;  // replacement bottom for the center cell
  bool has_defect = false;
  double ys = 0.0;  // surface height at the walls x1 = +-period/2
  // lower envelope of the surface (local x1 -> height), for point masking
  std::function<double(double)> base_height;
  std::function<double(double)> defect_height;
};

namespace gdetail {
inline Arc flat_arc(double xa, double xb, double level) {
  Arc a;
  a.eval = [=](double q, double& x1, double& x2, double& d1, double& d2) {
    x1 = xa + (xb - xa) * q;
    x2 = level;
    d1 = xb - xa;
    d2 = 0.0;
  };
  return a;
}
inline Arc vertical_arc(double x, double ya, double yb) {
  Arc a;
  a.eval = [=](double q, double& x1, double& x2, double& d1, double& d2) {
    x1 = x;
    x2 = ya + (yb - ya) * q;
    d1 = 0.0;
    d2 = yb - ya;
  };
  return a;
}
inline Arc sine_arc(double T, double A) {
  Arc a;
  a.eval = [=](double q, double& x1, double& x2, double& d1, double& d2) {
    x1 = T * (q - 0.5);
    const double w = 2.0 * M_PI / T;
    x2 = -A * std::sin(w * x1);
    d1 = T;
    d2 = -A * w * std::cos(w * x1) * d1;
  };
  return a;
}
}  // namespace gdetail

inline PiecewiseCurve build_surface(Profile profile,
                                    const SurfaceParams& sp) {
  if (!(sp.period > 0.0))
    throw std::invalid_argument("build_surface: period must be > 0");
  PiecewiseCurve c;
  c.period = sp.period;
  const double T = sp.period;
  switch (profile) {
    case Profile::flat: {
      c.base_arcs = {gdetail::flat_arc(-T / 2, T / 2, 0.0)};
      c.ys = 0.0;
      c.base_height = [](double) { return 0.0; };
      break;
    }
    case Profile::sine:
    case Profile::perturbed_sine: {
      c.base_arcs = {gdetail::sine_arc(T, sp.amplitude)};
      c.ys = 0.0;
      const double A = sp.amplitude, w = 2.0 * M_PI / T;
      c.base_height = [A, w](double x) { return -A * std::sin(w * x); };
      break;
    }
    case Profile::binary_grating: {
      const double d = sp.groove_depth, w = sp.groove_width;
      if (!(d > 0.0) || !(w > 0.0) || !(w < T))
        throw std::invalid_argument(
            "build_surface: need depth > 0 and 0 < width < period");
      c.base_arcs = {gdetail::flat_arc(-T / 2, -w / 2, 0.0),
                     gdetail::vertical_arc(-w / 2, 0.0, -d),
                     gdetail::flat_arc(-w / 2, w / 2, -d),
                     gdetail::vertical_arc(w / 2, -d, 0.0),
                     gdetail::flat_arc(w / 2, T / 2, 0.0)};
      c.ys = 0.0;
      c.base_height = [w, d](double x) {
        return (std::abs(x) < w / 2) ? -d : 0.0;
      };
      break;
    }
  }
  // The center cell is replaced by a flat bottom when a defect is
  // requested (perturbed_sine implies one).
  c.has_defect = sp.defected || profile == Profile::perturbed_sine;
  if (c.has_defect) {
    if (sp.defect_level != c.ys)
      throw std::invalid_argument(
          "build_surface: defect level must meet the surface at the cell "
          "edges");
    c.defect_arcs = {gdetail::flat_arc(-T / 2, T / 2, sp.defect_level)};
    const double lev = sp.defect_level;
    c.defect_height = [lev](double) { return lev; };
  } else {
    c.defect_arcs = c.base_arcs;
    c.defect_height = c.base_height;
  }
  return c;
}

// ---------------------------------------------------------------------------
// cells and meshes
// ---------------------------------------------------------------------------

// Closed boundary of one cell: walls at x_offset +- period/2 rising from
// the surface to the layer top H + L, the given bottom chain, and the top.
struct CellSpec {
  double x_offset = 0.0;
  double period = 1.0;
  std::vector<Arc> bottom;  // local coordinates, left to right
  double ys = 0.0;          // wall-foot surface height
  double H = 3.0;
  double L = 1.0;
};

inline CellSpec cell_of(const PiecewiseCurve& c, int j, double H, double L) {
  CellSpec s;
  s.x_offset = c.period * j;
  s.period = c.period;
  s.bottom = (j == 0 && c.has_defect) ? c.defect_arcs : c.base_arcs;
  s.ys = c.ys;
  s.H = H;
  s.L = L;
  return s;
}

// Anchor data shared by mesh nodes and off-grid samples: the id of the
// nearest junction of smooth pieces and the EXACT coordinate offsets from
// it. The graded map is so flat at junctions that a sample's true offset
// can be far below the rounding ulp of its absolute coordinates, so the
// offsets are computed directly from the graded parameter (products only,
// no absolute-coordinate subtraction) and stay relative-accurate at any
// depth. Kernel evaluations between two points that share an anchor use
// these offsets instead of absolute coordinate differences.
struct MeshNode {
  double t = 0.0;
  double x1 = 0.0, x2 = 0.0;
  double speed = 0.0;       // |x'(t)|, grading factor included
  double nu1 = 0.0, nu2 = 0.0;  // outward unit normal (zero at corners)
  int tag = 0;              // 1 left wall, 2 bottom, 3 right wall, 4 top
  bool corner = false;      // genuine junction of two segments
  double theta_in = M_PI;   // interior angle (pi off corners)
  int anchor = -1;          // nearest junction id
  double off1 = 0.0, off2 = 0.0;  // exact offsets from the anchor
  double anchor_x2 = 0.0;         // anchor height (for the complex stretch)
};

struct GeomSample {
  double x1 = 0.0, x2 = 0.0;
  double dx1 = 0.0, dx2 = 0.0;  // d/dt
  double speed = 0.0;
  double nu1 = 0.0, nu2 = 0.0;
  int anchor = -1;
  double off1 = 0.0, off2 = 0.0;
  double anchor_x2 = 0.0;
};

namespace gdetail {
struct Piece {
  double t0 = 0.0, t1 = 0.0;
  // evaluated at local tau in [0,1]; writes position, d/dt derivative,
  // and anchor offsets into the sample
  std::function<void(double tau, GeomSample& gs)> eval;
};
}  // namespace gdetail

class BoundaryMesh {
 public:
  int N = 0;                 // total number of nodes (even)
  double h = 0.0;            // parameter spacing 1/N
  int n_per_segment = 0;
  int p = 6;                 // grading exponent
  CellSpec cell;
  std::vector<MeshNode> nodes;
  // junction positions by anchor id: 0 top-left, 1 left H-joint, 2 left
  // foot, 2+a left end of bottom arc a, 2+nb right foot, 3+nb right
  // H-joint, 4+nb top-right (nb = number of bottom arcs)
  std::vector<std::array<double, 2>> anchors;
  // Row/unknown index sets. Left and right lists hold the wall-interior
  // nodes only (corners belong to the bottom/top sets) and are aligned by
  // height: entry i of both lists sits at the same ladder height, counted
  // from just below the layer top.
  std::vector<int> idx_left, idx_right, idx_bottom, idx_top;

  // geometry at an arbitrary parameter value (used by quadrature
  // correction nodes); t taken modulo 1
  GeomSample at(double t) const {
    double tm = t - std::floor(t);
    // locate the piece by index: every piece spans an integral number of
    // h-intervals
    size_t lo = 0, hi = pieces_.size();
    while (hi - lo > 1) {
      size_t mid = (lo + hi) / 2;
      if (tm >= pieces_[mid].t0)
        lo = mid;
      else
        hi = mid;
    }
    const auto& pc = pieces_[lo];
    double tau = (tm - pc.t0) / (pc.t1 - pc.t0);
    GeomSample gs;
    pc.eval(tau, gs);
    gs.speed = std::hypot(gs.dx1, gs.dx2);
    if (gs.speed > 0.0) {
      gs.nu1 = gs.dx2 / gs.speed;
      gs.nu2 = -gs.dx1 / gs.speed;
    }
    return gs;
  }

  const std::vector<gdetail::Piece>& pieces() const { return pieces_; }
  std::vector<gdetail::Piece> pieces_;
};

namespace gdetail {
inline void check_arc(const Arc& a) {
  double x1, x2, d1, d2;
  double len = 0.0;
  for (int i = 0; i <= 4; ++i) {
    a.eval(0.25 * i, x1, x2, d1, d2);
    len += std::hypot(d1, d2);
  }
  if (!(len > 0.0))
    throw std::invalid_argument("mesh_cell: zero-length arc");
}
// Exact-relative coordinate offsets of the arc point at graded parameter
// distance q_off from endpoint `end` (0 or 1). Above the linearization
// threshold the plain coordinate difference is relative-accurate enough;
// below it the endpoint tangent is used, exact up to curvature terms
// O(q_off^2) — far below the relative accuracy of anything else for any
// smooth arc (and exact for straight ones).
inline void arc_end_offset(const Arc& arc, int end, double q_off, double& o1,
                           double& o2) {
  double x1e, x2e, d1e, d2e;
  arc.eval(end == 0 ? 0.0 : 1.0, x1e, x2e, d1e, d2e);
  constexpr double kLin = 1e-8;
  if (q_off > kLin) {
    double x1, x2, d1, d2;
    arc.eval(end == 0 ? q_off : 1.0 - q_off, x1, x2, d1, d2);
    o1 = x1 - x1e;
    o2 = x2 - x2e;
  } else {
    const double s = (end == 0) ? q_off : -q_off;
    o1 = s * d1e;
    o2 = s * d2e;
  }
}
// interior angle between an incoming travel direction and an outgoing one,
// measured through the interior of a counterclockwise boundary
inline double interior_angle(double in1, double in2, double out1,
                             double out2) {
  const double a1 = std::atan2(-in2, -in1);   // ray back along arrival
  const double a2 = std::atan2(out2, out1);   // ray of departure
  double th = a1 - a2;
  while (th <= 0.0) th += 2.0 * M_PI;
  while (th > 2.0 * M_PI) th -= 2.0 * M_PI;
  return th;
}
}  // namespace gdetail

// Mesh a cell with n nodes per smooth segment (walls, each bottom arc, and
// the top each count as one segment) and grading exponent p. Corner nodes
// carry speed 0 and their interior angle.
inline BoundaryMesh mesh_cell(const CellSpec& cell, int n_per_segment,
                              int p = 6) {
  const int n = n_per_segment;
  if (n < 4 || n % 2 != 0)
    throw std::invalid_argument(
        "mesh_cell: n_per_segment must be even and >= 4");
  if (cell.bottom.empty())
    throw std::invalid_argument("mesh_cell: no bottom arcs");
  if (!(cell.H + cell.L > cell.ys))
    throw std::invalid_argument("mesh_cell: layer top not above surface");
  for (const auto& a : cell.bottom) gdetail::check_arc(a);

  // validate that the bottom chain spans the cell and meets the walls at ys
  {
    double x1, x2, d1, d2;
    cell.bottom.front().eval(0.0, x1, x2, d1, d2);
    if (std::abs(x1 + cell.period / 2) > 1e-12 ||
        std::abs(x2 - cell.ys) > 1e-12)
      throw std::invalid_argument(
          "mesh_cell: bottom chain must start at the left wall foot");
    cell.bottom.back().eval(1.0, x1, x2, d1, d2);
    if (std::abs(x1 - cell.period / 2) > 1e-12 ||
        std::abs(x2 - cell.ys) > 1e-12)
      throw std::invalid_argument(
          "mesh_cell: bottom chain must end at the right wall foot");
    for (size_t a = 0; a + 1 < cell.bottom.size(); ++a) {
      double u1, u2, v1, v2;
      cell.bottom[a].eval(1.0, x1, x2, u1, u2);
      cell.bottom[a + 1].eval(0.0, v1, v2, d1, d2);
      if (std::abs(x1 - v1) > 1e-12 || std::abs(x2 - v2) > 1e-12)
        throw std::invalid_argument(
            "mesh_cell: consecutive bottom arcs must share endpoints");
    }
  }

  const int nb = static_cast<int>(cell.bottom.size());
  const int nseg = 2 + nb + 1;
  BoundaryMesh mesh;
  mesh.N = nseg * n;
  mesh.h = 1.0 / mesh.N;
  mesh.n_per_segment = n;
  mesh.p = p;
  mesh.cell = cell;
  mesh.nodes.resize(mesh.N);

  // All mesh coordinates are CELL-LOCAL: x1 is measured from the cell
  // center, so translated cells produce bit-identical meshes (and hence
  // bit-identical operators). Consumers needing absolute positions add
  // cell.x_offset themselves.
  const double T = cell.period;
  const double xl = -T / 2;
  const double xr = T / 2;
  const double top = cell.H + cell.L;
  const double H = cell.H;
  const double ys = cell.ys;
  const int N = mesh.N;
  const double h = mesh.h;

  // anchor ids: 0 top-left, 1 left H-joint, 2 left foot, 2+a left end of
  // bottom arc a, 2+nb right foot, 3+nb right H-joint, 4+nb top-right
  const int aTL = 0, aHL = 1, aFL = 2;
  const int aFR = 2 + nb, aHR = 3 + nb, aTR = 4 + nb;
  mesh.anchors.assign(static_cast<size_t>(5 + nb), {0.0, 0.0});
  mesh.anchors[aTL] = {xl, top};
  mesh.anchors[aHL] = {xl, H};
  mesh.anchors[aFL] = {xl, ys};
  for (int a = 1; a < nb; ++a) {
    double x1, x2, d1, d2;
    cell.bottom[a].eval(0.0, x1, x2, d1, d2);
    mesh.anchors[2 + a] = {x1, x2};
  }
  mesh.anchors[aFR] = {xr, ys};
  mesh.anchors[aHR] = {xr, H};
  mesh.anchors[aTR] = {xr, top};

  // Shared wall ladder: node heights and |ds/dt| for a wall traversed top
  // to bottom, split at H (j = 0 top, j = n/2 at H, j = n at the foot).
  // lad_which/lad_off give the nearest of the three wall junctions
  // (0 = top corner, 1 = H joint, 2 = foot) and the exact vertical offset.
  std::vector<double> lad_h(n + 1), lad_s(n + 1), lad_off(n + 1);
  std::vector<int> lad_which(n + 1);
  {
    const double dt_half = 0.5 * n * h;  // t-width of each graded half
    for (int j = 0; j <= n; ++j) {
      double g, gc, gp;
      if (j <= n / 2) {
        gdetail::graded_unit(double(j) / (n / 2), p, g, gc, gp);
        lad_h[j] = gdetail::graded_lerp(top, H, g, gc);
        lad_s[j] = std::abs((H - top) * gp / dt_half);
        lad_which[j] = (g <= 0.5) ? 0 : 1;
        lad_off[j] = (g <= 0.5) ? (H - top) * g : (top - H) * gc;
      } else {
        gdetail::graded_unit(double(j - n / 2) / (n / 2), p, g, gc, gp);
        lad_h[j] = gdetail::graded_lerp(H, ys, g, gc);
        lad_s[j] = std::abs((ys - H) * gp / dt_half);
        lad_which[j] = (g <= 0.5) ? 1 : 2;
        lad_off[j] = (g <= 0.5) ? (ys - H) * g : (H - ys) * gc;
      }
    }
    lad_h[0] = top;
    lad_h[n / 2] = H;
    lad_h[n] = ys;
    lad_off[0] = lad_off[n / 2] = lad_off[n] = 0.0;
    lad_which[0] = 0;
    lad_which[n / 2] = 1;
    lad_which[n] = 2;
  }
  const double wall_ax2[3] = {top, H, ys};
  const int left_aid[3] = {aTL, aHL, aFL};
  const int right_aid[3] = {aTR, aHR, aFR};

  const int kBL = n;            // bottom-left corner node
  const int r0 = n + nb * n;    // bottom-right corner node
  const int t0 = r0 + n;        // top-right corner node

  // --- left wall (top to bottom), nodes 0..n-1; node 0 is the top-left
  // corner owned by the top set
  for (int j = 0; j < n; ++j) {
    MeshNode& nd = mesh.nodes[j];
    nd.t = j * h;
    nd.x1 = xl;
    nd.x2 = lad_h[j];
    nd.speed = (j == 0) ? 0.0 : lad_s[j];
    nd.nu1 = -1.0;
    nd.nu2 = 0.0;
    nd.tag = (j == 0) ? 4 : 1;
    nd.corner = (j == 0);
    nd.anchor = left_aid[lad_which[j]];
    nd.off1 = 0.0;
    nd.off2 = lad_off[j];
    nd.anchor_x2 = wall_ax2[lad_which[j]];
  }
  mesh.nodes[0].nu1 = mesh.nodes[0].nu2 = 0.0;

  // --- bottom arcs, nodes n..r0
  for (int a = 0; a < nb; ++a) {
    const int base = n + a * n;
    const auto& arc = cell.bottom[a];
    double yl_a, yr_a;  // arc endpoint heights (anchor heights)
    {
      double x1, x2, d1, d2;
      arc.eval(0.0, x1, x2, d1, d2);
      yl_a = x2;
      arc.eval(1.0, x1, x2, d1, d2);
      yr_a = x2;
    }
    for (int j = 0; j < n; ++j) {
      MeshNode& nd = mesh.nodes[base + j];
      nd.t = (base + j) * h;
      nd.tag = 2;
      if (j == 0) {
        double x1, x2, d1, d2;
        arc.eval(0.0, x1, x2, d1, d2);
        nd.x1 = x1;
        nd.x2 = x2;
        nd.speed = 0.0;
        nd.corner = true;
        nd.anchor = 2 + a;
        nd.off1 = nd.off2 = 0.0;
        nd.anchor_x2 = yl_a;
      } else {
        double g, gc, gp;
        gdetail::graded_unit(double(j) / n, p, g, gc, gp);
        double x1, x2, d1, d2;
        arc.eval(g, x1, x2, d1, d2);
        nd.x1 = x1;
        nd.x2 = x2;
        const double sp = gp / (n * h);
        const double v1 = d1 * sp, v2 = d2 * sp;
        nd.speed = std::hypot(v1, v2);
        nd.nu1 = v2 / nd.speed;
        nd.nu2 = -v1 / nd.speed;
        if (g <= 0.5) {
          nd.anchor = 2 + a;
          gdetail::arc_end_offset(arc, 0, g, nd.off1, nd.off2);
          nd.anchor_x2 = yl_a;
        } else {
          nd.anchor = 3 + a;
          gdetail::arc_end_offset(arc, 1, gc, nd.off1, nd.off2);
          nd.anchor_x2 = yr_a;
        }
      }
    }
  }
  // exact corner positions at the wall feet
  mesh.nodes[kBL].x1 = xl;
  mesh.nodes[kBL].x2 = ys;
  mesh.nodes[kBL].anchor_x2 = ys;

  // --- bottom-right corner and right wall (bottom to top), nodes r0..t0-1
  for (int i = 0; i < n; ++i) {
    MeshNode& nd = mesh.nodes[r0 + i];
    nd.t = (r0 + i) * h;
    nd.x1 = xr;
    nd.x2 = lad_h[n - i];
    nd.speed = (i == 0) ? 0.0 : lad_s[n - i];
    nd.nu1 = 1.0;
    nd.nu2 = 0.0;
    nd.tag = (i == 0) ? 2 : 3;
    nd.corner = (i == 0);
    nd.anchor = right_aid[lad_which[n - i]];
    nd.off1 = 0.0;
    nd.off2 = lad_off[n - i];
    nd.anchor_x2 = wall_ax2[lad_which[n - i]];
  }
  mesh.nodes[r0].nu1 = mesh.nodes[r0].nu2 = 0.0;

  // --- top (right to left), nodes t0..N-1
  for (int j = 0; j < n; ++j) {
    MeshNode& nd = mesh.nodes[t0 + j];
    nd.t = (t0 + j) * h;
    nd.tag = 4;
    nd.x2 = top;
    nd.off2 = 0.0;
    nd.anchor_x2 = top;
    if (j == 0) {
      nd.x1 = xr;
      nd.speed = 0.0;
      nd.corner = true;
      nd.anchor = aTR;
      nd.off1 = 0.0;
    } else {
      double g, gc, gp;
      gdetail::graded_unit(double(j) / n, p, g, gc, gp);
      nd.x1 = gdetail::graded_lerp(T / 2, -T / 2, g, gc);
      nd.speed = T * gp / (n * h);
      nd.nu1 = 0.0;
      nd.nu2 = 1.0;
      nd.anchor = (g <= 0.5) ? aTR : aTL;
      nd.off1 = (g <= 0.5) ? -T * g : T * gc;
    }
  }

  // --- interior angles at the four wall corners and arc junctions
  {
    double x1, x2, d1, d2;
    // top-left: arrive along top moving left, leave down the wall
    mesh.nodes[0].theta_in = gdetail::interior_angle(-1.0, 0.0, 0.0, -1.0);
    // bottom-left: arrive down the wall, leave along the first arc
    cell.bottom.front().eval(0.0, x1, x2, d1, d2);
    mesh.nodes[kBL].theta_in = gdetail::interior_angle(0.0, -1.0, d1, d2);
    // arc junctions
    for (int a = 1; a < nb; ++a) {
      double u1, u2;
      cell.bottom[a - 1].eval(1.0, x1, x2, u1, u2);
      cell.bottom[a].eval(0.0, x1, x2, d1, d2);
      mesh.nodes[n + a * n].theta_in =
          gdetail::interior_angle(u1, u2, d1, d2);
    }
    // bottom-right: arrive along the last arc, leave up the wall
    cell.bottom.back().eval(1.0, x1, x2, d1, d2);
    mesh.nodes[r0].theta_in = gdetail::interior_angle(d1, d2, 0.0, 1.0);
    // top-right: arrive up the wall, leave along top moving left
    mesh.nodes[t0].theta_in = gdetail::interior_angle(0.0, 1.0, -1.0, 0.0);
  }

  // --- index sets (corner ownership fixed: top corners -> top set, bottom
  // corners -> bottom set)
  for (int j = 1; j < n; ++j) mesh.idx_left.push_back(j);
  for (int i = 0; i <= nb * n; ++i) mesh.idx_bottom.push_back(n + i);
  for (int i = 1; i < n; ++i) mesh.idx_right.push_back(r0 + (n - i));
  for (int k = t0; k < N; ++k) mesh.idx_top.push_back(k);
  mesh.idx_top.push_back(0);

  // --- evaluable pieces for off-grid parameter queries
  auto add_piece = [&mesh](double t0p, double t1p, auto&& fn) {
    gdetail::Piece pc;
    pc.t0 = t0p;
    pc.t1 = t1p;
    pc.eval = fn;
    mesh.pieces_.push_back(pc);
  };
  const double dt_half = 0.5 * n * h;
  // vertical wall half from height sa (anchor ida) to sb (anchor idb)
  auto wall_half = [&add_piece, p, dt_half](double ta, double x1w, double sa,
                                            double sb, int ida, int idb) {
    add_piece(ta, ta + dt_half,
              [x1w, sa, sb, ida, idb, p, dt_half](double tau,
                                                  GeomSample& gs) {
                double g, gc, gp;
                gdetail::graded_unit(tau, p, g, gc, gp);
                gs.x1 = x1w;
                gs.x2 = gdetail::graded_lerp(sa, sb, g, gc);
                gs.dx1 = 0.0;
                gs.dx2 = (sb - sa) * gp / dt_half;
                gs.off1 = 0.0;
                if (g <= 0.5) {
                  gs.anchor = ida;
                  gs.off2 = (sb - sa) * g;
                  gs.anchor_x2 = sa;
                } else {
                  gs.anchor = idb;
                  gs.off2 = (sa - sb) * gc;
                  gs.anchor_x2 = sb;
                }
              });
  };
  // left wall, upper then lower half
  wall_half(0.0, xl, top, H, aTL, aHL);
  wall_half(dt_half, xl, H, ys, aHL, aFL);
  // bottom arcs
  for (int a = 0; a < nb; ++a) {
    const Arc arc = cell.bottom[a];
    const double ta = (n + a * n) * h, tb = (n + (a + 1) * n) * h;
    const double w = tb - ta;
    double yl_a, yr_a;
    {
      double x1, x2, d1, d2;
      arc.eval(0.0, x1, x2, d1, d2);
      yl_a = x2;
      arc.eval(1.0, x1, x2, d1, d2);
      yr_a = x2;
    }
    const int ida = 2 + a, idb = 3 + a;
    add_piece(ta, tb,
              [arc, p, w, ida, idb, yl_a, yr_a](double tau,
                                                GeomSample& gs) {
                double g, gc, gp;
                gdetail::graded_unit(tau, p, g, gc, gp);
                double d1, d2;
                arc.eval(g, gs.x1, gs.x2, d1, d2);
                gs.dx1 = d1 * gp / w;
                gs.dx2 = d2 * gp / w;
                if (g <= 0.5) {
                  gs.anchor = ida;
                  gdetail::arc_end_offset(arc, 0, g, gs.off1, gs.off2);
                  gs.anchor_x2 = yl_a;
                } else {
                  gs.anchor = idb;
                  gdetail::arc_end_offset(arc, 1, gc, gs.off1, gs.off2);
                  gs.anchor_x2 = yr_a;
                }
              });
  }
  // right wall, lower then upper half
  wall_half(r0 * h, xr, ys, H, aFR, aHR);
  wall_half(r0 * h + dt_half, xr, H, top, aHR, aTR);
  // top
  {
    const double ta = t0 * h, w = 1.0 - ta;
    const double Tl = T, tp = top;
    const int ida = aTR, idb = aTL;
    add_piece(ta, 1.0,
              [Tl, tp, p, w, ida, idb](double tau, GeomSample& gs) {
                double g, gc, gp;
                gdetail::graded_unit(tau, p, g, gc, gp);
                gs.x1 = gdetail::graded_lerp(Tl / 2, -Tl / 2, g, gc);
                gs.x2 = tp;
                gs.dx1 = -Tl * gp / w;
                gs.dx2 = 0.0;
                gs.off2 = 0.0;
                gs.anchor_x2 = tp;
                if (g <= 0.5) {
                  gs.anchor = ida;
                  gs.off1 = -Tl * g;
                } else {
                  gs.anchor = idb;
                  gs.off1 = Tl * gc;
                }
              });
  }

  return mesh;
}

}  // namespace pmlbie
