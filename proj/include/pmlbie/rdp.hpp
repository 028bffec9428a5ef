#pragma once
// Lateral operators of the cell array: eliminate the horizontal runs of a
// cell's NtD matrix to get the 2x2 lateral block operator, merge neighboring
// cells by recursive doubling, and back-substitute for the Neumann-marching
// operators and the half-array NtD maps that close the truncated problem.

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <iostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "pmlbie/assembly.hpp"
#include "pmlbie/geometry.hpp"
#include "pmlbie/pml.hpp"

namespace pmlbie {

// Lateral blocks of one cell (level 0) or of a merged run of 2^l cells:
//   [u_left; u_right] = [[N00, N01], [N10, N11]] [phi_left; phi_right],
// where phi_left/phi_right are scaled conormal densities on the two vertical
// faces, each taken with respect to the run's own outward normal, and
// u_left/u_right the traces there. Vectors follow the mesh's height-aligned
// wall lists (idx_left, idx_right), so entry i of a left and of a right
// vector sit at the same ladder height.
//
// T_mat recovers the eliminated horizontal densities of the level-0 cell,
//   [phi_bottom; phi_top] = T_mat [phi_left; phi_right],
// rows ordered as idx_bottom then idx_top; with a Neumann lid the top
// densities vanish identically and those rows are zero. Doubling carries
// T_mat through unchanged (it stays the single-cell recovery map).
struct NtDBlocks {
  Eigen::MatrixXcd N00, N01, N10, N11;
  Eigen::MatrixXcd T_mat;
};

// Marching form of the two half-array problems. Rp_plus maps the density on
// a cell's left face to the density on its right face (both in the cell's
// own outward convention) for the field decaying rightward through the
// array; Rp_minus is the right-to-left mirror. Nlat_plus / Nlat_minus map
// the density on the exposed face of the right / left half-array (in the
// half-array's own outward convention) to the trace there.
struct MarchingOps {
  Eigen::MatrixXcd Rp_plus, Rp_minus;
  Eigen::MatrixXcd Nlat_plus, Nlat_minus;
};

namespace rdetail {

// Dense solve with a conditioning guard: an (effectively) singular lateral
// system signals a resonant pairing of cell height and wavenumber, which the
// surrounding algorithm cannot recover from, so it throws; bad-but-finite
// conditioning only warns.
class GuardedLu {
 public:
  GuardedLu(const Eigen::MatrixXcd& A, const char* where) : lu_(A) {
    const double rc = lu_.rcond();
    if (!(rc > 0.0) || !std::isfinite(rc))
      throw std::runtime_error(std::string(where) +
                               ": singular lateral system (resonance)");
    if (rc < 1e-12)
      std::cerr << where
                << ": warning: lateral system nearly singular, rcond = " << rc
                << "\n";
  }
  Eigen::MatrixXcd solve(const Eigen::MatrixXcd& B) const {
    return lu_.solve(B);
  }

 private:
  Eigen::PartialPivLU<Eigen::MatrixXcd> lu_;
};

inline Eigen::MatrixXcd gather(const Eigen::MatrixXcd& A,
                               const std::vector<int>& rows,
                               const std::vector<int>& cols) {
  Eigen::MatrixXcd out(rows.size(), cols.size());
  for (size_t i = 0; i < rows.size(); ++i)
    for (size_t j = 0; j < cols.size(); ++j) out(i, j) = A(rows[i], cols[j]);
  return out;
}

}  // namespace rdetail

// Maximum absolute row sum (the norm induced by the sup norm on vectors).
inline double matrix_inf_norm(const Eigen::MatrixXcd& A) {
  if (A.size() == 0) return 0.0;
  return A.cwiseAbs().rowwise().sum().maxCoeff();
}

inline double matrix_inf_norm(const NtDBlocks& b) {
  Eigen::MatrixXcd full(b.N00.rows() + b.N10.rows(),
                        b.N00.cols() + b.N01.cols());
  full << b.N00, b.N01, b.N10, b.N11;
  return matrix_inf_norm(full);
}

// Largest eigenvalue modulus.
inline double spectral_radius(const Eigen::MatrixXcd& A) {
  if (A.rows() == 0) return 0.0;
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(A, false);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("spectral_radius: eigensolver failed");
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

// Restrict the full-boundary NtD matrix to the lateral trace spaces by
// imposing the horizontal boundary conditions. With a Dirichlet lid, u = 0
// rows on the bottom and top determine the densities there in terms of the
// lateral ones (that linear map is T_mat); with a Neumann lid the top
// density is zero from the outset and only the bottom is eliminated. The
// interior solve is guarded: its degeneration signals a resonance.
inline NtDBlocks eliminate_topbottom(const CellNtD& ntd,
                                     const BoundaryMesh& mesh, TopBc top_bc) {
  const auto& Nu = ntd.Nu;
  const int N1 = static_cast<int>(mesh.idx_left.size());
  if (mesh.idx_right.size() != mesh.idx_left.size())
    throw std::logic_error("eliminate_topbottom: mismatched wall lists");

  std::vector<int> lat;
  lat.reserve(2 * N1);
  lat.insert(lat.end(), mesh.idx_left.begin(), mesh.idx_left.end());
  lat.insert(lat.end(), mesh.idx_right.begin(), mesh.idx_right.end());

  // unknown horizontal densities: bottom always; top only under a
  // Dirichlet lid (a Neumann lid has zero density there a priori)
  std::vector<int> elim = mesh.idx_bottom;
  if (top_bc == TopBc::Dirichlet)
    elim.insert(elim.end(), mesh.idx_top.begin(), mesh.idx_top.end());

  const Eigen::MatrixXcd Nee = rdetail::gather(Nu, elim, elim);
  const Eigen::MatrixXcd Nel = rdetail::gather(Nu, elim, lat);
  rdetail::GuardedLu lu(Nee, "eliminate_topbottom");
  const Eigen::MatrixXcd Te = -lu.solve(Nel);

  const Eigen::MatrixXcd N0 = rdetail::gather(Nu, lat, lat) +
                              rdetail::gather(Nu, lat, elim) * Te;

  NtDBlocks b;
  b.N00 = N0.topLeftCorner(N1, N1);
  b.N01 = N0.topRightCorner(N1, N1);
  b.N10 = N0.bottomLeftCorner(N1, N1);
  b.N11 = N0.bottomRightCorner(N1, N1);

  const int nb = static_cast<int>(mesh.idx_bottom.size());
  const int nt = static_cast<int>(mesh.idx_top.size());
  b.T_mat = Eigen::MatrixXcd::Zero(nb + nt, 2 * N1);
  if (top_bc == TopBc::Dirichlet)
    b.T_mat = Te;  // elim stacked bottom-then-top already
  else
    b.T_mat.topRows(nb) = Te;
  return b;
}

// One doubling step: algebraically remove the shared face of two identical
// side-by-side runs. With the interface density continuity (the two runs
// see it with opposite outward normals) and trace continuity, the interface
// density is  phi_mid = -A phi_left + B phi_right,  and substitution gives
// the blocks of the doubled run. All four updates use the input blocks.
inline NtDBlocks rdp_step(const NtDBlocks& b) {
  rdetail::GuardedLu lu(b.N00 + b.N11, "rdp_step");
  const Eigen::MatrixXcd A = lu.solve(b.N10);
  const Eigen::MatrixXcd B = lu.solve(b.N01);
  NtDBlocks o;
  o.N00 = b.N00 - b.N01 * A;
  o.N01 = b.N01 * B;
  o.N10 = b.N10 * A;
  o.N11 = b.N11 - b.N10 * B;
  o.T_mat = b.T_mat;
  return o;
}

// Double to level l, truncate the top-level quadratic coupling (its factor
// decays like the 2^l-th power of the per-cell damping), and back-substitute
// down the ladder:
//   X_l = -(N11 + N00)^{-1} N10  at level l,
//   X_j = -(N11 + N00)^{-1} [N10 - N01 X_{j+1}]  at level j = l-1, ..., 0,
// giving Rp_plus = X_0, the solution of
//   N10 + (N11 + N00) Rp_plus + N01 Rp_plus^2 = 0
// at level 0; mirror formulas (01 <-> 10 swapped) give Rp_minus. The
// half-array maps come from the level-l blocks with the same truncation:
//   Nlat_plus  = N00 + N01 (N11 + N00)^{-1} N10,
//   Nlat_minus = N11 + N10 (N11 + N00)^{-1} N01.
inline MarchingOps solve_marching(const NtDBlocks& blocks0, int l) {
  if (l < 1) throw std::invalid_argument("solve_marching: need l >= 1");
  std::vector<NtDBlocks> lev(l + 1);
  lev[0] = blocks0;
  for (int j = 1; j <= l; ++j) lev[j] = rdp_step(lev[j - 1]);

  MarchingOps ops;
  Eigen::MatrixXcd X, Y;
  {
    const NtDBlocks& t = lev[l];
    rdetail::GuardedLu lu(t.N00 + t.N11, "solve_marching");
    X = -lu.solve(t.N10);
    Y = -lu.solve(t.N01);
    ops.Nlat_plus = t.N00 - t.N01 * X;
    ops.Nlat_minus = t.N11 - t.N10 * Y;
  }
  for (int j = l - 1; j >= 0; --j) {
    const NtDBlocks& c = lev[j];
    rdetail::GuardedLu lu(c.N00 + c.N11, "solve_marching");
    X = -lu.solve(c.N10 - c.N01 * X);
    Y = -lu.solve(c.N01 - c.N10 * Y);
  }
  ops.Rp_plus = X;
  ops.Rp_minus = Y;
  return ops;
}

// Residual of the level-0 quadratic equation for the rightward marching
// operator, in the row-sum norm.
inline double riccati_residual(const MarchingOps& ops, const NtDBlocks& b0) {
  if (ops.Rp_plus.size() == 0) return 0.0;
  const Eigen::MatrixXcd r = b0.N10 + (b0.N11 + b0.N00) * ops.Rp_plus +
                             b0.N01 * ops.Rp_plus * ops.Rp_plus;
  return matrix_inf_norm(r);
}

// Mirror residual for the leftward operator.
inline double riccati_residual_minus(const MarchingOps& ops,
                                     const NtDBlocks& b0) {
  if (ops.Rp_minus.size() == 0) return 0.0;
  const Eigen::MatrixXcd r = b0.N01 + (b0.N11 + b0.N00) * ops.Rp_minus +
                             b0.N10 * ops.Rp_minus * ops.Rp_minus;
  return matrix_inf_norm(r);
}

// Residual of the rightward marching operator recomputed at every ladder
// depth 1..lmax (each against the level-0 blocks); diagnostic of the
// doubling convergence.
inline std::vector<double> riccati_residual_curve(const NtDBlocks& b0,
                                                  int lmax) {
  std::vector<double> out;
  out.reserve(lmax);
  for (int l = 1; l <= lmax; ++l)
    out.push_back(riccati_residual(solve_marching(b0, l), b0));
  return out;
}

}  // namespace pmlbie
