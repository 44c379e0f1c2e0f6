#pragma once

#include "nlqw/spectral.hpp"

namespace nlqw {

struct FamilyOptions {
  double r_max = 0.01;    // amplitude budget r = |z|^2
  int nodes = 32;         // Chebyshev-Lobatto cache grid size
  double fp_tol = 1e-13;  // successive-difference tolerance of the fixed point
  int max_iter = 400;
  bool adapt_r_max = true;  // halve r_max until the contraction test passes
  int midpoint_checks = 5;  // interpolation audit points
};

struct CorrectionDiagnostics {
  int iterations = 0;
  double contraction_ratio = 0.0;  // max successive-difference ratio above the noise floor
  double fp_residual = 0.0;        // ||psi - Iter(psi)|| after convergence
  double mu_modulus_defect = 0.0;  // | |e^{i r mu}| implied by the projection - 1 |
};

struct CorrectionSolve {
  SpinorField psi;
  double mu = 0.0;
  CorrectionDiagnostics diag;
};

// One fixed-point solve at amplitude r (family normalization: ||P+ phi|| = 1).
CorrectionSolve solve_correction(const SpectralData& sd, const NonlinearCoin& nl, double r,
                                 double fp_tol = 1e-13, int max_iter = 400);

// The paper-literal contraction map (drops the higher-order frequency term);
// used by tests to check the fixed-point-residual contract.
SpinorField nmap_literal(const SpectralData& sd, const NonlinearCoin& nl, double r,
                         const SpinorField& psi);

// Family Phi[z] = z(phi + |z|^2 psi[|z|^2]), Lambda[z] = lambda + |z|^2 mu[|z|^2]
// cached on a Chebyshev-Lobatto r-grid with barycentric interpolation and
// spectral differentiation for the modulation derivatives.
struct BoundStateFamily {
  LatticeGrid grid;
  CoinField coin;
  NonlinearCoin nl;
  double lambda = 0.0;
  SpinorField phi;       // scaled so ||P+ phi|| = 1
  SpinorField phi_plus;  // P+ phi, unit norm

  double r_max = 0.0;
  std::vector<double> rgrid;
  std::vector<SpinorField> psi_nodes, psi_plus_nodes;
  std::vector<SpinorField> psi_dot_nodes, psi_plus_dot_nodes;
  std::vector<double> mu_nodes, mu_dot_nodes;
  std::vector<CorrectionDiagnostics> node_diag;
  double interp_check_error = 0.0;  // midpoint re-solve audit
  double max_contraction_ratio = 0.0;

  bool has(cplx z) const { return std::norm(z) <= r_max * (1.0 + 1e-12); }

  SpinorField eval_Phi(cplx z) const;
  double eval_Lambda(cplx z) const;
  SpinorField eval_Phi_plus(cplx z) const;
  double eval_Lambda_plus(cplx z) const;
  // real-linear derivative D Phi_+[z] w (and the frequency derivative)
  SpinorField dPhi_plus(cplx z, cplx w) const;
  double dLambda_plus(cplx z, cplx w) const;

  // interpolated curves (exposed for diagnostics/tests)
  SpinorField psi_at(double r) const;
  double mu_at(double r) const;

  BoundStateFamily embedded(const LatticeGrid& big) const;
};

BoundStateFamily build_family(const SpectralData& sd, const NonlinearCoin& nl,
                              FamilyOptions opt = {});

}  // namespace nlqw
