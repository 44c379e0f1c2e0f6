#pragma once

#include "nlqw/boundstate.hpp"

namespace nlqw {

struct DecomposeOptions {
  double tol = 1e-13;     // Newton stop on |F|
  int max_iter = 25;
  double fd_step = 1e-6;  // finite-difference step for the 2x2 Jacobian
};

struct ModulationState {
  cplx z{0.0, 0.0};
  SpinorField xi;   // u - Phi_+[z], lies in H_c[z]
  SpinorField eta;  // P_c xi
  int newton_iters = 0;
  double f_norm = 0.0;
};

// the 2-real-dimensional orthogonality function F(z, u)
Eigen::Vector2d mod_F(const BoundStateFamily& fam, const SpinorField& u, cplx z);

ModulationState decompose(const BoundStateFamily& fam, const SpinorField& u, cplx z_guess,
                          DecomposeOptions opt = {});

// P_c u = u - (u, phi_plus) phi_plus
SpinorField pc(const BoundStateFamily& fam, const SpinorField& u);

// correction fields for R[z]; throws on a singular pairing matrix
std::pair<SpinorField, SpinorField> coeffs_aRaI(const BoundStateFamily& fam, cplx z);
// also exposes the 2x2 pairing matrix (tests pin its z=0 value)
Eigen::Matrix2d pairing_matrix(const BoundStateFamily& fam, cplx z);

// R[z] eta = eta + <eta, a_R> phi_+ + <eta, a_I> i phi_+
SpinorField apply_R(const BoundStateFamily& fam, cplx z, const SpinorField& eta);

// H_c[z]-membership residual of v: max_w |<v, i DPhi_+[z] w>| / ||v||, w in {1, i}
double hc_residual(const BoundStateFamily& fam, cplx z, const SpinorField& v);

struct TraceRow {
  int t = 0;
  cplx z{0.0, 0.0};
  double lambda_plus = 0.0;
  cplx big_z{0.0, 0.0};  // Z(t) = e^{i Lambda_+[z(t)]} z(t) - z(t+1)
  double eta_l2 = 0.0, eta_l2wm2 = 0.0, eta_linf = 0.0;
  double f1 = 0.0, f2 = 0.0, f3 = 0.0;
  double z2_residual = 0.0;
  int newton_iters = 0;
  double reconstruction = 0.0;  // ||u - Phi_+[z] - R[z] eta||
};

struct ModulationTrace {
  std::vector<TraceRow> rows;
  bool failed = false;
  int fail_t = -1;
  std::vector<int> checkpoint_t;
  std::vector<SpinorField> checkpoint_eta;
  std::vector<SpinorField> checkpoint_u;
  std::vector<cplx> checkpoint_z;
};

struct TrackOptions {
  DecomposeOptions newton{};
  std::vector<int> checkpoints;   // double-step times to snapshot (sorted)
  bool diagnostics = true;        // record F1/F2/F3 and the |Z|^2 identity residual
  double wrap_abort = 1e-8;       // boundary-mass abort threshold (0 disables)
};

// evolve u0 under the double step for T steps, decomposing at every step
ModulationTrace track(const BoundStateFamily& fam, const SpinorField& u0, int T,
                      TrackOptions opt = {});

// max over `pairs` random pairs of the symplectic-orthogonality defect of L[z]
double check_symplectic(const BoundStateFamily& fam, cplx z, uint64_t seed = 7, int pairs = 20);

// H_c-invariance residual of e^{-i Lambda_+[z]} L[z] xi, normalized by ||xi||
double check_Hc_invariance(const BoundStateFamily& fam, cplx z, const SpinorField& xi);

}  // namespace nlqw
