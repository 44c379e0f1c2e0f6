#pragma once

#include <Eigen/Dense>

#include "nlqw/walk.hpp"

namespace nlqw {

// Complete eigendecomposition of the truncated walk U = SC plus the
// discrete/essential classification used downstream.
struct SpectralData {
  LatticeGrid grid;
  CoinField coin;
  Eigen::VectorXd angles;    // all 4L eigenphases, sorted ascending in [0, 2pi)
  Eigen::MatrixXcd vectors;  // orthonormal eigenvectors, column j <-> angles[j]
  std::vector<int> discrete_indices;
  std::vector<double> localization_mass;  // fraction of mass within |x| <= L/2
  std::vector<double> gap_margin;         // |cos angle| - |beta_inf|
  double band_cos = 1.0;                  // |beta_inf|; essential band = {|cos| <= band_cos}
  std::vector<double> band_edges;         // the four edge angles in [0, 2pi)
  int plus_index = -1;   // discrete index with cos(angle) > band_cos
  int minus_index = -1;  // its chiral mirror
  SpinorField phi;       // plus-branch eigenfunction, ||phi|| = 1, phase fixed
  SpinorField phi_plus;  // P+ phi renormalized to ||phi_plus|| = 1
  double lambda_plus = 0.0;
  double max_residual_sampled = 0.0;  // ||U v - e^{i angle} v|| over sampled columns
};

// dense 4L x 4L matrix of U (oracle / small-size path)
Eigen::MatrixXcd dense_U(const CoinField& c);
// dense matrix of a general linear field map (used by tests)
Eigen::MatrixXcd dense_of(const CoinField& c,
                          const std::function<SpinorField(const SpinorField&)>& op);

// Full spectrum via the chiral-sector reduction (U^2 is block diagonal over
// even/odd sublattices; eigenpairs of U are reconstructed from the 2L x 2L
// even-sector unitary). 4L must not exceed dense_cap.
SpectralData full_spectrum(const CoinField& c, int dense_cap = 8192);

enum class Branch { plus, minus };
// the discrete eigenpair with cos(lambda) > |beta_inf| (plus) or its chiral
// mirror; phi normalized in l^2 with the largest-modulus component real positive
std::pair<double, SpinorField> discrete_eigenpair(const SpectralData& sd, Branch b);

// xi(lambda) from sqrt(1-|alpha_inf|^2) cosh(xi) = cos(lambda)
double decay_rate(double lambda, double alpha_inf_abs);

// T_lambda(x) = (1-|alpha|^2)^{-1/2} [[e^{i(lambda-theta)}, alpha],
//                                     [conj(alpha),  e^{-i(lambda-theta)}]]
Eigen::Matrix2cd transfer_matrix(const CoinField& c, double lambda, int x);

// eigenvectors (alpha_inf; b e^{+-xi} - e^{i lambda}) of the asymptotic
// transfer matrix, b = sqrt(1-|alpha_inf|^2)
std::pair<Eigen::Vector2cd, Eigen::Vector2cd> transfer_asymptotic_eigvecs(const CoinField& c,
                                                                          double lambda);

struct DecayingSolution {
  int x0 = 0;
  std::vector<Eigen::Vector2cd> psi;      // psi(x), x in [x0, x_max]
  std::vector<Eigen::Vector2cd> w_scaled; // fixed-point iterate in X-norm coords
  double xi = 0.0;
  int iterations = 0;
  double tail_v_l1 = 0.0;
};

// unique decaying solution of psi(x+1) = T_lambda(x) psi(x) on [x0, x_max],
// by iterating the tail fixed-point map; requires lambda in the spectral gap
// and the tail l^1 smallness sum < 0.5 at x0. Assumes beta(x) real > 0 (the
// preset class); the general complex-beta case needs a gauge not implemented here.
DecayingSolution decaying_solution(const CoinField& c, double lambda, int x0, int x_max,
                                   double tol = 1e-12, int max_iter = 200);

// P_c u = u - (u, phi_plus) phi_plus
SpinorField Pc(const SpectralData& sd, const SpinorField& u);
// projection off every discrete eigenvector
SpinorField Pc_discrete(const SpectralData& sd, const SpinorField& u);

enum class ResolventMode { off_phi, full };
// off_phi: solve (U - e^{i mu}) h = P~_c f with h orthogonal to the discrete
//          eigenvector at angle mu (mu must sit on a discrete angle);
// full:    solve (U e^{-i mu} - 1) h = f, mu the complex angle; rejects mu
//          within 1e-10 of a retained eigenphase when real.
SpinorField resolvent_solve(const SpectralData& sd, cplx mu, const SpinorField& f,
                            ResolventMode mode);

}  // namespace nlqw
