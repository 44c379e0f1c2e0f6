#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <vector>

namespace nlqw {

using cplx = std::complex<double>;

// orthonormal eigenbasis of a (small, dense) unitary: U = V diag(e^{i angle}) V^H
struct UnitaryEig {
  Eigen::VectorXd angles;  // sorted ascending in [0, 2pi)
  Eigen::MatrixXcd v;
  double schur_offdiag = 0.0;  // normality defect seen by the Schur form
};

UnitaryEig eig_unitary(const Eigen::MatrixXcd& u);
Eigen::MatrixXcd haar_unitary(int n, uint64_t seed);

// R_U(mu) = (U e^{-i mu} - 1)^{-1}; mu is a complex angle
Eigen::MatrixXcd resolvent_mat(const UnitaryEig& ue, cplx mu);
Eigen::VectorXcd resolvent_apply(const UnitaryEig& ue, cplx mu, const Eigen::VectorXcd& phi);

// sum_{|t| <= T} e^{-2 eps |t|} ||A U^t phi||^2; requires e^{-eps T} < 1e-10
double qty_time(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& u, const Eigen::VectorXcd& phi,
                double eps, int t_horizon);

// (1/2pi) ( ||A R(.+i eps) phi||^2_{L^2(T)} + ||A R(.-i eps) phi||^2 ), trapezoid
// with m nodes; checks m against 2m and throws if not converged
double qty_resolvent(const Eigen::MatrixXcd& a, const UnitaryEig& ue, const Eigen::VectorXcd& phi,
                     double eps, int m);

// (1/2pi) max over the grids of || A (R(lam+i eps) - R(lam-i eps)) A^H ||;
// verifies self-adjointness and positivity of the inner operator
struct SupResolventReport {
  double value = 0.0;
  double selfadjoint_defect = 0.0;
  double min_eigenvalue = 0.0;  // most negative eigenvalue seen of the inner operator
};
SupResolventReport qty_sup_resolvent(const Eigen::MatrixXcd& a, const UnitaryEig& ue,
                                     const std::vector<double>& eps_grid,
                                     const std::vector<double>& lambda_grid);

// max over interval grid of ||A 1_{[a,b)}(U)||^2 / (b-a) with widths >= width_floor
double qty_interval(const Eigen::MatrixXcd& a, const UnitaryEig& ue, double width_floor,
                    int offsets = 32, int widths = 4);

// Stone integral (1/2pi) int_a^b (R(lam+i eps) - R(lam-i eps)) dlam at one eps
Eigen::MatrixXcd stone_integral(const UnitaryEig& ue, double a, double b, double eps);
// polynomial extrapolation of the eps sequence to eps -> 0
Eigen::MatrixXcd stone_projection(const UnitaryEig& ue, double a, double b,
                                  const std::vector<double>& eps_seq);
// oracle: regularized indicator via its Fourier series (Abel-summed closed form)
double indicator_series(double a, double b, double zeta, double eps, int terms = 200000);

struct FourierCheck {
  double resid_one_sided_minus = 0.0;  // eq. with R(lambda - i eps), t >= 0
  double resid_one_sided_plus = 0.0;   // eq. with R(lambda + i eps), t <= -1
  double resid_two_sided = 0.0;
};
FourierCheck fourier_identities_check(const Eigen::MatrixXcd& a, const UnitaryEig& ue,
                                      const Eigen::VectorXcd& phi, double eps, int t_horizon,
                                      int m_lambda);

// max over the mu grid of ||A R(mu) A^H||
double kato_sufficient(const Eigen::MatrixXcd& a, const UnitaryEig& ue,
                       const std::vector<cplx>& mu_grid);

// (1/2pi) int (phi, (R(lam+i eps)-R(lam-i eps)) phi) dlam  (should equal ||phi||^2)
double normalization_integral(const UnitaryEig& ue, const Eigen::VectorXcd& phi, double eps,
                              int m);

}  // namespace nlqw
