#pragma once

#include <Eigen/Dense>

#include "nlqw/lattice.hpp"

namespace nlqw {

// Site-indexed coin C(x) = e^{i theta(x)} [[beta, conj(alpha)], [-alpha, conj(beta)]]
// together with the asymptotic coin (alpha_inf, beta_inf), theta_inf = 0.
struct CoinField {
  LatticeGrid grid;
  std::vector<double> theta;
  std::vector<cplx> alpha, beta;
  cplx alpha_inf{0.0, 0.0};
  cplx beta_inf{1.0, 0.0};

  CoinField() = default;
  CoinField(const LatticeGrid& g, std::vector<double> th, std::vector<cplx> al,
            std::vector<cplx> be, cplx al_inf, cplx be_inf);

  Eigen::Matrix2cd matrix(int x) const;
  Eigen::Matrix2cd matrix_inf() const;

  // sum_x <x> ||C(x) - C_inf||  (the l^{1,1} perturbation size, logged by callers)
  double l11_perturbation() const;
  // largest sitewise unitarity defect | |alpha|^2+|beta|^2 - 1 |
  double unitarity_defect() const;

  // coin with C(x) = C_inf everywhere (same grid / asymptotics)
  CoinField free_version() const;
  CoinField embedded(const LatticeGrid& big) const;
};

// presets; kappa parameterizes alpha = sin kappa, beta = cos kappa, theta = 0
CoinField make_free_coin(const LatticeGrid& g, double kappa);
// coin perturbed only at the origin (kappa0 there)
CoinField make_kls_origin(const LatticeGrid& g, double kappa, double kappa0);
// smooth window perturbation kappa(x) = kappa + (kappa0-kappa) exp(-(x/w)^2)
CoinField make_kls_window(const LatticeGrid& g, double kappa, double kappa0, double width);
CoinField make_identity_coin(const LatticeGrid& g);

// coin CSV schema: x, theta, Re alpha, Im alpha, Re beta, Im beta
void write_coin_csv(const CoinField& c, const std::string& path);

// Pointwise nonlinearity N(u) = e^{i g(<u,gamma u>) gamma} u with
// g(s) = c s^p (c real, p positive integer).
struct NonlinearCoin {
  Eigen::Matrix2cd gamma;
  double c = 1.0;
  int p = 3;

  // cached spectral decomposition of gamma
  Eigen::Matrix2cd q;
  Eigen::Vector2d gdiag;

  NonlinearCoin() : NonlinearCoin(sigma3(), 1.0, 3) {}
  NonlinearCoin(const Eigen::Matrix2cd& gamma_, double c_, int p_);

  static Eigen::Matrix2cd sigma1();
  static Eigen::Matrix2cd sigma3();

  double g(double s) const { return c * std::pow(s, p); }
  double gprime(double s) const { return c * p * std::pow(s, p - 1); }
  bool trivial() const { return c == 0.0; }

  // exp(i a gamma)
  Eigen::Matrix2cd exp_i(double a) const;
  Eigen::Vector2cd apply_exp_i(double a, const Eigen::Vector2cd& u) const;
  Eigen::Vector2cd apply_gamma(const Eigen::Vector2cd& u) const {
    return gamma * u;
  }
};

// shift: up moves right, down moves left (periodic)
SpinorField shift(const SpinorField& u);
SpinorField shift_inv(const SpinorField& u);

SpinorField apply_coin(const CoinField& c, const SpinorField& u);
SpinorField apply_coin_adj(const CoinField& c, const SpinorField& u);

// U = S C and its inverse
SpinorField apply_U(const CoinField& c, const SpinorField& u);
SpinorField apply_U_inv(const CoinField& c, const SpinorField& u);

SpinorField apply_N(const NonlinearCoin& nc, const SpinorField& u);
// Frechet derivative DN(w)u (real-linear in u) and its exact inverse
SpinorField apply_DN(const NonlinearCoin& nc, const SpinorField& w, const SpinorField& u);
SpinorField apply_DN_inv(const NonlinearCoin& nc, const SpinorField& w, const SpinorField& u);
// nilpotent correction A(w)u = 2 g'(<w,gamma w>) <u,gamma w> i gamma w (sitewise)
SpinorField apply_A(const NonlinearCoin& nc, const SpinorField& w, const SpinorField& u);

// one and two nonlinear-walk steps u -> U N(u)
SpinorField step(const CoinField& c, const NonlinearCoin& nc, const SpinorField& u);
SpinorField double_step(const CoinField& c, const NonlinearCoin& nc, const SpinorField& u);

// linearization of the double step at Phi: L[z] xi = U DN(UN(Phi)) U DN(Phi) xi
SpinorField apply_L(const CoinField& c, const NonlinearCoin& nc,
                    const SpinorField& phi_plus_z, const SpinorField& xi);
SpinorField apply_L_inv(const CoinField& c, const NonlinearCoin& nc,
                        const SpinorField& phi_plus_z, const SpinorField& xi);

}  // namespace nlqw
