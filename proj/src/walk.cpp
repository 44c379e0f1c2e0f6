#include "nlqw/walk.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace nlqw {

CoinField::CoinField(const LatticeGrid& g, std::vector<double> th, std::vector<cplx> al,
                     std::vector<cplx> be, cplx al_inf, cplx be_inf)
    : grid(g),
      theta(std::move(th)),
      alpha(std::move(al)),
      beta(std::move(be)),
      alpha_inf(al_inf),
      beta_inf(be_inf) {
  size_t n = size_t(g.sites());
  if (theta.size() != n || alpha.size() != n || beta.size() != n)
    throw std::invalid_argument("CoinField: parameter arrays must have 2L entries");
  if (unitarity_defect() > 1e-12)
    throw std::invalid_argument("CoinField: |alpha|^2 + |beta|^2 != 1 at some site");
}

Eigen::Matrix2cd CoinField::matrix(int x) const {
  int i = grid.idx(x, 0) / 2;
  cplx ph = std::polar(1.0, theta[i]);
  Eigen::Matrix2cd m;
  m << beta[i], std::conj(alpha[i]), -alpha[i], std::conj(beta[i]);
  return ph * m;
}

Eigen::Matrix2cd CoinField::matrix_inf() const {
  Eigen::Matrix2cd m;
  m << beta_inf, std::conj(alpha_inf), -alpha_inf, std::conj(beta_inf);
  return m;
}

double CoinField::l11_perturbation() const {
  Eigen::Matrix2cd cinf = matrix_inf();
  double acc = 0.0;
  for (int x = -grid.L; x < grid.L; ++x) {
    double d = (matrix(x) - cinf).operatorNorm();
    acc += bracket(x) * d;
  }
  return acc;
}

double CoinField::unitarity_defect() const {
  double worst = 0.0;
  for (size_t i = 0; i < alpha.size(); ++i)
    worst = std::max(worst, std::abs(std::norm(alpha[i]) + std::norm(beta[i]) - 1.0));
  return worst;
}

CoinField CoinField::free_version() const {
  size_t n = size_t(grid.sites());
  return CoinField(grid, std::vector<double>(n, 0.0), std::vector<cplx>(n, alpha_inf),
                   std::vector<cplx>(n, beta_inf), alpha_inf, beta_inf);
}

CoinField CoinField::embedded(const LatticeGrid& big) const {
  if (big.L < grid.L) throw std::invalid_argument("CoinField::embedded: target smaller");
  size_t n = size_t(big.sites());
  std::vector<double> th(n, 0.0);
  std::vector<cplx> al(n, alpha_inf), be(n, beta_inf);
  for (int x = -grid.L; x < grid.L; ++x) {
    int src = grid.idx(x, 0) / 2;
    int dst = big.idx(x, 0) / 2;
    th[dst] = theta[src];
    al[dst] = alpha[src];
    be[dst] = beta[src];
  }
  return CoinField(big, std::move(th), std::move(al), std::move(be), alpha_inf, beta_inf);
}

CoinField make_free_coin(const LatticeGrid& g, double kappa) {
  size_t n = size_t(g.sites());
  cplx a = std::sin(kappa), b = std::cos(kappa);
  return CoinField(g, std::vector<double>(n, 0.0), std::vector<cplx>(n, a),
                   std::vector<cplx>(n, b), a, b);
}

// One-defect walk: free coin with a phase defect e^{i kappa0} at the origin.
// (A rotation-angle defect cannot carry exactly two discrete eigenvalues: the
// walk matrix would stay real, so eigenvalues come in conjugate quadruples.)
CoinField make_kls_origin(const LatticeGrid& g, double kappa, double kappa0) {
  CoinField c = make_free_coin(g, kappa);
  c.theta[g.idx(0, 0) / 2] = kappa0;
  return c;
}

// smooth variant: phase window theta(x) = kappa0 exp(-(x/width)^2)
CoinField make_kls_window(const LatticeGrid& g, double kappa, double kappa0, double width) {
  CoinField c = make_free_coin(g, kappa);
  for (int x = -g.L; x < g.L; ++x) {
    double t = double(x) / width;
    c.theta[g.idx(x, 0) / 2] = kappa0 * std::exp(-t * t);
  }
  return c;
}

CoinField make_identity_coin(const LatticeGrid& g) {
  size_t n = size_t(g.sites());
  // alpha = 0, beta = 1: C(x) = Id. Violates Assumption-style 0<|alpha_inf|,
  // used only as a spectral test fixture.
  return CoinField(g, std::vector<double>(n, 0.0), std::vector<cplx>(n, 0.0),
                   std::vector<cplx>(n, 1.0), cplx(0.0), cplx(1.0));
}

void write_coin_csv(const CoinField& c, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("write_coin_csv: cannot open " + path);
  os << "x,theta,re_alpha,im_alpha,re_beta,im_beta\n";
  os.precision(17);
  for (int x = -c.grid.L; x < c.grid.L; ++x) {
    int i = c.grid.idx(x, 0) / 2;
    os << x << ',' << c.theta[i] << ',' << c.alpha[i].real() << ',' << c.alpha[i].imag() << ','
       << c.beta[i].real() << ',' << c.beta[i].imag() << '\n';
  }
}

NonlinearCoin::NonlinearCoin(const Eigen::Matrix2cd& gamma_, double c_, int p_)
    : gamma(gamma_), c(c_), p(p_) {
  if ((gamma - gamma.adjoint()).cwiseAbs().maxCoeff() > 1e-14)
    throw std::invalid_argument("NonlinearCoin: gamma must be self-adjoint");
  if (p < 1) throw std::invalid_argument("NonlinearCoin: p must be a positive integer");
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2cd> es(gamma);
  q = es.eigenvectors();
  gdiag = es.eigenvalues();
}

Eigen::Matrix2cd NonlinearCoin::sigma1() {
  Eigen::Matrix2cd m;
  m << 0, 1, 1, 0;
  return m;
}

Eigen::Matrix2cd NonlinearCoin::sigma3() {
  Eigen::Matrix2cd m;
  m << 1, 0, 0, -1;
  return m;
}

Eigen::Matrix2cd NonlinearCoin::exp_i(double a) const {
  Eigen::Vector2cd ph(std::polar(1.0, a * gdiag[0]), std::polar(1.0, a * gdiag[1]));
  return q * ph.asDiagonal() * q.adjoint();
}

Eigen::Vector2cd NonlinearCoin::apply_exp_i(double a, const Eigen::Vector2cd& u) const {
  Eigen::Vector2cd w = q.adjoint() * u;
  w[0] *= std::polar(1.0, a * gdiag[0]);
  w[1] *= std::polar(1.0, a * gdiag[1]);
  return q * w;
}

SpinorField shift(const SpinorField& u) {
  SpinorField r(u.grid);
  const int L = u.grid.L;
  for (int x = -L; x < L; ++x) {
    r.up(x) = u.up(u.grid.wrap(x - 1));
    r.dn(x) = u.dn(u.grid.wrap(x + 1));
  }
  return r;
}

SpinorField shift_inv(const SpinorField& u) {
  SpinorField r(u.grid);
  const int L = u.grid.L;
  for (int x = -L; x < L; ++x) {
    r.up(x) = u.up(u.grid.wrap(x + 1));
    r.dn(x) = u.dn(u.grid.wrap(x - 1));
  }
  return r;
}

SpinorField apply_coin(const CoinField& c, const SpinorField& u) {
  if (c.grid != u.grid) throw std::invalid_argument("grid mismatch");
  SpinorField r(u.grid);
  for (int x = -u.grid.L; x < u.grid.L; ++x) {
    int i = c.grid.idx(x, 0) / 2;
    cplx ph = std::polar(1.0, c.theta[i]);
    cplx a = c.alpha[i], b = c.beta[i];
    cplx uu = u.up(x), ud = u.dn(x);
    r.up(x) = ph * (b * uu + std::conj(a) * ud);
    r.dn(x) = ph * (-a * uu + std::conj(b) * ud);
  }
  return r;
}

SpinorField apply_coin_adj(const CoinField& c, const SpinorField& u) {
  if (c.grid != u.grid) throw std::invalid_argument("grid mismatch");
  SpinorField r(u.grid);
  for (int x = -u.grid.L; x < u.grid.L; ++x) {
    int i = c.grid.idx(x, 0) / 2;
    cplx ph = std::polar(1.0, -c.theta[i]);
    cplx a = c.alpha[i], b = c.beta[i];
    cplx uu = u.up(x), ud = u.dn(x);
    r.up(x) = ph * (std::conj(b) * uu - std::conj(a) * ud);
    r.dn(x) = ph * (a * uu + b * ud);
  }
  return r;
}

SpinorField apply_U(const CoinField& c, const SpinorField& u) {
  return shift(apply_coin(c, u));
}

SpinorField apply_U_inv(const CoinField& c, const SpinorField& u) {
  return apply_coin_adj(c, shift_inv(u));
}

SpinorField apply_N(const NonlinearCoin& nc, const SpinorField& u) {
  if (nc.trivial()) return u;
  SpinorField r(u.grid);
  for (int x = -u.grid.L; x < u.grid.L; ++x) {
    Eigen::Vector2cd w(u.up(x), u.dn(x));
    double m = std::real(w.dot(nc.gamma * w));
    Eigen::Vector2cd out = nc.apply_exp_i(nc.g(m), w);
    r.up(x) = out[0];
    r.dn(x) = out[1];
  }
  return r;
}

namespace {
// sitewise <u, v>_{C^2} = Re (u, v)
inline double site_rinner(const Eigen::Vector2cd& u, const Eigen::Vector2cd& v) {
  return (u[0] * std::conj(v[0]) + u[1] * std::conj(v[1])).real();
}
}  // namespace

SpinorField apply_DN(const NonlinearCoin& nc, const SpinorField& w, const SpinorField& u) {
  require_same_grid(w, u);
  if (nc.trivial()) return u;
  SpinorField r(u.grid);
  for (int x = -u.grid.L; x < u.grid.L; ++x) {
    Eigen::Vector2cd ws(w.up(x), w.dn(x)), us(u.up(x), u.dn(x));
    Eigen::Vector2cd gw = nc.gamma * ws;
    double m = std::real(ws.dot(gw));
    // DN(w)u = e^{i g(m) gamma} (u + 2 g'(m) <u, gamma w> i gamma w)
    Eigen::Vector2cd inner_part = us + 2.0 * nc.gprime(m) * site_rinner(us, gw) * (cplx(0, 1) * gw);
    Eigen::Vector2cd out = nc.apply_exp_i(nc.g(m), inner_part);
    r.up(x) = out[0];
    r.dn(x) = out[1];
  }
  return r;
}

SpinorField apply_DN_inv(const NonlinearCoin& nc, const SpinorField& w, const SpinorField& u) {
  require_same_grid(w, u);
  if (nc.trivial()) return u;
  SpinorField r(u.grid);
  for (int x = -u.grid.L; x < u.grid.L; ++x) {
    Eigen::Vector2cd ws(w.up(x), w.dn(x)), us(u.up(x), u.dn(x));
    Eigen::Vector2cd gw = nc.gamma * ws;
    double m = std::real(ws.dot(gw));
    // DN(w)^{-1} = (1 - A(w)) e^{-i g(m) gamma},  A(w)u = 2 g'(m) <u, gamma w> i gamma w
    Eigen::Vector2cd y = nc.apply_exp_i(-nc.g(m), us);
    Eigen::Vector2cd out = y - 2.0 * nc.gprime(m) * site_rinner(y, gw) * (cplx(0, 1) * gw);
    r.up(x) = out[0];
    r.dn(x) = out[1];
  }
  return r;
}

SpinorField apply_A(const NonlinearCoin& nc, const SpinorField& w, const SpinorField& u) {
  require_same_grid(w, u);
  SpinorField r(u.grid);
  if (nc.trivial()) return r;
  for (int x = -u.grid.L; x < u.grid.L; ++x) {
    Eigen::Vector2cd ws(w.up(x), w.dn(x)), us(u.up(x), u.dn(x));
    Eigen::Vector2cd gw = nc.gamma * ws;
    double m = std::real(ws.dot(gw));
    Eigen::Vector2cd out = 2.0 * nc.gprime(m) * site_rinner(us, gw) * (cplx(0, 1) * gw);
    r.up(x) = out[0];
    r.dn(x) = out[1];
  }
  return r;
}

SpinorField step(const CoinField& c, const NonlinearCoin& nc, const SpinorField& u) {
  return apply_U(c, apply_N(nc, u));
}

SpinorField double_step(const CoinField& c, const NonlinearCoin& nc, const SpinorField& u) {
  return step(c, nc, step(c, nc, u));
}

SpinorField apply_L(const CoinField& c, const NonlinearCoin& nc,
                    const SpinorField& phi_plus_z, const SpinorField& xi) {
  require_same_grid(phi_plus_z, xi);
  SpinorField mid = apply_U(c, apply_N(nc, phi_plus_z));  // UN(Phi)
  SpinorField out = apply_U(c, apply_DN(nc, phi_plus_z, xi));
  return apply_U(c, apply_DN(nc, mid, out));
}

SpinorField apply_L_inv(const CoinField& c, const NonlinearCoin& nc,
                        const SpinorField& phi_plus_z, const SpinorField& xi) {
  require_same_grid(phi_plus_z, xi);
  SpinorField mid = apply_U(c, apply_N(nc, phi_plus_z));
  SpinorField out = apply_DN_inv(nc, mid, apply_U_inv(c, xi));
  return apply_DN_inv(nc, phi_plus_z, apply_U_inv(c, out));
}

}  // namespace nlqw
