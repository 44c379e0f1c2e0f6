#include "nlqw/smoothness.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "nlqw/rng.hpp"

namespace nlqw {

namespace {

double wrap_angle(double t) {
  double two_pi = 2.0 * M_PI;
  double r = std::fmod(t, two_pi);
  if (r < 0) r += two_pi;
  return r;
}

double op_norm(const Eigen::MatrixXcd& m) {
  Eigen::BDCSVD<Eigen::MatrixXcd> svd(m);
  return svd.singularValues()[0];
}

// diagonal of R(mu) in the eigenbasis
Eigen::VectorXcd resolvent_diag(const UnitaryEig& ue, cplx mu) {
  int n = int(ue.angles.size());
  Eigen::VectorXcd d(n);
  cplx emu_inv = std::exp(cplx(0, -1) * mu);
  for (int j = 0; j < n; ++j) {
    cplx den = std::polar(1.0, ue.angles[j]) * emu_inv - 1.0;
    if (std::abs(den) < 1e-300) throw std::runtime_error("resolvent: singular at eigenphase");
    d[j] = 1.0 / den;
  }
  return d;
}

}  // namespace

UnitaryEig eig_unitary(const Eigen::MatrixXcd& u) {
  if (u.rows() != u.cols()) throw std::invalid_argument("eig_unitary: square matrix required");
  Eigen::ComplexSchur<Eigen::MatrixXcd> schur(u);
  if (schur.info() != Eigen::Success) throw std::runtime_error("eig_unitary: Schur failed");
  int n = int(u.rows());
  // U normal: the Schur form is diagonal up to rounding, Q is the eigenbasis
  Eigen::MatrixXcd t = schur.matrixT();
  double off = 0.0;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < j; ++i) off = std::max(off, std::abs(t(i, j)));
  UnitaryEig ue;
  ue.schur_offdiag = off;
  if (off > 1e-10) throw std::invalid_argument("eig_unitary: matrix is not (numerically) unitary");
  std::vector<std::pair<double, int>> order(n);
  for (int j = 0; j < n; ++j) order[j] = {wrap_angle(std::arg(t(j, j))), j};
  std::sort(order.begin(), order.end());
  ue.angles.resize(n);
  ue.v.resize(n, n);
  for (int j = 0; j < n; ++j) {
    ue.angles[j] = order[j].first;
    ue.v.col(j) = schur.matrixU().col(order[j].second);
  }
  return ue;
}

Eigen::MatrixXcd haar_unitary(int n, uint64_t seed) {
  CounterRng rng(seed, 101);
  Eigen::MatrixXcd g(n, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) g(i, j) = rng.next_cnormal();
  Eigen::HouseholderQR<Eigen::MatrixXcd> qr(g);
  Eigen::MatrixXcd q = qr.householderQ();
  Eigen::MatrixXcd r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < n; ++j) {
    cplx d = r(j, j);
    q.col(j) *= (std::abs(d) > 0) ? d / std::abs(d) : 1.0;
  }
  return q;
}

Eigen::MatrixXcd resolvent_mat(const UnitaryEig& ue, cplx mu) {
  Eigen::VectorXcd d = resolvent_diag(ue, mu);
  return ue.v * d.asDiagonal() * ue.v.adjoint();
}

Eigen::VectorXcd resolvent_apply(const UnitaryEig& ue, cplx mu, const Eigen::VectorXcd& phi) {
  Eigen::VectorXcd c = ue.v.adjoint() * phi;
  c.array() *= resolvent_diag(ue, mu).array();
  return ue.v * c;
}

double qty_time(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& u, const Eigen::VectorXcd& phi,
                double eps, int t_horizon) {
  if (!(eps > 0)) throw std::invalid_argument("qty_time: eps must be positive");
  if (std::exp(-eps * t_horizon) >= 1e-10)
    throw std::invalid_argument("qty_time: horizon too small for eps (tail not negligible)");
  double acc = (a * phi).squaredNorm();
  Eigen::VectorXcd fwd = phi, bwd = phi;
  Eigen::MatrixXcd uh = u.adjoint();
  for (int t = 1; t <= t_horizon; ++t) {
    fwd = u * fwd;
    bwd = uh * bwd;
    double w = std::exp(-2.0 * eps * t);
    acc += w * ((a * fwd).squaredNorm() + (a * bwd).squaredNorm());
  }
  return acc;
}

namespace {
double qty_resolvent_once(const Eigen::MatrixXcd& a, const UnitaryEig& ue,
                          const Eigen::VectorXcd& phi, double eps, int m) {
  double acc = 0.0;
  for (int k = 0; k < m; ++k) {
    double lam = 2.0 * M_PI * k / m;
    acc += (a * resolvent_apply(ue, cplx(lam, eps), phi)).squaredNorm();
    acc += (a * resolvent_apply(ue, cplx(lam, -eps), phi)).squaredNorm();
  }
  // (1/2pi) * trapezoid on the periodic integrand = (1/m) * sum
  return acc / m;
}
}  // namespace

double qty_resolvent(const Eigen::MatrixXcd& a, const UnitaryEig& ue, const Eigen::VectorXcd& phi,
                     double eps, int m) {
  if (!(eps > 0)) throw std::invalid_argument("qty_resolvent: eps must be positive");
  double v1 = qty_resolvent_once(a, ue, phi, eps, m);
  double v2 = qty_resolvent_once(a, ue, phi, eps, 2 * m);
  if (std::abs(v1 - v2) > 1e-9 * (1.0 + std::abs(v2)))
    throw std::runtime_error("qty_resolvent: quadrature not converged, increase m");
  return v2;
}

SupResolventReport qty_sup_resolvent(const Eigen::MatrixXcd& a, const UnitaryEig& ue,
                                     const std::vector<double>& eps_grid,
                                     const std::vector<double>& lambda_grid) {
  if (eps_grid.empty() || lambda_grid.empty())
    throw std::invalid_argument("qty_sup_resolvent: empty grid");
  SupResolventReport rep;
  rep.min_eigenvalue = 0.0;
  for (double eps : eps_grid) {
    for (double lam : lambda_grid) {
      Eigen::MatrixXcd dr =
          resolvent_mat(ue, cplx(lam, eps)) - resolvent_mat(ue, cplx(lam, -eps));
      Eigen::MatrixXcd inner_op = a * dr * a.adjoint();
      rep.selfadjoint_defect =
          std::max(rep.selfadjoint_defect, (inner_op - inner_op.adjoint()).cwiseAbs().maxCoeff());
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(dr);
      rep.min_eigenvalue = std::min(rep.min_eigenvalue, es.eigenvalues().minCoeff());
      rep.value = std::max(rep.value, op_norm(inner_op) / (2.0 * M_PI));
    }
  }
  return rep;
}

double qty_interval(const Eigen::MatrixXcd& a, const UnitaryEig& ue, double width_floor,
                    int offsets, int widths) {
  int n = int(ue.angles.size());
  double best = 0.0;
  for (int wi = 0; wi < widths; ++wi) {
    double width = width_floor * std::pow(2.0, wi);
    if (width > 2.0 * M_PI) break;
    for (int oi = 0; oi < offsets; ++oi) {
      double a0 = 2.0 * M_PI * oi / offsets;
      double b0 = a0 + width;
      Eigen::MatrixXcd proj = Eigen::MatrixXcd::Zero(n, n);
      for (int j = 0; j < n; ++j) {
        double ang = ue.angles[j];
        bool inside = (b0 <= 2.0 * M_PI) ? (ang >= a0 && ang < b0)
                                         : (ang >= a0 || ang < b0 - 2.0 * M_PI);
        if (inside) proj += ue.v.col(j) * ue.v.col(j).adjoint();
      }
      double nrm = op_norm(a * proj);
      best = std::max(best, nrm * nrm / width);
    }
  }
  return best;
}

Eigen::MatrixXcd stone_integral(const UnitaryEig& ue, double a, double b, double eps) {
  if (!(b > a)) throw std::invalid_argument("stone_integral: need b > a");
  // the integrand diagonalizes in the fixed eigenbasis; composite Simpson per
  // phase, resolved well below the Poisson-kernel width eps
  int m = std::max(1024, int(std::ceil(400.0 * (b - a) / eps)));
  if (m % 2) ++m;
  int n = int(ue.angles.size());
  Eigen::VectorXd f = Eigen::VectorXd::Zero(n);
  double h = (b - a) / m;
  for (int k = 0; k <= m; ++k) {
    double lam = a + h * k;
    double w = (k == 0 || k == m) ? 1.0 : ((k % 2) ? 4.0 : 2.0);
    for (int j = 0; j < n; ++j) {
      double t = ue.angles[j] - lam;
      // (R(lam+i eps) - R(lam-i eps)) eigenvalue: real positive Poisson-type kernel
      cplx rp = 1.0 / (std::polar(1.0, t) * std::exp(eps) - 1.0);
      cplx rm = 1.0 / (std::polar(1.0, t) * std::exp(-eps) - 1.0);
      f[j] += w * (rp - rm).real();
    }
  }
  f *= h / (3.0 * 2.0 * M_PI);
  return ue.v * f.asDiagonal() * ue.v.adjoint();
}

Eigen::MatrixXcd stone_projection(const UnitaryEig& ue, double a, double b,
                                  const std::vector<double>& eps_seq) {
  if (eps_seq.size() < 2) throw std::invalid_argument("stone_projection: need >= 2 eps values");
  for (size_t i = 1; i < eps_seq.size(); ++i)
    if (!(eps_seq[i] < eps_seq[i - 1]))
      throw std::invalid_argument("stone_projection: eps sequence must decrease");
  // polynomial extrapolation (Neville to eps = 0), entrywise over the
  // diagonal representation
  int n = int(ue.angles.size());
  size_t k = eps_seq.size();
  std::vector<Eigen::VectorXd> tab(k, Eigen::VectorXd::Zero(n));
  for (size_t i = 0; i < k; ++i) {
    Eigen::MatrixXcd s = stone_integral(ue, a, b, eps_seq[i]);
    Eigen::MatrixXcd diag = ue.v.adjoint() * s * ue.v;
    tab[i] = diag.diagonal().real();
  }
  for (size_t lvl = 1; lvl < k; ++lvl) {
    for (size_t i = k; i-- > lvl;) {
      double x_hi = eps_seq[i], x_lo = eps_seq[i - lvl];
      tab[i] = (x_lo * tab[i] - x_hi * tab[i - 1]) / (x_lo - x_hi);
    }
  }
  return ue.v * tab[k - 1].asDiagonal() * ue.v.adjoint();
}

double indicator_series(double a, double b, double zeta, double eps, int terms) {
  double val = (b - a) / (2.0 * M_PI);
  for (int n = 1; n <= terms; ++n) {
    double w = std::exp(-eps * n);
    if (w < 1e-17) break;
    val += w * (std::sin(n * (b - zeta)) - std::sin(n * (a - zeta))) / (M_PI * n);
  }
  return val;
}

FourierCheck fourier_identities_check(const Eigen::MatrixXcd& a, const UnitaryEig& ue,
                                      const Eigen::VectorXcd& phi, double eps, int t_horizon,
                                      int m_lambda) {
  if (std::exp(-eps * t_horizon) >= 1e-10)
    throw std::invalid_argument("fourier_identities_check: horizon too small for eps");
  int n = int(phi.size());
  Eigen::VectorXcd ph(ue.angles.size());
  for (int j = 0; j < ph.size(); ++j) ph[j] = std::polar(1.0, ue.angles[j]);
  Eigen::MatrixXcd u = ue.v * ph.asDiagonal() * ue.v.adjoint();

  // precompute A U^t phi for |t| <= T
  std::vector<Eigen::VectorXcd> fwd(t_horizon + 1), bwd(t_horizon + 1);
  fwd[0] = phi;
  bwd[0] = phi;
  for (int t = 1; t <= t_horizon; ++t) {
    fwd[t] = u * fwd[t - 1];
    bwd[t] = u.adjoint() * bwd[t - 1];
  }
  FourierCheck out;
  for (int k = 0; k < m_lambda; ++k) {
    double lam = 2.0 * M_PI * k / m_lambda;
    // truncated Fourier sums, F u(lam) = (1/2pi) sum e^{-i lam t} u(t)
    Eigen::VectorXcd sum_plus = Eigen::VectorXcd::Zero(n);
    Eigen::VectorXcd sum_minus = Eigen::VectorXcd::Zero(n);
    for (int t = 0; t <= t_horizon; ++t)
      sum_plus += std::polar(std::exp(-eps * t), -lam * t) * fwd[t];
    for (int t = 1; t <= t_horizon; ++t)
      sum_minus += std::polar(std::exp(-eps * t), lam * t) * bwd[t];
    sum_plus = a * sum_plus / (2.0 * M_PI);
    sum_minus = a * sum_minus / (2.0 * M_PI);
    Eigen::VectorXcd rm = a * resolvent_apply(ue, cplx(lam, -eps), phi) / (2.0 * M_PI);
    Eigen::VectorXcd rp = a * resolvent_apply(ue, cplx(lam, eps), phi) / (2.0 * M_PI);
    out.resid_one_sided_minus = std::max(out.resid_one_sided_minus, (sum_plus + rm).norm());
    out.resid_one_sided_plus = std::max(out.resid_one_sided_plus, (sum_minus - rp).norm());
    out.resid_two_sided =
        std::max(out.resid_two_sided, (sum_plus + sum_minus - (rp - rm)).norm());
  }
  return out;
}

double kato_sufficient(const Eigen::MatrixXcd& a, const UnitaryEig& ue,
                       const std::vector<cplx>& mu_grid) {
  double best = 0.0;
  for (cplx mu : mu_grid) {
    if (std::abs(mu.imag()) < 1e-14)
      throw std::invalid_argument("kato_sufficient: mu grid must be off the unit circle");
    best = std::max(best, op_norm(a * resolvent_mat(ue, mu) * a.adjoint()));
  }
  return best;
}

double normalization_integral(const UnitaryEig& ue, const Eigen::VectorXcd& phi, double eps,
                              int m) {
  double acc = 0.0;
  for (int k = 0; k < m; ++k) {
    double lam = 2.0 * M_PI * k / m;
    Eigen::VectorXcd dphi = resolvent_apply(ue, cplx(lam, eps), phi) -
                            resolvent_apply(ue, cplx(lam, -eps), phi);
    acc += std::real(phi.dot(dphi));  // (phi, dr phi) with Eigen's conj-first dot
  }
  return acc / m;
}

}  // namespace nlqw
