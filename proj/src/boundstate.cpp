#include "nlqw/boundstate.hpp"

#include <cmath>
#include <stdexcept>

namespace nlqw {

namespace {

double stable_sinc(double x) {
  if (std::abs(x) < 1e-8) return 1.0 - x * x / 6.0;
  return std::sin(x) / x;
}

// family-normalized eigenpair: phi scaled so ||P+ phi|| = 1
std::pair<double, SpinorField> family_eigenpair(const SpectralData& sd) {
  auto [lam, phi] = discrete_eigenpair(sd, Branch::plus);
  SpinorField pp = proj_pm(phi, Sign::plus);
  double n = pp.norm();
  if (n <= 0) throw std::runtime_error("family_eigenpair: P+ phi vanishes");
  phi.v /= n;
  return {lam, phi};
}

// sitewise (e^{i g(r m) gamma} - 1)/r applied to w; exact for all r >= 0
// (the r -> 0 limit of the prefactor is taken analytically per gamma eigenvalue)
SpinorField hmap(const NonlinearCoin& nl, double r, const SpinorField& w) {
  SpinorField out(w.grid);
  for (int x = -w.grid.L; x < w.grid.L; ++x) {
    Eigen::Vector2cd ws(w.up(x), w.dn(x));
    double m = std::real(ws.dot(nl.gamma * ws));
    double s = nl.g(r * m);                                    // g(r m)
    double q = nl.c * std::pow(m, nl.p) * std::pow(r, nl.p - 1);  // s / r, exact at r = 0
    Eigen::Vector2cd y = nl.q.adjoint() * ws;
    for (int i = 0; i < 2; ++i) {
      double gi = nl.gdiag[i];
      double th = s * gi;
      // (e^{i th} - 1)/r = i gi q sinc(th) - (gi^2 s q / 2) sinc^2(th/2)
      cplx coef = cplx(0.0, gi * q) * stable_sinc(th) -
                  0.5 * gi * gi * s * q * stable_sinc(0.5 * th) * stable_sinc(0.5 * th);
      y[i] *= coef;
    }
    Eigen::Vector2cd o = nl.q * y;
    out.up(x) = o[0];
    out.dn(x) = o[1];
  }
  return out;
}

// (e^{i r mu} - 1)/r, exact at r = 0
cplx qfactor(double r, double mu) {
  double th = r * mu;
  return cplx(-0.5 * mu * th * stable_sinc(0.5 * th) * stable_sinc(0.5 * th),
              mu * stable_sinc(th));
}

struct IterationContext {
  const SpectralData& sd;
  const NonlinearCoin& nl;
  double lambda;
  const SpinorField& phi;  // family normalization
  double phi_sq;           // ||phi||^2
};

// one sweep of the NLQW1:4 relation: given psi (orthogonal to phi) produce
// (psi_next, mu, modulus defect of the projected frequency equation)
std::tuple<SpinorField, double, double> sweep(const IterationContext& ctx, double r,
                                              const SpinorField& psi) {
  SpinorField w = ctx.phi + cplx(r) * psi;
  SpinorField b = apply_U(ctx.sd.coin, hmap(ctx.nl, r, w));
  cplx elam = std::polar(1.0, ctx.lambda);
  cplx proj = inner(b, ctx.phi) / ctx.phi_sq;
  cplx target = 1.0 + r * proj / elam;  // e^{i r mu}
  double defect = std::abs(std::abs(target) - 1.0);
  double mu = (r > 0) ? std::arg(target) / r : std::imag(proj / elam);
  SpinorField rhs(w.grid);
  rhs.v = -b.v + (elam * qfactor(r, mu) * r) * psi.v;
  SpinorField next = resolvent_solve(ctx.sd, cplx(ctx.lambda), rhs, ResolventMode::off_phi);
  return {next, mu, defect};
}

}  // namespace

CorrectionSolve solve_correction(const SpectralData& sd, const NonlinearCoin& nl, double r,
                                 double fp_tol, int max_iter) {
  if (r < 0) throw std::invalid_argument("solve_correction: r must be >= 0");
  auto [lam, phi] = family_eigenpair(sd);
  IterationContext ctx{sd, nl, lam, phi, phi.v.squaredNorm()};

  CorrectionSolve out;
  out.psi = SpinorField(sd.grid);
  double prev_diff = -1.0;
  double scale = 1.0;
  for (int it = 0; it < max_iter; ++it) {
    auto [next, mu, defect] = sweep(ctx, r, out.psi);
    double diff = (next.v - out.psi.v).norm();
    scale = std::max(1.0, next.norm());
    out.psi = next;
    out.mu = mu;
    out.diag.mu_modulus_defect = defect;
    out.diag.iterations = it + 1;
    if (prev_diff > 1e-11 * scale && diff > 1e-12 * scale) {
      double ratio = diff / prev_diff;
      out.diag.contraction_ratio = std::max(out.diag.contraction_ratio, ratio);
      if (ratio >= 1.0 && it > 2)
        throw std::runtime_error("solve_correction: contraction failure (r too large)");
    }
    prev_diff = diff;
    if (diff < fp_tol * scale) {
      out.diag.fp_residual = diff;
      return out;
    }
  }
  throw std::runtime_error("solve_correction: fixed point did not converge");
}

SpinorField nmap_literal(const SpectralData& sd, const NonlinearCoin& nl, double r,
                         const SpinorField& psi) {
  auto [lam, phi] = family_eigenpair(sd);
  SpinorField w = phi + cplx(r) * psi;
  SpinorField b = apply_U(sd.coin, hmap(nl, r, w));
  SpinorField rhs(w.grid);
  rhs.v = -b.v;
  return resolvent_solve(sd, cplx(lam), rhs, ResolventMode::off_phi);
}

namespace {

std::vector<double> lobatto_nodes(double r_max, int n) {
  std::vector<double> r(n);
  for (int j = 0; j < n; ++j) r[j] = 0.5 * r_max * (1.0 - std::cos(M_PI * double(j) / (n - 1)));
  r.front() = 0.0;
  r.back() = r_max;
  return r;
}

std::vector<double> lobatto_weights(int n) {
  std::vector<double> w(n);
  for (int j = 0; j < n; ++j) {
    w[j] = (j % 2 == 0) ? 1.0 : -1.0;
    if (j == 0 || j == n - 1) w[j] *= 0.5;
  }
  return w;
}

// barycentric differentiation matrix for arbitrary nodes/weights
Eigen::MatrixXd diff_matrix(const std::vector<double>& x, const std::vector<double>& w) {
  int n = int(x.size());
  Eigen::MatrixXd d(n, n);
  for (int j = 0; j < n; ++j) {
    double diag = 0.0;
    for (int k = 0; k < n; ++k) {
      if (k == j) continue;
      d(j, k) = (w[k] / w[j]) / (x[j] - x[k]);
      diag -= d(j, k);
    }
    d(j, j) = diag;
  }
  return d;
}

struct BaryEval {
  int exact = -1;                // node hit
  std::vector<double> coef;      // otherwise barycentric coefficients
};

BaryEval bary_coefficients(const std::vector<double>& x, const std::vector<double>& w, double r) {
  BaryEval be;
  int n = int(x.size());
  be.coef.assign(n, 0.0);
  double span = x.back() - x.front();
  for (int j = 0; j < n; ++j) {
    if (std::abs(r - x[j]) < 1e-15 * std::max(1.0, span)) {
      be.exact = j;
      return be;
    }
  }
  double denom = 0.0;
  for (int j = 0; j < n; ++j) {
    be.coef[j] = w[j] / (r - x[j]);
    denom += be.coef[j];
  }
  for (int j = 0; j < n; ++j) be.coef[j] /= denom;
  return be;
}

SpinorField combine(const std::vector<SpinorField>& nodes, const BaryEval& be) {
  if (be.exact >= 0) return nodes[be.exact];
  SpinorField out(nodes.front().grid);
  for (size_t j = 0; j < nodes.size(); ++j) out.v += be.coef[j] * nodes[j].v;
  return out;
}

double combine(const std::vector<double>& nodes, const BaryEval& be) {
  if (be.exact >= 0) return nodes[be.exact];
  double out = 0.0;
  for (size_t j = 0; j < nodes.size(); ++j) out += be.coef[j] * nodes[j];
  return out;
}

}  // namespace

SpinorField BoundStateFamily::psi_at(double r) const {
  return combine(psi_nodes, bary_coefficients(rgrid, lobatto_weights(int(rgrid.size())), r));
}

double BoundStateFamily::mu_at(double r) const {
  return combine(mu_nodes, bary_coefficients(rgrid, lobatto_weights(int(rgrid.size())), r));
}

SpinorField BoundStateFamily::eval_Phi(cplx z) const {
  double r = std::norm(z);
  if (!has(z)) throw std::domain_error("eval_Phi: |z|^2 exceeds the family budget r_max");
  auto be = bary_coefficients(rgrid, lobatto_weights(int(rgrid.size())), r);
  SpinorField psi_r = combine(psi_nodes, be);
  SpinorField out(grid);
  out.v = z * (phi.v + r * psi_r.v);
  return out;
}

double BoundStateFamily::eval_Lambda(cplx z) const {
  double r = std::norm(z);
  if (!has(z)) throw std::domain_error("eval_Lambda: |z|^2 exceeds the family budget r_max");
  return lambda + r * mu_at(r);
}

SpinorField BoundStateFamily::eval_Phi_plus(cplx z) const {
  double r = std::norm(z);
  if (!has(z)) throw std::domain_error("eval_Phi_plus: |z|^2 exceeds the family budget r_max");
  auto be = bary_coefficients(rgrid, lobatto_weights(int(rgrid.size())), r);
  SpinorField psi_r = combine(psi_plus_nodes, be);
  SpinorField out(grid);
  out.v = z * (phi_plus.v + r * psi_r.v);
  return out;
}

double BoundStateFamily::eval_Lambda_plus(cplx z) const { return 2.0 * eval_Lambda(z); }

SpinorField BoundStateFamily::dPhi_plus(cplx z, cplx w) const {
  double r = std::norm(z);
  if (!has(z)) throw std::domain_error("dPhi_plus: |z|^2 exceeds the family budget r_max");
  auto be = bary_coefficients(rgrid, lobatto_weights(int(rgrid.size())), r);
  SpinorField psi_r = combine(psi_plus_nodes, be);
  SpinorField psid_r = combine(psi_plus_dot_nodes, be);
  // D Phi_+[z] w = w (phi_+ + r psi_+) + 2 Re(conj(z) w) z (psi_+ + r psi_+')
  double zw = (std::conj(z) * w).real();
  SpinorField out(grid);
  out.v = w * (phi_plus.v + r * psi_r.v) + (2.0 * zw) * (z * (psi_r.v + r * psid_r.v));
  return out;
}

double BoundStateFamily::dLambda_plus(cplx z, cplx w) const {
  double r = std::norm(z);
  auto be = bary_coefficients(rgrid, lobatto_weights(int(rgrid.size())), r);
  double mu_r = combine(mu_nodes, be);
  double mud_r = combine(mu_dot_nodes, be);
  double zw = (std::conj(z) * w).real();
  return 2.0 * (2.0 * zw * (mu_r + r * mud_r));
}

BoundStateFamily BoundStateFamily::embedded(const LatticeGrid& big) const {
  BoundStateFamily f = *this;
  f.grid = big;
  f.coin = coin.embedded(big);
  f.phi = embed(phi, big);
  f.phi_plus = embed(phi_plus, big);
  auto lift = [&](std::vector<SpinorField>& fields) {
    for (auto& u : fields) u = embed(u, big);
  };
  lift(f.psi_nodes);
  lift(f.psi_plus_nodes);
  lift(f.psi_dot_nodes);
  lift(f.psi_plus_dot_nodes);
  return f;
}

BoundStateFamily build_family(const SpectralData& sd, const NonlinearCoin& nl,
                              FamilyOptions opt) {
  BoundStateFamily f;
  f.grid = sd.grid;
  f.coin = sd.coin;
  f.nl = nl;
  auto [lam, phi] = family_eigenpair(sd);
  f.lambda = lam;
  f.phi = phi;
  f.phi_plus = proj_pm(phi, Sign::plus);

  double r_max = opt.r_max;
  if (opt.adapt_r_max) {
    for (int attempt = 0; attempt < 8; ++attempt) {
      try {
        CorrectionSolve probe = solve_correction(sd, nl, r_max, opt.fp_tol, opt.max_iter);
        if (probe.diag.contraction_ratio <= 0.25) break;
      } catch (const std::runtime_error&) {
        // fall through to halving
      }
      r_max *= 0.5;
    }
  }
  f.r_max = r_max;
  f.rgrid = lobatto_nodes(r_max, opt.nodes);

  for (double r : f.rgrid) {
    CorrectionSolve cs = solve_correction(sd, nl, r, opt.fp_tol, opt.max_iter);
    f.psi_nodes.push_back(cs.psi);
    f.psi_plus_nodes.push_back(proj_pm(cs.psi, Sign::plus));
    f.mu_nodes.push_back(cs.mu);
    f.node_diag.push_back(cs.diag);
    f.max_contraction_ratio = std::max(f.max_contraction_ratio, cs.diag.contraction_ratio);
  }

  // spectral derivatives of the cached curves
  auto wbar = lobatto_weights(opt.nodes);
  Eigen::MatrixXd d = diff_matrix(f.rgrid, wbar);
  int n = opt.nodes;
  f.psi_dot_nodes.assign(n, SpinorField(f.grid));
  f.psi_plus_dot_nodes.assign(n, SpinorField(f.grid));
  f.mu_dot_nodes.assign(n, 0.0);
  for (int j = 0; j < n; ++j) {
    for (int k = 0; k < n; ++k) {
      f.psi_dot_nodes[j].v += d(j, k) * f.psi_nodes[k].v;
      f.psi_plus_dot_nodes[j].v += d(j, k) * f.psi_plus_nodes[k].v;
      f.mu_dot_nodes[j] += d(j, k) * f.mu_nodes[k];
    }
  }

  // interpolation audit at midpoints of interior gaps
  int checks = std::min(opt.midpoint_checks, opt.nodes - 1);
  double worst = 0.0;
  for (int c = 0; c < checks; ++c) {
    int j = (c + 1) * (opt.nodes - 1) / (checks + 1);
    double rm = 0.5 * (f.rgrid[j] + f.rgrid[j + 1]);
    CorrectionSolve cs = solve_correction(sd, nl, rm, opt.fp_tol, opt.max_iter);
    worst = std::max(worst, (f.psi_at(rm).v - cs.psi.v).norm());
    worst = std::max(worst, std::abs(f.mu_at(rm) - cs.mu));
  }
  f.interp_check_error = worst;
  return f;
}

}  // namespace nlqw
