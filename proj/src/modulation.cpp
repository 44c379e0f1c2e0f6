#include "nlqw/modulation.hpp"

#include <cmath>
#include <stdexcept>

#include "nlqw/rng.hpp"

namespace nlqw {

namespace {
const cplx kI(0.0, 1.0);

SpinorField i_times(const SpinorField& u) {
  SpinorField r(u.grid);
  r.v = kI * u.v;
  return r;
}
}  // namespace

Eigen::Vector2d mod_F(const BoundStateFamily& fam, const SpinorField& u, cplx z) {
  SpinorField diff = u - fam.eval_Phi_plus(z);
  SpinorField d1 = fam.dPhi_plus(z, 1.0);
  SpinorField di = fam.dPhi_plus(z, kI);
  return {real_inner(diff, i_times(d1)), real_inner(diff, i_times(di))};
}

ModulationState decompose(const BoundStateFamily& fam, const SpinorField& u, cplx z_guess,
                          DecomposeOptions opt) {
  require_same_grid(u, fam.phi_plus);
  double minus_part = proj_pm(u, Sign::minus).norm();
  if (minus_part > 1e-9 * std::max(1.0, u.norm()))
    throw std::invalid_argument("decompose: u must lie in the P+ sector");

  cplx z = z_guess;
  double scale = std::max(1.0, u.norm());
  int it = 0;
  Eigen::Vector2d f = mod_F(fam, u, z);
  for (; it < opt.max_iter; ++it) {
    if (f.norm() < opt.tol * scale) break;
    double h = opt.fd_step;
    Eigen::Vector2d fr = mod_F(fam, u, z + h);
    Eigen::Vector2d fl = mod_F(fam, u, z - h);
    Eigen::Vector2d fi = mod_F(fam, u, z + h * kI);
    Eigen::Vector2d fj = mod_F(fam, u, z - h * kI);
    Eigen::Matrix2d jac;
    jac.col(0) = (fr - fl) / (2 * h);
    jac.col(1) = (fi - fj) / (2 * h);
    Eigen::Vector2d step = jac.fullPivLu().solve(f);
    if (!step.allFinite()) throw std::runtime_error("decompose: singular Newton step");
    cplx znew = z - cplx(step[0], step[1]);
    if (std::norm(znew) > fam.r_max * (1.0 + 1e-9))
      throw std::runtime_error("decompose: Newton left the family budget (u too large?)");
    z = znew;
    f = mod_F(fam, u, z);
  }
  if (f.norm() >= std::max(opt.tol * scale, 1e-11))
    throw std::runtime_error("decompose: Newton did not converge");

  ModulationState ms;
  ms.z = z;
  ms.xi = u - fam.eval_Phi_plus(z);
  ms.eta = pc(fam, ms.xi);
  ms.newton_iters = it;
  ms.f_norm = f.norm();
  return ms;
}

SpinorField pc(const BoundStateFamily& fam, const SpinorField& u) {
  cplx ov = inner(u, fam.phi_plus);
  SpinorField r(u.grid);
  r.v = u.v - ov * fam.phi_plus.v;
  return r;
}

Eigen::Matrix2d pairing_matrix(const BoundStateFamily& fam, cplx z) {
  SpinorField id1 = i_times(fam.dPhi_plus(z, 1.0));
  SpinorField idi = i_times(fam.dPhi_plus(z, kI));
  SpinorField iphi = i_times(fam.phi_plus);
  Eigen::Matrix2d m;
  m << real_inner(fam.phi_plus, id1), real_inner(iphi, id1),
       real_inner(fam.phi_plus, idi), real_inner(iphi, idi);
  return m;
}

std::pair<SpinorField, SpinorField> coeffs_aRaI(const BoundStateFamily& fam, cplx z) {
  Eigen::Matrix2d m = pairing_matrix(fam, z);
  if (std::abs(m.determinant()) < 1e-12)
    throw std::runtime_error("coeffs_aRaI: singular pairing matrix");
  Eigen::Matrix2d minv = m.inverse();
  SpinorField id1 = i_times(fam.dPhi_plus(z, 1.0));
  SpinorField idi = i_times(fam.dPhi_plus(z, kI));
  SpinorField a_r(fam.grid), a_i(fam.grid);
  a_r.v = -(minv(0, 0) * id1.v + minv(0, 1) * idi.v);
  a_i.v = -(minv(1, 0) * id1.v + minv(1, 1) * idi.v);
  // only the P_c component acts on eta in P_c l^2_+; project for canonicity
  // (this is also what makes a_R, a_I = O(|z|^2))
  return {pc(fam, a_r), pc(fam, a_i)};
}

SpinorField apply_R(const BoundStateFamily& fam, cplx z, const SpinorField& eta) {
  double n = std::max(1e-300, eta.norm());
  if (std::abs(inner(eta, fam.phi_plus)) > 1e-7 * n ||
      proj_pm(eta, Sign::minus).norm() > 1e-7 * n)
    throw std::invalid_argument("apply_R: eta must lie in P_c l^2_+");
  auto [a_r, a_i] = coeffs_aRaI(fam, z);
  SpinorField out(eta.grid);
  out.v = eta.v + real_inner(eta, a_r) * fam.phi_plus.v +
          real_inner(eta, a_i) * (kI * fam.phi_plus.v);
  return out;
}

double hc_residual(const BoundStateFamily& fam, cplx z, const SpinorField& v) {
  double n = std::max(1e-300, v.norm());
  double p1 = std::abs(real_inner(v, i_times(fam.dPhi_plus(z, 1.0))));
  double p2 = std::abs(real_inner(v, i_times(fam.dPhi_plus(z, kI))));
  return std::max(p1, p2) / n;
}

ModulationTrace track(const BoundStateFamily& fam, const SpinorField& u0, int T,
                      TrackOptions opt) {
  ModulationTrace tr;
  SpinorField u = u0;
  cplx guess = inner(u0, fam.phi_plus);
  ModulationState ms = decompose(fam, u, guess, opt.newton);
  size_t next_cp = 0;

  auto snapshot = [&](int t) {
    while (next_cp < opt.checkpoints.size() && opt.checkpoints[next_cp] == t) {
      tr.checkpoint_t.push_back(t);
      tr.checkpoint_eta.push_back(ms.eta);
      tr.checkpoint_u.push_back(u);
      tr.checkpoint_z.push_back(ms.z);
      ++next_cp;
    }
  };

  for (int t = 0; t <= T; ++t) {
    TraceRow row;
    row.t = t;
    row.z = ms.z;
    row.lambda_plus = fam.eval_Lambda_plus(ms.z);
    row.eta_l2 = ms.eta.norm();
    row.eta_l2wm2 = weighted_norm(ms.eta, 2.0, -2.0);
    row.eta_linf = weighted_norm(ms.eta, std::numeric_limits<double>::infinity(), 0.0);
    row.newton_iters = ms.newton_iters;
    SpinorField rxi = apply_R(fam, ms.z, ms.eta);
    row.reconstruction = (u - fam.eval_Phi_plus(ms.z) - rxi).norm();
    snapshot(t);
    if (opt.wrap_abort > 0 && boundary_mass(u) > opt.wrap_abort) {
      tr.failed = true;
      tr.fail_t = t;
      tr.rows.push_back(row);
      break;
    }
    if (t == T) {
      tr.rows.push_back(row);
      break;
    }

    SpinorField u_next = double_step(fam.coin, fam.nl, u);
    cplx z_hat = std::polar(1.0, row.lambda_plus) * ms.z;
    ModulationState ms_next;
    try {
      ms_next = decompose(fam, u_next, z_hat, opt.newton);
    } catch (const std::exception&) {
      tr.failed = true;
      tr.fail_t = t;
      tr.rows.push_back(row);
      break;
    }
    cplx bigz = z_hat - ms_next.z;
    row.big_z = bigz;

    if (opt.diagnostics) {
      // F1 = e^{i Lambda_+[z]} Phi_+[z] - Phi_+[z(t+1)]
      SpinorField f1(fam.grid);
      f1.v = std::polar(1.0, row.lambda_plus) * fam.eval_Phi_plus(ms.z).v -
             fam.eval_Phi_plus(ms_next.z).v;
      row.f1 = f1.norm();
      // F2 = (L[z] - U^2) R[z] eta
      SpinorField phi_z = fam.eval_Phi_plus(ms.z);
      SpinorField lrxi = apply_L(fam.coin, fam.nl, phi_z, rxi);
      SpinorField u2rxi = apply_U(fam.coin, apply_U(fam.coin, rxi));
      row.f2 = (lrxi - u2rxi).norm();
      // F3 = G[z, R[z] eta] = curly_U(Phi+xi) - curly_U(Phi) - L[z] xi
      SpinorField g_field = double_step(fam.coin, fam.nl, phi_z + rxi) -
                            double_step(fam.coin, fam.nl, phi_z) - lrxi;
      row.f3 = g_field.norm();
      // |Z|^2 identity (eq. z2): |Z|^2 = <G, i DPhi_+[z2] iZ> + g(t)
      //                                + <L xi, i (DPhi_+[z2] - DPhi_+[z_hat]) iZ>
      SpinorField d_next = fam.dPhi_plus(ms_next.z, kI * bigz);
      SpinorField id_next = i_times(d_next);
      double term_g = real_inner(g_field, id_next);
      SpinorField zphi(fam.grid);
      zphi.v = bigz * fam.phi_plus.v;
      double gt = real_inner(f1 - zphi, id_next);
      SpinorField dmod(fam.grid);
      dmod.v = kI * (d_next.v - (kI * bigz) * fam.phi_plus.v);
      gt += real_inner(zphi, dmod);
      SpinorField lxi = apply_L(fam.coin, fam.nl, phi_z, ms.xi);
      SpinorField d_hat = fam.dPhi_plus(z_hat, kI * bigz);
      SpinorField ddiff(fam.grid);
      ddiff.v = kI * (d_next.v - d_hat.v);
      double term_l = real_inner(lxi, ddiff);
      row.z2_residual = std::abs(std::norm(bigz) - (term_g + gt + term_l));
    }

    tr.rows.push_back(row);
    u = u_next;
    ms = ms_next;
  }
  return tr;
}

double check_symplectic(const BoundStateFamily& fam, cplx z, uint64_t seed, int pairs) {
  SpinorField phi_z = fam.eval_Phi_plus(z);
  double worst = 0.0;
  for (int k = 0; k < pairs; ++k) {
    SpinorField u = random_field(fam.grid, seed, 2 * k);
    SpinorField v = random_field(fam.grid, seed, 2 * k + 1);
    SpinorField lu = apply_L(fam.coin, fam.nl, phi_z, u);
    SpinorField linv_v = apply_L_inv(fam.coin, fam.nl, phi_z, v);
    double lhs = real_inner(lu, i_times(v));
    double rhs = real_inner(u, i_times(linv_v));
    worst = std::max(worst, std::abs(lhs - rhs) / (u.norm() * v.norm()));
  }
  return worst;
}

double check_Hc_invariance(const BoundStateFamily& fam, cplx z, const SpinorField& xi) {
  if (hc_residual(fam, z, xi) > 1e-6)
    throw std::invalid_argument("check_Hc_invariance: xi is not in H_c[z]");
  SpinorField phi_z = fam.eval_Phi_plus(z);
  SpinorField lxi = apply_L(fam.coin, fam.nl, phi_z, xi);
  SpinorField rotated(fam.grid);
  rotated.v = std::polar(1.0, -fam.eval_Lambda_plus(z)) * lxi.v;
  return hc_residual(fam, z, rotated) * rotated.norm() / std::max(1e-300, xi.norm());
}

}  // namespace nlqw
