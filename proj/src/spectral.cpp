#include "nlqw/spectral.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <lapacke.h>

extern "C" void openblas_set_num_threads(int);

namespace nlqw {

namespace {

// BLAS threads pinned once, independent of the CLI --threads flag, so that
// eigensolver output (hence CSV output) is bit-identical across flag values.
void pin_blas_threads() {
  static bool done = false;
  if (!done) {
    openblas_set_num_threads(2);
    done = true;
  }
}

void hermitian_eig(Eigen::MatrixXcd& a, Eigen::VectorXd& w) {
  pin_blas_threads();
  int n = int(a.rows());
  w.resize(n);
  int info = LAPACKE_zheevd(LAPACK_COL_MAJOR, 'V', 'L', n,
                            reinterpret_cast<lapack_complex_double*>(a.data()), n, w.data());
  if (info != 0) throw std::runtime_error("zheevd failed, info=" + std::to_string(info));
}

double wrap_angle(double t) {
  double two_pi = 2.0 * M_PI;
  double r = std::fmod(t, two_pi);
  if (r < 0) r += two_pi;
  return r;
}

void phase_fix(Eigen::Ref<Eigen::VectorXcd> v) {
  int best = 0;
  double mx = 0.0;
  for (int i = 0; i < v.size(); ++i) {
    double a = std::abs(v[i]);
    if (a > mx + 1e-15) {
      mx = a;
      best = i;
    }
  }
  if (mx > 0) v *= std::conj(v[best]) / mx;
}

}  // namespace

Eigen::MatrixXcd dense_U(const CoinField& c) {
  const LatticeGrid& g = c.grid;
  int n = g.dim();
  Eigen::MatrixXcd u = Eigen::MatrixXcd::Zero(n, n);
  for (int y = -g.L; y < g.L; ++y) {
    Eigen::Matrix2cd m = c.matrix(y);
    int up_row = g.idx(g.wrap(y + 1), 0);
    int dn_row = g.idx(g.wrap(y - 1), 1);
    for (int cc = 0; cc < 2; ++cc) {
      u(up_row, g.idx(y, cc)) = m(0, cc);
      u(dn_row, g.idx(y, cc)) = m(1, cc);
    }
  }
  return u;
}

Eigen::MatrixXcd dense_of(const CoinField& c,
                          const std::function<SpinorField(const SpinorField&)>& op) {
  const LatticeGrid& g = c.grid;
  int n = g.dim();
  Eigen::MatrixXcd m(n, n);
  for (int j = 0; j < n; ++j) {
    SpinorField e(g);
    e.v[j] = 1.0;
    m.col(j) = op(e).v;
  }
  return m;
}

SpectralData full_spectrum(const CoinField& c, int dense_cap) {
  pin_blas_threads();
  const LatticeGrid& g = c.grid;
  const int n = g.dim();
  if (n > dense_cap)
    throw std::invalid_argument("full_spectrum: 4L exceeds dense cap " + std::to_string(dense_cap));
  const int ns = g.sites() / 2;  // sites per parity
  const int m = 2 * ns;          // sector dimension = 2L

  // sector index maps: even sites carry (-1)^x = +1
  std::vector<int> even_sites, odd_sites;
  for (int x = -g.L; x < g.L; ++x) ((x & 1) ? odd_sites : even_sites).push_back(x);
  auto sec_idx = [&](const std::vector<int>& sites, int pos, int comp) {
    (void)sites;
    return 2 * pos + comp;
  };
  std::vector<int> pos_of_site(g.sites(), -1);
  for (int k = 0; k < ns; ++k) pos_of_site[(even_sites[k] + g.L)] = k;
  for (int k = 0; k < ns; ++k) pos_of_site[(odd_sites[k] + g.L)] = k;

  // U maps the even sector into the odd sector and vice versa:
  //   U[(y+1, up), (y, c)] = C(y)(0, c),  U[(y-1, dn), (y, c)] = C(y)(1, c)
  Eigen::MatrixXcd blk_even_to_odd = Eigen::MatrixXcd::Zero(m, m);  // columns: even sector
  Eigen::MatrixXcd blk_odd_to_even = Eigen::MatrixXcd::Zero(m, m);
  for (int y = -g.L; y < g.L; ++y) {
    Eigen::Matrix2cd cm = c.matrix(y);
    int yp = g.wrap(y + 1), ym = g.wrap(y - 1);
    bool y_even = !(y & 1);
    Eigen::MatrixXcd& blk = y_even ? blk_even_to_odd : blk_odd_to_even;
    int col_pos = pos_of_site[y + g.L];
    int row_up = 2 * pos_of_site[yp + g.L];      // (yp, up) in the opposite sector
    int row_dn = 2 * pos_of_site[ym + g.L] + 1;  // (ym, dn)
    for (int cc = 0; cc < 2; ++cc) {
      blk(row_up, sec_idx(even_sites, col_pos, cc)) = cm(0, cc);
      blk(row_dn, sec_idx(even_sites, col_pos, cc)) = cm(1, cc);
    }
  }

  // even-sector double-step unitary and its Hermitian part
  Eigen::MatrixXcd gmat = blk_odd_to_even * blk_even_to_odd;
  Eigen::MatrixXcd h = gmat + gmat.adjoint();
  Eigen::VectorXd d;
  hermitian_eig(h, d);  // h now holds the eigenvectors
  Eigen::MatrixXcd gw = gmat * h;  // batched for the per-cluster restrictions

  // split each near-degenerate Hermitian cluster with the sector unitary
  struct SectorPair {
    cplx ev;                 // e^{2 i theta}
    Eigen::VectorXcd vec;    // even-sector eigenvector
  };
  std::vector<SectorPair> sector;
  sector.reserve(m);
  const double cluster_tol = 1e-8;
  for (int lo = 0; lo < m;) {
    int hi = lo + 1;
    while (hi < m && d[hi] - d[hi - 1] < cluster_tol) ++hi;
    int k = hi - lo;
    Eigen::MatrixXcd wc = h.middleCols(lo, k);
    Eigen::MatrixXcd sub = wc.adjoint() * gw.middleCols(lo, k);
    // Schur of the (normal) cluster block: unitary basis even under exact
    // eigenvalue degeneracy, diagonal T up to rounding
    Eigen::ComplexSchur<Eigen::MatrixXcd> schur(sub);
    if (schur.info() != Eigen::Success)
      throw std::runtime_error("full_spectrum: cluster eigensolver failed");
    const Eigen::MatrixXcd& t = schur.matrixT();
    for (int j = 0; j < k; ++j)
      for (int i = 0; i < j; ++i)
        if (std::abs(t(i, j)) > 1e-8)
          throw std::runtime_error("full_spectrum: cluster block not normal");
    Eigen::MatrixXcd vs = wc * schur.matrixU();
    for (int j = 0; j < k; ++j) {
      cplx ev = t(j, j);
      sector.push_back({ev / std::abs(ev), vs.col(j)});
    }
    lo = hi;
  }

  // lift: each sector pair (e^{2 i theta}, a) gives U-eigenpairs at theta and
  // theta+pi with vector (a, +-e^{-i theta} C_blk a)/sqrt(2)
  SpectralData sd;
  sd.grid = g;
  sd.coin = c;
  sd.band_cos = std::abs(c.beta_inf);
  sd.angles.resize(n);
  sd.vectors.resize(n, n);

  std::vector<std::pair<double, int>> order(n);
  Eigen::MatrixXcd raw(n, n);
  // batch the even -> odd lifts into one product
  Eigen::MatrixXcd sector_mat(m, m);
  for (int j = 0; j < m; ++j) sector_mat.col(j) = sector[j].vec;
  Eigen::MatrixXcd odd_mat = blk_even_to_odd * sector_mat;
  sector_mat.resize(0, 0);
  for (int j = 0; j < m; ++j) {
    double theta0 = 0.5 * std::arg(sector[j].ev);  // in (-pi/2, pi/2]
    Eigen::VectorXcd odd_part = odd_mat.col(j);
    for (int rt = 0; rt < 2; ++rt) {
      double theta = wrap_angle(theta0 + rt * M_PI);
      cplx ph = std::polar(1.0 / std::sqrt(2.0), -theta);
      Eigen::VectorXcd full = Eigen::VectorXcd::Zero(n);
      for (int k = 0; k < ns; ++k) {
        int x = even_sites[k];
        full[g.idx(x, 0)] = sector[j].vec[2 * k] / std::sqrt(2.0);
        full[g.idx(x, 1)] = sector[j].vec[2 * k + 1] / std::sqrt(2.0);
      }
      for (int k = 0; k < ns; ++k) {
        int x = odd_sites[k];
        full[g.idx(x, 0)] = ph * odd_part[2 * k];
        full[g.idx(x, 1)] = ph * odd_part[2 * k + 1];
      }
      int col = 2 * j + rt;
      raw.col(col) = full;
      order[col] = {theta, col};
    }
  }
  std::sort(order.begin(), order.end());
  for (int j = 0; j < n; ++j) {
    sd.angles[j] = order[j].first;
    sd.vectors.col(j) = raw.col(order[j].second);
    phase_fix(sd.vectors.col(j));
  }

  // classification
  sd.localization_mass.resize(n);
  sd.gap_margin.resize(n);
  int half = g.L / 2;
  for (int j = 0; j < n; ++j) {
    double mass = 0.0;
    for (int x = -half; x <= std::min(half, g.L - 1); ++x) {
      mass += std::norm(sd.vectors(g.idx(x, 0), j)) + std::norm(sd.vectors(g.idx(x, 1), j));
    }
    sd.localization_mass[j] = mass;
    sd.gap_margin[j] = std::abs(std::cos(sd.angles[j])) - sd.band_cos;
    if (sd.gap_margin[j] > 0 && mass >= 0.99) sd.discrete_indices.push_back(j);
  }
  double edge = std::acos(std::min(1.0, sd.band_cos));
  sd.band_edges = {wrap_angle(edge), wrap_angle(M_PI - edge), wrap_angle(M_PI + edge),
                   wrap_angle(-edge)};
  std::sort(sd.band_edges.begin(), sd.band_edges.end());

  // polish the discrete pairs: one resolvent-Newton step turns the cluster
  // splitting error (~1e-11 at large L) into a rounding-level residual
  for (int j : sd.discrete_indices) {
    for (int sweep = 0; sweep < 2; ++sweep) {
      Eigen::VectorXcd v = sd.vectors.col(j);
      Eigen::VectorXcd uv = apply_U(c, SpinorField(g, v)).v;
      cplx rayleigh = v.dot(uv);  // (v, Uv) with conj on v
      double ang = std::arg(rayleigh);
      Eigen::VectorXcd resid = uv - std::polar(1.0, ang) * v;
      Eigen::VectorXcd coef = sd.vectors.adjoint() * resid;
      cplx elam = std::polar(1.0, ang);
      for (int k = 0; k < n; ++k) {
        if (k == j)
          coef[k] = 0.0;
        else
          coef[k] /= (std::polar(1.0, sd.angles[k]) - elam);
      }
      v -= sd.vectors * coef;
      v /= v.norm();
      sd.vectors.col(j) = v;
      sd.angles[j] = wrap_angle(ang);
    }
    phase_fix(sd.vectors.col(j));
  }
  // residual spot check: discrete columns plus a deterministic sample
  double worst = 0.0;
  auto column_residual = [&](int j) {
    SpinorField v(g, sd.vectors.col(j));
    SpinorField uv = apply_U(c, v);
    return (uv.v - std::polar(1.0, sd.angles[j]) * v.v).norm();
  };
  for (int j : sd.discrete_indices) worst = std::max(worst, column_residual(j));
  for (int j = 0; j < n; j += std::max(1, n / 16)) worst = std::max(worst, column_residual(j));
  sd.max_residual_sampled = worst;

  // selected plus-branch eigenpair and its chiral mirror
  for (int j : sd.discrete_indices) {
    if (std::cos(sd.angles[j]) > sd.band_cos) {
      if (sd.plus_index < 0 || sd.gap_margin[j] > sd.gap_margin[sd.plus_index]) sd.plus_index = j;
    }
  }
  if (sd.plus_index >= 0) {
    double target = wrap_angle(sd.angles[sd.plus_index] + M_PI);
    double best = 1e9;
    for (int j : sd.discrete_indices) {
      double dist = std::abs(wrap_angle(sd.angles[j] - target + M_PI) - M_PI);
      if (std::cos(sd.angles[j]) < -sd.band_cos && dist < best) {
        best = dist;
        sd.minus_index = j;
      }
    }
    sd.lambda_plus = sd.angles[sd.plus_index];
    sd.phi = SpinorField(g, sd.vectors.col(sd.plus_index));
    SpinorField pp = proj_pm(sd.phi, Sign::plus);
    double nn = pp.norm();
    if (nn > 0) pp.v /= nn;
    sd.phi_plus = pp;
  }
  return sd;
}

std::pair<double, SpinorField> discrete_eigenpair(const SpectralData& sd, Branch b) {
  if (sd.discrete_indices.empty())
    throw std::runtime_error("discrete_eigenpair: no discrete spectrum found");
  int idx = (b == Branch::plus) ? sd.plus_index : sd.minus_index;
  if (idx < 0) throw std::runtime_error("discrete_eigenpair: requested branch missing");
  return {sd.angles[idx], SpinorField(sd.grid, sd.vectors.col(idx))};
}

double decay_rate(double lambda, double alpha_inf_abs) {
  double b = std::sqrt(1.0 - alpha_inf_abs * alpha_inf_abs);
  double ratio = std::cos(lambda) / b;
  if (!(ratio > 1.0))
    throw std::domain_error("decay_rate: cos(lambda) <= sqrt(1-|alpha_inf|^2), lambda not in gap");
  return std::acosh(ratio);
}

Eigen::Matrix2cd transfer_matrix(const CoinField& c, double lambda, int x) {
  int i = c.grid.idx(c.grid.wrap(x), 0) / 2;
  cplx a = c.alpha[i];
  double th = c.theta[i];
  double na = std::norm(a);
  if (na >= 1.0) throw std::domain_error("transfer_matrix: |alpha(x)| must be < 1");
  double scale = 1.0 / std::sqrt(1.0 - na);
  Eigen::Matrix2cd t;
  cplx e = std::polar(1.0, lambda - th);
  t << e, a, std::conj(a), std::conj(e);
  return scale * t;
}

std::pair<Eigen::Vector2cd, Eigen::Vector2cd> transfer_asymptotic_eigvecs(const CoinField& c,
                                                                          double lambda) {
  double b = std::sqrt(1.0 - std::norm(c.alpha_inf));
  double xi = decay_rate(lambda, std::abs(c.alpha_inf));
  cplx elam = std::polar(1.0, lambda);
  Eigen::Vector2cd plus(c.alpha_inf, b * std::exp(xi) - elam);
  Eigen::Vector2cd minus(c.alpha_inf, b * std::exp(-xi) - elam);
  return {plus, minus};
}

DecayingSolution decaying_solution(const CoinField& c, double lambda, int x0, int x_max,
                                   double tol, int max_iter) {
  for (int x = x0; x <= x_max; ++x) {
    int i = c.grid.idx(c.grid.wrap(x), 0) / 2;
    if (std::abs(c.beta[i].imag()) > 1e-12 || c.beta[i].real() <= 0.0)
      throw std::invalid_argument("decaying_solution: requires beta(x) real positive");
  }
  double xi = decay_rate(lambda, std::abs(c.alpha_inf));
  auto [vp, vm] = transfer_asymptotic_eigvecs(c, lambda);
  Eigen::Matrix2cd pmat;
  pmat << vp[0], vm[0], vp[1], vm[1];
  Eigen::Matrix2cd pinv = pmat.inverse();
  Eigen::Matrix2cd tinf;
  {
    double b = std::sqrt(1.0 - std::norm(c.alpha_inf));
    cplx e = std::polar(1.0, lambda);
    tinf << e, c.alpha_inf, std::conj(c.alpha_inf), std::conj(e);
    tinf /= b;
  }

  // K(y) = P^{-1} (T(y) - Tinf) P, conjugated by the single-step scaling;
  // the iteration runs in the X-norm coordinates (e^{2 xi x} w_up, w_dn),
  // so no x-sized exponential is ever formed.
  int len = x_max - x0 + 1;
  std::vector<Eigen::Matrix2cd> k(len);
  double tail = 0.0;
  double em = std::exp(-xi), ep = std::exp(xi);
  for (int x = x0; x <= x_max; ++x) {
    Eigen::Matrix2cd v0 = pinv * (transfer_matrix(c, lambda, x) - tinf) * pmat;
    Eigen::Matrix2cd kk;
    kk << em * v0(0, 0), em * v0(0, 1), ep * v0(1, 0), ep * v0(1, 1);
    k[x - x0] = kk;
    tail += kk.cwiseAbs().sum();
  }
  if (tail >= 0.5)
    throw std::runtime_error("decaying_solution: tail l1 smallness check failed (x0 too small)");

  DecayingSolution out;
  out.x0 = x0;
  out.xi = xi;
  out.tail_v_l1 = tail;
  std::vector<Eigen::Vector2cd> w(len, Eigen::Vector2cd(0.0, 1.0));
  std::vector<Eigen::Vector2cd> wn(len);
  double decay2 = std::exp(-2.0 * xi);
  int it = 0;
  for (; it < max_iter; ++it) {
    // wn_up(x) = -sum_{y>=x} e^{-2 xi (y-x)} (K w)_up(y);  wn_dn(x) = 1 - sum_{y>=x} (K w)_dn(y)
    cplx acc_up = 0.0, acc_dn = 0.0;
    for (int j = len - 1; j >= 0; --j) {
      Eigen::Vector2cd kw = k[j] * w[j];
      acc_up = decay2 * acc_up + kw[0];  // note: recurrence applies the weight per step
      acc_dn += kw[1];
      wn[j] = Eigen::Vector2cd(-acc_up, 1.0 - acc_dn);
    }
    double diff = 0.0;
    for (int j = 0; j < len; ++j) diff = std::max(diff, (wn[j] - w[j]).cwiseAbs().sum());
    std::swap(w, wn);
    if (diff < tol) break;
  }
  if (it >= max_iter) throw std::runtime_error("decaying_solution: fixed point did not converge");
  out.iterations = it + 1;
  out.w_scaled = w;
  out.psi.resize(len);
  for (int j = 0; j < len; ++j) {
    // psi(x) = e^{-xi x} (w_up~ phi_+ + w_dn~ phi_-); the overall e^{-xi x0}
    // scale is kept so the slope check sees the true decay
    double s = std::exp(-xi * double(x0 + j));
    out.psi[j] = s * (w[j][0] * vp + w[j][1] * vm);
  }
  return out;
}

SpinorField Pc(const SpectralData& sd, const SpinorField& u) {
  if (sd.plus_index < 0) throw std::runtime_error("Pc: phi_plus unavailable");
  cplx ov = inner(u, sd.phi_plus);
  SpinorField r(u.grid);
  r.v = u.v - ov * sd.phi_plus.v;
  return r;
}

SpinorField Pc_discrete(const SpectralData& sd, const SpinorField& u) {
  SpinorField r = u;
  for (int j : sd.discrete_indices) {
    SpinorField e(sd.grid, sd.vectors.col(j));
    cplx ov = inner(r, e);
    r.v -= ov * e.v;
  }
  return r;
}

SpinorField resolvent_solve(const SpectralData& sd, cplx mu, const SpinorField& f,
                            ResolventMode mode) {
  if (f.grid != sd.grid) throw std::invalid_argument("resolvent_solve: grid mismatch");
  const int n = sd.grid.dim();
  Eigen::VectorXcd coef = sd.vectors.adjoint() * f.v;
  if (mode == ResolventMode::off_phi) {
    double lam = mu.real();
    if (std::abs(mu.imag()) > 1e-14)
      throw std::invalid_argument("resolvent_solve(off_phi): mu must be a real angle");
    // locate the discrete angle we are excluding
    int excl = -1;
    double best = 1e9;
    for (int j : sd.discrete_indices) {
      double dist = std::abs(std::remainder(sd.angles[j] - lam, 2.0 * M_PI));
      if (dist < best) {
        best = dist;
        excl = j;
      }
    }
    if (excl < 0 || best > 1e-8)
      throw std::invalid_argument("resolvent_solve(off_phi): mu is not a discrete eigenangle");
    cplx elam = std::polar(1.0, lam);
    for (int j = 0; j < n; ++j) {
      if (j == excl) {
        coef[j] = 0.0;
      } else {
        coef[j] /= (std::polar(1.0, sd.angles[j]) - elam);
      }
    }
  } else {
    cplx emu = std::exp(cplx(0, 1) * mu);  // e^{i mu}; |e^{-i mu}| = e^{Im mu}
    cplx emu_inv = 1.0 / emu;
    bool on_circle = std::abs(mu.imag()) < 1e-14;
    for (int j = 0; j < n; ++j) {
      cplx den = std::polar(1.0, sd.angles[j]) * emu_inv - 1.0;
      if (on_circle && std::abs(den) < 1e-10)
        throw std::runtime_error("resolvent_solve(full): mu within 1e-10 of an eigenphase");
      coef[j] /= den;
    }
  }
  return SpinorField(sd.grid, sd.vectors * coef);
}

}  // namespace nlqw
