#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>

#include "nlqw/rng.hpp"
#include "nlqw/spectral.hpp"

using namespace nlqw;

namespace {
const double kKappa = 0.6435, kKappa0 = 1.2;

double circ_dist(double a, double b) { return std::abs(std::remainder(a - b, 2.0 * M_PI)); }

double fit_slope(const std::vector<double>& xs, const std::vector<double>& ys) {
  double n = double(xs.size()), sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}
}  // namespace

TEST_CASE("identity coin: spectrum of the bare shift") {
  LatticeGrid g(8);
  SpectralData sd = full_spectrum(make_identity_coin(g));
  // S is two independent cyclic shifts of 2L sites: phases 2 pi k / (2L), each twice
  std::vector<double> expect;
  for (int k = 0; k < g.sites(); ++k) {
    double a = 2.0 * M_PI * k / g.sites();
    expect.push_back(a);
    expect.push_back(a);
  }
  std::sort(expect.begin(), expect.end());
  REQUIRE(size_t(sd.angles.size()) == expect.size());
  for (int j = 0; j < sd.angles.size(); ++j) {
    double d = circ_dist(sd.angles[j], expect[j]);
    CHECK(d < 1e-12);
  }
}

TEST_CASE("kls-origin preset carries exactly two discrete eigenvalues") {
  LatticeGrid g(256);
  CoinField c = make_kls_origin(g, kKappa, kKappa0);
  SpectralData sd = full_spectrum(c);
  CHECK(sd.discrete_indices.size() == 2);
  REQUIRE(sd.plus_index >= 0);
  REQUIRE(sd.minus_index >= 0);
  CHECK(sd.max_residual_sampled < 1e-10);  // band-edge clusters split to ~1e-11
  // the discrete pair is polished to rounding
  for (int j : sd.discrete_indices) {
    SpinorField v(g, sd.vectors.col(j));
    SpinorField uv = apply_U(c, v);
    uv.v -= std::polar(1.0, sd.angles[j]) * v.v;
    CHECK(uv.norm() < 1e-13);
  }
  // basis orthonormality within the spec tolerance
  Eigen::MatrixXcd vhv = sd.vectors.adjoint() * sd.vectors;
  CHECK((vhv - Eigen::MatrixXcd::Identity(g.dim(), g.dim())).cwiseAbs().maxCoeff() < 1e-10);

  Eigen::MatrixXcd um = dense_U(c);
  CHECK((um.adjoint() * um - Eigen::MatrixXcd::Identity(g.dim(), g.dim())).cwiseAbs().maxCoeff() <
        1e-13);

  // chiral pairing of the discrete pair
  auto [lp, phip] = discrete_eigenpair(sd, Branch::plus);
  auto [lm, phim] = discrete_eigenpair(sd, Branch::minus);
  CHECK(circ_dist(lm, lp + M_PI) < 1e-9);
  CHECK(std::abs(std::abs(inner(phim, zigzag(phip))) - 1.0) < 1e-9);

  // eigenpair residual and simplicity
  SpinorField r = apply_U(c, phip);
  r.v -= std::polar(1.0, lp) * phip.v;
  CHECK(r.norm() < 1e-10);
  int count_at_lp = 0;
  for (int j = 0; j < sd.angles.size(); ++j)
    if (circ_dist(sd.angles[j], lp) < 1e-9) ++count_at_lp;
  CHECK(count_at_lp == 1);

  // localization guard: mass beyond |x| > L/2 below the gross truncation bound
  double xi = decay_rate(lp, std::abs(c.alpha_inf));
  double outer = 0.0;
  for (int x = -g.L; x < g.L; ++x)
    if (std::abs(x) > g.L / 2) outer += phip.site_norm(x) * phip.site_norm(x);
  // gross truncation guard; the eigensolver noise floor takes over once the
  // analytic bound drops below rounding
  CHECK(std::sqrt(outer) <= std::max(std::exp(-xi * g.L / 4.0), 1e-12));
}

TEST_CASE("essential band description covers the free spectrum") {
  // the band {|cos angle| <= |beta_inf|} must hold for every eigenphase of
  // the unperturbed walk (no discrete states there)
  LatticeGrid g(64);
  SpectralData sd = full_spectrum(make_free_coin(g, kKappa));
  CHECK(sd.discrete_indices.empty());
  for (int j = 0; j < sd.angles.size(); ++j)
    CHECK(std::abs(std::cos(sd.angles[j])) <= sd.band_cos + 1e-9);
}

TEST_CASE("decay rate formula") {
  // frozen oracle value: acosh(0.9 / 0.8) = acosh(1.125)
  CHECK(decay_rate(std::acos(0.9), 0.6) == doctest::Approx(0.49493292309452691).epsilon(1e-12));
  // band-edge limit
  CHECK(decay_rate(std::acos(0.8 + 1e-12), 0.6) < 2e-6);
  CHECK_THROWS_AS(decay_rate(std::acos(0.5), 0.6), std::domain_error);
  // monotone increasing in cos(lambda) on a grid of 100 points
  double prev = 0.0;
  for (int k = 1; k <= 100; ++k) {
    double cl = 0.8 + 0.2 * k / 101.0;
    double xi = decay_rate(std::acos(cl), 0.6);
    CHECK(xi > prev);
    prev = xi;
  }
}

TEST_CASE("eigenfunction decays at the analytic rate") {
  LatticeGrid g(256);
  CoinField c = make_kls_origin(g, kKappa, kKappa0);
  SpectralData sd = full_spectrum(c);
  auto [lp, phi] = discrete_eigenpair(sd, Branch::plus);
  double xi = decay_rate(lp, std::abs(c.alpha_inf));
  std::vector<double> xs, ys;
  for (int x = 8; x <= 40; ++x) {
    double n = phi.site_norm(x);
    REQUIRE(n > 0);
    xs.push_back(x);
    ys.push_back(std::log(n));
  }
  double slope = fit_slope(xs, ys);
  CHECK(std::abs(-slope - xi) < 0.01 * xi);
}

TEST_CASE("transfer matrix structure") {
  LatticeGrid g(16);
  CoinField c = make_kls_window(g, kKappa, 0.5, 1.5);
  CounterRng rng(3, 0);
  for (int k = 0; k < 5; ++k) {
    double lam = rng.next_double() * 2 * M_PI;
    int x = int(rng.next_u64() % 32) - 16;
    Eigen::Matrix2cd t = transfer_matrix(c, lam, x);
    CHECK(std::abs(t.determinant() - cplx(1.0)) < 1e-14);
    CHECK(std::abs(t(1, 0) - std::conj(t(0, 1))) < 1e-15);
  }
  // asymptotic eigenvectors belong to e^{+-xi}
  double lam = std::acos(0.9);
  CoinField cf = make_free_coin(g, std::asin(0.6));
  double xi = decay_rate(lam, 0.6);
  auto [vp, vm] = transfer_asymptotic_eigvecs(cf, lam);
  Eigen::Matrix2cd tinf = transfer_matrix(cf, lam, 5);  // free coin: same everywhere
  CHECK((tinf * vp - std::exp(xi) * vp).norm() < 1e-12 * vp.norm());
  CHECK((tinf * vm - std::exp(-xi) * vm).norm() < 1e-12 * vm.norm());
}

TEST_CASE("decaying solution: free tail and dense-eigenfunction match") {
  // unperturbed coin: V = 0, w stays (0,1), psi(x) = e^{-xi x} phi_-
  LatticeGrid g(64);
  CoinField cf = make_free_coin(g, std::asin(0.6));
  double lam = std::acos(0.9);
  DecayingSolution free_sol = decaying_solution(cf, lam, 2, 40);
  CHECK(free_sol.iterations <= 2);
  auto [vp, vm] = transfer_asymptotic_eigvecs(cf, lam);
  for (size_t j = 0; j < free_sol.psi.size(); ++j) {
    Eigen::Vector2cd expect = std::exp(-free_sol.xi * double(2 + int(j))) * vm;
    CHECK((free_sol.psi[j] - expect).norm() < 1e-12 * expect.norm());
  }

  // window preset: nontrivial V; psi matches the dense eigenfunction up to one
  // complex scalar on the overlap window
  LatticeGrid g2(256);
  CoinField c = make_kls_window(g2, kKappa, 0.5, 1.5);
  SpectralData sd = full_spectrum(c);
  auto [lp, phi] = discrete_eigenpair(sd, Branch::plus);
  int x0 = 4, xmax = 40;
  DecayingSolution sol = decaying_solution(c, lp, x0, xmax);
  CHECK(sol.tail_v_l1 < 0.5);
  std::vector<Eigen::Vector2cd> dense;
  for (int x = x0; x <= xmax; ++x) dense.push_back({phi.dn(x - 1), phi.up(x)});
  cplx num = 0.0, den = 0.0;
  for (size_t j = 0; j < dense.size(); ++j) {
    num += sol.psi[j].dot(dense[j]);
    den += sol.psi[j].dot(sol.psi[j]);
  }
  cplx scale = num / den;
  double dev = 0.0, ref = 0.0;
  for (size_t j = 0; j < dense.size(); ++j) {
    dev += (dense[j] - scale * sol.psi[j]).squaredNorm();
    ref += dense[j].squaredNorm();
  }
  CHECK(std::sqrt(dev / ref) < 1e-6);

  // slope of log ||psi|| equals -xi within 1%
  std::vector<double> xs, ys;
  for (size_t j = 0; j < sol.psi.size(); ++j) {
    xs.push_back(double(x0 + int(j)));
    ys.push_back(std::log(sol.psi[j].norm()));
  }
  double slope = fit_slope(xs, ys);
  CHECK(std::abs(-slope - sol.xi) < 0.01 * sol.xi);

  // tail smallness guard trips when x0 sits inside the perturbation
  CHECK_THROWS(decaying_solution(c, lp, -30, 40));
}

TEST_CASE("continuous projection P_c") {
  LatticeGrid g(64);
  CoinField c = make_kls_origin(g, kKappa, kKappa0);
  SpectralData sd = full_spectrum(c);
  CHECK(Pc(sd, sd.phi_plus).norm() < 1e-12);
  SpinorField u = random_field(g, 12, 0);
  SpinorField once = Pc(sd, u);
  CHECK((Pc(sd, once).v - once.v).norm() < 1e-13 * u.norm());
  CHECK(once.norm() <= u.norm() * (1 + 1e-15));
}

TEST_CASE("resolvent solves") {
  LatticeGrid g(64);
  CoinField c = make_kls_origin(g, kKappa, kKappa0);
  SpectralData sd = full_spectrum(c);
  auto [lp, phi] = discrete_eigenpair(sd, Branch::plus);

  SpinorField zero_h = resolvent_solve(sd, cplx(lp), phi, ResolventMode::off_phi);
  CHECK(zero_h.norm() < 1e-12);
  SpinorField f = random_field(g, 13, 0);
  SpinorField h = resolvent_solve(sd, cplx(lp), f, ResolventMode::off_phi);
  SpinorField lhs = apply_U(c, h);
  lhs.v -= std::polar(1.0, lp) * h.v;
  SpinorField ptc = f;
  ptc.v -= inner(f, phi) * phi.v;
  CHECK((lhs.v - ptc.v).norm() < 1e-10 * f.norm());
  CHECK(std::abs(inner(h, phi)) < 1e-12 * h.norm());

  cplx mu(1.0, 0.05);
  SpinorField h2 = resolvent_solve(sd, mu, f, ResolventMode::full);
  SpinorField lhs2 = apply_U(c, h2);
  lhs2.v = lhs2.v * std::exp(cplx(0, -1) * mu) - h2.v;
  CHECK((lhs2.v - f.v).norm() < 1e-10 * f.norm());
  CHECK_THROWS(resolvent_solve(sd, cplx(sd.angles[7]), f, ResolventMode::full));

  // KSU.4.4 on the walk: R(l+ie) - R(l-ie) = (1-e^{-2e}) R(l-ie)^* R(l-ie)
  for (double eps : {0.1, 0.01}) {
    double lam0 = 0.7;
    SpinorField a = resolvent_solve(sd, cplx(lam0, eps), f, ResolventMode::full);
    SpinorField b = resolvent_solve(sd, cplx(lam0, -eps), f, ResolventMode::full);
    Eigen::VectorXcd coef = sd.vectors.adjoint() * b.v;
    cplx emu_inv = std::exp(cplx(0, -1) * cplx(lam0, -eps));
    for (int j = 0; j < coef.size(); ++j)
      coef[j] /= std::conj(std::polar(1.0, sd.angles[j]) * emu_inv - 1.0);
    Eigen::VectorXcd rhs = (1.0 - std::exp(-2.0 * eps)) * (sd.vectors * coef);
    CHECK((a.v - b.v - rhs).norm() < 1e-10 * f.norm());
  }
}
