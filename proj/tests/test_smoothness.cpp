#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "nlqw/smoothness.hpp"

using namespace nlqw;

namespace {
int tail_horizon(double eps) { return int(std::ceil(10.0 * std::log(10.0) / eps)) + 1; }

Eigen::VectorXcd test_vector(int n, uint64_t seed) {
  Eigen::MatrixXcd q = haar_unitary(n, seed);
  return q.col(0);
}
}  // namespace

TEST_CASE("eig_unitary reproduces the matrix") {
  Eigen::MatrixXcd u = haar_unitary(8, 5);
  UnitaryEig ue = eig_unitary(u);
  Eigen::VectorXcd ph(8);
  for (int j = 0; j < 8; ++j) ph[j] = std::polar(1.0, ue.angles[j]);
  Eigen::MatrixXcd rebuilt = ue.v * ph.asDiagonal() * ue.v.adjoint();
  CHECK((rebuilt - u).cwiseAbs().maxCoeff() < 1e-13);
  CHECK((ue.v.adjoint() * ue.v - Eigen::MatrixXcd::Identity(8, 8)).cwiseAbs().maxCoeff() < 1e-13);
  Eigen::MatrixXcd notunitary = Eigen::MatrixXcd::Random(6, 6);
  CHECK_THROWS(eig_unitary(notunitary));
}

TEST_CASE("time quantity: closed form and degenerate weights") {
  double eps = 0.05;
  int T = tail_horizon(eps);
  Eigen::MatrixXcd u = haar_unitary(6, 7);
  Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(6, 6);
  Eigen::VectorXcd phi = test_vector(6, 8);
  // A = identity: sum e^{-2 eps |t|} ||phi||^2 = coth(eps) (geometric series)
  double expect = (1.0 + std::exp(-2.0 * eps)) / (1.0 - std::exp(-2.0 * eps));
  CHECK(qty_time(id, u, phi, eps, T) == doctest::Approx(expect).epsilon(1e-10));
  CHECK(qty_time(0.0 * id, u, phi, eps, T) == 0.0);
  CHECK_THROWS(qty_time(id, u, phi, eps, 10));  // tail rule violated
}

TEST_CASE("Plancherel: qty_time equals qty_resolvent") {
  double eps = 0.05;
  int T = tail_horizon(eps);
  int m = 4 * (T + 1);
  Eigen::MatrixXcd u = haar_unitary(8, 11);
  UnitaryEig ue = eig_unitary(u);
  Eigen::VectorXcd phi = test_vector(8, 12);
  Eigen::VectorXd w(8);
  for (int i = 0; i < 8; ++i) w[i] = 0.2 + 0.1 * i;
  Eigen::MatrixXcd a = w.asDiagonal();
  double q1 = qty_time(a, u, phi, eps, T);
  double q2 = qty_resolvent(a, ue, phi, eps, m);
  CHECK(std::abs(q1 - q2) < 1e-10 * std::max(q1, q2));

  // scalar closed form: U = e^{i theta0} on C^1, A = 1
  Eigen::MatrixXcd us(1, 1);
  us(0, 0) = std::polar(1.0, 0.83);
  UnitaryEig use = eig_unitary(us);
  Eigen::MatrixXcd a1 = Eigen::MatrixXcd::Identity(1, 1);
  Eigen::VectorXcd p1 = Eigen::VectorXcd::Ones(1);
  double closed = 1.0 / (std::exp(2 * eps) - 1.0) + 1.0 / (1.0 - std::exp(-2 * eps));
  CHECK(qty_resolvent(a1, use, p1, eps, m) == doctest::Approx(closed).epsilon(1e-12));
}

TEST_CASE("sup-resolvent quantity: positivity, self-adjointness, domination") {
  Eigen::MatrixXcd u = haar_unitary(8, 13);
  UnitaryEig ue = eig_unitary(u);
  Eigen::MatrixXcd a = 0.7 * haar_unitary(8, 14);
  std::vector<double> lam_grid;
  for (int k = 0; k < 64; ++k) lam_grid.push_back(2 * M_PI * k / 64);
  auto rep = qty_sup_resolvent(a, ue, {0.1, 0.01}, lam_grid);
  CHECK(rep.selfadjoint_defect < 1e-12);
  CHECK(rep.min_eigenvalue >= -1e-12);

  // domination of the Plancherel quantity: qty_time <= qty3 ||phi||^2
  double eps = 0.1;
  int T = tail_horizon(eps);
  Eigen::VectorXcd phi = test_vector(8, 15);
  double q1 = qty_time(a, u, phi, eps, T);
  CHECK(q1 <= rep.value * 1.0001);

  // triangle bound against the sufficient condition (same grid)
  std::vector<cplx> mu_grid;
  for (double l : lam_grid) {
    for (double e : {0.1, 0.01}) {
      mu_grid.push_back(cplx(l, e));
      mu_grid.push_back(cplx(l, -e));
    }
  }
  double suff = kato_sufficient(a, ue, mu_grid);
  CHECK(rep.value <= suff / M_PI + 1e-12);
  CHECK(kato_sufficient(0.0 * a, ue, mu_grid) == 0.0);
}

TEST_CASE("interval quantity documents the finite-dimensional divergence") {
  Eigen::MatrixXcd us(1, 1);
  us(0, 0) = std::polar(1.0, 1.5);
  UnitaryEig use = eig_unitary(us);
  Eigen::MatrixXcd a1 = Eigen::MatrixXcd::Identity(1, 1);
  double floor1 = 0.1;
  CHECK(qty_interval(a1, use, floor1, 64, 1) == doctest::Approx(1.0 / floor1).epsilon(1e-12));
  CHECK(qty_interval(0.0 * a1, use, floor1) == 0.0);
  // shrinking the width floor grows the supremum (divergence the cap guards)
  Eigen::MatrixXcd u = haar_unitary(8, 16);
  UnitaryEig ue = eig_unitary(u);
  Eigen::MatrixXcd a = 0.5 * haar_unitary(8, 17);
  double v1 = qty_interval(a, ue, 0.2, 64, 1);
  double v2 = qty_interval(a, ue, 0.05, 64, 1);
  double v3 = qty_interval(a, ue, 0.0125, 64, 1);
  CHECK(v2 >= v1);
  CHECK(v3 >= v2);
}

TEST_CASE("Stone projection: eigenprojection, empty interval, full circle, endpoint") {
  Eigen::MatrixXcd u = haar_unitary(4, 19);
  UnitaryEig ue = eig_unitary(u);
  std::vector<double> eps_seq = {0.1, 0.03, 0.01, 0.003};

  // interval around exactly one eigenphase, endpoints clear of the spectrum
  double target = ue.angles[1];
  double clearance = 0.25;
  for (int j = 0; j < 4; ++j) {
    if (j == 1) continue;
    double d = std::abs(std::remainder(ue.angles[j] - target, 2 * M_PI));
    clearance = std::min(clearance, d / 2);
  }
  REQUIRE(clearance > 10 * eps_seq.back());
  double a = target - clearance, b = target + clearance;
  Eigen::MatrixXcd s = stone_projection(ue, a, b, eps_seq);
  Eigen::MatrixXcd proj = ue.v.col(1) * ue.v.col(1).adjoint();
  CHECK((s - proj).cwiseAbs().maxCoeff() < 1e-6);

  // quadrature versus the Abel-summed series oracle at one eps
  Eigen::MatrixXcd si = stone_integral(ue, a, b, 0.01);
  for (int j = 0; j < 4; ++j) {
    double diag = std::real((ue.v.col(j).adjoint() * si * ue.v.col(j))(0));
    CHECK(diag == doctest::Approx(indicator_series(a, b, ue.angles[j], 0.01)).epsilon(1e-8));
  }

  // empty interval (middle of the widest spectral gap) -> 0; full circle -> identity
  {
    std::vector<double> sorted(ue.angles.data(), ue.angles.data() + 4);
    std::sort(sorted.begin(), sorted.end());
    double best_gap = 0.0, gap_lo = 0.0;
    for (int j = 0; j < 4; ++j) {
      double lo = sorted[j];
      double hi = (j + 1 < 4) ? sorted[j + 1] : sorted[0] + 2 * M_PI;
      if (hi - lo > best_gap) {
        best_gap = hi - lo;
        gap_lo = lo;
      }
    }
    REQUIRE(best_gap > 0.3);
    Eigen::MatrixXcd s0 =
        stone_projection(ue, gap_lo + 0.45 * best_gap, gap_lo + 0.55 * best_gap, eps_seq);
    CHECK(s0.cwiseAbs().maxCoeff() < 1e-6);
  }
  Eigen::MatrixXcd sfull = stone_projection(ue, 0.0, 2.0 * M_PI, eps_seq);
  CHECK((sfull - Eigen::MatrixXcd::Identity(4, 4)).cwiseAbs().maxCoeff() < 1e-6);

  // eigenphase exactly at an endpoint carries weight 1/2
  Eigen::MatrixXcd send = stone_projection(ue, target, target + 0.2, eps_seq);
  double wgt = std::real((ue.v.col(1).adjoint() * send * ue.v.col(1))(0));
  CHECK(std::abs(wgt - 0.5) < 0.02);
}

TEST_CASE("Fourier identities") {
  double eps = 0.05;
  int T = tail_horizon(eps);
  int m = 128;

  // U = identity: geometric sums collapse; horizon extended so the truncated
  // tail sits below the 1e-12 target
  Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(2, 2);
  UnitaryEig ide = eig_unitary(id);
  Eigen::VectorXcd phi2(2);
  phi2 << cplx(0.6, 0.1), cplx(-0.2, 0.7);
  int t_long = int(std::ceil(15.0 * std::log(10.0) / eps)) + 1;
  auto fc_id = fourier_identities_check(id, ide, phi2, eps, t_long, m);
  CHECK(fc_id.resid_two_sided < 1e-12);
  CHECK(fc_id.resid_one_sided_minus < 1e-12);
  CHECK(fc_id.resid_one_sided_plus < 1e-12);

  // phi = 0
  auto fc_zero = fourier_identities_check(id, ide, Eigen::VectorXcd::Zero(2), eps, T, m);
  CHECK(fc_zero.resid_two_sided == 0.0);

  // random 8x8
  Eigen::MatrixXcd u = haar_unitary(8, 23);
  UnitaryEig ue = eig_unitary(u);
  Eigen::MatrixXcd a = 0.8 * haar_unitary(8, 24);
  Eigen::VectorXcd phi = test_vector(8, 25);
  auto fc = fourier_identities_check(a, ue, phi, eps, T, m);
  CHECK(fc.resid_two_sided < 1e-9);
  CHECK(fc.resid_one_sided_minus < 1e-9);
  CHECK(fc.resid_one_sided_plus < 1e-9);
}

TEST_CASE("resolvent identity and normalization") {
  Eigen::MatrixXcd u = haar_unitary(8, 29);
  UnitaryEig ue = eig_unitary(u);
  for (double eps : {1.0, 0.1, 0.01}) {
    double lam = 0.4;
    Eigen::MatrixXcd rm = resolvent_mat(ue, cplx(lam, -eps));
    Eigen::MatrixXcd lhs = resolvent_mat(ue, cplx(lam, eps)) - rm;
    Eigen::MatrixXcd rhs = (1.0 - std::exp(-2.0 * eps)) * rm.adjoint() * rm;
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-12);
  }
  Eigen::VectorXcd phi = test_vector(8, 30);
  double eps = 0.05;
  int m = 4 * (tail_horizon(eps) + 1);
  CHECK(std::abs(normalization_integral(ue, phi, eps, m) - 1.0) < 1e-10);
}
