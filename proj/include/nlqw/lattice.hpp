#pragma once

#include <Eigen/Dense>
#include <complex>
#include <string>
#include <vector>

namespace nlqw {

using cplx = std::complex<double>;

// Truncated periodic lattice, sites x in {-L, ..., L-1}. Even site count keeps
// the zig-zag sign (-1)^x consistent across the wrap.
struct LatticeGrid {
  int L = 0;
  enum class Boundary { periodic } boundary = Boundary::periodic;

  LatticeGrid() = default;
  explicit LatticeGrid(int half_width);

  int sites() const { return 2 * L; }
  int dim() const { return 4 * L; }  // complex dimension (2 components per site)

  // wrap x into [-L, L)
  int wrap(int x) const {
    int n = sites();
    int y = (x + L) % n;
    if (y < 0) y += n;
    return y - L;
  }
  int idx(int x, int c) const { return 2 * (x + L) + c; }

  bool operator==(const LatticeGrid& o) const { return L == o.L; }
  bool operator!=(const LatticeGrid& o) const { return L != o.L; }
};

// C^2-valued wavefunction on the grid.
struct SpinorField {
  LatticeGrid grid;
  Eigen::VectorXcd v;

  SpinorField() = default;
  explicit SpinorField(const LatticeGrid& g) : grid(g), v(Eigen::VectorXcd::Zero(g.dim())) {}
  SpinorField(const LatticeGrid& g, Eigen::VectorXcd values);

  cplx& up(int x) { return v[grid.idx(x, 0)]; }
  cplx& dn(int x) { return v[grid.idx(x, 1)]; }
  const cplx& up(int x) const { return v[grid.idx(x, 0)]; }
  const cplx& dn(int x) const { return v[grid.idx(x, 1)]; }

  double site_norm(int x) const {
    return std::sqrt(std::norm(up(x)) + std::norm(dn(x)));
  }
  double norm() const { return v.norm(); }
  bool finite() const { return v.allFinite(); }
};

// point mass at site x with spinor (a, b)
SpinorField delta_field(const LatticeGrid& g, int x, cplx a, cplx b);

void require_same_grid(const SpinorField& a, const SpinorField& b);

// (u,v) = sum_x (u(x), v(x))_{C^2}, conjugation on the second argument
cplx inner(const SpinorField& u, const SpinorField& v);
// <u,v> = Re(u,v)
double real_inner(const SpinorField& u, const SpinorField& v);

// <x> = sqrt(1+x^2), signed coordinate of the centered lattice
inline double bracket(int x) { return std::sqrt(1.0 + double(x) * double(x)); }

// l^{p,s} norm; p = infinity returns sup_x <x>^s ||u(x)||
double weighted_norm(const SpinorField& u, double p, double s);

// Zu(x) = (-1)^x u(x)
SpinorField zigzag(const SpinorField& u);

enum class Sign { plus, minus };
// P_± = (1 ± Z)/2
SpinorField proj_pm(const SpinorField& u, Sign s);

SpinorField operator+(const SpinorField& a, const SpinorField& b);
SpinorField operator-(const SpinorField& a, const SpinorField& b);
SpinorField operator*(cplx c, const SpinorField& a);

// space-time norms over a trajectory
enum class StzKind { Stz, StzStar, L2Weighted };
double stz_norm(const std::vector<SpinorField>& series, StzKind kind, double s = 0.0);

// fraction of ||u||^2 within `margin` sites of the wrap edge
double boundary_mass(const SpinorField& u, int margin = 10);

// zero-padded embedding into a larger grid (same centered coordinates)
SpinorField embed(const SpinorField& u, const LatticeGrid& big);

// binary snapshot format: 16-byte header "NLQW" + u32 version + u64 L,
// then per site ascending from -L four little-endian doubles
// (Re up, Im up, Re dn, Im dn).
void write_snapshot(const SpinorField& u, const std::string& path);
SpinorField read_snapshot(const std::string& path);

}  // namespace nlqw
