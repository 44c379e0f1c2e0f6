#pragma once

#include "nlqw/io.hpp"
#include "nlqw/modulation.hpp"

namespace nlqw {

struct ExperimentConfig {
  // model
  std::string preset = "kls-origin";  // kls-origin | kls-window | free
  double kappa = 0.6435;
  double kappa0 = 1.2;
  double window_width = 1.5;
  // nonlinearity g(s) = c s^p
  double nl_c = 1.0;
  int nl_p = 3;
  std::string nl_gamma = "sigma3";  // sigma3 | sigma1
  // lattice / horizon
  int L = 2048;
  int T = 4000;
  int spectral_L = 512;  // dense diagonalization lattice; embedded into L
  int dense_cap = 8192;
  // bound-state family
  double r_max = 0.01;
  int family_nodes = 32;
  // initial data
  std::string recipe = "mixed";  // bound_state | continuous_only | mixed | eigenfunction | custom
  cplx z0{0.05, 0.0};
  double eps = 0.05;
  double profile_width = 8.0;
  double profile_momentum = 0.0;  // carrier quasi-momentum of the profile
  std::string snapshot_path;
  // decay-fit window
  int fit_t_min = 20;
  int fit_t_max = 400;
  bool single_step = true;  // linear decay fit runs on the single-step clock
  // misc
  uint64_t seed = 1;
  std::string out_dir = ".";
  double wrap_abort = 1e-8;

  static ExperimentConfig from_config(const ConfigMap& cm);
  void validate() const;
  NonlinearCoin nonlinearity() const;
  CoinField make_coin(const LatticeGrid& g) const;
};

// built objects shared by the drivers: spectral data at the small lattice,
// family embedded into the experiment lattice
struct LabContext {
  ExperimentConfig cfg;
  LatticeGrid grid;
  CoinField coin;
  NonlinearCoin nl;
  SpectralData sd;           // at the spectral lattice
  BoundStateFamily family;   // embedded into `grid`
  static LabContext build(const ExperimentConfig& cfg);
};

// deterministic initial-data recipes
SpinorField continuous_profile(const LabContext& ctx, double eps, double width, double momentum,
                               uint64_t seed);
SpinorField initial_data(const LabContext& ctx);

// U^steps / U_inf^steps evolution helpers (single-step clock)
SpinorField evolve_linear(const CoinField& coin, SpinorField u, long steps, bool forward);

struct DecayFitResult {
  double slope = 0.0, intercept = 0.0, fit_residual = 0.0;
  std::vector<std::pair<int, double>> sup_norms;  // (t, l^inf norm)
};
DecayFitResult run_decay_fit(const ExperimentConfig& cfg);

enum class RunStatus { PASS, INCONCLUSIVE, FAIL };
const char* to_string(RunStatus s);

struct CauchyCheck {
  std::vector<double> diffs;
  bool converged = false;
};

struct StabilityReport {
  RunStatus status = RunStatus::INCONCLUSIVE;
  double rho = 0.0;                  // tail mean of |z(t)|
  double z_tail_variation = 0.0;     // (max-min)/mean over the last quarter
  double z_l1 = 0.0;                 // sum_t |Z(t)|
  double z_l1_last_quarter = 0.0;    // tail increment of the partial sums
  CauchyCheck eta1_cauchy, etaplus_cauchy;
  double eta_plus_norm = 0.0;
  double max_boundary_mass = 0.0;  // radiation wraps the torus at this scale; reported, not fatal
  bool wrapped = false;
  double eta0_norm = 0.0;
  std::vector<int> checkpoint_t;
  std::vector<double> resolution_residual;  // at the checkpoints
  bool residual_monotone_final_decade = false;
  double residual_final = 0.0;
  double residual_decay_exponent = 0.0;  // log-log slope over the final decade
  double eta_loc_tail_share = 0.0;       // last-quarter share of sum ||eta||_{2,-2}^2
  double eta_stz = 0.0, eta_l2_weighted = 0.0;  // trajectory diagnostics
  ModulationTrace trace;
};
StabilityReport run_stability(const ExperimentConfig& cfg);

struct OrbitalRow {
  double delta = 0.0;
  double sup_deviation = 0.0;
};
std::vector<OrbitalRow> run_orbital(const ExperimentConfig& cfg,
                                    const std::vector<double>& deltas, int threads = 1);

struct ZScalingResult {
  std::vector<double> eps_values, z_l1_values;
  double slope = 0.0;
};
ZScalingResult run_z_scaling(const ExperimentConfig& base, const std::vector<double>& eps_list);

// least-squares slope of y against x
std::pair<double, double> linear_fit(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace nlqw
