#include <CLI11.hpp>
#include <filesystem>
#include <iostream>

#include "nlqw/experiments.hpp"
#include "nlqw/smoothness.hpp"

namespace fs = std::filesystem;
using namespace nlqw;

namespace {

struct GlobalArgs {
  std::string config_path;
  std::string out_dir = ".";
  long seed = -1;
  int threads = 0;  // governs fan-out of independent sweep runs only
};

ExperimentConfig load_cfg(const GlobalArgs& g) {
  ExperimentConfig cfg;
  if (!g.config_path.empty()) {
    cfg = ExperimentConfig::from_config(parse_config(g.config_path));
  }
  if (g.seed >= 0) cfg.seed = uint64_t(g.seed);
  if (!g.out_dir.empty()) cfg.out_dir = g.out_dir;
  fs::create_directories(cfg.out_dir);
  return cfg;
}

std::string outfile(const ExperimentConfig& cfg, const std::string& name) {
  return (fs::path(cfg.out_dir) / name).string();
}

int cmd_evolve(const GlobalArgs& g, int steps, bool single, const std::string& snap_out) {
  ExperimentConfig cfg = load_cfg(g);
  if (steps > 0) cfg.T = steps;
  LabContext ctx = LabContext::build(cfg);
  SpinorField u = initial_data(ctx);
  std::vector<std::vector<std::string>> rows;
  for (int t = 0; t <= cfg.T; ++t) {
    rows.push_back({std::to_string(single ? t : 2 * t), format_num(u.norm()),
                    format_num(weighted_norm(u, std::numeric_limits<double>::infinity(), 0)),
                    format_num(boundary_mass(u))});
    if (boundary_mass(u) > cfg.wrap_abort) {
      std::cerr << "evolve: wrap guard tripped at t=" << t << "\n";
      return 1;
    }
    if (t < cfg.T)
      u = single ? step(ctx.coin, ctx.nl, u) : double_step(ctx.coin, ctx.nl, u);
  }
  write_csv(outfile(cfg, "evolve.csv"), {"t", "l2", "linf", "boundary_mass"}, rows);
  write_snapshot(u, snap_out.empty() ? outfile(cfg, "final.nlqw") : snap_out);
  std::cout << "evolve: " << cfg.T << (single ? " single" : " double") << " steps, final l2 "
            << u.norm() << "\n";
  return 0;
}

int cmd_spectrum(const GlobalArgs& g, const std::string& phi_out,
                 const std::string& coin_out) {
  ExperimentConfig cfg = load_cfg(g);
  LatticeGrid grid(std::min(cfg.L, cfg.dense_cap / 4));
  SpectralData sd = full_spectrum(cfg.make_coin(grid), cfg.dense_cap);
  if (!coin_out.empty()) write_coin_csv(sd.coin, coin_out);
  std::vector<std::vector<std::string>> rows;
  for (int j = 0; j < sd.angles.size(); ++j) {
    bool disc = std::find(sd.discrete_indices.begin(), sd.discrete_indices.end(), j) !=
                sd.discrete_indices.end();
    rows.push_back({std::to_string(j), format_num(sd.angles[j]), disc ? "1" : "0",
                    format_num(sd.localization_mass[j]), format_num(sd.gap_margin[j])});
  }
  write_csv(outfile(cfg, "spectrum.csv"),
            {"index", "angle", "is_discrete", "localization_mass", "gap_margin"}, rows);
  std::cout << "spectrum: " << sd.angles.size() << " eigenphases, "
            << sd.discrete_indices.size() << " discrete, l11 perturbation "
            << sd.coin.l11_perturbation();
  if (sd.plus_index >= 0) std::cout << ", lambda_+ = " << sd.lambda_plus;
  std::cout << "\n";
  if (!phi_out.empty() && sd.plus_index >= 0) write_snapshot(sd.phi, phi_out);
  return 0;
}

int cmd_boundstate(const GlobalArgs& g, double z_re, double z_im, bool sweep) {
  ExperimentConfig cfg = load_cfg(g);
  LabContext ctx = LabContext::build(cfg);
  const BoundStateFamily& fam = ctx.family;
  auto bs_row = [&](cplx z) {
    SpinorField phi_z = fam.eval_Phi(z);
    double lam = fam.eval_Lambda(z);
    SpinorField lhs = apply_U(fam.coin, apply_N(fam.nl, phi_z));
    SpinorField rhs(fam.grid);
    rhs.v = std::polar(1.0, lam) * phi_z.v;
    double resid = (lhs - rhs).norm();
    SpinorField zphi(fam.grid);
    zphi.v = z * fam.phi.v;
    double dist = (phi_z - zphi).norm();
    return std::vector<std::string>{format_num(z.real()), format_num(z.imag()),
                                    format_num(lam), format_num(resid), format_num(dist)};
  };
  if (sweep) {
    std::vector<std::vector<std::string>> rows;
    double zmax = std::sqrt(fam.r_max);
    for (int k = 1; k <= 12; ++k) rows.push_back(bs_row(cplx(zmax * k / 12.0, 0.0)));
    write_csv(outfile(cfg, "boundstate_sweep.csv"),
              {"re_z", "im_z", "lambda", "residual", "dist_to_linear"}, rows);
    std::cout << "boundstate: sweep of 12 amplitudes written (r_max = " << fam.r_max << ")\n";
    return 0;
  }
  cplx z(z_re, z_im);
  auto row = bs_row(z);
  write_csv(outfile(cfg, "boundstate.csv"),
            {"re_z", "im_z", "lambda", "residual", "dist_to_linear"}, {row});
  write_snapshot(fam.eval_Phi(z), outfile(cfg, "boundstate.nlqw"));
  std::cout << "boundstate: z = " << z << "  Lambda = " << row[2] << "  residual = " << row[3]
            << "\n";
  return 0;
}

int cmd_modulate(const GlobalArgs& g) {
  ExperimentConfig cfg = load_cfg(g);
  LabContext ctx = LabContext::build(cfg);
  SpinorField u0 = initial_data(ctx);
  TrackOptions topt;
  topt.wrap_abort = cfg.wrap_abort;
  ModulationTrace tr = track(ctx.family, u0, cfg.T, topt);
  std::vector<std::vector<std::string>> rows;
  for (const auto& r : tr.rows) {
    rows.push_back({std::to_string(r.t), format_num(r.z.real()), format_num(r.z.imag()),
                    format_num(std::abs(r.z)), format_num(r.lambda_plus),
                    format_num(r.big_z.real()), format_num(r.big_z.imag()),
                    format_num(r.eta_l2), format_num(r.eta_l2wm2), format_num(r.eta_linf),
                    format_num(r.f1), format_num(r.f2), format_num(r.f3),
                    format_num(r.z2_residual), std::to_string(r.newton_iters)});
  }
  write_csv(outfile(cfg, "modulate.csv"),
            {"t", "re_z", "im_z", "abs_z", "lambda_plus", "re_Z", "im_Z", "eta_l2", "eta_l2w",
             "eta_linf", "F1", "F2", "F3", "z2_residual", "newton_iters"},
            rows);
  if (tr.failed) {
    std::cerr << "modulate: decomposition failed at t=" << tr.fail_t << " (trace truncated)\n";
    return 1;
  }
  std::cout << "modulate: " << tr.rows.size() << " rows written\n";
  return 0;
}

int cmd_stability(const GlobalArgs& g) {
  ExperimentConfig cfg = load_cfg(g);
  StabilityReport rep = run_stability(cfg);
  std::vector<std::vector<std::string>> rows;
  for (size_t k = 0; k < rep.checkpoint_t.size(); ++k)
    rows.push_back({std::to_string(rep.checkpoint_t[k]), format_num(rep.resolution_residual[k])});
  write_csv(outfile(cfg, "stability_residuals.csv"), {"t", "resolution_residual"}, rows);
  std::vector<std::vector<std::string>> cauchy;
  size_t nd = std::max(rep.eta1_cauchy.diffs.size(), rep.etaplus_cauchy.diffs.size());
  for (size_t k = 0; k < nd; ++k) {
    auto cell = [&](const std::vector<double>& v) {
      return k < v.size() ? format_num(v[k]) : std::string();
    };
    cauchy.push_back({std::to_string(k), cell(rep.eta1_cauchy.diffs),
                      cell(rep.etaplus_cauchy.diffs)});
  }
  write_csv(outfile(cfg, "stability_cauchy.csv"), {"k", "eta1_diff", "eta_plus_diff"}, cauchy);
  write_csv(outfile(cfg, "stability_report.csv"),
            {"status", "rho", "z_tail_variation", "Z_l1", "Z_l1_last_quarter", "eta_plus_norm",
             "eta0_norm", "residual_final", "residual_decay_exponent", "eta_loc_tail_share",
             "eta_stz", "eta_l2_weighted", "max_boundary_mass"},
            {{to_string(rep.status), format_num(rep.rho), format_num(rep.z_tail_variation),
              format_num(rep.z_l1), format_num(rep.z_l1_last_quarter),
              format_num(rep.eta_plus_norm), format_num(rep.eta0_norm),
              format_num(rep.residual_final), format_num(rep.residual_decay_exponent),
              format_num(rep.eta_loc_tail_share), format_num(rep.eta_stz),
              format_num(rep.eta_l2_weighted), format_num(rep.max_boundary_mass)}});
  std::cout << "stability: " << to_string(rep.status) << "  rho=" << rep.rho
            << "  |Z|_l1=" << rep.z_l1 << "  final residual=" << rep.residual_final << "\n";
  if (rep.status == RunStatus::PASS) return 0;
  return rep.status == RunStatus::INCONCLUSIVE ? 2 : 1;
}

int cmd_orbital(const GlobalArgs& g, std::vector<double> deltas) {
  ExperimentConfig cfg = load_cfg(g);
  if (deltas.empty()) deltas = {0.02, 0.01, 0.005};
  auto rows = run_orbital(cfg, deltas, std::max(1, g.threads));
  std::vector<std::vector<std::string>> csv;
  for (auto& r : rows) csv.push_back({format_num(r.delta), format_num(r.sup_deviation)});
  write_csv(outfile(cfg, "orbital.csv"), {"delta", "sup_deviation"}, csv);
  std::cout << "orbital: " << rows.size() << " perturbation sizes written\n";
  for (size_t i = 1; i < rows.size(); ++i) {
    double ratio = rows[i].sup_deviation / rows[i - 1].sup_deviation;
    std::cout << "  delta " << rows[i - 1].delta << " -> " << rows[i].delta
              << ": deviation ratio " << ratio << "\n";
  }
  return 0;
}

int cmd_decay_fit(const GlobalArgs& g) {
  ExperimentConfig cfg = load_cfg(g);
  DecayFitResult res = run_decay_fit(cfg);
  std::vector<std::vector<std::string>> rows;
  for (auto& [t, s] : res.sup_norms) rows.push_back({std::to_string(t), format_num(s)});
  write_csv(outfile(cfg, "decay_fit.csv"), {"t", "linf"}, rows);
  bool pass = std::abs(res.slope + 1.0 / 3.0) <= 0.05;
  std::cout << "decay-fit: slope " << res.slope << " (target -1/3 +- 0.05): "
            << (pass ? "PASS" : "FAIL") << "\n";
  return pass ? 0 : 1;
}

int cmd_kato(const GlobalArgs& g, std::vector<double> eps_list, double s, int grid_size) {
  ExperimentConfig cfg = load_cfg(g);
  if (eps_list.empty()) eps_list = {0.1, 0.03, 0.01, 0.003};
  // walk instance at a small dense lattice (the weight localizes everything
  // near the defect, so a short lattice suffices and keeps the SVDs cheap)
  LatticeGrid grid(std::min(cfg.spectral_L, 64));
  CoinField coin = cfg.make_coin(grid);
  SpectralData sd = full_spectrum(coin, cfg.dense_cap);
  Eigen::MatrixXcd u = dense_U(coin);
  UnitaryEig ue = eig_unitary(u);
  int n = grid.dim();
  Eigen::MatrixXcd pc_mat = Eigen::MatrixXcd::Identity(n, n);
  for (int j : sd.discrete_indices)
    pc_mat -= sd.vectors.col(j) * sd.vectors.col(j).adjoint();
  Eigen::VectorXd wts(n);
  for (int x = -grid.L; x < grid.L; ++x)
    for (int c = 0; c < 2; ++c) wts[grid.idx(x, c)] = std::pow(bracket(x), -s);
  Eigen::MatrixXcd a = wts.asDiagonal() * pc_mat;

  std::vector<std::vector<std::string>> rows;
  double prev = -1.0;
  bool bounded_trend = true;
  for (double eps : eps_list) {
    std::vector<cplx> mu_grid;
    for (int k = 0; k < grid_size; ++k)
      mu_grid.push_back(cplx(2.0 * M_PI * k / grid_size, eps));
    double v = kato_sufficient(a, ue, mu_grid);
    if (prev > 0 && v > 3.0 * prev) bounded_trend = false;
    prev = v;
    rows.push_back({format_num(eps), format_num(v)});
  }
  write_csv(outfile(cfg, "kato_check.csv"), {"eps", "sup_norm"}, rows);

  // identity suite on a random small unitary
  Eigen::MatrixXcd ru = haar_unitary(8, cfg.seed);
  UnitaryEig rue = eig_unitary(ru);
  Eigen::MatrixXcd ra = haar_unitary(8, cfg.seed + 1) * 0.7;
  Eigen::VectorXcd phi = Eigen::VectorXcd::Zero(8);
  phi[0] = 1.0;
  phi[3] = cplx(0.3, -0.4);
  phi.normalize();
  double eps0 = 0.05;
  int t_hor = int(std::ceil(10.0 * std::log(10.0) / eps0)) + 1;
  double q1 = qty_time(ra, ru, phi, eps0, t_hor);
  double q2 = qty_resolvent(ra, rue, phi, eps0, 4 * (t_hor + 1));
  double plancherel = std::abs(q1 - q2) / std::max(q1, q2);
  auto sup_rep = qty_sup_resolvent(ra, rue, {0.1, 0.01}, {0.0, 1.0, 2.0, 3.0});
  Eigen::MatrixXcd rm = resolvent_mat(rue, cplx(1.0, -0.1));
  Eigen::MatrixXcd lhs = resolvent_mat(rue, cplx(1.0, 0.1)) - rm;
  Eigen::MatrixXcd rhs = (1.0 - std::exp(-0.2)) * rm.adjoint() * rm;
  double resolvent_identity = (lhs - rhs).cwiseAbs().maxCoeff();
  double normalization = std::abs(normalization_integral(rue, phi, 0.05, 4 * (t_hor + 1)) - 1.0);

  // the four smoothness quantities of the random instance at fixed eps
  std::vector<double> lam_grid;
  for (int k = 0; k < 32; ++k) lam_grid.push_back(2 * M_PI * k / 32);
  double q3 = qty_sup_resolvent(ra, rue, {eps0}, lam_grid).value;
  double q4 = qty_interval(ra, rue, 0.05);
  write_csv(outfile(cfg, "smoothness_report.csv"),
            {"epsilon", "horizon_T", "quadrature_M", "qty1_time", "qty2_resolvent",
             "qty3_sup_resolvent", "qty4_interval", "plancherel_residual",
             "resolvent_identity_residual", "stone_normalization_residual"},
            {{format_num(eps0), std::to_string(t_hor), std::to_string(4 * (t_hor + 1)),
              format_num(q1), format_num(q2), format_num(q3), format_num(q4),
              format_num(plancherel), format_num(resolvent_identity),
              format_num(normalization)}});

  auto line = [&](const std::string& name, bool ok, double v) {
    std::cout << (ok ? "PASS " : "FAIL ") << name << " (" << v << ")\n";
    return ok;
  };
  bool all = true;
  all &= line("plancherel(qty_time=qty_resolvent)", plancherel <= 1e-9, plancherel);
  all &= line("resolvent_identity(KSU.4.4)", resolvent_identity <= 1e-12, resolvent_identity);
  all &= line("positivity(KSU.4.10)", sup_rep.min_eigenvalue >= -1e-12, sup_rep.min_eigenvalue);
  all &= line("normalization(KSU.1)", normalization <= 1e-10, normalization);
  all &= line("walk_bounded_trend(ratio<3)", bounded_trend, prev);
  return all ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"nlqw - nonlinear quantum walk laboratory"};
  app.require_subcommand(1);
  GlobalArgs g;
  app.add_option("--config", g.config_path, "experiment config file");
  app.add_option("--out-dir", g.out_dir, "output directory");
  app.add_option("--seed", g.seed, "seed override");
  app.add_option("--threads", g.threads, "fan-out width for independent sweep runs");

  auto* evolve = app.add_subcommand("evolve", "evolve initial data, emit norms + snapshot");
  int ev_steps = 0;
  bool ev_single = false;
  std::string ev_snap;
  evolve->add_option("--steps", ev_steps, "step count override");
  evolve->add_flag("--single-step", ev_single, "single-step clock");
  evolve->add_option("--snapshot-out", ev_snap, "final snapshot path");

  auto* spectrum = app.add_subcommand("spectrum", "dense spectrum + classification CSV");
  std::string sp_phi, sp_coin;
  spectrum->add_option("--emit-phi", sp_phi, "write the discrete eigenfunction snapshot");
  spectrum->add_option("--emit-coin", sp_coin, "write the coin field CSV");

  auto* bound = app.add_subcommand("boundstate", "nonlinear bound state at z");
  double bz_re = 0.05, bz_im = 0.0;
  bool bz_sweep = false;
  bound->add_option("--z", [&bz_re, &bz_im](const std::vector<std::string>& vals) {
    if (vals.empty()) return false;
    std::string v = vals[0];
    size_t comma = v.find(',');
    if (comma == std::string::npos) return false;
    bz_re = std::stod(v.substr(0, comma));
    bz_im = std::stod(v.substr(comma + 1));
    return true;
  }, "z as 're,im'");
  bound->add_flag("--sweep", bz_sweep, "tabulate the scaling laws");

  auto* modulate = app.add_subcommand("modulate", "modulation trace CSV");
  auto* stability = app.add_subcommand("stability", "soliton-resolution experiment");
  auto* orbital = app.add_subcommand("orbital", "orbital-stability sweep");
  std::vector<double> orb_deltas;
  orbital->add_option("--deltas", orb_deltas, "perturbation sizes");
  auto* decay = app.add_subcommand("decay-fit", "linear dispersive-decay fit");
  auto* kato = app.add_subcommand("kato-check", "Kato-smoothness identities + walk sweep");
  std::vector<double> kato_eps;
  double kato_s = 2.0;
  int kato_grid = 64;
  kato->add_option("--eps-list", kato_eps, "epsilon sweep");
  kato->add_option("--s", kato_s, "weight exponent");
  kato->add_option("--grid-size", kato_grid, "lambda grid size");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*evolve) return cmd_evolve(g, ev_steps, ev_single, ev_snap);
    if (*spectrum) return cmd_spectrum(g, sp_phi, sp_coin);
    if (*bound) return cmd_boundstate(g, bz_re, bz_im, bz_sweep);
    if (*modulate) return cmd_modulate(g);
    if (*stability) return cmd_stability(g);
    if (*orbital) return cmd_orbital(g, orb_deltas);
    if (*decay) return cmd_decay_fit(g);
    if (*kato) return cmd_kato(g, kato_eps, kato_s, kato_grid);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
