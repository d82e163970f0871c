// kamtori: compute, refine, and continue Lagrangian invariant tori of
// quasi-periodically forced Hamiltonian systems.
//
// Subcommands:
//   frequency   weighted Birkhoff rotation number of an orbit
//   init-guess  build an approximately invariant torus (KTF output)
//   refine      quasi-Newton correction of a KTF torus
//   continue    natural continuation of a torus family in the parameters
//   diagnose    spectral diagnostics of a KTF torus

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>

#include "kamtori/kamtori.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace kamtori;

namespace {

struct CommonConfig {
  std::string model = "tokamak";
  real eps = 0.004;
  real eps1 = 0, eps2 = 0, eps3 = 0;
  real psi0 = 0.35;
  unsigned threads = 0;  // 0: all cores
};

std::unique_ptr<HamiltonianModel> make_model(const CommonConfig& c) {
  if (c.model == "tokamak") return std::make_unique<TokamakModel>(c.eps, c.psi0);
  if (c.model == "qp-pendulum") return std::make_unique<PendulumModel>(c.eps1, c.eps2, c.eps3);
  throw config_error("unknown model: " + c.model + " (expected tokamak or qp-pendulum)");
}

json model_json(const CommonConfig& c) {
  json j{{"model", c.model}};
  if (c.model == "tokamak") {
    j["eps"] = c.eps;
    j["psi0"] = c.psi0;
  } else {
    j["eps1"] = c.eps1;
    j["eps2"] = c.eps2;
    j["eps3"] = c.eps3;
  }
  return j;
}

void add_model_flags(CLI::App* cmd, CommonConfig& c) {
  cmd->add_option("--model", c.model, "model name: tokamak | qp-pendulum")
      ->check(CLI::IsMember({"tokamak", "qp-pendulum"}));
  cmd->add_option("--eps", c.eps, "tokamak perturbation strength");
  cmd->add_option("--eps1", c.eps1, "pendulum primary coupling");
  cmd->add_option("--eps2", c.eps2, "pendulum wave amplitude");
  cmd->add_option("--eps3", c.eps3, "pendulum wave modulation");
  cmd->add_option("--psi0", c.psi0, "tokamak control-term reference flux");
  cmd->add_option("--threads", c.threads, "worker threads for grid loops (0 = all cores)");
}

/// One metadata JSON per run, enough to re-run identically.
struct RunMeta {
  json j;
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();

  RunMeta(const std::string& command, const CommonConfig& c) {
    j["command"] = command;
    j["model"] = model_json(c);
    j["ktf_version"] = ktf::version;
  }
  void stage(const std::string& name) {
    j["stages"].push_back({{"name", name}, {"at_seconds", seconds()}});
  }
  real seconds() const {
    return std::chrono::duration<real>(std::chrono::steady_clock::now() - t0).count();
  }
  void write(const fs::path& path) {
    j["wall_seconds"] = seconds();
    std::ofstream out(path);
    out << j.dump(2) << "\n";
  }
};

FrequencyVector make_freq(const HamiltonianModel& model, real omega, long cf_depth) {
  FrequencyVector f;
  if (cf_depth > 0) {
    auto r = refine_frequency_cf(omega, static_cast<std::size_t>(cf_depth));
    if (r.truncation_warning)
      std::fprintf(stderr, "warning: continued fraction of omega truncated before depth %ld\n",
                   cf_depth);
    omega = r.value;
  }
  f.omega = {omega};
  f.alpha = model.external_frequency();
  return f;
}

int cmd_frequency(const CommonConfig& common, real x0, real y0, std::size_t iterates,
                  real tol, long kmax, real tau, const std::string& out_json) {
  auto model = make_model(common);
  RunMeta meta("frequency", common);
  meta.j["seed"] = {x0, y0};
  meta.j["iterates"] = iterates;

  std::vector<real> lift;
  if (model->ell() == 1) {
    auto orbit = stroboscopic_orbit(*model, {x0, y0}, iterates, tol);
    lift.resize(orbit.size());
    for (std::size_t i = 0; i < orbit.size(); ++i) lift[i] = orbit[i][0];
  } else {
    // sample the flow at unit time steps
    Dop853::Options opt;
    opt.rtol = opt.atol = tol;
    Dop853 solver(2, make_flow_rhs(*model, std::vector<real>(model->ell(), 0.0)), opt);
    std::vector<real> z{x0, y0};
    real t = 0;
    lift.push_back(z[0]);
    for (std::size_t k = 0; k < iterates; ++k) {
      solver.integrate(t, z, static_cast<real>(k + 1));
      lift.push_back(z[0]);
    }
  }
  meta.stage("orbit");
  auto rot = birkhoff_frequency(lift);
  meta.stage("birkhoff");

  FrequencyVector freq;
  freq.omega = {rot.value};
  freq.alpha = model->external_frequency();
  std::optional<ResonanceInfo> res;
  const real gamma = diophantine_estimate(freq, tau, kmax, &res);
  meta.stage("diophantine");

  std::printf("omega          = %.15f\n", rot.value);
  std::printf("convergence    = %.3e\n", rot.convergence);
  std::printf("gamma(tau=%.1f, kmax=%ld) = %.6e\n", tau, kmax, gamma);
  if (res) {
    std::string k;
    for (auto v : res->k) k += std::to_string(v) + " ";
    std::printf("resonance at k = ( %s)\n", k.c_str());
  }
  if (rot.convergence > 1e-6)
    std::fprintf(stderr, "warning: Birkhoff average has not converged (doubling check %.2e)\n",
                 rot.convergence);

  meta.j["omega"] = rot.value;
  meta.j["convergence"] = rot.convergence;
  meta.j["gamma"] = gamma;
  if (!out_json.empty()) meta.write(out_json);
  return res ? 3 : 0;
}

int cmd_init_guess(const CommonConfig& common, const std::string& mode, real x0, real y0,
                   real omega, long cf_depth, std::size_t iterates, long kcut,
                   std::size_t lg_ntheta, std::size_t lg_nphi1, std::size_t lg_nphi2,
                   real tol, const std::string& out) {
  auto model = make_model(common);
  RunMeta meta("init-guess", common);
  meta.j["mode"] = mode;
  const std::size_t n_theta = 1ull << lg_ntheta;
  TorusEmbedding K;

  if (mode == "flow-curve") {
    if (model->ell() != 1) throw config_error("flow-curve mode requires an ell = 1 model");
    auto orbit = stroboscopic_orbit(*model, {x0, y0}, iterates, tol);
    std::vector<real> lift(orbit.size());
    for (std::size_t i = 0; i < orbit.size(); ++i) lift[i] = orbit[i][0];
    auto rot = birkhoff_frequency(lift);
    meta.stage("orbit");
    const real om = omega != 0 ? omega : rot.value;
    long kclamp = static_cast<long>(n_theta / 4);
    auto ext = build_section_curve(orbit, rot.value, {1, 0}, 8 * n_theta,
                                   std::max<long>(kclamp, 16), kcut);
    if (ext.kcut > kclamp)
      ext = build_section_curve(orbit, rot.value, {1, 0}, 8 * n_theta,
                                std::max<long>(kclamp, 16), kclamp);
    meta.stage("curve");
    meta.j["curve_modes"] = ext.kcut;
    meta.j["omega_measured"] = rot.value;
    FrequencyVector freq = make_freq(*model, om, cf_depth);
    K = build_initial_torus_flow(*model, ext.curve, freq, n_theta, 1ull << lg_nphi1, tol);
    meta.stage("extension");
  } else if (mode == "autonomous-orbit" || mode == "flat") {
    if (model->ell() == 1) throw config_error(mode + " mode expects the qp-pendulum model");
    const bool librational = mode == "autonomous-orbit" && common.eps1 != 0 && std::abs(y0) < 1e-9;
    if (mode == "flat") {
      FrequencyVector freq = make_freq(*model, omega != 0 ? omega : y0, cf_depth);
      K = make_flat_embedding(1, 0, model->ell(), {1}, {y0}, freq,
                              GridShape({n_theta, 1ull << lg_nphi1, 1ull << lg_nphi2}));
    } else {
      K = build_initial_torus_autonomous(*model, {x0, y0}, n_theta,
                                         {1ull << lg_nphi1, 1ull << lg_nphi2}, librational, tol);
      if (cf_depth > 0) K.freq = make_freq(*model, K.freq.omega[0], cf_depth);
    }
    meta.stage("orbit");
  } else {
    throw config_error("unknown init-guess mode: " + mode);
  }

  for (const auto& p : model->param_names()) K.params[p] = model->param(p);
  const real err = invariance_error(K, *model);
  meta.stage("invariance");
  std::printf("omega            = %.15f\n", K.freq.omega[0]);
  std::printf("degree           = %ld\n", K.degree[0]);
  std::printf("invariance error = %.6e\n", err);
  meta.j["omega"] = K.freq.omega[0];
  meta.j["invariance_error"] = err;

  ktf::write(out, K);
  std::printf("wrote %s\n", out.c_str());
  meta.write(out + ".meta.json");
  return 0;
}

NewtonOptions newton_options_from(real tol, std::size_t max_iter, std::size_t lg_max_ntheta,
                                  std::size_t lg_max_nphi1, std::size_t lg_max_nphi2,
                                  real stagnation, real tail_threshold, std::size_t rank) {
  NewtonOptions opt;
  opt.tol = tol;
  opt.max_iter = max_iter;
  opt.stagnation_ratio = stagnation;
  opt.tail_threshold = tail_threshold;
  opt.max_sizes = {1ull << lg_max_ntheta, 1ull << lg_max_nphi1};
  if (rank == 3) opt.max_sizes.push_back(1ull << lg_max_nphi2);
  opt.verbose = log_level() >= 1;
  return opt;
}

void apply_ktf_params(HamiltonianModel& model, const TorusEmbedding& K) {
  for (const auto& [name, value] : K.params)
    if (model.has_param(name)) model.set_param(name, value);
}

int cmd_refine(CommonConfig common, const std::string& in, const std::string& out,
               real tol, std::size_t max_iter, std::size_t lg_mt, std::size_t lg_mp1,
               std::size_t lg_mp2, real stagnation, real tail_threshold, bool keep_params) {
  TorusEmbedding K = ktf::read(in);
  auto model = make_model(common);
  if (keep_params) apply_ktf_params(*model, K);
  RunMeta meta("refine", common);
  meta.j["input"] = in;

  NewtonOptions opt = newton_options_from(tol, max_iter, lg_mt, lg_mp1, lg_mp2, stagnation,
                                          tail_threshold, K.shape().rank());
  NewtonReport rep = newton_iterate(K, *model, opt);
  meta.stage("newton");

  std::printf("status      = %s\n", to_string(rep.status));
  std::printf("iterations  = %zu\n", rep.rows.size());
  std::printf("final error = %.6e\n", rep.final_err());
  if (!rep.rows.empty() && !rep.rows.back().T_avg.empty()) {
    std::printf("<T>         = %.10e\n", rep.rows.back().T_avg[0]);
    if (!rep.rows.back().T_avg_inv.empty())
      std::printf("<T>^-1      = %.10e\n", rep.rows.back().T_avg_inv[0]);
  }
  if (!rep.failure.empty()) std::fprintf(stderr, "error: %s\n", rep.failure.c_str());

  for (const auto& p : model->param_names()) K.params[p] = model->param(p);
  ktf::write(out, K);
  rep.write_csv(out + ".steps.csv");
  auto diag = spectral_diagnostics(K);
  {
    std::ofstream csv(out + ".spectrum.csv");
    csv << "k_phi,log10_max_h4_coeff\n";
    for (std::size_t k = 0; k < diag.kphi_profile.size(); ++k)
      csv << k << "," << diag.kphi_profile[k] << "\n";
  }
  meta.j["status"] = to_string(rep.status);
  meta.j["final_error"] = rep.final_err();
  meta.j["decay_slope"] = diag.decay_slope;
  meta.write(out + ".meta.json");
  return rep.status == NewtonStatus::converged ? 0 : 3;
}

int cmd_continue(CommonConfig common, const std::string& in, const std::string& out_dir,
                 const std::vector<std::string>& path, real deps, real tol,
                 std::size_t max_iter, std::size_t lg_mt, std::size_t lg_mp1, std::size_t lg_mp2,
                 real stagnation, real tail_threshold, real norm_order) {
  TorusEmbedding K = ktf::read(in);
  auto model = make_model(common);
  apply_ktf_params(*model, K);
  RunMeta meta("continue", common);
  meta.j["input"] = in;
  fs::create_directories(out_dir);

  // each waypoint is "name=value[,name=value...]"
  std::vector<std::map<std::string, real>> waypoints;
  for (const auto& wp : path) {
    std::map<std::string, real> t;
    std::stringstream ss(wp);
    std::string item;
    while (std::getline(ss, item, ',')) {
      auto eq = item.find('=');
      if (eq == std::string::npos) throw config_error("bad waypoint entry: " + item);
      t[item.substr(0, eq)] = std::stod(item.substr(eq + 1));
    }
    waypoints.push_back(std::move(t));
  }
  if (waypoints.empty()) {
    std::printf("empty continuation path: nothing to do\n");
    return 0;
  }

  ContinuationOptions copt;
  copt.deps = deps;
  copt.newton = newton_options_from(tol, max_iter, lg_mt, lg_mp1, lg_mp2, stagnation,
                                    tail_threshold, K.shape().rank());
  copt.verbose = log_level() >= 1;
  std::size_t counter = 0;
  copt.on_converged = [&](const TorusEmbedding& Kc, FamilyEntry& e) {
    char name[64];
    std::snprintf(name, sizeof name, "torus_%04zu.ktf", counter++);
    e.file = (fs::path(out_dir) / name).string();
    TorusEmbedding Kout = Kc;
    for (const auto& p : model->param_names()) Kout.params[p] = model->param(p);
    ktf::write(e.file, Kout);
  };

  FamilyRecord family;
  for (const auto& target : waypoints) {
    FamilyRecord leg = continue_family(K, *model, target, copt);
    const real base = family.entries.empty() ? 0.0 : family.entries.back().path_value;
    for (auto e : leg.entries) {
      e.path_value += base;
      family.entries.push_back(std::move(e));
    }
    family.breakdown = leg.breakdown;
    family.stop_reason = leg.stop_reason;
    if (leg.breakdown) break;
  }
  meta.stage("continuation");

  family.write_csv((fs::path(out_dir) / "family.csv").string());
  std::printf("family entries = %zu\n", family.entries.size());
  if (family.breakdown) std::printf("breakdown: %s\n", family.stop_reason.c_str());

  json fit_json;
  if (family.entries.size() >= 8 && common.model == "tokamak") {
    std::vector<real> eps, norms;
    for (const auto& e : family.entries) {
      eps.push_back(e.params.at("eps"));
      norms.push_back(e.h4);
    }
    const real last = eps.back();
    BlowupFit fit = blowup_fit(eps, norms, last + 1e-6, last + 50 * deps, 1e-6);
    std::printf("blowup fit: eps_c = %.7f slope = %.6f |r| = %.6f%s\n", fit.eps_c, fit.slope,
                std::abs(fit.correlation), fit.reliable ? "" : "  (fit-unreliable)");
    fit_json = {{"eps_c", fit.eps_c},
                {"slope", fit.slope},
                {"intercept", fit.intercept},
                {"correlation", fit.correlation},
                {"reliable", fit.reliable}};
  }
  meta.j["entries"] = family.entries.size();
  meta.j["breakdown"] = family.breakdown;
  if (!fit_json.is_null()) meta.j["blowup_fit"] = fit_json;
  meta.write((fs::path(out_dir) / "run.meta.json").string());
  return 0;  // breakdown is an expected outcome
}

int cmd_diagnose(const CommonConfig& common, const std::string& in, const std::string& out_csv) {
  TorusEmbedding K = ktf::read(in);
  RunMeta meta("diagnose", common);
  auto diag = spectral_diagnostics(K);
  std::printf("grid        = ");
  for (std::size_t a = 0; a < K.shape().rank(); ++a)
    std::printf("%zu%s", K.shape().size(a), a + 1 < K.shape().rank() ? "x" : "\n");
  std::printf("omega       = %.15f\n", K.freq.omega[0]);
  std::printf("||K||_H4    = %.9e\n", K.sobolev_size(4.0));
  if (diag.slope_defined)
    std::printf("decay slope = %.6f per mode\n", diag.decay_slope);
  else
    std::printf("decay slope = undefined (too few significant shells)\n");
  std::printf("tail frac   = %.3e\n", K.max_tail_fraction());
  if (!out_csv.empty()) {
    std::ofstream csv(out_csv);
    csv << "k_phi,log10_max_h4_coeff\n";
    for (std::size_t k = 0; k < diag.kphi_profile.size(); ++k)
      csv << k << "," << diag.kphi_profile[k] << "\n";
    std::printf("wrote %s\n", out_csv.c_str());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Lagrangian invariant tori of quasi-periodic Hamiltonian systems"};
  app.require_subcommand(1);
  app.set_config("--config", "", "configuration file (key = value with [sections])");
  app.allow_config_extras(false);

  CommonConfig common;
  real x0 = 0, y0 = 0, omega = 0, tol = 1e-12, itol = 1e-13;
  real deps = 1e-4, stagnation = 0.1, tail_threshold = 1e-2, tau = 2.0, norm_order = 4.0;
  std::size_t iterates = 20000, max_iter = 30;
  std::size_t lg_nt = 9, lg_np1 = 9, lg_np2 = 7;
  std::size_t lg_mt = 12, lg_mp1 = 11, lg_mp2 = 7;
  long cf_depth = 0, kcut = 0, kmax = 50;
  std::string in, out = "torus.ktf", out_dir = "family", mode = "flow-curve", out_json;
  std::vector<std::string> path;
  bool keep_params = false;

  auto* freq_cmd = app.add_subcommand("frequency", "weighted Birkhoff rotation number");
  add_model_flags(freq_cmd, common);
  freq_cmd->add_option("--x0", x0, "seed angle (unit torus)");
  freq_cmd->add_option("--y0", y0, "seed action");
  freq_cmd->add_option("--iterates", iterates, "orbit samples");
  freq_cmd->add_option("--tol", itol, "integrator tolerance");
  freq_cmd->add_option("--kmax", kmax, "Diophantine enumeration bound");
  freq_cmd->add_option("--tau", tau, "Diophantine exponent");
  freq_cmd->add_option("--out", out_json, "metadata JSON path");

  auto* init_cmd = app.add_subcommand("init-guess", "build an initial torus (KTF)");
  add_model_flags(init_cmd, common);
  init_cmd->add_option("--mode", mode, "flow-curve | autonomous-orbit | flat")
      ->check(CLI::IsMember({"flow-curve", "autonomous-orbit", "flat"}));
  init_cmd->add_option("--x0", x0, "seed angle (unit torus)");
  init_cmd->add_option("--y0", y0, "seed action");
  init_cmd->add_option("--omega", omega, "internal frequency override (0: measured)");
  init_cmd->add_option("--cf-depth", cf_depth, "continued-fraction refinement depth");
  init_cmd->add_option("--iterates", iterates, "orbit samples for the section curve");
  init_cmd->add_option("--kcut", kcut, "curve modes kept (0: automatic)");
  init_cmd->add_option("--ntheta", lg_nt, "log2 theta resolution");
  init_cmd->add_option("--nphi1", lg_np1, "log2 first external resolution");
  init_cmd->add_option("--nphi2", lg_np2, "log2 second external resolution");
  init_cmd->add_option("--tol", itol, "integrator tolerance");
  init_cmd->add_option("--out", out, "output KTF path");

  auto* refine_cmd = app.add_subcommand("refine", "quasi-Newton refinement of a KTF torus");
  add_model_flags(refine_cmd, common);
  refine_cmd->add_option("input", in, "input KTF")->required();
  refine_cmd->add_option("--out", out, "output KTF path");
  refine_cmd->add_option("--tol", tol, "invariance-error target");
  refine_cmd->add_option("--max-iter", max_iter, "Newton iteration cap");
  refine_cmd->add_option("--max-ntheta", lg_mt, "log2 theta resolution cap");
  refine_cmd->add_option("--max-nphi1", lg_mp1, "log2 first external resolution cap");
  refine_cmd->add_option("--max-nphi2", lg_mp2, "log2 second external resolution cap");
  refine_cmd->add_option("--stagnation", stagnation, "error ratio that triggers refinement");
  refine_cmd->add_option("--tail-threshold", tail_threshold, "error tail fraction trigger");
  refine_cmd->add_flag("--keep-params", keep_params, "take model parameters from the KTF");

  auto* cont_cmd = app.add_subcommand("continue", "continue the torus family");
  add_model_flags(cont_cmd, common);
  cont_cmd->add_option("input", in, "converged starting KTF")->required();
  cont_cmd->add_option("--out", out_dir, "output directory");
  cont_cmd->add_option("--path", path,
                       "waypoints, each name=value[,name=value...]; runs in order");
  cont_cmd->add_option("--delta-eps", deps, "path step");
  cont_cmd->add_option("--tol", tol, "Newton tolerance");
  cont_cmd->add_option("--max-iter", max_iter, "Newton iteration cap per step");
  cont_cmd->add_option("--max-ntheta", lg_mt, "log2 theta resolution cap");
  cont_cmd->add_option("--max-nphi1", lg_mp1, "log2 first external resolution cap");
  cont_cmd->add_option("--max-nphi2", lg_mp2, "log2 second external resolution cap");
  cont_cmd->add_option("--stagnation", stagnation, "error ratio that triggers refinement");
  cont_cmd->add_option("--tail-threshold", tail_threshold, "error tail fraction trigger");
  cont_cmd->add_option("--norm-order", norm_order, "Sobolev order for the family norms");

  auto* diag_cmd = app.add_subcommand("diagnose", "spectral diagnostics of a KTF torus");
  add_model_flags(diag_cmd, common);
  diag_cmd->add_option("input", in, "input KTF")->required();
  diag_cmd->add_option("--out", out_json, "per-k_phi profile CSV path");

  CLI11_PARSE(app, argc, argv);

  try {
    set_thread_budget(common.threads);
    if (freq_cmd->parsed())
      return cmd_frequency(common, x0, y0, iterates, itol, kmax, tau, out_json);
    if (init_cmd->parsed())
      return cmd_init_guess(common, mode, x0, y0, omega, cf_depth, iterates, kcut, lg_nt,
                            lg_np1, lg_np2, itol, out);
    if (refine_cmd->parsed())
      return cmd_refine(common, in, out, tol, max_iter, lg_mt, lg_mp1, lg_mp2, stagnation,
                        tail_threshold, keep_params);
    if (cont_cmd->parsed())
      return cmd_continue(common, in, out_dir, path, deps, tol, max_iter, lg_mt, lg_mp1,
                          lg_mp2, stagnation, tail_threshold, norm_order);
    if (diag_cmd->parsed()) return cmd_diagnose(common, in, out_json);
  } catch (const config_error& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const numerical_error& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
  return 0;
}
