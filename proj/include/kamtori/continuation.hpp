#pragma once

#include <filesystem>
#include <functional>

#include "kamtori/kam.hpp"

namespace kamtori {

/// Direction in parameter space for the first-order predictor (unit speed in
/// the path parameter; weights are d(param)/d(path)).
using ParamDirection = std::vector<std::pair<std::string, real>>;

/// First-order correction: solve the same triangular system as the Newton
/// step with eta built from the parameter derivative of the vector field,
/// and return K + deps * P xi_eps.
inline TorusEmbedding predictor(const TorusEmbedding& K, const HamiltonianModel& model,
                                const ParamDirection& dir, real deps,
                                real* etaN_avg_out = nullptr) {
  if (K.n() != 1) throw config_error("predictor: n = 1 embeddings only");
  const std::size_t ell = K.ell;
  const GridShape& shape = K.shape();

  TorusGrid Kx = K.component_grid(0);
  TorusGrid Ky = K.component_grid(1);
  TorusGrid dKx = fourier_to_grid(differentiate(K.Kp[0], 0));
  TorusGrid dKy = fourier_to_grid(differentiate(K.Kp[1], 0));
  const real deg = static_cast<real>(K.degree[0]);

  TorusGrid etaL(shape), etaN(shape), T(shape);
  real Tsum = 0;
  std::vector<real> z(2), dZ(2), acc(2), hess(4);
  for_each_node(shape, [&](std::size_t flat, const std::vector<real>& ang) {
    z[0] = Kx[flat];
    z[1] = Ky[flat];
    std::span<const real> phi(ang.data() + 1, ell);
    acc[0] = acc[1] = 0;
    for (const auto& [name, w] : dir) {
      d_eps_vector_field(model, name, z, phi, dZ);
      acc[0] += w * dZ[0];
      acc[1] += w * dZ[1];
    }
    const real Lx = deg + dKx[flat], Ly = dKy[flat];
    const real Bf = 1.0 / (Lx * Lx + Ly * Ly);
    const real Nx = -Ly * Bf, Ny = Lx * Bf;
    model.hessian(z, phi, hess);
    T[flat] = (Nx * Nx - Ny * Ny) * (hess[0] - hess[3]) + 4.0 * Nx * Ny * hess[1];
    Tsum += T[flat];
    etaL[flat] = Nx * acc[1] - Ny * acc[0];
    etaN[flat] = Ly * acc[0] - Lx * acc[1];
  });
  const real T_avg = Tsum / static_cast<real>(shape.total());

  NewtonSolveResult sol = newton_solve_n1(etaL, etaN, T, T_avg, K.freq);
  if (etaN_avg_out) *etaN_avg_out = sol.etaN_avg;

  TorusEmbedding out = K;
  TorusGrid dX(shape), dY(shape);
  for (std::size_t flat = 0; flat < shape.total(); ++flat) {
    const real Lx = deg + dKx[flat], Ly = dKy[flat];
    const real Bf = 1.0 / (Lx * Lx + Ly * Ly);
    const real Nx = -Ly * Bf, Ny = Lx * Bf;
    dX[flat] = deps * (Lx * sol.xiL[flat] + Nx * sol.xiN[flat]);
    dY[flat] = deps * (Ly * sol.xiL[flat] + Ny * sol.xiN[flat]);
  }
  out.Kp[0] += grid_to_fourier(dX);
  out.Kp[1] += grid_to_fourier(dY);
  return out;
}

/// Per-parameter-value record of a continuation run.
struct FamilyEntry {
  real path_value = 0;
  std::map<std::string, real> params;
  real err = 0;
  real h4 = 0;
  std::vector<std::size_t> grid;
  std::size_t iterations = 0;
  real T_avg = 0;
  std::string file;  // persisted torus, when the caller saves them
};

struct FamilyRecord {
  std::vector<FamilyEntry> entries;
  bool breakdown = false;
  std::string stop_reason;

  void write_csv(const std::string& path) const {
    std::ofstream out(path);
    out << "path,";
    if (!entries.empty())
      for (const auto& [k, v] : entries.front().params) out << k << ",";
    out << "err,h4,grid,iters,T_avg,file\n";
    out.setf(std::ios::scientific);
    out.precision(12);
    for (const auto& e : entries) {
      out << e.path_value << ",";
      for (const auto& [k, v] : e.params) out << v << ",";
      out << e.err << "," << e.h4 << ",";
      for (std::size_t i = 0; i < e.grid.size(); ++i)
        out << e.grid[i] << (i + 1 < e.grid.size() ? "x" : "");
      out << "," << e.iterations << "," << e.T_avg << "," << e.file << "\n";
    }
  }
};

struct ContinuationOptions {
  real deps = 1e-4;            // initial path step
  int max_halvings = 6;
  NewtonOptions newton;
  std::function<void(const TorusEmbedding&, FamilyEntry&)> on_converged;  // persistence hook
  bool verbose = false;
};

/// Natural continuation along a straight segment in parameter space from the
/// converged start to `target`: predictor step, Newton correction, halving
/// the step on failure (up to max_halvings), stopping at breakdown.
inline FamilyRecord continue_family(TorusEmbedding& K, HamiltonianModel& model,
                                    const std::map<std::string, real>& target,
                                    ContinuationOptions opt) {
  FamilyRecord rec;
  // path direction: unit speed toward the target in max-norm
  ParamDirection dir;
  real span = 0;
  for (const auto& [name, tv] : target) {
    const real dv = tv - model.param(name);
    span = std::max(span, std::abs(dv));
  }
  if (span == 0) return rec;
  for (const auto& [name, tv] : target)
    dir.emplace_back(name, (tv - model.param(name)) / span);
  std::map<std::string, real> start;
  for (const auto& [name, w] : dir) start[name] = model.param(name);

  auto set_path = [&](real s) {
    for (const auto& [name, w] : dir) model.set_param(name, start[name] + w * s);
  };

  real s = 0, h = opt.deps;
  int halvings = 0;
  while (s < span - 1e-15) {
    h = std::min(h, span - s);
    const real s_try = s + h;
    TorusEmbedding K_pred = predictor(K, model, dir, h);
    set_path(s_try);
    NewtonReport rep = newton_iterate(K_pred, model, opt.newton);
    if (rep.status == NewtonStatus::converged) {
      K = std::move(K_pred);
      s = s_try;
      FamilyEntry e;
      e.path_value = s;
      for (const auto& [name, w] : dir) e.params[name] = model.param(name);
      e.err = rep.rows.back().err;
      e.h4 = K.sobolev_size(4.0);
      e.grid = K.shape().sizes();
      e.iterations = rep.rows.size();
      e.T_avg = rep.rows.back().T_avg.empty() ? 0.0 : rep.rows.back().T_avg[0];
      if (opt.on_converged) opt.on_converged(K, e);
      rec.entries.push_back(std::move(e));
      if (opt.verbose)
        std::fprintf(stderr, "[continue] s=%.8f err=%.3e H4=%.6e iters=%zu\n", s,
                     rec.entries.back().err, rec.entries.back().h4,
                     rec.entries.back().iterations);
      if (halvings > 0) --halvings;  // relax after success
      h *= 1.2;
      h = std::min(h, opt.deps);
    } else {
      set_path(s);  // roll the model back to the last good point
      if (++halvings > opt.max_halvings) {
        rec.breakdown = true;
        rec.stop_reason = "persistent Newton failure after " +
                          std::to_string(opt.max_halvings) + " step halvings (" +
                          to_string(rep.status) + ")";
        break;
      }
      h *= 0.5;
      if (opt.verbose)
        std::fprintf(stderr, "[continue] step failed (%s), halving to %.3e\n",
                     to_string(rep.status), h);
    }
  }
  return rec;
}

struct BlowupFit {
  real eps_c = 0;
  real slope = 0;
  real intercept = 0;
  real correlation = 0;
  bool reliable = true;
};

/// Least-squares fit of log ||K||_r = A log(eps_c - eps) + B over a scan of
/// candidate eps_c above the last computed parameter; the fit with maximal
/// |correlation| wins.
inline BlowupFit blowup_fit(const std::vector<real>& eps, const std::vector<real>& norms,
                            real scan_from, real scan_to, real scan_step = 1e-6) {
  if (eps.size() != norms.size() || eps.size() < 8)
    throw config_error("blowup_fit: need at least 8 family entries");
  BlowupFit best;
  for (std::size_t i = 1; i < norms.size(); ++i)
    if (norms[i] <= norms[i - 1] * (1.0 - 1e-12)) best.reliable = false;  // non-monotone

  const std::size_t m = eps.size();
  std::vector<real> ln(m);
  for (std::size_t i = 0; i < m; ++i) ln[i] = std::log(norms[i]);

  real best_corr = 0;
  for (real ec = scan_from; ec <= scan_to + 1e-18; ec += scan_step) {
    if (ec <= eps.back()) continue;
    real sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < m; ++i) {
      const real x = std::log(ec - eps[i]);
      sx += x;
      sy += ln[i];
      sxx += x * x;
      sxy += x * ln[i];
      syy += ln[i] * ln[i];
    }
    const real nm = static_cast<real>(m);
    const real cov = sxy - sx * sy / nm;
    const real vx = sxx - sx * sx / nm;
    const real vy = syy - sy * sy / nm;
    if (vx <= 0 || vy <= 0) continue;
    const real corr = cov / std::sqrt(vx * vy);
    if (std::abs(corr) > std::abs(best_corr)) {
      best_corr = corr;
      best.eps_c = ec;
      best.slope = cov / vx;
      best.intercept = (sy - best.slope * sx) / nm;
      best.correlation = corr;
    }
  }
  if (best_corr == 0) best.reliable = false;
  return best;
}

struct SpectralDiagnostics {
  real decay_slope = 0;          // d log(max|c|) / d|k|_inf over significant shells
  bool slope_defined = false;
  std::vector<real> kphi_profile;  // per k_phi: log10 max H4-weighted coefficient norm
};

/// Decay slope of log max-shell-coefficient vs |k|_inf (significant modes
/// only), plus the per-k_phi profile of the max H4-weighted coefficient.
inline SpectralDiagnostics spectral_diagnostics(const TorusEmbedding& K,
                                                std::size_t phi_axis = 1) {
  SpectralDiagnostics out;
  const GridShape& shape = K.shape();
  WaveTable wt(shape);
  const std::size_t d = shape.rank();
  long kmax = 0;
  for (std::size_t a = 0; a < d; ++a) kmax = std::max<long>(kmax, static_cast<long>(shape.size(a)) / 2);
  std::vector<real> shell(static_cast<std::size_t>(kmax) + 1, 0.0);
  const long nphi_half = static_cast<long>(shape.size(phi_axis)) / 2;
  std::vector<real> kphi(static_cast<std::size_t>(nphi_half) + 1, 0.0);

  for (const auto& comp : K.Kp) {
    for_each_mode(shape, [&](std::size_t flat, const std::vector<std::size_t>& idx) {
      long kinf = 0;
      for (std::size_t a = 0; a < d; ++a) kinf = std::max(kinf, std::labs(wt.k[a][idx[a]]));
      const real mag = std::abs(comp[flat]);
      shell[static_cast<std::size_t>(kinf)] = std::max(shell[static_cast<std::size_t>(kinf)], mag);
      const long kp = std::labs(wt.k[phi_axis][idx[phi_axis]]);
      const real w = std::pow(two_pi * std::max<long>(kinf, 1), 4.0) * mag;
      if (kp <= nphi_half)
        kphi[static_cast<std::size_t>(kp)] = std::max(kphi[static_cast<std::size_t>(kp)], w);
    });
  }

  // fit log(shell max) vs k over significant shells
  real sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::size_t m = 0;
  for (long k = 1; k <= kmax; ++k) {
    const real v = shell[static_cast<std::size_t>(k)];
    if (v < 1e-14) continue;
    const real x = static_cast<real>(k), y = std::log(v);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++m;
  }
  if (m >= 3) {
    const real nm = static_cast<real>(m);
    const real vx = sxx - sx * sx / nm;
    if (vx > 0) {
      out.decay_slope = (sxy - sx * sy / nm) / vx;
      out.slope_defined = true;
    }
  }
  out.kphi_profile.resize(kphi.size());
  for (std::size_t i = 0; i < kphi.size(); ++i)
    out.kphi_profile[i] = kphi[i] > 0 ? std::log10(kphi[i]) : -std::numeric_limits<real>::infinity();
  return out;
}

}  // namespace kamtori
