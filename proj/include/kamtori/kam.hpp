#pragma once

#include <chrono>
#include <fstream>

#include "kamtori/frames.hpp"
#include "kamtori/parallel.hpp"

namespace kamtori {

/// Per-iteration record mirroring the four named stages (tangent frame,
/// torsion, symplectic-frame correction, new parameterization).
struct NewtonRow {
  std::size_t iteration = 0;
  std::vector<std::size_t> grid;
  real err = 0;          // max grid norm of the invariance error
  real corr = 0;         // max grid norm of the applied correction
  real norm_L = 0;       // sup of max|L| entries
  real norm_LieL = 0;    // sup of max|Lie L| entries
  real lagrangian = 0;   // sup |L^T Omega0 L|
  real norm_T = 0;       // sup of max|T|
  std::vector<real> T_avg, T_avg_inv;
  real etaN_avg = 0;     // |<eta^N>| before projection
  real tail = 0;         // worst per-axis tail fraction of the error
  bool refined = false;  // resolution was doubled instead of correcting
  real stage_seconds[4] = {0, 0, 0, 0};
  long rss_kb = 0;
};

enum class NewtonStatus { converged, diverged, no_twist, resolution_exhausted, running };

inline const char* to_string(NewtonStatus s) {
  switch (s) {
    case NewtonStatus::converged: return "converged";
    case NewtonStatus::diverged: return "diverged";
    case NewtonStatus::no_twist: return "no-twist";
    case NewtonStatus::resolution_exhausted: return "resolution-exhausted";
    default: return "running";
  }
}

struct NewtonReport {
  std::vector<NewtonRow> rows;
  NewtonStatus status = NewtonStatus::running;
  std::string failure;  // message of the aborting numerical error, if any

  real final_err() const { return rows.empty() ? 0.0 : rows.back().err; }

  void write_csv(const std::string& path) const {
    std::ofstream out(path);
    out << "iter,grid,err,corr,norm_L,norm_LieL,lagrangian_defect,norm_T,T_avg,T_avg_inv,"
           "etaN_avg,tail,refined,sec_frame,sec_torsion,sec_correction,sec_update,rss_kb\n";
    out.setf(std::ios::scientific);
    out.precision(9);
    for (const auto& r : rows) {
      out << r.iteration << ",";
      for (std::size_t i = 0; i < r.grid.size(); ++i)
        out << r.grid[i] << (i + 1 < r.grid.size() ? "x" : "");
      out << "," << r.err << "," << r.corr << "," << r.norm_L << "," << r.norm_LieL << ","
          << r.lagrangian << "," << r.norm_T << "," << (r.T_avg.empty() ? 0.0 : r.T_avg[0])
          << "," << (r.T_avg_inv.empty() ? 0.0 : r.T_avg_inv[0]) << "," << r.etaN_avg << ","
          << r.tail << "," << (r.refined ? 1 : 0) << "," << r.stage_seconds[0] << ","
          << r.stage_seconds[1] << "," << r.stage_seconds[2] << "," << r.stage_seconds[3]
          << "," << r.rss_kb << "\n";
    }
  }
};

inline long resident_memory_kb() {
  std::ifstream st("/proc/self/status");
  std::string key;
  long val = 0;
  while (st >> key) {
    if (key == "VmRSS:") { st >> val; return val; }
    std::getline(st, key);
  }
  return 0;
}

struct NewtonOptions {
  real tol = 1e-12;
  std::size_t max_iter = 30;
  real stagnation_ratio = 0.1;   // error ratio that triggers refinement
  real tail_threshold = 1e-2;    // error tail fraction that triggers refinement
  std::vector<std::size_t> max_sizes;  // per-axis resolution caps; empty: x4096
  real clean_threshold = 1e-17;  // spectral cleaning of K after each update
  bool verbose = false;
};

/// Invariance error E = Z_H(K, phi) + Lie K on the grid; max norm returned,
/// the field itself optionally kept.
inline real invariance_error(const TorusEmbedding& K, const HamiltonianModel& model,
                             std::vector<TorusGrid>* E_out = nullptr) {
  const std::size_t n = K.n(), d = 2 * n, ell = K.ell;
  std::vector<TorusGrid> Kg, LieK;
  for (std::size_t c = 0; c < d; ++c) {
    Kg.push_back(K.component_grid(c));
    LieK.push_back(fourier_to_grid(lie_derivative(K.Kp[c], K.freq)));
  }
  // degree part of Lie K: the x block gets -D omega
  for (std::size_t c = 0; c < K.n1; ++c) {
    real shift = 0;
    for (std::size_t j = 0; j < n; ++j)
      shift += static_cast<real>(K.degree_entry(c, j)) * K.freq.omega[j];
    if (shift != 0)
      for (std::size_t i = 0; i < LieK[c].size(); ++i) LieK[c][i] -= shift;
  }
  real worst = 0;
  std::vector<TorusGrid> E(d, TorusGrid(K.shape()));
  std::vector<real> z(d), Z(d);
  for_each_node(K.shape(), [&](std::size_t flat, const std::vector<real>& a) {
    for (std::size_t c = 0; c < d; ++c) z[c] = Kg[c][flat];
    vector_field(model, z, std::span<const real>(a.data() + n, ell), Z);
    for (std::size_t c = 0; c < d; ++c) {
      const real e = Z[c] + LieK[c][flat];
      E[c][flat] = e;
      worst = std::max(worst, std::abs(e));
    }
  });
  if (E_out) *E_out = std::move(E);
  return worst;
}

/// eta^L = -N^T Omega0 E, eta^N = L^T Omega0 E pointwise (general n).
inline void newton_rhs(std::size_t n, const real* L, const real* N, const real* E,
                       real* etaL, real* etaN) {
  for (std::size_t i = 0; i < n; ++i) {
    real sl = 0, sn = 0;
    for (std::size_t r = 0; r < n; ++r) {
      sl += N[r * n + i] * E[n + r] - N[(n + r) * n + i] * E[r];
      sn += -L[r * n + i] * E[n + r] + L[(n + r) * n + i] * E[r];
    }
    etaL[i] = sl;
    etaN[i] = sn;
  }
}

struct NewtonSolveResult {
  TorusGrid xiL, xiN;
  real etaN_avg = 0;
  real solvability = 0;  // |<eta^L - T xi^N>| after fixing xi^N_00
  real min_divisor = 0;
};

/// Solve the triangular system Lambda xi + Lie xi = eta for n = 1:
///   Lie xi^N = eta^N - <eta^N>   (the average is projected out),
///   xi^N = <T>^{-1} <eta^L - T R(eta^N)> + R(eta^N),
///   Lie xi^L = eta^L - T xi^N,   <xi^L> = 0 (phase gauge).
inline NewtonSolveResult newton_solve_n1(const TorusGrid& etaL, const TorusGrid& etaN,
                                         const TorusGrid& T, real T_avg,
                                         const FrequencyVector& freq) {
  if (std::abs(T_avg) < 1e-14) throw numerical_error("no-twist: <T> is singular");
  NewtonSolveResult res;
  FourierSeries etaN_h = grid_to_fourier(etaN);
  res.etaN_avg = std::abs(etaN_h.average());
  etaN_h[0] = 0;
  CohomologyStats st;
  FourierSeries RN_h = solve_cohomological(etaN_h, freq, &st);
  res.min_divisor = st.min_divisor;
  TorusGrid RN = fourier_to_grid(RN_h);

  real accL = 0, accTR = 0;
  for (std::size_t i = 0; i < etaL.size(); ++i) {
    accL += etaL[i];
    accTR += T[i] * RN[i];
  }
  const real inv_total = 1.0 / static_cast<real>(etaL.size());
  const real xiN00 = (accL - accTR) * inv_total / T_avg;

  res.xiN = std::move(RN);
  for (std::size_t i = 0; i < res.xiN.size(); ++i) res.xiN[i] += xiN00;

  TorusGrid rhs2 = etaL;
  real acc2 = 0;
  for (std::size_t i = 0; i < rhs2.size(); ++i) {
    rhs2[i] -= T[i] * res.xiN[i];
    acc2 += rhs2[i];
  }
  res.solvability = std::abs(acc2 * inv_total);
  FourierSeries rhs2_h = grid_to_fourier(rhs2);
  rhs2_h[0] = 0;
  FourierSeries xiL_h = solve_cohomological(rhs2_h, freq, &st);
  res.min_divisor = std::min(res.min_divisor, st.min_divisor);
  res.xiL = fourier_to_grid(xiL_h);
  return res;
}

/// Stages 1-2 of one quasi-Newton pass (n = 1, fused): error, frame, torsion
/// and the adapted-frame right-hand side, with the tangent data retained for
/// the correction stage.
struct StepEval {
  NewtonRow row;
  TorusGrid dKx, dKy;        // D_theta K_p components
  TorusGrid etaL, etaN, T;
};

inline StepEval newton_evaluate_n1(const TorusEmbedding& K, const HamiltonianModel& model) {
  using clock = std::chrono::steady_clock;
  auto tic = clock::now();
  auto lap = [&tic] {
    auto now = clock::now();
    real s = std::chrono::duration<real>(now - tic).count();
    tic = now;
    return s;
  };
  if (K.n() != 1) throw config_error("newton_evaluate_n1: n = 1 embeddings only");
  const std::size_t ell = K.ell;
  const GridShape& shape = K.shape();
  StepEval ev{.row = {}, .dKx = {}, .dKy = {}, .etaL = TorusGrid(shape),
              .etaN = TorusGrid(shape), .T = TorusGrid(shape)};
  ev.row.grid = shape.sizes();

  // stage 1: tangent data
  TorusGrid Kx = K.component_grid(0);
  TorusGrid Ky = K.component_grid(1);
  ev.dKx = fourier_to_grid(differentiate(K.Kp[0], 0));
  ev.dKy = fourier_to_grid(differentiate(K.Kp[1], 0));
  TorusGrid LieKx = fourier_to_grid(lie_derivative(K.Kp[0], K.freq));
  TorusGrid LieKy = fourier_to_grid(lie_derivative(K.Kp[1], K.freq));
  const real deg = static_cast<real>(K.degree[0]);
  const real deg_shift = deg * K.freq.omega[0];
  {
    TorusGrid g1 = fourier_to_grid(lie_derivative(grid_to_fourier(ev.dKx), K.freq));
    TorusGrid g2 = fourier_to_grid(lie_derivative(grid_to_fourier(ev.dKy), K.freq));
    ev.row.norm_LieL = std::max(g1.max_abs(), g2.max_abs());
  }
  ev.row.stage_seconds[0] = lap();

  // stage 2: fused pointwise pass
  real errE = 0, normL = 0, normT = 0, Tsum = 0;
  {
    TorusGrid Ex(shape), Ey(shape);
    std::vector<real> z(2), Z(2), hess(4);
    for_each_node(shape, [&](std::size_t flat, const std::vector<real>& ang) {
      z[0] = Kx[flat];
      z[1] = Ky[flat];
      std::span<const real> phi(ang.data() + 1, ell);
      vector_field(model, z, phi, Z);
      const real ex = Z[0] + LieKx[flat] - deg_shift;
      const real ey = Z[1] + LieKy[flat];
      Ex[flat] = ex;
      Ey[flat] = ey;
      errE = std::max({errE, std::abs(ex), std::abs(ey)});
      const real Lx = deg + ev.dKx[flat], Ly = ev.dKy[flat];
      normL = std::max({normL, std::abs(Lx), std::abs(Ly)});
      const real b = Lx * Lx + Ly * Ly;
      if (b < 1e-13) throw numerical_error("degenerate parameterization: L^T L singular");
      const real Bf = 1.0 / b;
      const real Nx = -Ly * Bf, Ny = Lx * Bf;
      model.hessian(z, phi, hess);
      const real t = (Nx * Nx - Ny * Ny) * (hess[0] - hess[3]) + 4.0 * Nx * Ny * hess[1];
      ev.T[flat] = t;
      Tsum += t;
      normT = std::max(normT, std::abs(t));
      ev.etaL[flat] = Nx * ey - Ny * ex;
      ev.etaN[flat] = Ly * ex - Lx * ey;
    });
    ev.row.err = errE;
    ev.row.norm_L = normL;
    ev.row.norm_T = normT;
    ev.row.T_avg = {Tsum / static_cast<real>(shape.total())};
    TailPower tp;
    tp.accumulate(grid_to_fourier(Ex));
    tp.accumulate(grid_to_fourier(Ey));
    ev.row.tail = 0;
    for (real t : tp.fractions()) ev.row.tail = std::max(ev.row.tail, t);
  }
  ev.row.lagrangian = 0;  // n = 1: L^T Omega0 L vanishes identically
  ev.row.stage_seconds[1] = lap();
  ev.row.rss_kb = resident_memory_kb();
  return ev;
}

/// Stages 3-4: triangular solve in the adapted frame and K <- K + P xi with
/// spectral cleaning of the result.
inline void newton_correct_n1(TorusEmbedding& K, StepEval& ev, const NewtonOptions& opt) {
  using clock = std::chrono::steady_clock;
  auto tic = clock::now();
  auto lap = [&tic] {
    auto now = clock::now();
    real s = std::chrono::duration<real>(now - tic).count();
    tic = now;
    return s;
  };
  if (std::abs(ev.row.T_avg[0]) < 1e-14) throw numerical_error("no-twist: <T> is singular");
  ev.row.T_avg_inv = {1.0 / ev.row.T_avg[0]};
  NewtonSolveResult sol = newton_solve_n1(ev.etaL, ev.etaN, ev.T, ev.row.T_avg[0], K.freq);
  ev.row.etaN_avg = sol.etaN_avg;
  ev.row.stage_seconds[2] = lap();

  const GridShape& shape = K.shape();
  const real deg = static_cast<real>(K.degree[0]);
  TorusGrid dX(shape), dY(shape);
  real corr = 0;
  for (std::size_t flat = 0; flat < shape.total(); ++flat) {
    const real Lx = deg + ev.dKx[flat], Ly = ev.dKy[flat];
    const real Bf = 1.0 / (Lx * Lx + Ly * Ly);
    const real Nx = -Ly * Bf, Ny = Lx * Bf;
    dX[flat] = Lx * sol.xiL[flat] + Nx * sol.xiN[flat];
    dY[flat] = Ly * sol.xiL[flat] + Ny * sol.xiN[flat];
    corr = std::max({corr, std::abs(dX[flat]), std::abs(dY[flat])});
  }
  ev.row.corr = corr;
  K.Kp[0] += grid_to_fourier(dX);
  K.Kp[1] += grid_to_fourier(dY);
  if (opt.clean_threshold > 0) K.clean_spectra(opt.clean_threshold);
  ev.row.stage_seconds[3] = lap();
  ev.row.rss_kb = std::max(ev.row.rss_kb, resident_memory_kb());
}

/// One full correction (evaluate + correct), mainly for tests; the driver
/// below interleaves refinement decisions between the two halves.
inline NewtonRow newton_step_n1(TorusEmbedding& K, const HamiltonianModel& model,
                                const NewtonOptions& opt) {
  StepEval ev = newton_evaluate_n1(K, model);
  newton_correct_n1(K, ev, opt);
  return ev.row;
}

/// Quasi-Newton driver with adaptive mode doubling: the resolution grows
/// (theta first, then phi, then both) when the error stagnates or its
/// spectrum develops tails, before any correction is attempted at the
/// poisoned resolution.
inline NewtonReport newton_iterate(TorusEmbedding& K, const HamiltonianModel& model,
                                   NewtonOptions opt) {
  if (opt.tol <= 0) throw config_error("newton_iterate: tol must be positive");
  NewtonReport report;
  const std::size_t rank = K.shape().rank();
  std::vector<std::size_t> caps = opt.max_sizes;
  if (caps.empty()) caps.assign(rank, 4096);
  if (caps.size() != rank) throw config_error("newton_iterate: cap rank mismatch");

  real prev_err = std::numeric_limits<real>::infinity();
  int increases = 0;
  int cursor = 0;  // 0: theta axes, 1: phi axes, 2: all axes

  auto try_refine = [&]() -> bool {
    for (int attempt = 0; attempt < 3; ++attempt) {
      std::vector<std::size_t> ns = K.shape().sizes();
      bool grew = false;
      const std::size_t n_axes = K.n();
      for (std::size_t a = 0; a < rank; ++a) {
        const bool is_theta = a < n_axes;
        const bool want = (cursor == 2) || (cursor == 0 && is_theta) || (cursor == 1 && !is_theta);
        if (want && ns[a] * 2 <= caps[a]) {
          ns[a] *= 2;
          grew = true;
        }
      }
      cursor = (cursor + 1) % 3;
      if (grew) {
        K.resample_to(GridShape(ns));
        return true;
      }
    }
    return false;
  };

  for (std::size_t it = 0; it < opt.max_iter; ++it) {
    StepEval ev = newton_evaluate_n1(K, model);
    ev.row.iteration = it;

    if (!std::isfinite(ev.row.err)) {
      report.rows.push_back(ev.row);
      report.status = NewtonStatus::diverged;
      return report;
    }
    if (ev.row.err < opt.tol) {
      report.rows.push_back(ev.row);
      report.status = NewtonStatus::converged;
      if (opt.verbose)
        std::fprintf(stderr, "[newton] it=%zu err=%.6e converged\n", it, ev.row.err);
      return report;
    }

    const bool stagnant = ev.row.err > opt.stagnation_ratio * prev_err;
    const bool tail_big = ev.row.tail > opt.tail_threshold;
    if ((stagnant || tail_big) && it + 1 < opt.max_iter) {
      if (try_refine()) {
        ev.row.refined = true;
        report.rows.push_back(ev.row);
        if (opt.verbose)
          std::fprintf(stderr, "[newton] it=%zu err=%.6e tail=%.2e -> refine to %zux...\n", it,
                       ev.row.err, ev.row.tail, K.shape().size(0));
        prev_err = std::numeric_limits<real>::infinity();
        increases = 0;
        continue;
      }
      if (stagnant && ev.row.err > 100 * opt.tol && std::isfinite(prev_err)) {
        report.rows.push_back(ev.row);
        report.status = NewtonStatus::resolution_exhausted;
        return report;
      }
    }

    if (ev.row.err > prev_err) {
      if (++increases >= 2) {
        report.rows.push_back(ev.row);
        report.status = NewtonStatus::diverged;
        return report;
      }
    } else {
      increases = 0;
    }

    try {
      newton_correct_n1(K, ev, opt);
    } catch (const numerical_error& e) {
      report.rows.push_back(ev.row);
      report.status = NewtonStatus::no_twist;
      report.failure = e.what();
      return report;
    }
    report.rows.push_back(ev.row);
    if (opt.verbose) {
      std::string g;
      for (std::size_t a = 0; a < ev.row.grid.size(); ++a)
        g += std::to_string(ev.row.grid[a]) + (a + 1 < ev.row.grid.size() ? "x" : "");
      std::fprintf(stderr, "[newton] it=%zu grid=%s err=%.6e corr=%.3e <T>=%.8f tail=%.2e\n",
                   it, g.c_str(), ev.row.err, ev.row.corr, ev.row.T_avg[0], ev.row.tail);
    }
    prev_err = ev.row.err;
  }
  report.status = NewtonStatus::resolution_exhausted;
  return report;
}

}  // namespace kamtori
