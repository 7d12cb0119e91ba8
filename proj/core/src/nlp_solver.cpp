#include "floatgnc/nlp_solver.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <limits>
#include <stdexcept>

#include <Eigen/SparseCholesky>

namespace floatgnc {

namespace {

using Eigen::VectorXd;

struct LbfgsMemory {
  std::deque<VectorXd> s, y;
  std::deque<double> rho;
  double gamma = 1.0;
  int capacity = 12;

  void clear() {
    s.clear();
    y.clear();
    rho.clear();
    gamma = 1.0;
  }

  void push(const VectorXd& si, const VectorXd& yi) {
    const double sy = si.dot(yi);
    if (!(sy > 1e-14 * si.norm() * yi.norm())) return;
    if (static_cast<int>(s.size()) == capacity) {
      s.pop_front();
      y.pop_front();
      rho.pop_front();
    }
    s.push_back(si);
    y.push_back(yi);
    rho.push_back(1.0 / sy);
    gamma = sy / yi.squaredNorm();
  }

  // Two-loop recursion, d = -H g.
  VectorXd direction(const VectorXd& g) const {
    VectorXd q = g;
    const int k = static_cast<int>(s.size());
    std::vector<double> alpha(k);
    for (int i = k - 1; i >= 0; --i) {
      alpha[i] = rho[i] * s[i].dot(q);
      q -= alpha[i] * y[i];
    }
    q *= gamma;
    for (int i = 0; i < k; ++i) {
      const double beta = rho[i] * y[i].dot(q);
      q += (alpha[i] - beta) * s[i];
    }
    return -q;
  }
};

struct InnerState {
  VectorXd y;       // scaled iterate
  VectorXd g;       // grad of the augmented Lagrangian, scaled coords
  VectorXd c;       // constraints at y
  double phi = 0.0; // augmented Lagrangian value
  double f = 0.0;   // raw objective
  double pg_inf = 0.0;
};

}  // namespace

NlpSolution solve_nlp(NlpProblem& problem, const Eigen::VectorXd& z0,
                      const NlpSolveOptions& options) {
  const int n = problem.num_vars();
  const int m = problem.num_eq();
  if (z0.size() != n) throw std::invalid_argument("solve_nlp: initial point has wrong size");

  const VectorXd d = problem.variable_scales();
  if (d.size() != n || (d.array() <= 0.0).any()) {
    throw std::invalid_argument("solve_nlp: variable scales must be positive");
  }
  const VectorXd ly = problem.lower().cwiseQuotient(d);
  const VectorXd uy = problem.upper().cwiseQuotient(d);
  if ((ly.array() > uy.array()).any()) {
    throw std::invalid_argument("solve_nlp: lower bound exceeds upper bound");
  }

  auto project = [&](const VectorXd& y) -> VectorXd {
    return y.cwiseMax(ly).cwiseMin(uy);
  };

  VectorXd lambda = VectorXd::Zero(m);
  double mu = options.mu0;

  VectorXd z_buf(n), grad_f(n), jtw(n), c_buf(m);

  // phi and its gradient in scaled coordinates.
  auto eval_full = [&](const VectorXd& y, InnerState& st) {
    z_buf = d.cwiseProduct(y);
    st.f = problem.eval(z_buf, grad_f, st.c);
    double phi = st.f;
    if (m > 0) {
      phi += lambda.dot(st.c) + 0.5 * mu * st.c.squaredNorm();
      VectorXd w = lambda + mu * st.c;
      problem.jac_transpose_mul(w, jtw);
      st.g = d.cwiseProduct(grad_f + jtw);
    } else {
      st.g = d.cwiseProduct(grad_f);
    }
    st.phi = phi;
    st.y = y;
  };
  auto eval_value = [&](const VectorXd& y) -> double {
    z_buf = d.cwiseProduct(y);
    double f = problem.eval_value(z_buf, c_buf);
    if (m > 0) f += lambda.dot(c_buf) + 0.5 * mu * c_buf.squaredNorm();
    return f;
  };

  auto projected_gradient_norm = [&](const InnerState& st) {
    return (st.y - project(st.y - st.g)).lpNorm<Eigen::Infinity>();
  };

  LbfgsMemory mem;
  mem.capacity = options.lbfgs_memory;

  InnerState cur;
  eval_full(project(z0.cwiseQuotient(d)), cur);
  cur.pg_inf = projected_gradient_norm(cur);

  // Stationarity tolerances are relative to the objective's own gradient
  // scale; an absolute threshold is unreachable once the problem's gradient
  // entries dwarf what double precision resolves of the merit function.
  auto gradient_scale = [&]() {
    return std::clamp(d.cwiseProduct(grad_f).lpNorm<Eigen::Infinity>(), 1.0, 1e4);
  };
  double grad_scale = gradient_scale();

  int total_inner = 0;
  int outer = 0;
  double omega = std::max(1e-2, options.grad_tol);
  double eta = 1e-2;

  // Gauss-Newton machinery, used when the problem exposes its Jacobian.
  std::vector<Eigen::Triplet<double>> jac_trip;
  Eigen::VectorXd obj_diag(n);
  const bool have_gn = problem.gauss_newton_data(jac_trip, obj_diag);
  double lm_rho = 1e-6;  // Levenberg regularization relative to the GN scale
  std::vector<int> free_map(n);

  // Free-subspace Gauss-Newton direction for the augmented Lagrangian:
  //   H = diag(obj_hess) + mu J^T J + rho*scale*I  on the unmasked variables.
  // Returns false if the factorization fails at this rho.
  auto gn_direction = [&](const VectorXd& gm, VectorXd& dir) -> bool {
    jac_trip.clear();
    if (!problem.gauss_newton_data(jac_trip, obj_diag)) return false;
    Eigen::SparseMatrix<double> jmat(m, n);
    jmat.setFromTriplets(jac_trip.begin(), jac_trip.end());
    Eigen::SparseMatrix<double> h = (jmat.transpose() * jmat) * mu;

    double diag_scale = obj_diag.sum();
    for (int i = 0; i < n; ++i) diag_scale += h.coeff(i, i);
    diag_scale = std::max(diag_scale / n, 1e-12);

    int nf = 0;
    for (int i = 0; i < n; ++i) free_map[i] = (gm[i] != 0.0 || cur.g[i] == 0.0) ? nf++ : -1;
    if (nf == 0) return false;

    std::vector<Eigen::Triplet<double>> ft;
    ft.reserve(h.nonZeros() + nf);
    for (int col = 0; col < h.outerSize(); ++col) {
      if (free_map[col] < 0) continue;
      for (Eigen::SparseMatrix<double>::InnerIterator it(h, col); it; ++it) {
        if (free_map[it.row()] >= 0) {
          ft.emplace_back(free_map[it.row()], free_map[col], it.value());
        }
      }
    }
    for (int i = 0; i < n; ++i) {
      if (free_map[i] >= 0) {
        ft.emplace_back(free_map[i], free_map[i], obj_diag[i] + lm_rho * diag_scale);
      }
    }
    Eigen::SparseMatrix<double> hff(nf, nf);
    hff.setFromTriplets(ft.begin(), ft.end());
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(hff);
    if (ldlt.info() != Eigen::Success) return false;

    // Right-hand side is the unscaled gradient on the free set.
    Eigen::VectorXd gz(nf);
    for (int i = 0; i < n; ++i) {
      if (free_map[i] >= 0) gz[free_map[i]] = cur.g[i] / d[i];
    }
    const Eigen::VectorXd step = ldlt.solve(-gz);
    if (ldlt.info() != Eigen::Success || !step.allFinite()) return false;
    dir.setZero(n);
    for (int i = 0; i < n; ++i) {
      if (free_map[i] >= 0) dir[i] = step[free_map[i]] / d[i];  // back to scaled coords
    }
    return true;
  };

  // First-order multiplier estimate: the lambda minimizing the stationarity
  // residual grad_f + J^T lambda in the same scaled metric the projected
  // gradient is measured in. Residual components at active bounds only count
  // when their sign contradicts the bound (a correctly signed component there
  // belongs to the bound multiplier); a short active-set iteration settles
  // which ones are included. Only available on problems that expose their
  // Jacobian. Uses grad_f and the Jacobian cache from the most recent
  // eval_full, both of which correspond to cur.y.
  auto lsq_multipliers = [&](VectorXd& out) -> bool {
    jac_trip.clear();
    if (!problem.gauss_newton_data(jac_trip, obj_diag)) return false;
    // -1: at lower bound, +1: at upper bound, 0: strictly inside.
    std::vector<int> side(n);
    for (int i = 0; i < n; ++i) {
      const bool at_lo = cur.y[i] <= ly[i] + 1e-12 * (1.0 + std::abs(ly[i]));
      const bool at_hi = cur.y[i] >= uy[i] - 1e-12 * (1.0 + std::abs(uy[i]));
      side[i] = at_lo ? -1 : (at_hi ? 1 : 0);
    }
    // Row-scaled system: fit d.*(grad_f + J^T lambda), matching pg_under.
    Eigen::SparseMatrix<double> jall(m, n);
    jall.setFromTriplets(jac_trip.begin(), jac_trip.end());

    std::vector<char> included(n);
    for (int i = 0; i < n; ++i) included[i] = (side[i] == 0);
    VectorXd lam = VectorXd::Zero(m);
    bool have_lam = false;
    for (int pass = 0; pass < 4; ++pass) {
      int nf = 0;
      for (int i = 0; i < n; ++i) free_map[i] = included[i] ? nf++ : -1;
      if (nf == 0) return false;
      std::vector<Eigen::Triplet<double>> jt;
      jt.reserve(jac_trip.size());
      for (const auto& t : jac_trip) {
        if (free_map[t.col()] >= 0) {
          jt.emplace_back(t.row(), free_map[t.col()], t.value() * d[t.col()]);
        }
      }
      Eigen::SparseMatrix<double> jf(m, nf);
      jf.setFromTriplets(jt.begin(), jt.end());
      Eigen::VectorXd gf(nf);
      for (int i = 0; i < n; ++i) {
        if (free_map[i] >= 0) gf[free_map[i]] = d[i] * grad_f[i];
      }
      Eigen::SparseMatrix<double> normal = (jf * Eigen::SparseMatrix<double>(jf.transpose()));
      double tr = 0.0;
      for (int i = 0; i < m; ++i) tr += normal.coeff(i, i);
      const double eps = std::max(tr / m, 1.0) * 1e-12;
      for (int i = 0; i < m; ++i) normal.coeffRef(i, i) += eps;
      Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(normal);
      if (ldlt.info() != Eigen::Success) break;
      const Eigen::VectorXd cand = ldlt.solve(-(jf * gf));
      if (ldlt.info() != Eigen::Success || !cand.allFinite()) break;
      lam = cand;
      have_lam = true;
      // Re-select: bound components rejoin the fit while their residual sign
      // fights the bound, and drop out once the bound multiplier absorbs them.
      const Eigen::VectorXd r = grad_f + jall.transpose() * lam;
      bool changed = false;
      for (int i = 0; i < n; ++i) {
        if (side[i] == 0) continue;
        const bool violating = (side[i] < 0 && r[i] < 0.0) || (side[i] > 0 && r[i] > 0.0);
        if (violating != static_cast<bool>(included[i])) {
          included[i] = violating;
          changed = true;
        }
      }
      if (!changed) break;
    }
    if (!have_lam) return false;
    out = lam;
    return true;
  };

  // One pass of the inner minimizer (projected Gauss-Newton when available,
  // box-projected damped L-BFGS otherwise) on the current subproblem.
  auto minimize_inner = [&](double tol, int budget) {
    mem.clear();
    int stall = 0;
    VectorXd gm(n), dir(n);
    for (int it = 0; it < budget; ++it) {
      cur.pg_inf = projected_gradient_norm(cur);
      if (cur.pg_inf <= tol) break;
      if (total_inner >= options.max_total_inner) break;
      ++total_inner;

      // Zero gradient components that push against an active bound.
      for (int i = 0; i < n; ++i) {
        const bool at_lo = cur.y[i] <= ly[i] + 1e-12 * (1.0 + std::abs(ly[i]));
        const bool at_hi = cur.y[i] >= uy[i] - 1e-12 * (1.0 + std::abs(uy[i]));
        const bool active = (at_lo && cur.g[i] > 0.0) || (at_hi && cur.g[i] < 0.0);
        gm[i] = active ? 0.0 : cur.g[i];
      }

      bool have_dir = false;
      if (have_gn) {
        have_dir = gn_direction(gm, dir);
        if (have_dir) {
          for (int i = 0; i < n; ++i) {
            if (gm[i] == 0.0 && cur.g[i] != 0.0) dir[i] = 0.0;
          }
          if (!(dir.dot(cur.g) < 0.0)) have_dir = false;
        }
        if (!have_dir) {
          lm_rho = std::min(lm_rho * 100.0, 1e2);
          dir = -gm;
          have_dir = true;
        }
      } else {
        dir = mem.direction(gm);
        for (int i = 0; i < n; ++i) {
          if (gm[i] == 0.0 && cur.g[i] != 0.0) dir[i] = 0.0;
        }
        if (!(dir.dot(cur.g) < -1e-14 * dir.norm() * cur.g.norm())) {
          dir = -gm;  // quasi-Newton direction unusable, fall back to steepest
        }
      }

      // Backtracking Armijo along the projected path.
      bool accepted = false;
      double step = 1.0;
      const double phi0 = cur.phi;
      VectorXd y_new;
      double phi_new = 0.0;
      int halvings = 0;
      for (int ls = 0; ls < 45 && !accepted; ++ls) {
        y_new = project(cur.y + step * dir);
        const VectorXd dy = y_new - cur.y;
        const double gd = cur.g.dot(dy);
        if (gd < 0.0) {
          phi_new = eval_value(y_new);
          if (phi_new <= phi0 + 1e-4 * gd) accepted = true;
        }
        if (!accepted) {
          step *= 0.5;
          ++halvings;
        }
      }
      if (!accepted) break;  // no progress possible at this tolerance

      // Levenberg update: full steps relax the regularization, heavy
      // backtracking tightens it.
      if (have_gn) {
        if (halvings == 0) {
          lm_rho = std::max(lm_rho / 3.0, 1e-12);
        } else if (halvings >= 5) {
          lm_rho = std::min(lm_rho * 10.0, 1e2);
        }
      }

      const VectorXd s = y_new - cur.y;
      const VectorXd g_old = cur.g;
      eval_full(y_new, cur);

      if (!have_gn) {
        VectorXd yv = cur.g - g_old;
        // Powell damping against the H0 = gamma*I metric keeps the update SPD.
        const double sBs = s.squaredNorm() / mem.gamma;
        const double sy = s.dot(yv);
        if (sy < 0.2 * sBs) {
          const double theta = 0.8 * sBs / (sBs - sy);
          yv = theta * yv + (1.0 - theta) / mem.gamma * s;
        }
        mem.push(s, yv);
      }

      if (phi0 - cur.phi <= 1e-15 * (1.0 + std::abs(phi0))) {
        if (++stall >= 8) break;
      } else {
        stall = 0;
      }
    }
    cur.pg_inf = projected_gradient_norm(cur);
  };

  if (m == 0) {
    minimize_inner(options.grad_tol * grad_scale, options.max_total_inner);
    grad_scale = gradient_scale();
    NlpSolution sol;
    sol.z = d.cwiseProduct(cur.y);
    sol.multipliers = lambda;
    sol.objective = cur.f;
    sol.max_constraint_violation = 0.0;
    sol.max_bound_violation = 0.0;
    sol.outer_iterations = 1;
    sol.inner_iterations = total_inner;
    sol.converged = cur.pg_inf <= options.grad_tol * 10.0 * grad_scale;
    sol.message = sol.converged ? "stationary" : "iteration budget exhausted";
    return sol;
  }

  // Projected gradient norm at cur.y under a candidate multiplier vector,
  // without moving the iterate. Requires the problem caches to be anchored at
  // cur.y (grad_f and the Jacobian from the latest eval).
  auto pg_under = [&](const VectorXd& lam, VectorXd& g_out) -> double {
    VectorXd w = lam + mu * cur.c;
    problem.jac_transpose_mul(w, jtw);
    g_out = d.cwiseProduct(grad_f + jtw);
    return (cur.y - project(cur.y - g_out)).lpNorm<Eigen::Infinity>();
  };

  // A nearly feasible start is worth defending: with cold or merely estimated
  // multipliers, a weak penalty lets the first inner pass walk far off the
  // constraint manifold before the outer loop can react, throwing the warm
  // start away. Only worthwhile with the Gauss-Newton inner, which stays
  // effective when the penalty is stiff from the outset.
  if (have_gn) {
    const double c0 = cur.c.lpNorm<Eigen::Infinity>();
    double mu_warm = mu;
    if (c0 <= 1e-4) {
      mu_warm = std::max(mu, 1e6);
    } else if (c0 <= 1e-2) {
      mu_warm = std::max(mu, 1e4);
    }
    if (mu_warm != mu) {
      mu = mu_warm;
      VectorXd g_new(n);
      cur.pg_inf = pg_under(lambda, g_new);
      cur.g = g_new;
      cur.phi = cur.f + lambda.dot(cur.c) + 0.5 * mu * cur.c.squaredNorm();
    }
  }

  // Seeding the multipliers from the least-squares estimate at the start point
  // matters most on warm starts: a caller handing in a near-optimal z with
  // lambda = 0 would otherwise pay several outer rounds just to rebuild them.
  // The estimate only replaces the zero vector when it measurably improves
  // stationarity, so a rank-deficient fit cannot poison the solve.
  if (have_gn) {
    VectorXd lam0, g0(n);
    if (lsq_multipliers(lam0)) {
      const double pg0 = pg_under(lam0, g0);
      if (options.verbose) {
        std::printf("auglag seed   pg(0)=%9.2e  pg(ls)=%9.2e  |c|=%9.2e\n", cur.pg_inf, pg0,
                    cur.c.lpNorm<Eigen::Infinity>());
      }
      if (pg0 < cur.pg_inf) {
        lambda = lam0;
        cur.g = g0;
        cur.phi = cur.f + lambda.dot(cur.c) + 0.5 * mu * cur.c.squaredNorm();
        cur.pg_inf = pg0;
      }
    }
  }

  bool converged = false;
  std::string message = "iteration budget exhausted";
  VectorXd y_prev = cur.y;
  double pg_prev = std::numeric_limits<double>::infinity();
  int stagnant_rounds = 0;
  for (outer = 1; outer <= options.max_outer; ++outer) {
    minimize_inner(omega, options.max_inner);
    // The line search probes trial points with eval_value, so the problem's
    // cached gradient and Jacobian may belong to a rejected candidate. Anchor
    // them back at the accepted iterate before any multiplier work.
    {
      InnerState anchored;
      eval_full(cur.y, anchored);
      cur = anchored;
      cur.pg_inf = projected_gradient_norm(cur);
    }
    grad_scale = gradient_scale();
    const double cnorm = cur.c.lpNorm<Eigen::Infinity>();
    if (options.verbose) {
      std::printf("auglag outer %2d  inner %6d  |c|=%9.2e  pg=%9.2e  mu=%8.1e  f=%.8e\n",
                  outer, total_inner, cnorm, cur.pg_inf, mu, cur.f);
    }

    // Once mu sits at its cap the penalty path is exhausted and the multiplier
    // iteration is the only mechanism left that can improve feasibility, so
    // the update fires even when the round missed its feasibility target.
    const bool feasible_round = cnorm <= std::max(eta, options.eq_tol);
    if (feasible_round || mu >= options.mu_max) {
      // Two candidate updates: the classical first-order step, and the
      // least-squares estimate when the Jacobian is available. The classical
      // step amplifies whatever residual the inner could not remove (at large
      // mu that walks the multipliers away from stationarity), so let the
      // measured projected gradient pick the winner.
      VectorXd lam_first = lambda + mu * cur.c;
      VectorXd g_first(n);
      const double pg_first = pg_under(lam_first, g_first);
      VectorXd lam_ls, g_ls(n);
      bool use_ls = false;
      double pg_ls = 0.0;
      if (have_gn && lsq_multipliers(lam_ls)) {
        pg_ls = pg_under(lam_ls, g_ls);
        use_ls = pg_ls < pg_first;
      }
      const double pg_best = use_ls ? pg_ls : pg_first;
      // With feasibility already at its final tolerance, only stationarity is
      // left; adopting an update that worsens it would just walk the
      // multipliers away from the answer one round at a time.
      if (cnorm > options.eq_tol || pg_best < cur.pg_inf) {
        lambda = use_ls ? lam_ls : lam_first;
        cur.g = use_ls ? g_ls : g_first;
        cur.pg_inf = pg_best;
      }
      if (feasible_round) {
        eta = std::max(eta * 0.2, options.eq_tol);
        omega = std::max(omega * 0.2, 0.5 * options.grad_tol);
      }
    } else {
      mu = std::min(mu * options.mu_growth, options.mu_max);
      VectorXd g_new(n);
      cur.pg_inf = pg_under(lambda, g_new);
      cur.g = g_new;
    }
    cur.phi = cur.f + lambda.dot(cur.c) + 0.5 * mu * cur.c.squaredNorm();

    // Convergence is certified against the multipliers actually returned.
    if (cnorm <= options.eq_accept && cur.pg_inf <= options.grad_tol * grad_scale) {
      converged = true;
      message = "kkt point";
      break;
    }
    if (total_inner >= options.max_total_inner) break;

    // Fixed point of the outer loop: the penalty cannot grow further, the
    // iterate is frozen, and the stationarity residual is no longer improving.
    // More rounds would replay the same arithmetic.
    const double y_move = (cur.y - y_prev).lpNorm<Eigen::Infinity>();
    if (mu >= options.mu_max &&
        y_move <= 1e-14 * (1.0 + cur.y.lpNorm<Eigen::Infinity>()) &&
        cur.pg_inf >= 0.99 * pg_prev) {
      if (++stagnant_rounds >= 3) {
        message = "stalled";
        break;
      }
    } else {
      stagnant_rounds = 0;
    }
    y_prev = cur.y;
    pg_prev = cur.pg_inf;
  }

  NlpSolution sol;
  sol.z = d.cwiseProduct(cur.y);
  sol.multipliers = lambda;
  sol.objective = cur.f;
  sol.max_constraint_violation = cur.c.lpNorm<Eigen::Infinity>();
  sol.max_bound_violation = 0.0;
  sol.outer_iterations = outer;
  sol.inner_iterations = total_inner;
  sol.converged = converged || (sol.max_constraint_violation <= options.eq_accept &&
                                cur.pg_inf <= 10.0 * options.grad_tol * grad_scale);
  if (!converged && sol.converged) message = "feasible and nearly stationary";
  if (!sol.converged) {
    message = "not converged: |c|=" + std::to_string(sol.max_constraint_violation);
  }
  sol.message = message;
  return sol;
}

}  // namespace floatgnc
