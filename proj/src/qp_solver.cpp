// Copyright 2026 The qpctl Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "qpctl/qp_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace qpctl {

namespace {

constexpr double kDependenceTol = 1e-12;

void validate_dimensions(const QpProblem& p) {
  const Eigen::Index n = p.num_vars();
  if (n < 1) throw QpError("qp: empty problem");
  if (p.P.rows() != n || p.P.cols() != n) throw QpError("qp: P dimension mismatch");
  if (p.A_eq.rows() != p.b_eq.size() || (p.A_eq.rows() > 0 && p.A_eq.cols() != n))
    throw QpError("qp: equality block dimension mismatch");
  if (p.A_in.rows() != p.b_in.size() || (p.A_in.rows() > 0 && p.A_in.cols() != n))
    throw QpError("qp: inequality block dimension mismatch");
  if (!p.P.allFinite() || !p.c.allFinite() || !p.A_eq.allFinite() ||
      !p.b_eq.allFinite() || !p.A_in.allFinite() || !p.b_in.allFinite())
    throw QpError("qp: non-finite problem data");
}

// Greedy selection of linearly independent equality rows, lowest index first.
std::vector<int> independent_rows(const Eigen::MatrixXd& A) {
  std::vector<int> kept;
  if (A.rows() == 0) return kept;
  Eigen::MatrixXd basis(A.rows(), A.cols());
  int nb = 0;
  for (int i = 0; i < A.rows(); ++i) {
    Eigen::VectorXd r = A.row(i).transpose();
    const double norm0 = r.norm();
    for (int k = 0; k < nb; ++k) r -= basis.row(k).dot(r) * basis.row(k).transpose();
    if (r.norm() > 1e-10 * std::max(1.0, norm0)) {
      basis.row(nb++) = r.transpose() / r.norm();
      kept.push_back(i);
    }
  }
  return kept;
}

}  // namespace

const char* to_string(QpStatus status) {
  switch (status) {
    case QpStatus::optimal: return "optimal";
    case QpStatus::infeasible: return "infeasible";
    case QpStatus::max_iterations: return "max_iterations";
  }
  return "unknown";
}

double kkt_residual(const QpProblem& problem, const Eigen::VectorXd& x,
                    const Eigen::VectorXd& y_eq, const Eigen::VectorXd& y_in) {
  const Eigen::Index n = problem.num_vars();
  if (x.size() != n || y_eq.size() != problem.A_eq.rows() ||
      y_in.size() != problem.A_in.rows())
    throw QpError("kkt_residual: dimension mismatch");

  const Eigen::MatrixXd Ps = 0.5 * (problem.P + problem.P.transpose());
  Eigen::VectorXd stat = Ps * x + problem.c;
  if (problem.A_eq.rows() > 0) stat += problem.A_eq.transpose() * y_eq;
  if (problem.A_in.rows() > 0) stat += problem.A_in.transpose() * y_in;
  double res = stat.lpNorm<Eigen::Infinity>();

  if (problem.A_eq.rows() > 0)
    res = std::max(res, (problem.A_eq * x - problem.b_eq).lpNorm<Eigen::Infinity>());
  if (problem.A_in.rows() > 0) {
    const Eigen::VectorXd slack = problem.A_in * x - problem.b_in;
    res = std::max(res, slack.maxCoeff());           // primal violation
    res = std::max(res, -y_in.minCoeff());           // dual feasibility
    res = std::max(res, (y_in.array() * slack.array()).abs().maxCoeff());
  }
  return std::max(res, 0.0);
}

// Deterministic re-solve of the problem with a fixed working set: one KKT
// system [P E'; E 0] solved by partially pivoted LU plus one step of
// iterative refinement. `active` are inequality rows treated as equalities.
QpSolution QpSolver::solve_equality_constrained(const QpProblem& p,
                                                const std::vector<int>& active,
                                                const std::vector<int>& kept_eq) const {
  const Eigen::Index n = p.num_vars();
  const Eigen::Index me = static_cast<Eigen::Index>(kept_eq.size());
  const Eigen::Index ma = static_cast<Eigen::Index>(active.size());
  const Eigen::Index m = me + ma;

  const Eigen::MatrixXd Ps = 0.5 * (p.P + p.P.transpose());
  Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(n + m, n + m);
  kkt.topLeftCorner(n, n) = Ps;
  Eigen::VectorXd rhs(n + m);
  rhs.head(n) = -p.c;
  for (Eigen::Index i = 0; i < me; ++i) {
    kkt.block(n + i, 0, 1, n) = p.A_eq.row(kept_eq[i]);
    kkt.block(0, n + i, n, 1) = p.A_eq.row(kept_eq[i]).transpose();
    rhs[n + i] = p.b_eq[kept_eq[i]];
  }
  for (Eigen::Index i = 0; i < ma; ++i) {
    kkt.block(n + me + i, 0, 1, n) = p.A_in.row(active[i]);
    kkt.block(0, n + me + i, n, 1) = p.A_in.row(active[i]).transpose();
    rhs[n + me + i] = p.b_in[active[i]];
  }

  Eigen::PartialPivLU<Eigen::MatrixXd> lu(kkt);
  Eigen::VectorXd sol = lu.solve(rhs);
  sol += lu.solve(rhs - kkt * sol);  // refinement

  QpSolution out;
  out.x = sol.head(n);
  out.y_eq = Eigen::VectorXd::Zero(p.A_eq.rows());
  for (Eigen::Index i = 0; i < me; ++i) out.y_eq[kept_eq[i]] = sol[n + i];
  out.y_in = Eigen::VectorXd::Zero(p.A_in.rows());
  for (Eigen::Index i = 0; i < ma; ++i) out.y_in[active[i]] = sol[n + me + i];
  out.active_set = active;
  return out;
}

QpSolution QpSolver::solve(const QpProblem& p) {
  validate_dimensions(p);
  const Eigen::Index n = p.num_vars();
  const Eigen::Index m_eq = p.A_eq.rows();
  const Eigen::Index m_in = p.A_in.rows();
  const double tol = options_.tolerance;
  const double feas_tol = std::max(tol, 1e-11);

  const Eigen::MatrixXd Ps = 0.5 * (p.P + p.P.transpose());
  const std::vector<int> kept_eq = independent_rows(p.A_eq);

  // Particular solution of the equalities; inconsistent rows => infeasible.
  Eigen::VectorXd x_part = Eigen::VectorXd::Zero(n);
  if (m_eq > 0) {
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(p.A_eq);
    x_part = cod.solve(p.b_eq);
    const double eq_err = (p.A_eq * x_part - p.b_eq).lpNorm<Eigen::Infinity>();
    if (eq_err > std::max(feas_tol, 1e-9 * p.b_eq.lpNorm<Eigen::Infinity>())) {
      QpSolution out;
      out.x = x_part;
      out.y_eq = Eigen::VectorXd::Zero(m_eq);
      out.y_in = Eigen::VectorXd::Zero(m_in);
      out.status = QpStatus::infeasible;
      out.kkt_residual = kkt_residual(p, out.x, out.y_eq, out.y_in);
      return out;
    }
  }

  // Nullspace basis of the (independent) equality rows.
  Eigen::MatrixXd Z;
  Eigen::Index nz = n;
  if (!kept_eq.empty()) {
    Eigen::MatrixXd Ek(kept_eq.size(), n);
    for (size_t i = 0; i < kept_eq.size(); ++i) Ek.row(i) = p.A_eq.row(kept_eq[i]);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(Ek.transpose());
    const Eigen::MatrixXd Q = qr.householderQ();
    nz = n - static_cast<Eigen::Index>(kept_eq.size());
    Z = Q.rightCols(nz);
  } else {
    Z = Eigen::MatrixXd::Identity(n, n);
  }

  // Fully determined by equalities: check the inequalities and return.
  if (nz == 0) {
    std::vector<int> active;
    QpSolution out = solve_equality_constrained(p, active, kept_eq);
    out.status = QpStatus::optimal;
    if (m_in > 0) {
      const double viol = (p.A_in * out.x - p.b_in).maxCoeff();
      if (viol > feas_tol) out.status = QpStatus::infeasible;
    }
    out.kkt_residual = kkt_residual(p, out.x, out.y_eq, out.y_in);
    return out;
  }

  // Reduced strictly convex problem: x = x_part + Z v.
  const Eigen::MatrixXd H = Z.transpose() * Ps * Z;
  const Eigen::VectorXd g = Z.transpose() * (Ps * x_part + p.c);
  Eigen::LLT<Eigen::MatrixXd> hllt(H);
  if (hllt.info() != Eigen::Success)
    throw QpError("qp: reduced Hessian is not positive definite on the equality nullspace");
  {
    const Eigen::VectorXd probe = hllt.solve(g);
    if ((H * probe - g).lpNorm<Eigen::Infinity>() >
        1e-6 * std::max(1.0, g.lpNorm<Eigen::Infinity>()))
      throw QpError("qp: reduced Hessian is numerically singular");
  }

  Eigen::MatrixXd C;      // m_in x nz
  Eigen::VectorXd d;      // m_in
  if (m_in > 0) {
    C = p.A_in * Z;
    d = p.b_in - p.A_in * x_part;
  }

  auto finish = [&](const std::vector<int>& active_sorted) {
    QpSolution out = solve_equality_constrained(p, active_sorted, kept_eq);
    out.status = QpStatus::optimal;
    out.kkt_residual = kkt_residual(p, out.x, out.y_eq, out.y_in);
    return out;
  };

  // Warm start: if the hinted active set already satisfies the KKT
  // conditions, the re-solve on that set is the optimum.
  if (p.warm_start && p.warm_start->y_in.size() == m_in) {
    std::vector<int> hinted;
    for (int i = 0; i < m_in; ++i)
      if (p.warm_start->y_in[i] > tol) hinted.push_back(i);
    if (static_cast<Eigen::Index>(hinted.size()) <= nz) {
      QpSolution cand = finish(hinted);
      if (cand.kkt_residual <= feas_tol) {
        cand.iterations = 0;
        return cand;
      }
    }
  }

  // Dual active-set iteration (Goldfarb-Idnani) on the reduced problem.
  Eigen::VectorXd v = hllt.solve(-g);
  std::vector<int> active;       // insertion order
  std::vector<double> y_active;  // matching duals, kept >= 0
  int iterations = 0;

  auto current_solution = [&](QpStatus status) {
    QpSolution out;
    out.x = x_part + Z * v;
    out.y_eq = Eigen::VectorXd::Zero(m_eq);
    out.y_in = Eigen::VectorXd::Zero(m_in);
    for (size_t i = 0; i < active.size(); ++i) out.y_in[active[i]] = y_active[i];
    if (m_eq > 0) {
      Eigen::VectorXd resid = -(Ps * out.x + p.c);
      if (m_in > 0) resid -= p.A_in.transpose() * out.y_in;
      Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(
          p.A_eq.transpose());
      out.y_eq = cod.solve(resid);
    }
    out.status = status;
    out.iterations = iterations;
    out.active_set = active;
    std::sort(out.active_set.begin(), out.active_set.end());
    out.kkt_residual = kkt_residual(p, out.x, out.y_eq, out.y_in);
    return out;
  };

  while (true) {
    // Most violated inequality; ties go to the lowest row index.
    int worst = -1;
    double worst_viol = feas_tol;
    for (int i = 0; i < m_in; ++i) {
      const double s = C.row(i).dot(v) - d[i];
      if (s > worst_viol) {
        worst_viol = s;
        worst = i;
      }
    }
    if (worst < 0) {
      std::vector<int> sorted = active;
      std::sort(sorted.begin(), sorted.end());
      QpSolution out = finish(sorted);
      out.iterations = iterations;
      // Degenerate active sets can make the re-solve worse than the raw
      // iterate; keep whichever certifies better.
      QpSolution raw = current_solution(QpStatus::optimal);
      if (!(out.kkt_residual <= raw.kkt_residual)) return raw;
      return out;
    }

    const Eigen::VectorXd cp = C.row(worst).transpose();
    double y_new = 0.0;

    while (true) {
      if (iterations >= options_.max_iterations)
        return current_solution(QpStatus::max_iterations);
      ++iterations;

      const Eigen::Index na = static_cast<Eigen::Index>(active.size());
      const Eigen::VectorXd hi_cp = hllt.solve(cp);
      Eigen::VectorXd r(na);
      Eigen::VectorXd z = hi_cp;
      if (na > 0) {
        Eigen::MatrixXd N(na, nz);
        for (Eigen::Index i = 0; i < na; ++i) N.row(i) = C.row(active[i]);
        const Eigen::MatrixXd HiNt = hllt.solve(N.transpose());
        const Eigen::MatrixXd M = N * HiNt;
        r = M.ldlt().solve(N * hi_cp);
        z -= HiNt * r;
      }

      const double czp = cp.dot(z);
      // Dual step bound from the active duals; ties between blocking
      // constraints go to the lowest row index.
      double t1 = std::numeric_limits<double>::infinity();
      int blocker = -1;
      for (Eigen::Index i = 0; i < na; ++i) {
        if (r[i] > kDependenceTol) {
          const double ratio = y_active[i] / r[i];
          if (ratio < t1 ||
              (ratio == t1 && blocker >= 0 && active[i] < active[blocker])) {
            t1 = ratio;
            blocker = static_cast<int>(i);
          }
        }
      }

      if (czp <= kDependenceTol * std::max(1.0, cp.squaredNorm())) {
        // cp depends linearly on the active normals.
        if (blocker < 0) return current_solution(QpStatus::infeasible);
        for (Eigen::Index i = 0; i < na; ++i) y_active[i] -= t1 * r[i];
        y_new += t1;
        active.erase(active.begin() + blocker);
        y_active.erase(y_active.begin() + blocker);
        continue;
      }

      const double s = cp.dot(v) - d[worst];
      const double t2 = s / czp;
      const double t = std::min(t1, t2);
      v -= t * z;
      for (Eigen::Index i = 0; i < na; ++i) y_active[i] -= t * r[i];
      y_new += t;

      if (t2 <= t1) {
        active.push_back(worst);
        y_active.push_back(y_new);
        break;  // back to violation scan
      }
      active.erase(active.begin() + blocker);
      y_active.erase(y_active.begin() + blocker);
    }
  }
}

}  // namespace qpctl
