#include "dmimo/ipm.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/Cholesky>

namespace dmimo {

int LogUtilityProgram::add_term(double weight,
                                std::vector<std::pair<int, double>> coeffs) {
  if (weight <= 0.0) throw std::invalid_argument("term weight must be positive");
  terms_.push_back({weight, std::move(coeffs)});
  return static_cast<int>(terms_.size()) - 1;
}

int LogUtilityProgram::add_row(std::vector<std::pair<int, double>> coeffs,
                               double bound, std::string name) {
  rows_.push_back({std::move(coeffs), bound, std::move(name)});
  return static_cast<int>(rows_.size()) - 1;
}

double LogUtilityProgram::term_value(int k, const Eigen::VectorXd& z) const {
  double v = 0.0;
  for (const auto& [j, c] : terms_[k].coeffs) v += c * z[j];
  return v;
}

double LogUtilityProgram::row_slack(int i, const Eigen::VectorXd& z) const {
  double dot = 0.0;
  for (const auto& [j, c] : rows_[i].coeffs) dot += c * z[j];
  return rows_[i].bound - dot;
}

double LogUtilityProgram::max_violation(const Eigen::VectorXd& z) const {
  double worst = 0.0;
  for (int i = 0; i < num_rows(); ++i) {
    worst = std::max(worst, -row_slack(i, z));
  }
  for (int j = 0; j < num_vars_; ++j) worst = std::max(worst, -z[j]);
  return worst;
}

double LogUtilityProgram::objective(const Eigen::VectorXd& z) const {
  double u = 0.0;
  for (int k = 0; k < num_terms(); ++k) {
    u += terms_[k].weight * std::log(term_value(k, z));
  }
  return u;
}

namespace {

// Barrier potential t*U(z) + sum ln(slack) + sum ln(z); -inf outside.
double potential(const LogUtilityProgram& p, const Eigen::VectorXd& z,
                 double t) {
  double phi = 0.0;
  for (int k = 0; k < p.num_terms(); ++k) {
    const double r = p.term_value(k, z);
    if (r <= 0.0) return -std::numeric_limits<double>::infinity();
    phi += t * p.terms()[k].weight * std::log(r);
  }
  for (int i = 0; i < p.num_rows(); ++i) {
    const double s = p.row_slack(i, z);
    if (s <= 0.0) return -std::numeric_limits<double>::infinity();
    phi += std::log(s);
  }
  for (int j = 0; j < p.num_vars(); ++j) {
    if (z[j] <= 0.0) return -std::numeric_limits<double>::infinity();
    phi += std::log(z[j]);
  }
  return phi;
}

}  // namespace

IpmResult solve_log_program(const LogUtilityProgram& p,
                            const Eigen::VectorXd& z0,
                            const IpmOptions& options) {
  const int n = p.num_vars();
  if (z0.size() != n) throw std::invalid_argument("z0 size mismatch");
  if (!std::isfinite(potential(p, z0, 1.0))) {
    throw std::invalid_argument("z0 is not strictly feasible");
  }

  const double m_total = p.num_rows() + n;
  Eigen::VectorXd z = z0;
  Eigen::VectorXd grad(n), step(n);
  Eigen::MatrixXd hess(n, n);

  IpmResult result;
  double t = 1.0;
  while (true) {
    // Centering for the current t.
    for (int iter = 0;; ++iter) {
      if (result.newton_steps >= options.max_newton) break;
      grad.setZero();
      hess.setZero();
      for (int k = 0; k < p.num_terms(); ++k) {
        const auto& term = p.terms()[k];
        const double r = p.term_value(k, z);
        const double g1 = t * term.weight / r;
        const double h1 = t * term.weight / (r * r);
        for (const auto& [j, cj] : term.coeffs) {
          grad[j] += g1 * cj;
          for (const auto& [l, cl] : term.coeffs) hess(j, l) += h1 * cj * cl;
        }
      }
      for (int i = 0; i < p.num_rows(); ++i) {
        const auto& row = p.rows()[i];
        const double s = p.row_slack(i, z);
        const double g1 = 1.0 / s;
        const double h1 = 1.0 / (s * s);
        for (const auto& [j, cj] : row.coeffs) {
          grad[j] -= g1 * cj;
          for (const auto& [l, cl] : row.coeffs) hess(j, l) += h1 * cj * cl;
        }
      }
      for (int j = 0; j < n; ++j) {
        grad[j] += 1.0 / z[j];
        hess(j, j) += 1.0 / (z[j] * z[j]);
      }

      // hess holds -H (positive definite); Newton step solves hess*step=grad.
      Eigen::LDLT<Eigen::MatrixXd> ldlt(hess);
      if (ldlt.info() != Eigen::Success) {
        hess.diagonal().array() += 1e-12 * hess.diagonal().maxCoeff();
        ldlt.compute(hess);
      }
      step = ldlt.solve(grad);
      const double decrement2 = grad.dot(step);
      if (!(decrement2 > 0.0) || 0.5 * decrement2 <= options.center_tol) break;

      // Longest step staying strictly inside, then backtrack on the potential.
      double alpha = 1.0;
      for (int i = 0; i < p.num_rows(); ++i) {
        double ds = 0.0;
        for (const auto& [j, cj] : p.rows()[i].coeffs) ds += cj * step[j];
        if (ds > 0.0) alpha = std::min(alpha, 0.99 * p.row_slack(i, z) / ds);
      }
      for (int j = 0; j < n; ++j) {
        if (step[j] < 0.0) alpha = std::min(alpha, 0.99 * z[j] / -step[j]);
      }
      for (int k = 0; k < p.num_terms(); ++k) {
        double dr = 0.0;
        for (const auto& [j, cj] : p.terms()[k].coeffs) dr += cj * step[j];
        if (dr < 0.0) alpha = std::min(alpha, 0.99 * p.term_value(k, z) / -dr);
      }

      const double phi0 = potential(p, z, t);
      bool moved = false;
      for (int bt = 0; bt < 60; ++bt) {
        const Eigen::VectorXd trial = z + alpha * step;
        const double phi = potential(p, trial, t);
        if (phi > phi0 + 0.25 * alpha * decrement2 ||
            (phi > phi0 && bt > 20)) {
          z = trial;
          moved = true;
          break;
        }
        alpha *= 0.5;
      }
      ++result.newton_steps;
      if (!moved) break;  // at numerical precision for this t
    }

    result.duality_gap = m_total / t;
    if (result.duality_gap <= options.gap_tol) {
      result.converged = true;
      break;
    }
    if (result.newton_steps >= options.max_newton) break;
    t *= options.mu;
  }

  result.z = z;
  result.objective = p.objective(z);

  // Dual extraction. When the last centering stalls at numerical precision
  // the iterate sits slightly off-center, so the duals are evaluated at the
  // slacks predicted by one more (untaken) Newton step; at a true center the
  // step is negligible and this reduces to 1/(t*s).
  grad.setZero();
  hess.setZero();
  for (int k = 0; k < p.num_terms(); ++k) {
    const auto& term = p.terms()[k];
    const double r = p.term_value(k, z);
    const double g1 = t * term.weight / r;
    const double h1 = t * term.weight / (r * r);
    for (const auto& [j, cj] : term.coeffs) {
      grad[j] += g1 * cj;
      for (const auto& [l, cl] : term.coeffs) hess(j, l) += h1 * cj * cl;
    }
  }
  for (int i = 0; i < p.num_rows(); ++i) {
    const auto& row = p.rows()[i];
    const double s = p.row_slack(i, z);
    for (const auto& [j, cj] : row.coeffs) {
      grad[j] -= cj / s;
      for (const auto& [l, cl] : row.coeffs) hess(j, l) += cj * cl / (s * s);
    }
  }
  for (int j = 0; j < n; ++j) {
    grad[j] += 1.0 / z[j];
    hess(j, j) += 1.0 / (z[j] * z[j]);
  }
  Eigen::LDLT<Eigen::MatrixXd> ldlt(hess);
  if (ldlt.info() == Eigen::Success) {
    step = ldlt.solve(grad);
  } else {
    step.setZero();
  }
  result.row_duals.resize(p.num_rows());
  for (int i = 0; i < p.num_rows(); ++i) {
    const double s = p.row_slack(i, z);
    double ds = 0.0;
    for (const auto& [j, cj] : p.rows()[i].coeffs) ds += cj * step[j];
    const double predicted = s - ds;
    result.row_duals[i] =
        1.0 / (t * (predicted > 0.1 * s ? predicted : s));
  }
  return result;
}

}  // namespace dmimo
