#pragma once

#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace dmimo {

// maximize   sum_k weight_k * ln(c_k' z)
// subject to a_i' z <= b_i  for every row i, and z >= 0 elementwise.
//
// Rows and utility terms hold sparse coefficient lists. The solver is a
// log-barrier path-following method with damped Newton centering steps; the
// whole objective (utility + barrier) is self-concordant, so centering is
// well behaved and the barrier multipliers 1/(t*s_i) certify a duality gap
// of (num_rows + num_vars)/t at the final center.
class LogUtilityProgram {
 public:
  explicit LogUtilityProgram(int num_vars) : num_vars_(num_vars) {}

  int num_vars() const { return num_vars_; }

  int add_term(double weight, std::vector<std::pair<int, double>> coeffs);
  int add_row(std::vector<std::pair<int, double>> coeffs, double bound,
              std::string name = {});

  int num_terms() const { return static_cast<int>(terms_.size()); }
  int num_rows() const { return static_cast<int>(rows_.size()); }
  const std::string& row_name(int i) const { return rows_[i].name; }

  double term_value(int k, const Eigen::VectorXd& z) const;
  double row_slack(int i, const Eigen::VectorXd& z) const;
  // max_i (a_i' z - b_i), plus elementwise negativity; <= 0 means feasible.
  double max_violation(const Eigen::VectorXd& z) const;
  double objective(const Eigen::VectorXd& z) const;

  struct Term {
    double weight;
    std::vector<std::pair<int, double>> coeffs;
  };
  struct Row {
    std::vector<std::pair<int, double>> coeffs;
    double bound;
    std::string name;
  };
  const std::vector<Term>& terms() const { return terms_; }
  const std::vector<Row>& rows() const { return rows_; }

 private:
  int num_vars_;
  std::vector<Term> terms_;
  std::vector<Row> rows_;
};

struct IpmOptions {
  double gap_tol = 1e-9;      // certified duality gap at exit
  double center_tol = 1e-13;  // Newton decrement^2 / 2 per centering
  double mu = 20.0;           // barrier parameter growth
  int max_newton = 2000;
};

struct IpmResult {
  Eigen::VectorXd z;
  std::vector<double> row_duals;  // multiplier per row, >= 0
  double objective = 0.0;
  double duality_gap = 0.0;
  int newton_steps = 0;
  bool converged = false;
};

// z0 must be strictly feasible: all slacks positive, z0 > 0, c_k' z0 > 0.
IpmResult solve_log_program(const LogUtilityProgram& program,
                            const Eigen::VectorXd& z0,
                            const IpmOptions& options = {});

}  // namespace dmimo
