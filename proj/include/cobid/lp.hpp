// SPDX-License-Identifier: Apache-2.0
//
// Bounded-variable linear programming. Problems are always maximizations.
//
// Dual convention: the dual of row i is the sensitivity of the optimal
// objective to its right-hand side, d(obj)/d(rhs_i). For "<=" rows of a
// maximization this is >= 0, for ">=" rows <= 0, for "=" rows either sign.
#pragma once

#include <cstdint>
#include <limits>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace cobid::lp {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class Relation { LessEqual, Equal, GreaterEqual };
enum class Status { Optimal, Infeasible, Unbounded };

const char* to_string(Status s);

struct Term {
  int var;
  double coef;
};

struct Variable {
  double lower = 0.0;
  double upper = kInf;
  double objective = 0.0;
  std::string name;
};

struct Row {
  std::vector<Term> terms;
  Relation relation = Relation::LessEqual;
  double rhs = 0.0;
  bool tagged = false;  // dual required by the caller
  std::string name;
};

/// Malformed problem (bad bounds, unknown variable references).
class StructuralError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class Problem {
 public:
  int add_variable(double lower, double upper, double objective, std::string name = {});
  int add_row(std::vector<Term> terms, Relation relation, double rhs, bool tagged = false,
              std::string name = {});

  void set_objective(int var, double coef) { vars_.at(static_cast<size_t>(var)).objective = coef; }
  void set_bounds(int var, double lower, double upper);

  [[nodiscard]] int num_vars() const { return static_cast<int>(vars_.size()); }
  [[nodiscard]] int num_rows() const { return static_cast<int>(rows_.size()); }
  [[nodiscard]] const Variable& var(int j) const { return vars_.at(static_cast<size_t>(j)); }
  [[nodiscard]] const Row& row(int i) const { return rows_.at(static_cast<size_t>(i)); }
  [[nodiscard]] const std::vector<Variable>& vars() const { return vars_; }
  [[nodiscard]] const std::vector<Row>& rows() const { return rows_; }

  /// Throws StructuralError.
  void validate() const;

  /// Fixed plain-text layout used by fixture tests:
  ///   LP max vars=<n> rows=<m>
  ///   VAR <j> <name> <lower> <upper> <obj>
  ///   ROW <i> <name> <LE|EQ|GE> <rhs> <T|-> <j>:<coef> ...
  [[nodiscard]] std::string dump() const;

 private:
  std::vector<Variable> vars_;
  std::vector<Row> rows_;
};

struct Solution {
  Status status = Status::Infeasible;
  double objective = 0.0;
  std::vector<double> values;     // per variable
  std::vector<double> row_duals;  // per row, see dual convention above
  int iterations = 0;

  [[nodiscard]] bool optimal() const { return status == Status::Optimal; }
  [[nodiscard]] double dual(int row) const { return row_duals.at(static_cast<size_t>(row)); }
};

struct Tolerances {
  double feasibility = 1e-7;
  double optimality = 1e-7;
  double pivot = 1e-7;
};

/// Backend boundary; alternative LP engines implement this.
class Solver {
 public:
  virtual ~Solver() = default;
  [[nodiscard]] virtual Solution solve(const Problem& problem) const = 0;
};

/// Dense bounded-variable primal simplex with a singleton-row presolve.
/// Dantzig pricing; switches to Bland's rule after a run of degenerate pivots.
class SimplexSolver final : public Solver {
 public:
  explicit SimplexSolver(Tolerances tol = {}) : tol_(tol) {}
  [[nodiscard]] Solution solve(const Problem& problem) const override;

 private:
  Tolerances tol_;
  [[nodiscard]] Solution solve_with(const Problem& problem, const Tolerances& tol) const;
};

/// Solves with the default backend.
Solution solve(const Problem& problem);

/// Largest absolute row or bound violation of `values` (0 if feasible).
double max_violation(const Problem& problem, const std::vector<double>& values);

}  // namespace cobid::lp
