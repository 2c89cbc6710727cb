// SPDX-License-Identifier: Apache-2.0
#include "cobid/lp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include <Eigen/Dense>

#include "cobid/errors.hpp"

namespace cobid::lp {

const char* to_string(Status s) {
  switch (s) {
    case Status::Optimal: return "Optimal";
    case Status::Infeasible: return "Infeasible";
    case Status::Unbounded: return "Unbounded";
  }
  return "?";
}

int Problem::add_variable(double lower, double upper, double objective, std::string name) {
  vars_.push_back({lower, upper, objective, std::move(name)});
  return static_cast<int>(vars_.size()) - 1;
}

int Problem::add_row(std::vector<Term> terms, Relation relation, double rhs, bool tagged,
                     std::string name) {
  rows_.push_back({std::move(terms), relation, rhs, tagged, std::move(name)});
  return static_cast<int>(rows_.size()) - 1;
}

void Problem::set_bounds(int var, double lower, double upper) {
  auto& v = vars_.at(static_cast<size_t>(var));
  v.lower = lower;
  v.upper = upper;
}

void Problem::validate() const {
  for (size_t j = 0; j < vars_.size(); ++j) {
    const auto& v = vars_[j];
    if (std::isnan(v.lower) || std::isnan(v.upper) || !std::isfinite(v.objective))
      throw StructuralError("variable " + std::to_string(j) + " has NaN bound or objective");
    if (v.lower > v.upper)
      throw StructuralError("variable " + std::to_string(j) + " (" + v.name +
                            ") has lower > upper");
    if (v.lower == kInf || v.upper == -kInf)
      throw StructuralError("variable " + std::to_string(j) + " has an empty domain");
  }
  for (size_t i = 0; i < rows_.size(); ++i) {
    const auto& r = rows_[i];
    if (!std::isfinite(r.rhs)) throw StructuralError("row " + std::to_string(i) + " (" + r.name + ") has non-finite rhs");
    for (const auto& t : r.terms) {
      if (t.var < 0 || t.var >= num_vars())
        throw StructuralError("row " + std::to_string(i) + " references unknown variable " +
                              std::to_string(t.var));
      if (!std::isfinite(t.coef))
        throw StructuralError("row " + std::to_string(i) + " has non-finite coefficient");
    }
  }
}

namespace {

std::string fmt_double(double x) {
  if (x == kInf) return "inf";
  if (x == -kInf) return "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

const char* rel_code(Relation r) {
  switch (r) {
    case Relation::LessEqual: return "LE";
    case Relation::Equal: return "EQ";
    case Relation::GreaterEqual: return "GE";
  }
  return "?";
}

}  // namespace

std::string Problem::dump() const {
  std::ostringstream os;
  os << "LP max vars=" << vars_.size() << " rows=" << rows_.size() << "\n";
  for (size_t j = 0; j < vars_.size(); ++j) {
    const auto& v = vars_[j];
    os << "VAR " << j << ' ' << (v.name.empty() ? "_" : v.name) << ' ' << fmt_double(v.lower)
       << ' ' << fmt_double(v.upper) << ' ' << fmt_double(v.objective) << "\n";
  }
  for (size_t i = 0; i < rows_.size(); ++i) {
    const auto& r = rows_[i];
    os << "ROW " << i << ' ' << (r.name.empty() ? "_" : r.name) << ' ' << rel_code(r.relation)
       << ' ' << fmt_double(r.rhs) << ' ' << (r.tagged ? 'T' : '-');
    for (const auto& t : r.terms) os << ' ' << t.var << ':' << fmt_double(t.coef);
    os << "\n";
  }
  return os.str();
}

double max_violation(const Problem& p, const std::vector<double>& x) {
  double worst = 0.0;
  for (int j = 0; j < p.num_vars(); ++j) {
    const auto& v = p.var(j);
    worst = std::max(worst, v.lower - x[static_cast<size_t>(j)]);
    worst = std::max(worst, x[static_cast<size_t>(j)] - v.upper);
  }
  for (const auto& r : p.rows()) {
    double act = 0.0;
    for (const auto& t : r.terms) act += t.coef * x[static_cast<size_t>(t.var)];
    switch (r.relation) {
      case Relation::LessEqual: worst = std::max(worst, act - r.rhs); break;
      case Relation::GreaterEqual: worst = std::max(worst, r.rhs - act); break;
      case Relation::Equal: worst = std::max(worst, std::abs(act - r.rhs)); break;
    }
  }
  return worst;
}

namespace {

enum class NonbasicAt : std::uint8_t { Lower, Upper, Zero, Basic };

/// Dense tableau simplex on  M x = 0,  lo <= x <= hi,  maximize c x.
/// Columns: structural, then one logical per row (coefficient -1, value =
/// row activity), then artificials.
class Tableau {
 public:
  Tableau(int m, int ncols, const Tolerances& tol)
      : m_(m), n_(ncols), tol_(tol), t_(static_cast<size_t>(m + 1) * static_cast<size_t>(ncols), 0.0),
        lo_(static_cast<size_t>(ncols)), hi_(static_cast<size_t>(ncols)),
        x_(static_cast<size_t>(ncols), 0.0), cost_(static_cast<size_t>(ncols), 0.0),
        state_(static_cast<size_t>(ncols), NonbasicAt::Lower), basis_(static_cast<size_t>(m), -1),
        excluded_(static_cast<size_t>(ncols), 0) {}

  double& at(int i, int j) { return t_[static_cast<size_t>(i) * n_ + static_cast<size_t>(j)]; }
  double at(int i, int j) const { return t_[static_cast<size_t>(i) * n_ + static_cast<size_t>(j)]; }
  double* row(int i) { return &t_[static_cast<size_t>(i) * n_]; }
  const double* row(int i) const { return &t_[static_cast<size_t>(i) * n_]; }

  int m_;
  size_t n_;
  Tolerances tol_;
  std::vector<double> t_;  // m rows + reduced-cost row
  std::vector<double> lo_, hi_, x_, cost_;
  std::vector<NonbasicAt> state_;
  std::vector<int> basis_;
  std::vector<char> excluded_;
  Eigen::MatrixXd a0_;  // original rows, for reinversion
  int iterations_ = 0;

  int ncols() const { return static_cast<int>(n_); }

  void recompute_basics() {
    for (int i = 0; i < m_; ++i) {
      const double* r = row(i);
      double v = 0.0;
      for (int j = 0; j < ncols(); ++j)
        if (state_[static_cast<size_t>(j)] != NonbasicAt::Basic && x_[static_cast<size_t>(j)] != 0.0)
          v -= r[j] * x_[static_cast<size_t>(j)];
      x_[static_cast<size_t>(basis_[static_cast<size_t>(i)])] = v;
    }
  }

  void recompute_reduced_costs() {
    double* d = row(m_);
    for (int j = 0; j < ncols(); ++j) d[j] = cost_[static_cast<size_t>(j)];
    for (int i = 0; i < m_; ++i) {
      double cb = cost_[static_cast<size_t>(basis_[static_cast<size_t>(i)])];
      if (cb == 0.0) continue;
      const double* r = row(i);
      for (int j = 0; j < ncols(); ++j) d[j] -= cb * r[j];
    }
  }

  /// Rebuilds B^{-1} A from the original constraint matrix for the current basis.
  void reinvert() {
    Eigen::MatrixXd B(m_, m_);
    for (int i = 0; i < m_; ++i)
      for (int k = 0; k < m_; ++k) B(i, k) = a0_(i, basis_[static_cast<size_t>(k)]);
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(B);
    Eigen::MatrixXd T = lu.solve(a0_);
    if (!T.allFinite()) throw NumericalError("simplex basis became singular");
    for (int i = 0; i < m_; ++i) {
      double* r = row(i);
      for (int j = 0; j < ncols(); ++j) r[j] = T(i, j);
    }
    for (int k = 0; k < m_; ++k) at(k, basis_[static_cast<size_t>(k)]) = 1.0;
    recompute_basics();
    recompute_reduced_costs();
  }

  void pivot(int r, int q) {
    double* pr = row(r);
    const double p = pr[q];
    for (int j = 0; j < ncols(); ++j) pr[j] /= p;
    pr[q] = 1.0;
    for (int i = 0; i <= m_; ++i) {
      if (i == r) continue;
      double* ri = row(i);
      const double f = ri[q];
      if (f == 0.0) continue;
      for (int j = 0; j < ncols(); ++j) ri[j] -= f * pr[j];
      ri[q] = 0.0;
    }
  }


  /// Runs the simplex on the current cost vector. Returns Optimal or Unbounded.
  Status run(int max_iter) {
    int degenerate_run = 0;
    bool bland = false;
    int since_refresh = 0;
    for (;;) {
      if (++iterations_ > max_iter)
        throw NumericalError("simplex iteration limit exceeded (" + std::to_string(max_iter) + ")");
      if (++since_refresh >= 64) {
        recompute_basics();
        recompute_reduced_costs();
        since_refresh = 0;
      }
      const double* d = row(m_);
      int q = -1;
      double best = 0.0;
      for (int j = 0; j < ncols(); ++j) {
        auto sj = static_cast<size_t>(j);
        if (state_[sj] == NonbasicAt::Basic || excluded_[sj]) continue;
        if (lo_[sj] == hi_[sj]) continue;
        double dj = d[j];
        bool up = dj > tol_.optimality && x_[sj] < hi_[sj];
        bool down = dj < -tol_.optimality && x_[sj] > lo_[sj];
        if (!up && !down) continue;
        if (bland) {
          q = j;
          break;
        }
        if (std::abs(dj) > best) {
          best = std::abs(dj);
          q = j;
        }
      }
      if (q < 0) return Status::Optimal;

      const auto sq = static_cast<size_t>(q);
      const double dir = d[q] > 0 ? 1.0 : -1.0;
      double theta = hi_[sq] - lo_[sq];  // bound flip distance
      int leave = -1;
      double leave_piv = 0.0;
      // Two-pass (Harris) ratio test: bound the step with slightly relaxed
      // bounds, then take the largest pivot among rows blocking within it.
      auto limit_of = [&](int i, double a, double relax) {
        auto b = static_cast<size_t>(basis_[static_cast<size_t>(i)]);
        double rate = -dir * a;
        if (rate < 0) return lo_[b] == -kInf ? kInf : std::max(0.0, (x_[b] - lo_[b] + relax) / -rate);
        return hi_[b] == kInf ? kInf : std::max(0.0, (hi_[b] - x_[b] + relax) / rate);
      };
      if (bland) {
        for (int i = 0; i < m_; ++i) {
          double a = at(i, q);
          if (std::abs(a) <= tol_.pivot) continue;
          double limit = limit_of(i, a, 0.0);
          if (limit < theta - 1e-12 ||
              (limit <= theta + 1e-12 && leave >= 0 && basis_[static_cast<size_t>(i)] < basis_[static_cast<size_t>(leave)])) {
            theta = limit;
            leave = i;
            leave_piv = a;
          }
        }
      } else {
        double bound = kInf;
        for (int i = 0; i < m_; ++i) {
          double a = at(i, q);
          if (std::abs(a) <= tol_.pivot) continue;
          bound = std::min(bound, limit_of(i, a, tol_.feasibility));
        }
        if (bound < theta) {
          for (int i = 0; i < m_; ++i) {
            double a = at(i, q);
            if (std::abs(a) <= tol_.pivot) continue;
            double limit = limit_of(i, a, 0.0);
            if (limit <= bound && std::abs(a) > std::abs(leave_piv)) {
              leave = i;
              leave_piv = a;
              theta = limit;
            }
          }
        }
      }
      if (theta == kInf) return Status::Unbounded;

      if (theta <= 1e-12) {
        if (++degenerate_run > 50) bland = true;
      } else {
        degenerate_run = 0;
        bland = false;
      }

      // move entering variable and update basics
      x_[sq] += dir * theta;
      if (theta != 0.0) {
        for (int i = 0; i < m_; ++i) {
          double a = at(i, q);
          if (a == 0.0) continue;
          x_[static_cast<size_t>(basis_[static_cast<size_t>(i)])] -= dir * theta * a;
        }
      }
      if (leave < 0) {
        // bound flip
        state_[sq] = dir > 0 ? NonbasicAt::Upper : NonbasicAt::Lower;
        x_[sq] = dir > 0 ? hi_[sq] : lo_[sq];
        continue;
      }
      auto out = static_cast<size_t>(basis_[static_cast<size_t>(leave)]);
      double rate = -dir * leave_piv;
      if (rate < 0) {
        x_[out] = lo_[out];
        state_[out] = NonbasicAt::Lower;
      } else {
        x_[out] = hi_[out];
        state_[out] = NonbasicAt::Upper;
      }
      basis_[static_cast<size_t>(leave)] = q;
      state_[sq] = NonbasicAt::Basic;
      pivot(leave, q);
    }
  }
};

struct ColumnEntry {
  int row;
  double coef;
};

}  // namespace

Solution SimplexSolver::solve(const Problem& problem) const {
  problem.validate();
  try {
    return solve_with(problem, tol_);
  } catch (const NumericalError&) {
    // one retry from scratch with a more conservative pivot threshold
    Tolerances safe = tol_;
    safe.pivot = std::max(tol_.pivot, 1e-5);
    if (safe.pivot == tol_.pivot) throw;
    return solve_with(problem, safe);
  }
}

Solution SimplexSolver::solve_with(const Problem& problem, const Tolerances& tol) const {
  const int nv = problem.num_vars();
  const int nr = problem.num_rows();

  // Normalized rows (duplicate terms merged, zeros dropped).
  std::vector<std::vector<Term>> rows(static_cast<size_t>(nr));
  for (int i = 0; i < nr; ++i) {
    auto& out = rows[static_cast<size_t>(i)];
    out = problem.row(i).terms;
    std::sort(out.begin(), out.end(), [](const Term& a, const Term& b) { return a.var < b.var; });
    size_t w = 0;
    for (size_t k = 0; k < out.size(); ++k) {
      if (w > 0 && out[w - 1].var == out[k].var) out[w - 1].coef += out[k].coef;
      else out[w++] = out[k];
    }
    out.resize(w);
    std::erase_if(out, [](const Term& t) { return t.coef == 0.0; });
  }
  std::vector<std::vector<ColumnEntry>> cols(static_cast<size_t>(nv));
  for (int i = 0; i < nr; ++i)
    for (const auto& t : rows[static_cast<size_t>(i)]) cols[static_cast<size_t>(t.var)].push_back({i, t.coef});

  Solution sol;
  sol.values.assign(static_cast<size_t>(nv), 0.0);
  sol.row_duals.assign(static_cast<size_t>(nr), 0.0);

  // ---- presolve: fixed variables and singleton equality rows
  std::vector<char> fixed(static_cast<size_t>(nv), 0);
  std::vector<double> value(static_cast<size_t>(nv), 0.0);
  std::vector<char> row_active(static_cast<size_t>(nr), 1);
  struct Elimination {
    int row;
    int var;
    double coef;
  };
  std::vector<Elimination> eliminated;

  for (int j = 0; j < nv; ++j) {
    const auto& v = problem.var(j);
    if (v.lower == v.upper) {
      fixed[static_cast<size_t>(j)] = 1;
      value[static_cast<size_t>(j)] = v.lower;
    }
  }
  const double ftol = tol.feasibility;
  bool changed = true;
  while (changed) {
    changed = false;
    for (int i = 0; i < nr; ++i) {
      if (!row_active[static_cast<size_t>(i)]) continue;
      const auto& r = problem.row(i);
      int free_count = 0;
      int last = -1;
      double last_coef = 0.0;
      double fixed_sum = 0.0;
      for (const auto& t : rows[static_cast<size_t>(i)]) {
        if (fixed[static_cast<size_t>(t.var)]) fixed_sum += t.coef * value[static_cast<size_t>(t.var)];
        else {
          ++free_count;
          last = t.var;
          last_coef = t.coef;
        }
      }
      if (free_count == 0) {
        double slack = r.rhs - fixed_sum;
        double scale = std::max(1.0, std::abs(r.rhs));
        bool ok = true;
        switch (r.relation) {
          case Relation::LessEqual: ok = slack >= -ftol * scale; break;
          case Relation::GreaterEqual: ok = slack <= ftol * scale; break;
          case Relation::Equal: ok = std::abs(slack) <= ftol * scale; break;
        }
        if (!ok) {
          sol.status = Status::Infeasible;
          return sol;
        }
        row_active[static_cast<size_t>(i)] = 0;
        changed = true;
      } else if (free_count == 1 && r.relation == Relation::Equal) {
        auto sj = static_cast<size_t>(last);
        double v = (r.rhs - fixed_sum) / last_coef;
        const auto& var = problem.var(last);
        double scale = std::max(1.0, std::abs(v));
        if (v < var.lower - ftol * scale || v > var.upper + ftol * scale) {
          sol.status = Status::Infeasible;
          return sol;
        }
        value[sj] = std::clamp(v, var.lower, var.upper);
        fixed[sj] = 1;
        row_active[static_cast<size_t>(i)] = 0;
        eliminated.push_back({i, last, last_coef});
        changed = true;
      }
    }
  }

  // ---- reduced problem
  std::vector<int> red_var;  // reduced index -> original
  std::vector<int> var_pos(static_cast<size_t>(nv), -1);
  for (int j = 0; j < nv; ++j)
    if (!fixed[static_cast<size_t>(j)]) {
      var_pos[static_cast<size_t>(j)] = static_cast<int>(red_var.size());
      red_var.push_back(j);
    }
  std::vector<int> red_row;
  for (int i = 0; i < nr; ++i)
    if (row_active[static_cast<size_t>(i)]) red_row.push_back(i);

  const int n = static_cast<int>(red_var.size());
  const int m = static_cast<int>(red_row.size());

  std::vector<double> row_lo(static_cast<size_t>(m)), row_hi(static_cast<size_t>(m));
  for (int k = 0; k < m; ++k) {
    int i = red_row[static_cast<size_t>(k)];
    const auto& r = problem.row(i);
    double fixed_sum = 0.0;
    for (const auto& t : rows[static_cast<size_t>(i)])
      if (fixed[static_cast<size_t>(t.var)]) fixed_sum += t.coef * value[static_cast<size_t>(t.var)];
    double b = r.rhs - fixed_sum;
    switch (r.relation) {
      case Relation::LessEqual: row_lo[static_cast<size_t>(k)] = -kInf; row_hi[static_cast<size_t>(k)] = b; break;
      case Relation::GreaterEqual: row_lo[static_cast<size_t>(k)] = b; row_hi[static_cast<size_t>(k)] = kInf; break;
      case Relation::Equal: row_lo[static_cast<size_t>(k)] = b; row_hi[static_cast<size_t>(k)] = b; break;
    }
  }

  // initial nonbasic point and row activities
  std::vector<double> x0(static_cast<size_t>(n));
  std::vector<NonbasicAt> st0(static_cast<size_t>(n));
  for (int k = 0; k < n; ++k) {
    const auto& v = problem.var(red_var[static_cast<size_t>(k)]);
    if (v.lower > -kInf) { x0[static_cast<size_t>(k)] = v.lower; st0[static_cast<size_t>(k)] = NonbasicAt::Lower; }
    else if (v.upper < kInf) { x0[static_cast<size_t>(k)] = v.upper; st0[static_cast<size_t>(k)] = NonbasicAt::Upper; }
    else { x0[static_cast<size_t>(k)] = 0.0; st0[static_cast<size_t>(k)] = NonbasicAt::Zero; }
  }
  std::vector<double> act(static_cast<size_t>(m), 0.0);
  for (int k = 0; k < m; ++k)
    for (const auto& t : rows[static_cast<size_t>(red_row[static_cast<size_t>(k)])])
      if (!fixed[static_cast<size_t>(t.var)])
        act[static_cast<size_t>(k)] += t.coef * x0[static_cast<size_t>(var_pos[static_cast<size_t>(t.var)])];

  std::vector<int> art_row;  // rows needing an artificial
  std::vector<double> art_sign;
  for (int k = 0; k < m; ++k) {
    double a = act[static_cast<size_t>(k)];
    double lo = row_lo[static_cast<size_t>(k)], hi = row_hi[static_cast<size_t>(k)];
    if (a < lo - ftol) { art_row.push_back(k); art_sign.push_back(1.0); }
    else if (a > hi + ftol) { art_row.push_back(k); art_sign.push_back(-1.0); }
  }
  const int na = static_cast<int>(art_row.size());
  const int ncols = n + m + na;

  Tableau tab(m, ncols, tol);
  // bounds and initial state
  for (int k = 0; k < n; ++k) {
    const auto& v = problem.var(red_var[static_cast<size_t>(k)]);
    tab.lo_[static_cast<size_t>(k)] = v.lower;
    tab.hi_[static_cast<size_t>(k)] = v.upper;
    tab.x_[static_cast<size_t>(k)] = x0[static_cast<size_t>(k)];
    tab.state_[static_cast<size_t>(k)] = st0[static_cast<size_t>(k)];
  }
  std::vector<int> art_of_row(static_cast<size_t>(m), -1);
  for (int a = 0; a < na; ++a) art_of_row[static_cast<size_t>(art_row[static_cast<size_t>(a)])] = a;
  for (int k = 0; k < m; ++k) {
    auto c = static_cast<size_t>(n + k);
    tab.lo_[c] = row_lo[static_cast<size_t>(k)];
    tab.hi_[c] = row_hi[static_cast<size_t>(k)];
  }
  // tableau rows: B^{-1} [A | -I | art]; basis is diagonal
  for (int k = 0; k < m; ++k) {
    double* r = tab.row(k);
    int a = art_of_row[static_cast<size_t>(k)];
    double diag;
    if (a < 0) {
      diag = -1.0;  // logical basic
      tab.basis_[static_cast<size_t>(k)] = n + k;
      tab.state_[static_cast<size_t>(n + k)] = NonbasicAt::Basic;
    } else {
      diag = art_sign[static_cast<size_t>(a)];
      int col = n + m + a;
      tab.basis_[static_cast<size_t>(k)] = col;
      tab.state_[static_cast<size_t>(col)] = NonbasicAt::Basic;
      tab.lo_[static_cast<size_t>(col)] = 0.0;
      tab.hi_[static_cast<size_t>(col)] = kInf;
      // logical sits at the violated bound
      auto lc = static_cast<size_t>(n + k);
      double act_k = act[static_cast<size_t>(k)];
      if (act_k < row_lo[static_cast<size_t>(k)]) { tab.x_[lc] = row_lo[static_cast<size_t>(k)]; tab.state_[lc] = NonbasicAt::Lower; }
      else { tab.x_[lc] = row_hi[static_cast<size_t>(k)]; tab.state_[lc] = NonbasicAt::Upper; }
      r[col] = 1.0;  // sign / diag
    }
    for (const auto& t : rows[static_cast<size_t>(red_row[static_cast<size_t>(k)])])
      if (!fixed[static_cast<size_t>(t.var)]) r[var_pos[static_cast<size_t>(t.var)]] = t.coef / diag;
    r[n + k] = -1.0 / diag;
  }
  tab.a0_.resize(m, ncols);
  for (int k = 0; k < m; ++k) {
    const double diag = art_of_row[static_cast<size_t>(k)] < 0 ? -1.0 : art_sign[static_cast<size_t>(art_of_row[static_cast<size_t>(k)])];
    for (int j = 0; j < ncols; ++j) tab.a0_(k, j) = tab.at(k, j) * diag;
  }
  tab.recompute_basics();

  const int max_iter = 200 * (m + ncols) + 1000;

  // ---- phase 1
  if (na > 0) {
    for (int a = 0; a < na; ++a) tab.cost_[static_cast<size_t>(n + m + a)] = -1.0;
    tab.recompute_reduced_costs();
    // Residual artificial mass is judged relative to the size of the rows it
    // relaxes, so rows with large right-hand sides (cuts) do not trip it.
    auto residual = [&] {
      for (int a = 0; a < na; ++a) {
        const auto k = static_cast<size_t>(art_row[static_cast<size_t>(a)]);
        const double bound = std::isfinite(row_lo[k]) ? row_lo[k] : row_hi[k];
        const double scale = std::max({1.0, std::abs(bound), std::abs(act[k])});
        if (std::abs(tab.x_[static_cast<size_t>(n + m + a)]) > ftol * scale) return true;
      }
      return false;
    };
    tab.run(max_iter);
    tab.recompute_basics();
    // A drifted tableau can stall short of feasibility; refactor and retry.
    bool infeasible = residual();
    for (int attempt = 0; infeasible && attempt < 2; ++attempt) {
      tab.reinvert();
      tab.run(max_iter);
      tab.recompute_basics();
      infeasible = residual();
    }
    if (infeasible) {
      sol.status = Status::Infeasible;
      sol.iterations = tab.iterations_;
      return sol;
    }
    // drive artificials out of the basis where possible
    for (int k = 0; k < m; ++k) {
      int b = tab.basis_[static_cast<size_t>(k)];
      if (b < n + m) continue;
      int best = -1;
      double bestv = 1e-7;
      for (int j = 0; j < n + m; ++j) {
        if (tab.state_[static_cast<size_t>(j)] == NonbasicAt::Basic) continue;
        double v = std::abs(tab.at(k, j));
        if (v > bestv) { bestv = v; best = j; }
      }
      if (best >= 0) {
        tab.state_[static_cast<size_t>(b)] = NonbasicAt::Lower;
        tab.x_[static_cast<size_t>(b)] = 0.0;
        tab.basis_[static_cast<size_t>(k)] = best;
        tab.state_[static_cast<size_t>(best)] = NonbasicAt::Basic;
        tab.pivot(k, best);
      }
    }
    for (int a = 0; a < na; ++a) {
      auto c = static_cast<size_t>(n + m + a);
      tab.cost_[c] = 0.0;
      tab.lo_[c] = 0.0;
      tab.hi_[c] = 0.0;
      if (tab.state_[c] != NonbasicAt::Basic) {
        tab.excluded_[c] = 1;
        tab.x_[c] = 0.0;
        tab.state_[c] = NonbasicAt::Lower;
      }
    }
    tab.recompute_basics();
  }

  // ---- phase 2
  for (int k = 0; k < n; ++k) tab.cost_[static_cast<size_t>(k)] = problem.var(red_var[static_cast<size_t>(k)]).objective;
  tab.recompute_reduced_costs();
  Status status = tab.run(max_iter);
  if (status == Status::Unbounded) {
    sol.iterations = tab.iterations_;
    sol.status = Status::Unbounded;
    return sol;
  }
  tab.recompute_basics();
  tab.recompute_reduced_costs();

  auto extract = [&] {
    for (int j = 0; j < nv; ++j) sol.values[static_cast<size_t>(j)] = value[static_cast<size_t>(j)];
    for (int k = 0; k < n; ++k) {
      auto j = static_cast<size_t>(red_var[static_cast<size_t>(k)]);
      const auto& v = problem.var(static_cast<int>(j));
      sol.values[j] = std::clamp(tab.x_[static_cast<size_t>(k)], v.lower, v.upper);
    }
  };
  extract();
  double magnitude = 1.0;
  for (double v : sol.values) magnitude = std::max(magnitude, std::abs(v));
  if (max_violation(problem, sol.values) > 1e-6 * magnitude) {
    tab.reinvert();
    status = tab.run(max_iter);
    if (status == Status::Unbounded) {
      sol.iterations = tab.iterations_;
      sol.status = Status::Unbounded;
      return sol;
    }
    tab.recompute_basics();
    tab.recompute_reduced_costs();
    extract();
  }
  sol.iterations = tab.iterations_;
  for (double v : sol.values)
    if (!std::isfinite(v)) throw NumericalError("simplex produced a non-finite solution");
  for (int k = 0; k < m; ++k)
    sol.row_duals[static_cast<size_t>(red_row[static_cast<size_t>(k)])] = tab.row(m)[n + k];

  // duals of eliminated rows, latest elimination first
  for (auto it = eliminated.rbegin(); it != eliminated.rend(); ++it) {
    double rc = problem.var(it->var).objective;
    for (const auto& e : cols[static_cast<size_t>(it->var)]) {
      if (e.row == it->row) continue;
      rc -= sol.row_duals[static_cast<size_t>(e.row)] * e.coef;
    }
    sol.row_duals[static_cast<size_t>(it->row)] = rc / it->coef;
  }

  double obj = 0.0;
  for (int j = 0; j < nv; ++j) obj += problem.var(j).objective * sol.values[static_cast<size_t>(j)];
  sol.objective = obj;
  sol.status = Status::Optimal;
  return sol;
}

Solution solve(const Problem& problem) {
  static const SimplexSolver solver;
  return solver.solve(problem);
}

}  // namespace cobid::lp
