#include "ccgame/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ccgame/error.hpp"

namespace ccgame::lp {

std::string_view to_string(Status status) {
  switch (status) {
    case Status::kOptimal:
      return "optimal";
    case Status::kInfeasible:
      return "infeasible";
    case Status::kUnbounded:
      return "unbounded";
    case Status::kIterationLimit:
      return "iteration_limit";
  }
  return "unknown";
}

namespace {

class Tableau {
 public:
  Tableau(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), width_(cols + 1),
        data_(rows * (cols + 1), 0.0), obj_(cols + 1, 0.0),
        basis_(rows, 0) {}

  double& at(std::size_t r, std::size_t c) { return data_[r * width_ + c]; }
  double at(std::size_t r, std::size_t c) const {
    return data_[r * width_ + c];
  }
  double& rhs(std::size_t r) { return at(r, cols_); }
  double rhs(std::size_t r) const { return at(r, cols_); }
  double* row(std::size_t r) { return data_.data() + r * width_; }

  std::vector<double>& obj() { return obj_; }
  std::vector<std::size_t>& basis() { return basis_; }
  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  void pivot(std::size_t pr, std::size_t pc) {
    double* prow = row(pr);
    const double inv = 1.0 / prow[pc];
    for (std::size_t c = 0; c < width_; ++c) prow[c] *= inv;
    prow[pc] = 1.0;
    for (std::size_t r = 0; r < rows_; ++r) {
      if (r == pr) continue;
      double* target = row(r);
      const double f = target[pc];
      if (f == 0.0) continue;
      for (std::size_t c = 0; c < width_; ++c) target[c] -= f * prow[c];
      target[pc] = 0.0;
      if (std::abs(target[cols_]) < 1e-13) target[cols_] = 0.0;
    }
    const double f = obj_[pc];
    if (f != 0.0) {
      for (std::size_t c = 0; c < width_; ++c) obj_[c] -= f * prow[c];
      obj_[pc] = 0.0;
    }
    basis_[pr] = pc;
  }

  // Objective value of the current basic solution (obj row stores -f).
  double value() const { return -obj_[cols_]; }

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::size_t width_;
  std::vector<double> data_;
  std::vector<double> obj_;
  std::vector<std::size_t> basis_;
};

enum class PhaseResult { kOptimal, kUnbounded, kIterationLimit };

PhaseResult run_phase(Tableau& t, const std::vector<char>& enterable,
                      const Options& options, std::size_t max_iterations,
                      std::size_t& iterations) {
  std::size_t degenerate_streak = 0;
  auto& obj = t.obj();
  auto& basis = t.basis();
  while (true) {
    if (iterations >= max_iterations) return PhaseResult::kIterationLimit;
    const bool bland = degenerate_streak >= options.degenerate_streak_for_bland;

    std::size_t enter = t.cols();
    double best = -options.optimality_tol;
    for (std::size_t c = 0; c < t.cols(); ++c) {
      if (!enterable[c]) continue;
      if (obj[c] < best) {
        enter = c;
        if (bland) break;
        best = obj[c];
      }
    }
    if (enter == t.cols()) return PhaseResult::kOptimal;

    std::size_t leave = t.rows();
    double best_ratio = std::numeric_limits<double>::infinity();
    double best_pivot = 0.0;
    for (std::size_t r = 0; r < t.rows(); ++r) {
      const double a = t.at(r, enter);
      if (a <= options.pivot_tol) continue;
      const double ratio = std::max(t.rhs(r), 0.0) / a;
      if (leave == t.rows() || ratio < best_ratio - 1e-12) {
        leave = r;
        best_ratio = ratio;
        best_pivot = a;
      } else if (ratio <= best_ratio + 1e-12) {
        const bool better = bland ? basis[r] < basis[leave] : a > best_pivot;
        if (better) {
          leave = r;
          best_ratio = std::min(best_ratio, ratio);
          best_pivot = a;
        }
      }
    }
    if (leave == t.rows()) return PhaseResult::kUnbounded;

    degenerate_streak =
        best_ratio <= options.feasibility_tol ? degenerate_streak + 1 : 0;
    t.pivot(leave, enter);
    ++iterations;
  }
}

}  // namespace

Solution solve(const Problem& problem, const Options& options) {
  const std::size_t n = problem.num_vars;
  const std::size_t m = problem.constraints.size();
  if (problem.objective.size() != n) {
    throw InvalidInput("objective length does not match num_vars");
  }
  for (const auto& row : problem.constraints) {
    if (row.coefficients.size() != n) {
      throw InvalidInput("constraint length does not match num_vars");
    }
  }

  // Normalize: rhs >= 0 and unit max-norm rows.
  std::vector<double> sign(m, 1.0);
  std::vector<double> scale(m, 1.0);
  std::vector<Relation> relation(m);
  std::size_t num_slack = 0;
  std::size_t num_art = 0;
  for (std::size_t r = 0; r < m; ++r) {
    const auto& row = problem.constraints[r];
    relation[r] = row.relation;
    if (row.rhs < 0.0) {
      sign[r] = -1.0;
      if (relation[r] == Relation::kLessEqual) {
        relation[r] = Relation::kGreaterEqual;
      } else if (relation[r] == Relation::kGreaterEqual) {
        relation[r] = Relation::kLessEqual;
      }
    }
    double norm = std::abs(row.rhs);
    for (double v : row.coefficients) norm = std::max(norm, std::abs(v));
    scale[r] = norm > 0.0 ? 1.0 / norm : 1.0;
    if (relation[r] != Relation::kEqual) ++num_slack;
    if (relation[r] != Relation::kLessEqual) ++num_art;
  }

  const std::size_t cols = n + num_slack + num_art;
  const std::size_t art_begin = n + num_slack;
  Tableau t(m, cols);
  std::vector<std::size_t> unit_col(m);
  {
    std::size_t slack = n;
    std::size_t art = art_begin;
    for (std::size_t r = 0; r < m; ++r) {
      const auto& row = problem.constraints[r];
      const double f = sign[r] * scale[r];
      for (std::size_t c = 0; c < n; ++c) t.at(r, c) = f * row.coefficients[c];
      t.rhs(r) = f * row.rhs;
      switch (relation[r]) {
        case Relation::kLessEqual:
          t.at(r, slack) = 1.0;
          unit_col[r] = slack++;
          break;
        case Relation::kGreaterEqual:
          t.at(r, slack++) = -1.0;
          t.at(r, art) = 1.0;
          unit_col[r] = art++;
          break;
        case Relation::kEqual:
          t.at(r, art) = 1.0;
          unit_col[r] = art++;
          break;
      }
      t.basis()[r] = unit_col[r];
    }
  }

  const std::size_t max_iterations =
      options.max_iterations ? options.max_iterations : 20 * (m + cols) + 1000;
  Solution out;
  std::size_t iterations = 0;

  // Phase 1: minimize the sum of artificials.
  if (num_art > 0) {
    auto& obj = t.obj();
    std::fill(obj.begin(), obj.end(), 0.0);
    for (std::size_t c = art_begin; c < cols; ++c) obj[c] = 1.0;
    for (std::size_t r = 0; r < m; ++r) {
      if (unit_col[r] < art_begin) continue;
      const double* row = t.row(r);
      for (std::size_t c = 0; c <= cols; ++c) obj[c] -= row[c];
    }
    std::vector<char> enterable(cols, 1);
    const PhaseResult phase1 =
        run_phase(t, enterable, options, max_iterations, iterations);
    out.phase1_iterations = iterations;
    if (phase1 == PhaseResult::kIterationLimit) {
      out.status = Status::kIterationLimit;
      out.iterations = iterations;
      return out;
    }
    if (t.value() > options.feasibility_tol * std::max<double>(1.0, m)) {
      out.status = Status::kInfeasible;
      out.iterations = iterations;
      return out;
    }
    // Drive zero-level artificials out of the basis where possible; rows
    // where that fails are redundant and keep a harmless artificial.
    for (std::size_t r = 0; r < m; ++r) {
      if (t.basis()[r] < art_begin) continue;
      std::size_t best = cols;
      double best_abs = options.pivot_tol * 100.0;
      for (std::size_t c = 0; c < art_begin; ++c) {
        const double a = std::abs(t.at(r, c));
        if (a > best_abs) {
          best = c;
          best_abs = a;
        }
      }
      if (best != cols) {
        t.rhs(r) = 0.0;
        t.pivot(r, best);
      }
    }
  }

  // Phase 2 with the true costs.
  {
    auto& obj = t.obj();
    std::fill(obj.begin(), obj.end(), 0.0);
    for (std::size_t c = 0; c < n; ++c) obj[c] = problem.objective[c];
    for (std::size_t r = 0; r < m; ++r) {
      const std::size_t b = t.basis()[r];
      if (b >= n) continue;
      const double cb = problem.objective[b];
      if (cb == 0.0) continue;
      const double* row = t.row(r);
      for (std::size_t c = 0; c <= cols; ++c) obj[c] -= cb * row[c];
    }
    std::vector<char> enterable(cols, 0);
    std::fill(enterable.begin(), enterable.begin() + art_begin, 1);
    const PhaseResult phase2 =
        run_phase(t, enterable, options, max_iterations, iterations);
    out.iterations = iterations;
    if (phase2 == PhaseResult::kUnbounded) {
      out.status = Status::kUnbounded;
      return out;
    }
    if (phase2 == PhaseResult::kIterationLimit) {
      out.status = Status::kIterationLimit;
      return out;
    }
  }

  out.status = Status::kOptimal;
  out.x.assign(n, 0.0);
  for (std::size_t r = 0; r < m; ++r) {
    const std::size_t b = t.basis()[r];
    if (b < n) out.x[b] = std::max(t.rhs(r), 0.0);
  }
  out.objective = 0.0;
  for (std::size_t c = 0; c < n; ++c) {
    out.objective += problem.objective[c] * out.x[c];
  }
  // Reduced cost of a unit column is -y_r; undo the row normalization.
  out.duals.resize(m);
  for (std::size_t r = 0; r < m; ++r) {
    out.duals[r] = -t.obj()[unit_col[r]] * scale[r] * sign[r];
  }
  return out;
}

}  // namespace ccgame::lp
