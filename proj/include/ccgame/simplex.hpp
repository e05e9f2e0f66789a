#pragma once

// Dense two-phase primal simplex for small LPs:
//   minimize c^T x  subject to  rows (<=, =, >=)  and  x >= 0.
// Dantzig pricing with a switch to Bland's rule after a run of degenerate
// pivots, so cycling cannot stall the solve.

#include <cstddef>
#include <string_view>
#include <vector>

namespace ccgame::lp {

enum class Relation { kLessEqual, kEqual, kGreaterEqual };
enum class Status { kOptimal, kInfeasible, kUnbounded, kIterationLimit };

std::string_view to_string(Status status);

struct Constraint {
  std::vector<double> coefficients;  // length num_vars
  Relation relation = Relation::kLessEqual;
  double rhs = 0.0;
};

struct Problem {
  std::size_t num_vars = 0;
  std::vector<double> objective;
  std::vector<Constraint> constraints;
};

struct Options {
  // 0 picks a limit proportional to the problem size.
  std::size_t max_iterations = 0;
  std::size_t degenerate_streak_for_bland = 50;
  double feasibility_tol = 1e-9;
  double optimality_tol = 1e-10;
  double pivot_tol = 1e-11;
};

struct Solution {
  Status status = Status::kIterationLimit;
  std::vector<double> x;
  double objective = 0.0;
  // One multiplier per constraint with A^T y <= c and b^T y equal to the
  // optimum at optimality (<= rows give y <= 0, >= rows give y >= 0).
  std::vector<double> duals;
  std::size_t iterations = 0;
  std::size_t phase1_iterations = 0;
};

Solution solve(const Problem& problem, const Options& options = {});

}  // namespace ccgame::lp
