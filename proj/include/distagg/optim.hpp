#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace distagg {

/// Objective returning f(x) and writing the gradient into `grad`.
using Objective = std::function<double(const std::vector<double>& x, std::vector<double>& grad)>;

struct LbfgsOptions {
  int max_iter = 1500;
  int history = 10;
  double rel_tol = 1e-8;      // stop when |f_prev - f| / max(1, |f|) < rel_tol
  double grad_tol = 1e-10;    // or when the max-norm gradient falls below this
  double armijo_c1 = 1e-4;
  int max_line_search = 60;
};

struct LbfgsResult {
  double f_initial = 0.0;
  double f = 0.0;
  int iterations = 0;
  bool converged = false;
  bool hit_max_iter = false;
};

/// Limited-memory BFGS minimization with backtracking Armijo line search.
/// `x` is updated in place. Throws NumericError naming the iteration when the
/// objective or gradient becomes non-finite.
LbfgsResult minimize_lbfgs(const Objective& fn, std::vector<double>& x,
                           const LbfgsOptions& options = {});

}  // namespace distagg
