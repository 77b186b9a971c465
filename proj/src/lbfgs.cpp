#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <string>

#include "distagg/error.hpp"
#include "distagg/optim.hpp"

namespace distagg {
namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

bool all_finite(const std::vector<double>& v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

struct Pair {
  std::vector<double> s, y;
  double rho;
};

}  // namespace

LbfgsResult minimize_lbfgs(const Objective& fn, std::vector<double>& x, const LbfgsOptions& opt) {
  const std::size_t n = x.size();
  std::vector<double> g(n), g_new(n), x_new(n), dir(n), alpha(static_cast<std::size_t>(opt.history));
  std::deque<Pair> mem;

  LbfgsResult res;
  double f = fn(x, g);
  if (!std::isfinite(f) || !all_finite(g)) {
    throw NumericError("non-finite objective at iteration 0");
  }
  res.f_initial = f;

  int it = 0;
  for (; it < opt.max_iter; ++it) {
    double gmax = 0.0;
    for (double v : g) gmax = std::max(gmax, std::abs(v));
    if (gmax < opt.grad_tol) {
      res.converged = true;
      break;
    }

    // two-loop recursion
    dir = g;
    for (std::size_t k = mem.size(); k-- > 0;) {
      alpha[k] = mem[k].rho * dot(mem[k].s, dir);
      for (std::size_t j = 0; j < n; ++j) dir[j] -= alpha[k] * mem[k].y[j];
    }
    if (!mem.empty()) {
      const auto& last = mem.back();
      const double scale = dot(last.s, last.y) / dot(last.y, last.y);
      for (double& v : dir) v *= scale;
    } else {
      // first step: unit-length steepest descent
      const double norm = std::sqrt(dot(g, g));
      for (double& v : dir) v /= std::max(norm, 1.0);
    }
    for (std::size_t k = 0; k < mem.size(); ++k) {
      const double beta = mem[k].rho * dot(mem[k].y, dir);
      for (std::size_t j = 0; j < n; ++j) dir[j] += (alpha[k] - beta) * mem[k].s[j];
    }
    for (double& v : dir) v = -v;

    double slope = dot(g, dir);
    if (slope >= 0.0) {
      // not a descent direction; restart from steepest descent
      mem.clear();
      for (std::size_t j = 0; j < n; ++j) dir[j] = -g[j];
      slope = -dot(g, g);
    }

    double step = 1.0;
    double f_new = 0.0;
    bool accepted = false;
    for (int ls = 0; ls < opt.max_line_search; ++ls) {
      for (std::size_t j = 0; j < n; ++j) x_new[j] = x[j] + step * dir[j];
      f_new = fn(x_new, g_new);
      if (std::isfinite(f_new) && all_finite(g_new) && f_new <= f + opt.armijo_c1 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      if (!std::isfinite(f_new)) {
        throw NumericError("non-finite objective at iteration " + std::to_string(it + 1));
      }
      // no further progress possible along any direction we can find
      res.converged = true;
      break;
    }

    Pair p{std::vector<double>(n), std::vector<double>(n), 0.0};
    for (std::size_t j = 0; j < n; ++j) {
      p.s[j] = x_new[j] - x[j];
      p.y[j] = g_new[j] - g[j];
    }
    const double sy = dot(p.s, p.y);
    if (sy > 1e-12 * std::sqrt(dot(p.s, p.s) * dot(p.y, p.y))) {
      p.rho = 1.0 / sy;
      mem.push_back(std::move(p));
      if (mem.size() > static_cast<std::size_t>(opt.history)) mem.pop_front();
    }

    const double change = std::abs(f - f_new) / std::max(1.0, std::abs(f_new));
    x.swap(x_new);
    g.swap(g_new);
    f = f_new;
    if (change < opt.rel_tol) {
      res.converged = true;
      ++it;
      break;
    }
  }
  res.iterations = it;
  res.f = f;
  res.hit_max_iter = !res.converged;
  return res;
}

}  // namespace distagg
