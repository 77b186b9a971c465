#include "distagg/select.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>

#include <Eigen/Dense>

#include "distagg/error.hpp"
#include "distagg/metrics.hpp"
#include "distagg/optim.hpp"
#include "distagg/rng.hpp"

namespace distagg {

std::string_view to_string(MasInit init) { return init == MasInit::uniform ? "uniform" : "mds"; }

MasInit parse_mas_init(std::string_view name) {
  if (name == "uniform") return MasInit::uniform;
  if (name == "mds") return MasInit::mds;
  throw ConfigError("unknown mas init '" + std::string(name) + "' (expected uniform or mds)");
}

std::size_t pick_slot(const ItemDistances& item, const std::vector<double>& scores,
                      bool higher_is_better) {
  std::size_t best = 0;
  for (std::size_t s = 1; s < scores.size(); ++s) {
    const double a = higher_is_better ? -scores[s] : scores[s];
    const double b = higher_is_better ? -scores[best] : scores[best];
    const double tol = 1e-6 * std::max(1.0, std::abs(b));
    if (a < b - tol) {
      best = s;
    } else if (a <= b + tol && item.workers[s] < item.workers[best]) {
      best = s;
    }
  }
  return best;
}

void choose_all(const DistanceDataset& d, Selection& sel) {
  sel.chosen.resize(d.items().size());
  for (std::size_t i = 0; i < d.items().size(); ++i) {
    sel.chosen[i] = pick_slot(d.items()[i], sel.scores[i], sel.higher_is_better);
  }
}

Selection aggregate_sad(const DistanceDataset& d) {
  Selection sel;
  sel.method = "sad";
  for (const auto& it : d.items()) {
    const std::size_t k = it.size();
    std::vector<double> eps(k, 0.0);
    if (k > 1) {
      for (std::size_t a = 0; a < k; ++a) {
        double sum = 0.0;
        for (std::size_t b = 0; b < k; ++b) {
          if (b != a) sum += it(a, b);
        }
        eps[a] = sum / static_cast<double>(k - 1);
      }
    }
    sel.scores.push_back(std::move(eps));
  }
  choose_all(d, sel);
  return sel;
}

std::vector<double> bau_worker_scores(const DistanceDataset& d) {
  std::vector<double> sum(d.worker_count(), 0.0), count(d.worker_count(), 0.0);
  for (const auto& it : d.items()) {
    const std::size_t k = it.size();
    for (std::size_t a = 0; a < k; ++a) {
      for (std::size_t b = a + 1; b < k; ++b) {
        const double v = it(a, b);
        sum[it.workers[a]] += v;
        count[it.workers[a]] += 1;
        sum[it.workers[b]] += v;
        count[it.workers[b]] += 1;
      }
    }
  }
  std::vector<double> out(d.worker_count(), std::numeric_limits<double>::quiet_NaN());
  for (std::size_t u = 0; u < out.size(); ++u) {
    if (count[u] > 0) out[u] = sum[u] / count[u];
  }
  return out;
}

Selection aggregate_bau(const DistanceDataset& d) {
  const auto eu = bau_worker_scores(d);
  Selection sel;
  sel.method = "bau";
  for (const auto& it : d.items()) {
    std::vector<double> eps;
    for (auto w : it.workers) eps.push_back(std::isnan(eu[w]) ? 0.0 : eu[w]);
    sel.scores.push_back(std::move(eps));
  }
  choose_all(d, sel);
  return sel;
}

// ---------------------------------------------------------------------------
// MAS

double MasFit::epsilon(std::size_t item, std::size_t slot) const {
  const std::size_t K = static_cast<std::size_t>(config.K);
  double s = 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    const double v = x[item][slot * K + k];
    s += v * v;
  }
  return std::sqrt(s);
}

double MasFit::embedded_distance(std::size_t item, std::size_t a, std::size_t b) const {
  const std::size_t K = static_cast<std::size_t>(config.K);
  double s = 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    const double v = x[item][a * K + k] - x[item][b * K + k];
    s += v * v;
  }
  return std::sqrt(s);
}

std::vector<std::vector<double>> MasFit::epsilons() const {
  std::vector<std::vector<double>> out(x.size());
  const std::size_t K = static_cast<std::size_t>(config.K);
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t s = 0; s < x[i].size() / K; ++s) out[i].push_back(epsilon(i, s));
  }
  return out;
}

Selection MasFit::selection(const DistanceDataset& d, const std::string& method) const {
  Selection sel;
  sel.method = method;
  sel.scores = epsilons();
  choose_all(d, sel);
  return sel;
}

namespace {

// Negative log posterior of the MAS model (constants dropped) over the packed
// parameter vector [x | log gamma (free workers) | log delta | log(sigma - floor)].
class MasObjective {
 public:
  MasObjective(const DistanceDataset& d, const MasConfig& cfg,
               const std::vector<std::optional<double>>& fixed)
      : d_(d), cfg_(cfg), K_(static_cast<std::size_t>(cfg.K)) {
    std::size_t off = 0;
    for (const auto& it : d.items()) {
      x_off_.push_back(off);
      off += it.size() * K_;
    }
    n_x_ = off;
    gamma_idx_.assign(d.worker_count(), -1);
    fixed_log_gamma_.assign(d.worker_count(), 0.0);
    active_.assign(d.worker_count(), false);
    for (const auto& it : d.items()) {
      for (auto w : it.workers) active_[w] = true;
    }
    for (std::size_t u = 0; u < d.worker_count(); ++u) {
      if (!active_[u]) continue;
      if (u < fixed.size() && fixed[u]) {
        fixed_log_gamma_[u] = std::log(*fixed[u]);
      } else {
        gamma_idx_[u] = static_cast<long>(off++);
      }
    }
    delta_off_ = off;
    off += d.items().size();
    sigma_idx_ = off++;
    size_ = off;
  }

  std::size_t size() const { return size_; }
  std::size_t x_offset(std::size_t i) const { return x_off_[i]; }
  long gamma_index(std::size_t u) const { return gamma_idx_[u]; }
  std::size_t delta_index(std::size_t i) const { return delta_off_ + i; }
  std::size_t sigma_index() const { return sigma_idx_; }
  const std::vector<bool>& active() const { return active_; }

  double log_gamma(const std::vector<double>& p, std::size_t u) const {
    return gamma_idx_[u] >= 0 ? p[static_cast<std::size_t>(gamma_idx_[u])] : fixed_log_gamma_[u];
  }

  double operator()(const std::vector<double>& p, std::vector<double>& g) const {
    std::fill(g.begin(), g.end(), 0.0);
    double f = 0.0;
    const double es = std::exp(p[sigma_idx_]);
    const double sigma = cfg_.sigma_floor + es;
    const double inv_s2 = 1.0 / (sigma * sigma);
    const double log_sigma = std::log(sigma);
    double dsigma = 0.0;
    const double Kd = static_cast<double>(K_);
    std::vector<double> diff(K_);

    for (std::size_t i = 0; i < d_.items().size(); ++i) {
      const auto& it = d_.items()[i];
      const std::size_t k = it.size();
      const std::size_t xo = x_off_[i];
      const std::size_t di = delta_off_ + i;
      const double ld = p[di];

      // likelihood over stored pairs
      for (std::size_t a = 0; a < k; ++a) {
        for (std::size_t b = a + 1; b < k; ++b) {
          double sq = 0.0;
          for (std::size_t c = 0; c < K_; ++c) {
            diff[c] = p[xo + a * K_ + c] - p[xo + b * K_ + c];
            sq += diff[c] * diff[c];
          }
          const double n = std::sqrt(sq + 1e-12);
          const double r = it(a, b) - n;
          f += log_sigma + 0.5 * r * r * inv_s2;
          dsigma += 1.0 / sigma - r * r * inv_s2 / sigma;
          const double coef = -r * inv_s2 / n;
          for (std::size_t c = 0; c < K_; ++c) {
            g[xo + a * K_ + c] += coef * diff[c];
            g[xo + b * K_ + c] -= coef * diff[c];
          }
        }
      }

      // embedding prior N(0, gamma_u delta_i I)
      for (std::size_t a = 0; a < k; ++a) {
        const std::size_t u = it.workers[a];
        const double t = log_gamma(p, u) + ld;
        const double inv_v = std::exp(-t);
        double sq = 0.0;
        for (std::size_t c = 0; c < K_; ++c) {
          const double v = p[xo + a * K_ + c];
          sq += v * v;
          g[xo + a * K_ + c] += v * inv_v;
        }
        f += 0.5 * Kd * t + 0.5 * sq * inv_v;
        const double dt = 0.5 * Kd - 0.5 * sq * inv_v;
        if (gamma_idx_[u] >= 0) g[static_cast<std::size_t>(gamma_idx_[u])] += dt;
        g[di] += dt;
      }

      // lognormal(0, psi) on delta
      f += ld + 0.5 * ld * ld / (cfg_.psi * cfg_.psi);
      g[di] += 1.0 + ld / (cfg_.psi * cfg_.psi);
    }

    for (std::size_t u = 0; u < gamma_idx_.size(); ++u) {
      if (gamma_idx_[u] < 0) continue;
      const auto gi = static_cast<std::size_t>(gamma_idx_[u]);
      const double lg = p[gi];
      f += lg + 0.5 * lg * lg / (cfg_.phi * cfg_.phi);
      g[gi] += 1.0 + lg / (cfg_.phi * cfg_.phi);
    }
    g[sigma_idx_] = dsigma * es;
    return f;
  }

 private:
  const DistanceDataset& d_;
  MasConfig cfg_;
  std::size_t K_;
  std::vector<std::size_t> x_off_;
  std::size_t n_x_ = 0;
  std::vector<long> gamma_idx_;
  std::vector<double> fixed_log_gamma_;
  std::vector<bool> active_;
  std::size_t delta_off_ = 0;
  std::size_t sigma_idx_ = 0;
  std::size_t size_ = 0;
};

// Classical MDS of one item's distance matrix, slot-major K coordinates per
// slot. Starts the optimizer in the basin that reproduces the distances.
std::vector<double> classical_mds(const ItemDistances& it, std::size_t K) {
  const auto k = static_cast<Eigen::Index>(it.size());
  std::vector<double> out(it.size() * K, 0.0);
  if (k < 2) return out;
  Eigen::MatrixXd sq(k, k);
  for (Eigen::Index a = 0; a < k; ++a) {
    for (Eigen::Index b = 0; b < k; ++b) {
      const double v = it(static_cast<std::size_t>(a), static_cast<std::size_t>(b));
      sq(a, b) = v * v;
    }
  }
  const Eigen::MatrixXd J = Eigen::MatrixXd::Identity(k, k) - Eigen::MatrixXd::Constant(k, k, 1.0 / double(k));
  const Eigen::MatrixXd B = -0.5 * J * sq * J;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(B);
  // eigenvalues ascending
  for (std::size_t c = 0; c < K && static_cast<Eigen::Index>(c) < k; ++c) {
    const Eigen::Index col = k - 1 - static_cast<Eigen::Index>(c);
    const double lambda = es.eigenvalues()(col);
    if (!(lambda > 0.0)) break;
    for (Eigen::Index a = 0; a < k; ++a) {
      out[static_cast<std::size_t>(a) * K + c] = es.eigenvectors()(a, col) * std::sqrt(lambda);
    }
  }
  return out;
}

}  // namespace

MasFit fit_mas(const DistanceDataset& d, const MasConfig& cfg,
               const std::vector<std::optional<double>>& fixed_gamma) {
  if (cfg.K < 1) throw ConfigError("mas: K must be at least 1");
  if (!(cfg.phi > 0.0) || !(cfg.psi > 0.0)) throw ConfigError("mas: phi and psi must be positive");
  if (cfg.max_iter < 1) throw ConfigError("mas: max_iter must be at least 1");
  if (!(cfg.sigma_floor >= 0.0)) throw ConfigError("mas: sigma_floor must be non-negative");

  MasObjective obj(d, cfg, fixed_gamma);
  const std::size_t K = static_cast<std::size_t>(cfg.K);
  std::vector<double> p(obj.size(), 0.0);

  Rng rng = make_rng(cfg.seed, "mas-init");
  for (std::size_t i = 0; i < d.items().size(); ++i) {
    if (cfg.init == MasInit::uniform) {
      const std::size_t n = d.items()[i].size() * K;
      for (std::size_t j = 0; j < n; ++j) p[obj.x_offset(i) + j] = 4.0 * uniform01(rng) - 2.0;
      continue;
    }
    const auto x0 = classical_mds(d.items()[i], K);
    for (std::size_t j = 0; j < x0.size(); ++j) p[obj.x_offset(i) + j] = x0[j] + 0.02 * (uniform01(rng) - 0.5);
  }
  const auto bau = bau_worker_scores(d);
  for (std::size_t u = 0; u < d.worker_count(); ++u) {
    const long gi = obj.gamma_index(u);
    if (gi < 0) continue;
    const double start = std::isnan(bau[u]) ? 1.0 : std::max(bau[u], 1e-3);
    p[static_cast<std::size_t>(gi)] = std::log(start);
  }
  for (std::size_t i = 0; i < d.items().size(); ++i) {
    p[obj.delta_index(i)] = cfg.init == MasInit::uniform ? 4.0 * uniform01(rng) - 2.0 : 0.02 * (uniform01(rng) - 0.5);
  }
  p[obj.sigma_index()] = cfg.init == MasInit::uniform ? 4.0 * uniform01(rng) - 2.0
                                                   : std::log(0.1) + (0.0 - std::log(0.1)) * uniform01(rng);

  LbfgsOptions opt;
  opt.max_iter = cfg.max_iter;
  auto res = minimize_lbfgs([&](const std::vector<double>& v, std::vector<double>& g) { return obj(v, g); },
                            p, opt);

  MasFit fit;
  fit.config = cfg;
  fit.log_posterior_initial = -res.f_initial;
  fit.log_posterior = -res.f;
  fit.iterations = res.iterations;
  fit.hit_max_iter = res.hit_max_iter;
  fit.worker_active = obj.active();
  fit.gamma.resize(d.worker_count());
  fit.gamma_fixed.assign(d.worker_count(), false);
  fit.gamma_uncovered.assign(d.worker_count(), false);
  for (std::size_t u = 0; u < d.worker_count(); ++u) {
    fit.gamma[u] = std::exp(obj.log_gamma(p, u));
    fit.gamma_fixed[u] = obj.active()[u] && obj.gamma_index(u) < 0;
  }
  for (std::size_t i = 0; i < d.items().size(); ++i) {
    const std::size_t n = d.items()[i].size() * K;
    const auto first = p.begin() + static_cast<std::ptrdiff_t>(obj.x_offset(i));
    fit.x.emplace_back(first, first + static_cast<std::ptrdiff_t>(n));
    fit.delta.push_back(std::exp(p[obj.delta_index(i)]));
  }
  fit.sigma = cfg.sigma_floor + std::exp(p[obj.sigma_index()]);
  return fit;
}

std::vector<std::optional<double>> honeypot_worker_error(const AnnotationDataset& dataset,
                                                         const Metric& metric,
                                                         const std::vector<std::size_t>& honeypots) {
  std::vector<double> sum(dataset.worker_count(), 0.0);
  std::vector<int> count(dataset.worker_count(), 0);
  for (auto i : honeypots) {
    const Label* gold = dataset.gold(i);
    if (!gold) throw DataError("honeypot item '" + dataset.item_id(i) + "' has no gold");
    for (const auto& a : dataset.annotations_of(i)) {
      sum[a.worker] += metric.distance(a.label, *gold);
      ++count[a.worker];
    }
  }
  std::vector<std::optional<double>> out(dataset.worker_count());
  for (std::size_t u = 0; u < out.size(); ++u) {
    if (count[u] > 0) out[u] = std::max(sum[u] / count[u], 1e-4);
  }
  return out;
}

MasFit fit_smas(const DistanceDataset& d, const AnnotationDataset& dataset, const Metric& metric,
                const std::vector<std::size_t>& honeypots, const MasConfig& config) {
  if (honeypots.empty()) throw DataError("smas: no honeypot items with gold");
  const auto g = honeypot_worker_error(dataset, metric, honeypots);
  MasFit fit = fit_mas(d, config, g);
  for (std::size_t u = 0; u < g.size(); ++u) {
    fit.gamma_uncovered[u] = fit.worker_active[u] && !g[u];
  }
  return fit;
}

// ---------------------------------------------------------------------------
// MADD

namespace {

constexpr double kHalfNormalConst = 0.22579135264472744;  // log(2) - 0.5 log(2 pi)
constexpr double kLogNormalConst = -0.91893853320467274;  // -0.5 log(2 pi)

double log_half_normal(double d, double log_scale) {
  return kHalfNormalConst - log_scale - 0.5 * d * d * std::exp(-2.0 * log_scale);
}

double log_lognormal01(double log_x) { return kLogNormalConst - log_x - 0.5 * log_x * log_x; }

// log p(z = h | item) for every candidate h, plus the item's log marginal.
double madd_item_posterior(const ItemDistances& it, const std::vector<double>& la, double lb,
                           std::vector<double>& logpost) {
  const std::size_t k = it.size();
  logpost.assign(k, -std::log(static_cast<double>(k)));
  for (std::size_t h = 0; h < k; ++h) {
    for (std::size_t u = 0; u < k; ++u) {
      logpost[h] += log_half_normal(it(u, h), la[it.workers[u]] + lb);
    }
  }
  const double m = *std::max_element(logpost.begin(), logpost.end());
  double s = 0.0;
  for (double v : logpost) s += std::exp(v - m);
  const double lse = m + std::log(s);
  for (double& v : logpost) v -= lse;
  return lse;
}

double madd_log_posterior(const DistanceDataset& d, const std::vector<double>& la,
                          const std::vector<double>& lb, const std::vector<bool>& active) {
  double total = 0.0;
  std::vector<double> lp;
  for (std::size_t i = 0; i < d.items().size(); ++i) {
    total += madd_item_posterior(d.items()[i], la, lb[i], lp);
    total += log_lognormal01(lb[i]);
  }
  for (std::size_t u = 0; u < la.size(); ++u) {
    if (active[u]) total += log_lognormal01(la[u]);
  }
  return total;
}

}  // namespace

double madd_weight(double posterior) {
  const double p = std::clamp(posterior, 1e-12, 1.0 - 1e-12);
  return 1.0 / -std::log(p);
}

Selection MaddFit::selection(const DistanceDataset& d) const {
  Selection sel;
  sel.method = "madd";
  sel.higher_is_better = true;
  sel.scores = posterior;
  choose_all(d, sel);
  return sel;
}

MaddFit fit_madd(const DistanceDataset& d, const MaddConfig& cfg) {
  const std::size_t W = d.worker_count();
  const std::size_t I = d.items().size();
  std::vector<bool> active(W, false);
  for (const auto& it : d.items()) {
    if (it.size() < 2) throw DataError("madd: every item needs at least 2 labels");
    for (auto w : it.workers) active[w] = true;
  }

  // E_ju: expected squared distance of slot u to the latent truth.
  std::vector<std::vector<double>> expected(I);
  for (std::size_t i = 0; i < I; ++i) {
    // first E-step: uniform weight over candidate truths
    const auto& it = d.items()[i];
    const std::size_t k = it.size();
    expected[i].assign(k, 0.0);
    for (std::size_t u = 0; u < k; ++u) {
      for (std::size_t h = 0; h < k; ++h) expected[i][u] += it(u, h) * it(u, h) / static_cast<double>(k);
    }
  }

  std::vector<double> p(W + I, 0.0);  // [log alpha | log beta]
  auto mstep = [&](const std::vector<double>& v, std::vector<double>& g) {
    std::fill(g.begin(), g.end(), 0.0);
    double f = 0.0;
    for (std::size_t i = 0; i < I; ++i) {
      const auto& it = d.items()[i];
      for (std::size_t u = 0; u < it.size(); ++u) {
        const std::size_t w = it.workers[u];
        const double t = v[w] + v[W + i];
        const double e = expected[i][u] * std::exp(-2.0 * t);
        f += t + 0.5 * e;
        g[w] += 1.0 - e;
        g[W + i] += 1.0 - e;
      }
      const double lb = v[W + i];
      f += lb + 0.5 * lb * lb;
      g[W + i] += 1.0 + lb;
    }
    for (std::size_t w = 0; w < W; ++w) {
      if (!active[w]) continue;
      f += v[w] + 0.5 * v[w] * v[w];
      g[w] += 1.0 + v[w];
    }
    return f;
  };

  LbfgsOptions opt;
  opt.max_iter = cfg.max_mstep_iter;
  opt.rel_tol = 1e-12;

  MaddFit fit;
  std::vector<double> la(W), lb(I), lp;
  auto unpack = [&] {
    std::copy(p.begin(), p.begin() + static_cast<std::ptrdiff_t>(W), la.begin());
    std::copy(p.begin() + static_cast<std::ptrdiff_t>(W), p.end(), lb.begin());
  };

  for (int iter = 0; iter < cfg.max_em_iter; ++iter) {
    minimize_lbfgs(mstep, p, opt);
    unpack();
    const double lpost = madd_log_posterior(d, la, lb, active);
    fit.trace.push_back(lpost);
    fit.iterations = iter + 1;
    if (fit.trace.size() >= 2) {
      const double prev = fit.trace[fit.trace.size() - 2];
      if (std::abs(lpost - prev) <= cfg.tol * std::max(1.0, std::abs(lpost))) {
        fit.converged = true;
        break;
      }
    }
    // E-step from the current parameters
    for (std::size_t i = 0; i < I; ++i) {
      const auto& it = d.items()[i];
      madd_item_posterior(it, la, lb[i], lp);
      for (std::size_t u = 0; u < it.size(); ++u) {
        double e = 0.0;
        for (std::size_t h = 0; h < it.size(); ++h) e += std::exp(lp[h]) * it(u, h) * it(u, h);
        expected[i][u] = e;
      }
    }
  }

  fit.alpha.resize(W);
  fit.beta.resize(I);
  for (std::size_t w = 0; w < W; ++w) fit.alpha[w] = std::exp(la[w]);
  for (std::size_t i = 0; i < I; ++i) {
    fit.beta[i] = std::exp(lb[i]);
    madd_item_posterior(d.items()[i], la, lb[i], lp);
    std::vector<double> post;
    for (double v : lp) post.push_back(std::exp(v));
    fit.posterior.push_back(std::move(post));
  }
  return fit;
}

// ---------------------------------------------------------------------------
// Baselines

namespace {

const std::string& symbol_of(const Annotation& a) {
  const auto* c = std::get_if<Category>(&a.label);
  if (!c) throw DataError("baseline requires category labels");
  return c->symbol;
}

}  // namespace

std::vector<std::string> majority_vote(const AnnotationDataset& dataset) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < dataset.item_count(); ++i) {
    std::map<std::string, int> votes;  // ordered: first max is lexicographically smallest
    for (const auto& a : dataset.annotations_of(i)) ++votes[symbol_of(a)];
    auto best = votes.begin();
    for (auto it = votes.begin(); it != votes.end(); ++it) {
      if (it->second > best->second) best = it;
    }
    out.push_back(best->first);
  }
  return out;
}

DawidSkeneResult dawid_skene_binary(const AnnotationDataset& dataset, int max_iter) {
  std::map<std::string, int> symbols;
  for (const auto& a : dataset.annotations()) symbols.emplace(symbol_of(a), 0);
  if (symbols.size() > 2) {
    throw DataError("dawid_skene_binary: " + std::to_string(symbols.size()) +
                    " distinct categories, expected at most 2");
  }
  DawidSkeneResult res;
  for (auto& [s, idx] : symbols) {
    idx = static_cast<int>(res.classes.size());
    res.classes.push_back(s);
  }
  const std::size_t I = dataset.item_count(), W = dataset.worker_count();
  res.posterior.assign(I, 0.0);
  if (res.classes.size() < 2) {
    res.labels.assign(I, res.classes.empty() ? std::string{} : res.classes[0]);
    return res;
  }

  // T_i = P(class 1), initialized with vote fractions
  std::vector<double>& T = res.posterior;
  for (std::size_t i = 0; i < I; ++i) {
    double ones = 0, n = 0;
    for (const auto& a : dataset.annotations_of(i)) {
      ones += symbols.at(symbol_of(a));
      ++n;
    }
    T[i] = ones / n;
  }

  constexpr double kSmooth = 0.01;
  std::vector<std::array<std::array<double, 2>, 2>> conf(W);  // conf[u][true][given]
  for (int iter = 0; iter < max_iter; ++iter) {
    double prior1 = 0.0;
    for (double t : T) prior1 += t;
    prior1 = std::clamp(prior1 / static_cast<double>(I), 1e-6, 1.0 - 1e-6);
    std::vector<std::array<std::array<double, 2>, 2>> counts(W, {{{kSmooth, kSmooth}, {kSmooth, kSmooth}}});
    for (std::size_t i = 0; i < I; ++i) {
      for (const auto& a : dataset.annotations_of(i)) {
        const int l = symbols.at(symbol_of(a));
        counts[a.worker][0][l] += 1.0 - T[i];
        counts[a.worker][1][l] += T[i];
      }
    }
    for (std::size_t u = 0; u < W; ++u) {
      for (int c = 0; c < 2; ++c) {
        const double tot = counts[u][c][0] + counts[u][c][1];
        conf[u][c][0] = counts[u][c][0] / tot;
        conf[u][c][1] = counts[u][c][1] / tot;
      }
    }
    double change = 0.0;
    for (std::size_t i = 0; i < I; ++i) {
      double l0 = std::log(1.0 - prior1), l1 = std::log(prior1);
      for (const auto& a : dataset.annotations_of(i)) {
        const int l = symbols.at(symbol_of(a));
        l0 += std::log(conf[a.worker][0][l]);
        l1 += std::log(conf[a.worker][1][l]);
      }
      const double t = 1.0 / (1.0 + std::exp(l0 - l1));
      change = std::max(change, std::abs(t - T[i]));
      T[i] = t;
    }
    res.iterations = iter + 1;
    if (change < 1e-8) break;
  }
  for (std::size_t i = 0; i < I; ++i) res.labels.push_back(res.classes[T[i] > 0.5 ? 1 : 0]);
  return res;
}

std::vector<std::vector<std::size_t>> random_user(const AnnotationDataset& dataset,
                                                  std::uint64_t seed, int trials) {
  std::vector<std::vector<std::size_t>> out;
  for (int t = 0; t < trials; ++t) {
    Rng rng = make_rng(seed, "random-user", static_cast<std::uint64_t>(t));
    std::vector<std::size_t> pick;
    for (std::size_t i = 0; i < dataset.item_count(); ++i) {
      pick.push_back(static_cast<std::size_t>(uniform_index(rng, dataset.annotations_of(i).size())));
    }
    out.push_back(std::move(pick));
  }
  return out;
}

}  // namespace distagg
