#include "distagg/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "distagg/error.hpp"
#include "distagg/rng.hpp"

namespace distagg {
namespace {

std::string padded(char prefix, std::size_t index, std::size_t count, int min_width) {
  int width = 1;
  for (std::size_t c = count > 0 ? count - 1 : 0; c >= 10; c /= 10) ++width;
  width = std::max(width, min_width);
  char buf[32];
  std::snprintf(buf, sizeof buf, "%c%0*zu", prefix, width, index);
  return buf;
}

struct Crowd {
  std::vector<std::string> ids;
  std::vector<double> sigma;
};

Crowd draw_crowd(const SimConfig& cfg) {
  Rng rng = make_rng(cfg.seed, "workers");
  const auto [a, b] = beta_params(cfg.preset);
  Crowd c;
  for (std::size_t u = 0; u < cfg.n_workers; ++u) {
    c.ids.push_back(padded('w', u, cfg.n_workers, 2));
    c.sigma.push_back(beta_variate(rng, a, b));
  }
  return c;
}

// round(rJ) distinct workers for one item (partial Fisher-Yates).
std::vector<std::size_t> assign_workers(Rng& rng, std::size_t n_workers, std::size_t k) {
  std::vector<std::size_t> pool(n_workers);
  std::iota(pool.begin(), pool.end(), 0);
  for (std::size_t j = 0; j < k; ++j) {
    const auto pick = j + static_cast<std::size_t>(uniform_index(rng, n_workers - j));
    std::swap(pool[j], pool[pick]);
  }
  pool.resize(k);
  return pool;
}

}  // namespace

std::string_view to_string(SimTask task) {
  switch (task) {
    case SimTask::binary: return "binary";
    case SimTask::ranking: return "ranking";
    case SimTask::keypoints: return "keypoints";
  }
  return "binary";
}

std::string_view to_string(ErrorPreset preset) {
  switch (preset) {
    case ErrorPreset::uniform: return "uniform";
    case ErrorPreset::centered: return "centered";
    case ErrorPreset::easy_skew: return "easy_skew";
    case ErrorPreset::difficult_skew: return "difficult_skew";
  }
  return "uniform";
}

SimTask parse_sim_task(std::string_view name) {
  for (auto t : {SimTask::binary, SimTask::ranking, SimTask::keypoints}) {
    if (to_string(t) == name) return t;
  }
  throw ConfigError("unknown simulation task '" + std::string(name) + "'");
}

ErrorPreset parse_error_preset(std::string_view name) {
  for (auto p : {ErrorPreset::uniform, ErrorPreset::centered, ErrorPreset::easy_skew,
                 ErrorPreset::difficult_skew}) {
    if (to_string(p) == name) return p;
  }
  throw ConfigError("unknown error distribution '" + std::string(name) + "'");
}

std::pair<double, double> beta_params(ErrorPreset preset) {
  switch (preset) {
    case ErrorPreset::uniform: return {1.0, 1.0};
    case ErrorPreset::centered: return {3.0, 3.0};
    case ErrorPreset::easy_skew: return {1.0, 3.0};
    case ErrorPreset::difficult_skew: return {3.0, 1.0};
  }
  return {1.0, 1.0};
}

std::size_t SimConfig::workers_per_item() const {
  const double k = std::round(r * static_cast<double>(n_workers));
  if (k < 2.0 || k > static_cast<double>(n_workers)) {
    throw ConfigError("r * J must round to between 2 and J workers per item");
  }
  return static_cast<std::size_t>(k);
}

std::string sim_metric(SimTask task) {
  switch (task) {
    case SimTask::binary: return "exact";
    case SimTask::ranking: return "kendall:" + std::to_string(kRankingUniverse);
    case SimTask::keypoints: return "oks";
  }
  return "exact";
}

std::vector<double> worker_sigma_vector(const SimData& data) {
  std::vector<double> out;
  for (const auto& id : data.dataset.worker_ids()) out.push_back(data.truth.worker_sigma.at(id));
  return out;
}

SimData simulate(const SimConfig& cfg) {
  switch (cfg.task) {
    case SimTask::binary: return simulate_binary(cfg);
    case SimTask::ranking: return simulate_rankings(cfg);
    case SimTask::keypoints: return simulate_keypoints(cfg);
  }
  return simulate_binary(cfg);
}

SimData simulate_binary(const SimConfig& cfg) {
  const std::size_t k = cfg.workers_per_item();
  if (cfg.n_items == 0) throw ConfigError("simulation needs at least one item");
  const Crowd crowd = draw_crowd(cfg);
  Rng rng = make_rng(cfg.seed, "binary");
  AnnotationDataset::Builder b(TaskKind::category);
  for (std::size_t i = 0; i < cfg.n_items; ++i) {
    const std::string item = padded('i', i, cfg.n_items, 4);
    const bool gold = uniform01(rng) < cfg.gold_p;
    b.add_gold(item, Category{gold ? "1" : "0"});
    for (auto u : assign_workers(rng, cfg.n_workers, k)) {
      // with probability sigma_u the label is replaced by a random class
      bool label = gold;
      if (uniform01(rng) < crowd.sigma[u]) label = uniform01(rng) < 0.5;
      b.add(item, crowd.ids[u], Category{label ? "1" : "0"});
    }
  }
  SimData out{std::move(b).build(), {}};
  for (std::size_t u = 0; u < crowd.ids.size(); ++u) out.truth.worker_sigma[crowd.ids[u]] = crowd.sigma[u];
  return out;
}

SimData simulate_rankings(const SimConfig& cfg) {
  const std::size_t k = cfg.workers_per_item();
  if (cfg.n_items == 0) throw ConfigError("simulation needs at least one item");
  const Crowd crowd = draw_crowd(cfg);
  Rng rng = make_rng(cfg.seed, "ranking");
  std::vector<std::string> elements;
  for (std::size_t e = 0; e < kRankingUniverse; ++e) elements.push_back(padded('e', e, kRankingUniverse, 2));

  auto top = [&](const std::vector<double>& score) {
    std::vector<std::size_t> order(score.size());
    std::iota(order.begin(), order.end(), 0);
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(kRankingDepth), order.end(),
                      [&](std::size_t a, std::size_t b) { return score[a] > score[b]; });
    Ranking r;
    for (std::size_t j = 0; j < kRankingDepth; ++j) r.elements.push_back(elements[order[j]]);
    return r;
  };

  SimData out;
  AnnotationDataset::Builder b(TaskKind::ranking);
  for (std::size_t i = 0; i < cfg.n_items; ++i) {
    const std::string item = padded('i', i, cfg.n_items, 4);
    std::vector<double> g(kRankingUniverse);
    for (auto& v : g) v = normal(rng);
    const double sigma_i = 0.5 + beta_variate(rng, 3.0, 3.0);
    out.truth.item_sigma[item] = sigma_i;
    auto& scores = out.truth.element_score[item];
    for (std::size_t e = 0; e < kRankingUniverse; ++e) scores[elements[e]] = g[e];
    b.add_gold(item, top(g));
    for (auto u : assign_workers(rng, cfg.n_workers, k)) {
      std::vector<double> perceived(kRankingUniverse);
      for (std::size_t e = 0; e < kRankingUniverse; ++e) {
        perceived[e] = normal(rng, g[e], crowd.sigma[u] * sigma_i);
      }
      b.add(item, crowd.ids[u], top(perceived));
    }
  }
  out.dataset = std::move(b).build();
  for (std::size_t u = 0; u < crowd.ids.size(); ++u) out.truth.worker_sigma[crowd.ids[u]] = crowd.sigma[u];
  return out;
}

// ---------------------------------------------------------------------------
// keypoints

namespace {

constexpr double kFrameW = 640.0, kFrameH = 480.0;
constexpr std::size_t kVertices = 17;

double skeleton_scale(const std::vector<Vertex>& v) {
  double x1 = 1e300, y1 = 1e300, x2 = -1e300, y2 = -1e300;
  int n = 0;
  for (const auto& p : v) {
    if (!p.visible) continue;
    ++n;
    x1 = std::min(x1, p.x);
    y1 = std::min(y1, p.y);
    x2 = std::max(x2, p.x);
    y2 = std::max(y2, p.y);
  }
  if (n < 2) return 1.0;
  return std::max(1.0, std::sqrt(std::max(x2 - x1, 1.0) * std::max(y2 - y1, 1.0)));
}

// A standing figure with jointed limbs; vertex order follows the usual
// 17-point human layout (face, shoulders, elbows, wrists, hips, knees, ankles).
Skeleton random_person(Rng& rng) {
  const double h = 60.0 + 160.0 * uniform01(rng);
  const double cx = 0.1 * kFrameW + 0.8 * kFrameW * uniform01(rng);
  const double cy = 0.15 * kFrameH + 0.7 * kFrameH * uniform01(rng);
  const double lean = normal(rng, 0.0, 0.15);
  auto at = [&](double dx, double dy) {
    // dx, dy in body units (h), rotated by the lean around the hip centre
    const double c = std::cos(lean), s = std::sin(lean);
    return Vertex{cx + h * (c * dx - s * dy), cy + h * (s * dx + c * dy), true};
  };
  auto limb = [&](double x0, double y0, double base_angle, double len) {
    const double a = base_angle + normal(rng, 0.0, 0.5);
    return std::pair<double, double>{x0 + len * std::sin(a), y0 + len * std::cos(a)};
  };
  std::vector<Vertex> v(kVertices);
  const double sh = 0.12, hip = 0.08;
  v[0] = at(0.0, -0.55);                       // nose
  v[1] = at(-0.03, -0.58);                     // eyes
  v[2] = at(0.03, -0.58);
  v[3] = at(-0.06, -0.56);                     // ears
  v[4] = at(0.06, -0.56);
  v[5] = at(-sh, -0.42);                       // shoulders
  v[6] = at(sh, -0.42);
  auto [lex, ley] = limb(-sh, -0.42, 0.3, 0.17);   // elbows
  auto [rex, rey] = limb(sh, -0.42, -0.3, 0.17);
  v[7] = at(lex, ley);
  v[8] = at(rex, rey);
  auto [lwx, lwy] = limb(lex, ley, 0.2, 0.15);     // wrists
  auto [rwx, rwy] = limb(rex, rey, -0.2, 0.15);
  v[9] = at(lwx, lwy);
  v[10] = at(rwx, rwy);
  v[11] = at(-hip, 0.0);                       // hips
  v[12] = at(hip, 0.0);
  auto [lkx, lky] = limb(-hip, 0.0, 0.05, 0.24);   // knees
  auto [rkx, rky] = limb(hip, 0.0, -0.05, 0.24);
  v[13] = at(lkx, lky);
  v[14] = at(rkx, rky);
  auto [lax, lay] = limb(lkx, lky, 0.0, 0.24);     // ankles
  auto [rax, ray] = limb(rkx, rky, 0.0, 0.24);
  v[15] = at(lax, lay);
  v[16] = at(rax, ray);
  for (std::size_t j = 0; j < kVertices; ++j) {
    if (uniform01(rng) < 0.1) v[j] = Vertex{0.0, 0.0, false};
  }
  if (std::none_of(v.begin(), v.end(), [](const Vertex& p) { return p.visible; })) v[0].visible = true;
  Skeleton sk{std::move(v), 1.0};
  sk.scale = skeleton_scale(sk.vertices);
  return sk;
}

Skeleton corrupt(Rng& rng, const Skeleton& g, double sigma, const KeypointNoise& noise) {
  double mx = 0.0, my = 0.0;
  int n = 0;
  for (const auto& p : g.vertices) {
    if (!p.visible) continue;
    mx += p.x;
    my += p.y;
    ++n;
  }
  mx /= n;
  my /= n;
  const double theta = normal(rng, 0.0, noise.rotation * sigma);
  const double scale = std::exp(normal(rng, 0.0, noise.log_scale * sigma));
  const double c = std::cos(theta) * scale, s = std::sin(theta) * scale;
  const double jitter = noise.translation * sigma * g.scale;
  Skeleton out = g;
  for (auto& p : out.vertices) {
    if (!p.visible) continue;
    const double dx = p.x - mx, dy = p.y - my;
    p.x = mx + c * dx - s * dy + normal(rng, 0.0, jitter);
    p.y = my + s * dx + c * dy + normal(rng, 0.0, jitter);
  }
  out.scale = skeleton_scale(out.vertices);
  return out;
}

}  // namespace

SimData simulate_keypoints(const SimConfig& cfg) {
  const std::size_t k = cfg.workers_per_item();
  if (cfg.n_items == 0) throw ConfigError("simulation needs at least one item");
  const Crowd crowd = draw_crowd(cfg);
  Rng gold_rng = make_rng(cfg.seed, "keypoint-gold");
  Rng rng = make_rng(cfg.seed, "keypoints");
  AnnotationDataset::Builder b(TaskKind::keypoint);
  for (std::size_t i = 0; i < cfg.n_items; ++i) {
    const std::string item = padded('i', i, cfg.n_items, 4);
    KeypointSet gold;
    const std::size_t count = 4 + static_cast<std::size_t>(uniform_index(gold_rng, 3));
    for (std::size_t s = 0; s < count; ++s) gold.skeletons.push_back(random_person(gold_rng));
    for (auto u : assign_workers(rng, cfg.n_workers, k)) {
      KeypointSet label;
      for (const auto& sk : gold.skeletons) {
        const bool omit = uniform01(rng) < cfg.keypoint_noise.omission * crowd.sigma[u];
        Skeleton c = corrupt(rng, sk, crowd.sigma[u], cfg.keypoint_noise);
        if (!omit) label.skeletons.push_back(std::move(c));
      }
      b.add(item, crowd.ids[u], std::move(label));
    }
    b.add_gold(item, std::move(gold));
  }
  SimData out{std::move(b).build(), {}};
  for (std::size_t u = 0; u < crowd.ids.size(); ++u) out.truth.worker_sigma[crowd.ids[u]] = crowd.sigma[u];
  return out;
}

json truth_to_json(const SimTruth& truth) {
  return {{"worker_sigma", truth.worker_sigma}, {"item_sigma", truth.item_sigma}, {"element_score", truth.element_score}};
}

SimTruth truth_from_json(const json& j) {
  SimTruth t;
  try {
    if (j.contains("worker_sigma")) t.worker_sigma = j.at("worker_sigma").get<std::map<std::string, double>>();
    if (j.contains("item_sigma")) t.item_sigma = j.at("item_sigma").get<std::map<std::string, double>>();
    if (j.contains("element_score")) {
      t.element_score = j.at("element_score").get<std::map<std::string, std::map<std::string, double>>>();
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed simulation truth: ") + e.what());
  }
  return t;
}

}  // namespace distagg
