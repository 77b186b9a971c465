#include "distagg/result.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "distagg/dataset.hpp"
#include "distagg/error.hpp"
#include "distagg/metrics.hpp"

namespace distagg {

std::size_t AggregationResult::failed_items() const {
  return static_cast<std::size_t>(
      std::count_if(items.begin(), items.end(), [](const ItemResult& r) { return !r.error.empty(); }));
}

json result_to_json(const AggregationResult& result) {
  json items = json::array();
  for (const auto& r : result.items) {
    json o = {{"item", r.item},
              {"label", r.label ? label_to_json(*r.label) : json(nullptr)},
              {"worker", r.worker ? json(*r.worker) : json(nullptr)},
              {"score", std::isfinite(r.score) ? json(r.score) : json(nullptr)},
              {"recipe", r.recipe},
              {"flags", r.flags}};
    if (!r.error.empty()) o["error"] = r.error;
    items.push_back(std::move(o));
  }
  return {{"method", result.method},   {"task", to_string(result.task)}, {"items", std::move(items)},
          {"honeypots", result.honeypots}, {"fit", result.fit},          {"scores", result.scores},
          {"failed_items", result.failed_items()}};
}

AggregationResult result_from_json(const json& j) {
  AggregationResult res;
  try {
    res.method = j.at("method").get<std::string>();
    res.task = parse_task_kind(j.at("task").get<std::string>());
    for (const auto& o : j.at("items")) {
      ItemResult r;
      r.item = o.at("item").get<std::string>();
      if (!o.at("label").is_null()) r.label = label_from_json(o.at("label"), res.task);
      if (o.contains("worker") && !o.at("worker").is_null()) r.worker = o.at("worker").get<std::string>();
      if (o.contains("score") && !o.at("score").is_null()) r.score = o.at("score").get<double>();
      r.recipe = o.value("recipe", std::string{});
      r.flags = o.value("flags", std::vector<std::string>{});
      r.error = o.value("error", std::string{});
      res.items.push_back(std::move(r));
    }
    res.honeypots = j.value("honeypots", std::vector<std::string>{});
    res.fit = j.value("fit", json::object());
    res.scores = j.value("scores", json::array());
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed result: ") + e.what());
  }
  return res;
}

json evaluation_to_json(const Evaluation& ev) {
  json per = json::object();
  for (const auto& [item, s] : ev.per_item) per[item] = s;
  return {{"mean", ev.mean},
          {"scored", ev.per_item.size()},
          {"missing_gold", ev.missing_gold},
          {"excluded", ev.excluded},
          {"unscored", ev.unscored},
          {"per_item", std::move(per)}};
}

Evaluation evaluate_against_gold(const AggregationResult& result, const AnnotationDataset& dataset,
                                 const Metric& metric) {
  const std::set<std::string> honeypots(result.honeypots.begin(), result.honeypots.end());
  Evaluation ev;
  double sum = 0.0;
  for (const auto& r : result.items) {
    if (honeypots.count(r.item)) {
      ++ev.excluded;
      continue;
    }
    auto idx = dataset.find_item(r.item);
    const Label* gold = idx ? dataset.gold(*idx) : nullptr;
    if (!gold) {
      ++ev.missing_gold;
      continue;
    }
    if (!r.label) {
      ++ev.unscored;
      continue;
    }
    const double s = metric.evaluate(*r.label, *gold);
    ev.per_item.emplace_back(r.item, s);
    sum += s;
  }
  if (ev.per_item.empty()) throw DataError("no gold items");
  ev.mean = sum / static_cast<double>(ev.per_item.size());
  return ev;
}

}  // namespace distagg
