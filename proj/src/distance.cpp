#include <cmath>

#include "distagg/dataset.hpp"
#include "distagg/error.hpp"
#include "distagg/metrics.hpp"

namespace distagg {

DistanceDataset build_distance_dataset(const AnnotationDataset& dataset, const Metric& metric) {
  if (dataset.task() != metric.variant()) {
    throw MetricError("metric '" + metric.name() + "' does not apply to '" +
                      std::string(to_string(dataset.task())) + "' labels");
  }
  std::vector<ItemDistances> items;
  items.reserve(dataset.item_count());
  for (std::size_t i = 0; i < dataset.item_count(); ++i) {
    auto anns = dataset.annotations_of(i);
    ItemDistances d;
    d.item = i;
    for (const auto& a : anns) d.workers.push_back(a.worker);
    const std::size_t k = anns.size();
    d.condensed.reserve(k * (k - 1) / 2);
    for (std::size_t a = 0; a < k; ++a) {
      for (std::size_t b = a + 1; b < k; ++b) {
        try {
          d.condensed.push_back(metric.distance(anns[a].label, anns[b].label));
        } catch (const MetricError& e) {
          throw MetricError("item '" + dataset.item_id(i) + "', workers ('" +
                            dataset.worker_id(anns[a].worker) + "', '" +
                            dataset.worker_id(anns[b].worker) + "'): " + e.what());
        }
      }
    }
    items.push_back(std::move(d));
  }
  return DistanceDataset(dataset.item_ids(), dataset.worker_ids(), std::move(items));
}

}  // namespace distagg
