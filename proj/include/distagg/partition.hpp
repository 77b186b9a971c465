#pragma once

#include <string>
#include <vector>

#include "distagg/dataset.hpp"
#include "distagg/merge.hpp"
#include "distagg/result.hpp"
#include "distagg/select.hpp"

namespace distagg {

class Metric;

/// One object of one annotation: `annotation` indexes the item's label list,
/// `object` the position inside that multi-object label.
struct ObjectRef {
  std::size_t annotation = 0;
  std::size_t object = 0;
  auto operator<=>(const ObjectRef&) const = default;
};

struct ItemPartition {
  std::vector<std::vector<ObjectRef>> partitions;
  std::vector<ObjectRef> outliers;
  bool no_consensus = false;  // objects existed but every cluster was a singleton
};

/// Average-linkage agglomerative clustering of all objects of one item, cut
/// at the largest object count of any single annotation; singleton clusters
/// become outliers.
ItemPartition partition_cluster(const std::vector<Label>& labels, const Metric& metric);

/// One partition per gold object; each object goes to its nearest gold
/// object (ties to the lower gold index). No outliers.
ItemPartition partition_oracle(const std::vector<Label>& labels, const Label& gold, const Metric& metric);

/// Rand index between two partitions of the same objects (outliers count as
/// their own singleton groups).
double rand_index(const ItemPartition& a, const ItemPartition& b);

struct PartitionOptions {
  std::string inner = "mas";          // sad | bau | mas | madd
  bool oracle = false;                // partition by nearest gold object
  Statistic statistic = Statistic::median;
  std::string weights_from;           // pdmrr: "" = inner method, "none" = unweighted
  MasConfig mas;
  MaddConfig madd;
};

/// Partition, select within each partition, recombine by union. Worker
/// reliability is fitted once over all partitions pooled as pseudo-items.
AggregationResult psr(const AnnotationDataset& dataset, const Metric& metric, const PartitionOptions& options);

/// Partition, weighted merge within each partition, recombine by union.
AggregationResult pdmrr(const AnnotationDataset& dataset, const Metric& metric, const PartitionOptions& options);

}  // namespace distagg
