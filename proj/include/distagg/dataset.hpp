#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "distagg/label.hpp"

namespace distagg {

class Metric;

struct Annotation {
  std::size_t item = 0;    // index into AnnotationDataset::item_ids()
  std::size_t worker = 0;  // index into AnnotationDataset::worker_ids()
  Label label;
};

/// Items x workers x labels with optional per-item gold. Immutable once built;
/// ids are kept sorted lexicographically so indices double as a deterministic
/// tie-break order.
class AnnotationDataset {
 public:
  class Builder {
   public:
    explicit Builder(TaskKind task) : task_(task) {}
    Builder& add(std::string item, std::string worker, Label label);
    Builder& add_gold(std::string item, Label label);
    /// Validates and freezes. Throws DataError listing duplicate (item, worker)
    /// keys, variant mismatches, or gold for items without annotations.
    AnnotationDataset build() &&;

   private:
    struct Raw {
      std::string item, worker;
      Label label;
    };
    TaskKind task_;
    std::vector<Raw> raw_;
    std::vector<std::pair<std::string, Label>> gold_;
  };

  AnnotationDataset() = default;

  TaskKind task() const { return task_; }
  std::size_t item_count() const { return item_ids_.size(); }
  std::size_t worker_count() const { return worker_ids_.size(); }
  std::size_t annotation_count() const { return annotations_.size(); }

  const std::vector<std::string>& item_ids() const { return item_ids_; }
  const std::vector<std::string>& worker_ids() const { return worker_ids_; }
  const std::string& item_id(std::size_t i) const { return item_ids_.at(i); }
  const std::string& worker_id(std::size_t w) const { return worker_ids_.at(w); }
  std::optional<std::size_t> find_item(const std::string& id) const;
  std::optional<std::size_t> find_worker(const std::string& id) const;

  /// Annotations of item i, ordered by worker index.
  std::span<const Annotation> annotations_of(std::size_t item) const;
  std::span<const Annotation> annotations() const { return annotations_; }

  const Label* gold(std::size_t item) const;
  std::size_t gold_count() const;

  /// Copy restricted to the given gold items (others lose their gold).
  AnnotationDataset with_gold_subset(const std::vector<std::size_t>& items) const;
  /// Copy with the gold mapping replaced.
  AnnotationDataset with_gold(const std::map<std::string, Label>& gold) const;

 private:
  TaskKind task_ = TaskKind::category;
  std::vector<std::string> item_ids_;
  std::vector<std::string> worker_ids_;
  std::vector<Annotation> annotations_;
  std::vector<std::size_t> item_offsets_;  // size item_count()+1
  std::vector<std::optional<Label>> gold_;
};

/// Loads a JSON-Lines annotation file (and optional gold file) for one task
/// kind. Errors name the offending line number.
AnnotationDataset load_dataset(const std::filesystem::path& data, TaskKind task,
                               const std::optional<std::filesystem::path>& gold = std::nullopt);

/// Parses JSON-Lines text; `source` is used in error messages.
AnnotationDataset parse_dataset(const std::string& data_text, TaskKind task,
                                const std::string& gold_text = {},
                                const std::string& source = "<memory>");

void write_dataset(const AnnotationDataset& dataset, const std::filesystem::path& data,
                   const std::optional<std::filesystem::path>& gold = std::nullopt);
std::string dataset_to_jsonl(const AnnotationDataset& dataset);
std::string gold_to_jsonl(const AnnotationDataset& dataset);

/// Distances among the annotation slots of one item, stored as a condensed
/// upper triangle (no diagonal). Slots normally map one-to-one to workers;
/// pseudo-items built from partitions may hold several slots per worker.
struct ItemDistances {
  std::size_t item = 0;
  std::vector<std::size_t> workers;  // worker index per slot
  std::vector<double> condensed;     // size k(k-1)/2

  std::size_t size() const { return workers.size(); }
  double operator()(std::size_t a, std::size_t b) const;
  static std::size_t pair_index(std::size_t a, std::size_t b, std::size_t k);
};

class DistanceDataset {
 public:
  DistanceDataset() = default;
  DistanceDataset(std::vector<std::string> item_ids, std::vector<std::string> worker_ids,
                  std::vector<ItemDistances> items);

  const std::vector<std::string>& item_ids() const { return item_ids_; }
  const std::vector<std::string>& worker_ids() const { return worker_ids_; }
  const std::vector<ItemDistances>& items() const { return items_; }
  std::size_t worker_count() const { return worker_ids_.size(); }
  std::size_t entry_count() const;

 private:
  std::vector<std::string> item_ids_;
  std::vector<std::string> worker_ids_;
  std::vector<ItemDistances> items_;
};

/// One distance per unordered pair of each item's annotators, symmetrized by
/// two-way averaging when the metric is asymmetric. Gold never participates.
DistanceDataset build_distance_dataset(const AnnotationDataset& dataset, const Metric& metric);

}  // namespace distagg
