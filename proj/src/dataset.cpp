#include "distagg/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "distagg/error.hpp"
#include "distagg/json_io.hpp"

namespace distagg {
namespace {

std::size_t index_of(const std::vector<std::string>& sorted, const std::string& id) {
  auto it = std::lower_bound(sorted.begin(), sorted.end(), id);
  return static_cast<std::size_t>(it - sorted.begin());
}

// Dimension checks that span several labels of one dataset.
class SchemaCheck {
 public:
  void check(const Label& label, const std::string& where) {
    if (auto* v = std::get_if<Vector>(&label)) {
      expect(vector_dim_, v->values.size(), "vector dimension", where);
    } else if (auto* k = std::get_if<KeypointSet>(&label)) {
      for (const auto& sk : k->skeletons) {
        expect(vertex_count_, sk.vertices.size(), "skeleton vertex count", where);
      }
    }
  }

 private:
  static void expect(std::optional<std::size_t>& slot, std::size_t value, const char* what,
                     const std::string& where) {
    if (!slot) {
      slot = value;
    } else if (*slot != value) {
      throw DataError(std::string(what) + " mismatch at " + where + ": expected " +
                      std::to_string(*slot) + ", got " + std::to_string(value));
    }
  }
  std::optional<std::size_t> vector_dim_;
  std::optional<std::size_t> vertex_count_;
};

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

template <typename Fn>
void for_each_record(const std::string& text, const std::string& source, Fn&& fn) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      fn(json::parse(line));
    } catch (const json::exception& e) {
      throw DataError(source + ":" + std::to_string(line_no) + ": malformed record: " + e.what());
    } catch (const DataError& e) {
      throw DataError(source + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
}

std::string string_field(const json& rec, const char* key) {
  if (!rec.is_object() || !rec.contains(key)) {
    throw DataError(std::string("missing field '") + key + "'");
  }
  const auto& v = rec.at(key);
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<std::int64_t>());
  throw DataError(std::string("field '") + key + "' must be a string");
}

}  // namespace

AnnotationDataset::Builder& AnnotationDataset::Builder::add(std::string item, std::string worker,
                                                            Label label) {
  raw_.push_back({std::move(item), std::move(worker), std::move(label)});
  return *this;
}

AnnotationDataset::Builder& AnnotationDataset::Builder::add_gold(std::string item, Label label) {
  gold_.emplace_back(std::move(item), std::move(label));
  return *this;
}

AnnotationDataset AnnotationDataset::Builder::build() && {
  AnnotationDataset ds;
  ds.task_ = task_;
  SchemaCheck schema;

  std::set<std::string> items, workers;
  for (const auto& r : raw_) {
    const std::string where = "item '" + r.item + "' worker '" + r.worker + "'";
    if (kind_of(r.label) != task_) {
      throw DataError("label variant '" + std::string(to_string(kind_of(r.label))) + "' at " +
                      where + " does not match task '" + std::string(to_string(task_)) + "'");
    }
    validate(r.label);
    schema.check(r.label, where);
    items.insert(r.item);
    workers.insert(r.worker);
  }
  ds.item_ids_.assign(items.begin(), items.end());
  ds.worker_ids_.assign(workers.begin(), workers.end());

  ds.annotations_.reserve(raw_.size());
  for (auto& r : raw_) {
    ds.annotations_.push_back(
        {index_of(ds.item_ids_, r.item), index_of(ds.worker_ids_, r.worker), canonicalize(std::move(r.label))});
  }
  std::stable_sort(ds.annotations_.begin(), ds.annotations_.end(),
                   [](const Annotation& a, const Annotation& b) {
                     return std::tie(a.item, a.worker) < std::tie(b.item, b.worker);
                   });

  std::vector<std::string> duplicates;
  for (std::size_t k = 1; k < ds.annotations_.size(); ++k) {
    const auto& a = ds.annotations_[k - 1];
    const auto& b = ds.annotations_[k];
    if (a.item == b.item && a.worker == b.worker) {
      duplicates.push_back("(" + ds.item_ids_[a.item] + ", " + ds.worker_ids_[a.worker] + ")");
    }
  }
  if (!duplicates.empty()) {
    std::string msg = "duplicate (item, worker) keys:";
    for (const auto& d : duplicates) msg += " " + d;
    throw DataError(msg);
  }

  ds.item_offsets_.assign(ds.item_ids_.size() + 1, 0);
  for (const auto& a : ds.annotations_) ++ds.item_offsets_[a.item + 1];
  for (std::size_t i = 1; i < ds.item_offsets_.size(); ++i) {
    ds.item_offsets_[i] += ds.item_offsets_[i - 1];
  }

  ds.gold_.assign(ds.item_ids_.size(), std::nullopt);
  for (auto& [item, label] : gold_) {
    auto idx = ds.find_item(item);
    if (!idx) throw DataError("gold given for item '" + item + "' which has no annotations");
    if (kind_of(label) != task_) throw DataError("gold variant mismatch for item '" + item + "'");
    if (ds.gold_[*idx]) throw DataError("duplicate gold for item '" + item + "'");
    validate(label);
    schema.check(label, "gold item '" + item + "'");
    ds.gold_[*idx] = canonicalize(std::move(label));
  }
  return ds;
}

std::optional<std::size_t> AnnotationDataset::find_item(const std::string& id) const {
  auto it = std::lower_bound(item_ids_.begin(), item_ids_.end(), id);
  if (it == item_ids_.end() || *it != id) return std::nullopt;
  return static_cast<std::size_t>(it - item_ids_.begin());
}

std::optional<std::size_t> AnnotationDataset::find_worker(const std::string& id) const {
  auto it = std::lower_bound(worker_ids_.begin(), worker_ids_.end(), id);
  if (it == worker_ids_.end() || *it != id) return std::nullopt;
  return static_cast<std::size_t>(it - worker_ids_.begin());
}

std::span<const Annotation> AnnotationDataset::annotations_of(std::size_t item) const {
  return std::span<const Annotation>(annotations_).subspan(
      item_offsets_.at(item), item_offsets_.at(item + 1) - item_offsets_.at(item));
}

const Label* AnnotationDataset::gold(std::size_t item) const {
  const auto& g = gold_.at(item);
  return g ? &*g : nullptr;
}

std::size_t AnnotationDataset::gold_count() const {
  return static_cast<std::size_t>(
      std::count_if(gold_.begin(), gold_.end(), [](const auto& g) { return g.has_value(); }));
}

AnnotationDataset AnnotationDataset::with_gold_subset(const std::vector<std::size_t>& items) const {
  AnnotationDataset copy = *this;
  copy.gold_.assign(item_ids_.size(), std::nullopt);
  for (auto i : items) copy.gold_.at(i) = gold_.at(i);
  return copy;
}

AnnotationDataset AnnotationDataset::with_gold(const std::map<std::string, Label>& gold) const {
  AnnotationDataset copy = *this;
  copy.gold_.assign(item_ids_.size(), std::nullopt);
  for (const auto& [id, label] : gold) {
    auto idx = find_item(id);
    if (!idx) throw DataError("gold given for item '" + id + "' which has no annotations");
    if (kind_of(label) != task_) throw DataError("gold variant mismatch for item '" + id + "'");
    copy.gold_[*idx] = canonicalize(label);
  }
  return copy;
}

AnnotationDataset parse_dataset(const std::string& data_text, TaskKind task,
                                const std::string& gold_text, const std::string& source) {
  AnnotationDataset::Builder builder(task);
  for_each_record(data_text, source, [&](const json& rec) {
    builder.add(string_field(rec, "item"), string_field(rec, "worker"),
                label_from_json(rec.contains("label") ? rec.at("label") : json(), task));
  });
  if (!gold_text.empty()) {
    for_each_record(gold_text, source + " (gold)", [&](const json& rec) {
      if (!rec.contains("label")) throw DataError("missing field 'label'");
      builder.add_gold(string_field(rec, "item"), label_from_json(rec.at("label"), task));
    });
  }
  return std::move(builder).build();
}

AnnotationDataset load_dataset(const std::filesystem::path& data, TaskKind task,
                               const std::optional<std::filesystem::path>& gold) {
  std::string gold_text = gold ? read_file(*gold) : std::string{};
  return parse_dataset(read_file(data), task, gold_text, data.string());
}

std::string dataset_to_jsonl(const AnnotationDataset& ds) {
  std::string out;
  for (const auto& a : ds.annotations()) {
    json rec = {{"item", ds.item_id(a.item)}, {"worker", ds.worker_id(a.worker)},
                {"label", label_to_json(a.label)}};
    out += rec.dump();
    out += '\n';
  }
  return out;
}

std::string gold_to_jsonl(const AnnotationDataset& ds) {
  std::string out;
  for (std::size_t i = 0; i < ds.item_count(); ++i) {
    if (const Label* g = ds.gold(i)) {
      json rec = {{"item", ds.item_id(i)}, {"label", label_to_json(*g)}};
      out += rec.dump();
      out += '\n';
    }
  }
  return out;
}

void write_dataset(const AnnotationDataset& ds, const std::filesystem::path& data,
                   const std::optional<std::filesystem::path>& gold) {
  std::ofstream out(data, std::ios::binary);
  if (!out) throw DataError("cannot write '" + data.string() + "'");
  out << dataset_to_jsonl(ds);
  if (gold) {
    std::ofstream g(*gold, std::ios::binary);
    if (!g) throw DataError("cannot write '" + gold->string() + "'");
    g << gold_to_jsonl(ds);
  }
}

std::size_t ItemDistances::pair_index(std::size_t a, std::size_t b, std::size_t k) {
  if (a > b) std::swap(a, b);
  // row-major upper triangle without diagonal
  return a * (2 * k - a - 1) / 2 + (b - a - 1);
}

double ItemDistances::operator()(std::size_t a, std::size_t b) const {
  if (a == b) return 0.0;
  return condensed[pair_index(a, b, workers.size())];
}

DistanceDataset::DistanceDataset(std::vector<std::string> item_ids,
                                 std::vector<std::string> worker_ids,
                                 std::vector<ItemDistances> items)
    : item_ids_(std::move(item_ids)), worker_ids_(std::move(worker_ids)), items_(std::move(items)) {}

std::size_t DistanceDataset::entry_count() const {
  std::size_t n = 0;
  for (const auto& it : items_) n += it.condensed.size();
  return n;
}

}  // namespace distagg
