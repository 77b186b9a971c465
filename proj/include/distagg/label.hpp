#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace distagg {

struct Category {
  std::string symbol;
  bool operator==(const Category&) const = default;
};

struct Number {
  double value = 0.0;
  bool operator==(const Number&) const = default;
};

struct Vector {
  std::vector<double> values;
  bool operator==(const Vector&) const = default;
};

/// Ordered element ids, best first. Elements of the item's universe that are
/// not listed are treated as tied for last place.
struct Ranking {
  std::vector<std::string> elements;
  bool operator==(const Ranking&) const = default;
};

struct TokenSequence {
  std::vector<std::string> tokens;
  bool operator==(const TokenSequence&) const = default;
};

/// Half-open token interval [start, end).
struct Span {
  std::int64_t start = 0;
  std::int64_t end = 0;
  std::optional<std::string> cls;
  bool operator==(const Span&) const = default;
};

struct SpanSet {
  std::vector<Span> spans;
  bool operator==(const SpanSet&) const = default;
};

struct Box {
  double x1 = 0.0, y1 = 0.0, x2 = 0.0, y2 = 0.0;
  bool operator==(const Box&) const = default;
};

struct BoxSet {
  std::vector<Box> boxes;
  bool operator==(const BoxSet&) const = default;
};

/// Invisible vertices carry no coordinates; they are canonicalized to (0, 0).
struct Vertex {
  double x = 0.0, y = 0.0;
  bool visible = true;
  bool operator==(const Vertex&) const = default;
};

struct Skeleton {
  std::vector<Vertex> vertices;
  double scale = 1.0;
  bool operator==(const Skeleton&) const = default;
};

struct KeypointSet {
  std::vector<Skeleton> skeletons;
  bool operator==(const KeypointSet&) const = default;
};

using Label = std::variant<Category, Number, Vector, Ranking, TokenSequence, SpanSet, BoxSet,
                           KeypointSet>;

/// One enumerator per Label alternative, in the same order.
enum class TaskKind { category, number, vector, ranking, tokens, span, box, keypoint };

TaskKind kind_of(const Label& label);
std::string_view to_string(TaskKind kind);
TaskKind parse_task_kind(std::string_view name);

/// True for variants holding a set of objects (spans, boxes, skeletons).
bool is_multi_object(TaskKind kind);

/// Number of objects in a multi-object label; 1 for single-object labels.
std::size_t object_count(const Label& label);

/// Splits a multi-object label into singleton labels of the same variant.
std::vector<Label> split_objects(const Label& label);

/// Joins singleton (or larger) labels of one multi-object variant into a set.
Label join_objects(TaskKind kind, const std::vector<Label>& parts);

/// Throws DataError when a label violates its variant invariants
/// (degenerate span/box, duplicate ranking elements, non-positive scale).
void validate(const Label& label);

/// Returns a copy with invisible keypoint vertices moved to (0, 0).
Label canonicalize(Label label);

}  // namespace distagg
