#include "distagg/label.hpp"

#include <set>

#include "distagg/error.hpp"

namespace distagg {

TaskKind kind_of(const Label& label) { return static_cast<TaskKind>(label.index()); }

std::string_view to_string(TaskKind kind) {
  switch (kind) {
    case TaskKind::category: return "category";
    case TaskKind::number: return "number";
    case TaskKind::vector: return "vector";
    case TaskKind::ranking: return "ranking";
    case TaskKind::tokens: return "tokens";
    case TaskKind::span: return "span";
    case TaskKind::box: return "box";
    case TaskKind::keypoint: return "keypoint";
  }
  return "unknown";
}

TaskKind parse_task_kind(std::string_view name) {
  for (int k = 0; k <= static_cast<int>(TaskKind::keypoint); ++k) {
    auto kind = static_cast<TaskKind>(k);
    if (to_string(kind) == name) return kind;
  }
  throw DataError("unknown task_kind '" + std::string(name) + "'");
}

bool is_multi_object(TaskKind kind) {
  return kind == TaskKind::span || kind == TaskKind::box || kind == TaskKind::keypoint;
}

std::size_t object_count(const Label& label) {
  if (auto* s = std::get_if<SpanSet>(&label)) return s->spans.size();
  if (auto* b = std::get_if<BoxSet>(&label)) return b->boxes.size();
  if (auto* k = std::get_if<KeypointSet>(&label)) return k->skeletons.size();
  return 1;
}

std::vector<Label> split_objects(const Label& label) {
  std::vector<Label> out;
  if (auto* s = std::get_if<SpanSet>(&label)) {
    for (const auto& span : s->spans) out.emplace_back(SpanSet{{span}});
  } else if (auto* b = std::get_if<BoxSet>(&label)) {
    for (const auto& box : b->boxes) out.emplace_back(BoxSet{{box}});
  } else if (auto* k = std::get_if<KeypointSet>(&label)) {
    for (const auto& sk : k->skeletons) out.emplace_back(KeypointSet{{sk}});
  } else {
    out.push_back(label);
  }
  return out;
}

Label join_objects(TaskKind kind, const std::vector<Label>& parts) {
  switch (kind) {
    case TaskKind::span: {
      SpanSet set;
      for (const auto& p : parts) {
        const auto& s = std::get<SpanSet>(p).spans;
        set.spans.insert(set.spans.end(), s.begin(), s.end());
      }
      return set;
    }
    case TaskKind::box: {
      BoxSet set;
      for (const auto& p : parts) {
        const auto& b = std::get<BoxSet>(p).boxes;
        set.boxes.insert(set.boxes.end(), b.begin(), b.end());
      }
      return set;
    }
    case TaskKind::keypoint: {
      KeypointSet set;
      for (const auto& p : parts) {
        const auto& k = std::get<KeypointSet>(p).skeletons;
        set.skeletons.insert(set.skeletons.end(), k.begin(), k.end());
      }
      return set;
    }
    default:
      throw DataError("join_objects: variant '" + std::string(to_string(kind)) +
                      "' is not multi-object");
  }
}

void validate(const Label& label) {
  if (auto* r = std::get_if<Ranking>(&label)) {
    std::set<std::string> seen;
    for (const auto& e : r->elements) {
      if (!seen.insert(e).second) throw DataError("ranking contains duplicate element '" + e + "'");
    }
  } else if (auto* s = std::get_if<SpanSet>(&label)) {
    for (const auto& span : s->spans) {
      if (!(span.start < span.end)) {
        throw DataError("degenerate span [" + std::to_string(span.start) + "," +
                        std::to_string(span.end) + ")");
      }
    }
  } else if (auto* b = std::get_if<BoxSet>(&label)) {
    for (const auto& box : b->boxes) {
      if (!(box.x1 < box.x2) || !(box.y1 < box.y2)) throw DataError("degenerate box");
    }
  } else if (auto* k = std::get_if<KeypointSet>(&label)) {
    for (const auto& sk : k->skeletons) {
      if (!(sk.scale > 0.0)) throw DataError("keypoint skeleton scale must be positive");
    }
  }
}

Label canonicalize(Label label) {
  if (auto* k = std::get_if<KeypointSet>(&label)) {
    for (auto& sk : k->skeletons) {
      for (auto& v : sk.vertices) {
        if (!v.visible) v.x = v.y = 0.0;
      }
    }
  }
  return label;
}

}  // namespace distagg
