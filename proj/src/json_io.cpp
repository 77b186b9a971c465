#include "distagg/json_io.hpp"

#include "distagg/error.hpp"

namespace distagg {
namespace {

double number_of(const json& v, const char* what) {
  if (!v.is_number()) throw DataError(std::string("expected number for ") + what);
  return v.get<double>();
}

std::vector<std::string> strings_of(const json& v, const char* what) {
  if (!v.is_array()) throw DataError(std::string("expected string array for ") + what);
  std::vector<std::string> out;
  out.reserve(v.size());
  for (const auto& e : v) {
    if (!e.is_string()) throw DataError(std::string("expected string array for ") + what);
    out.push_back(e.get<std::string>());
  }
  return out;
}

const json& field(const json& obj, const char* key) {
  if (!obj.is_object() || !obj.contains(key)) {
    throw DataError(std::string("missing field '") + key + "'");
  }
  return obj.at(key);
}

}  // namespace

json label_to_json(const Label& label) {
  return std::visit(
      [](const auto& l) -> json {
        using T = std::decay_t<decltype(l)>;
        if constexpr (std::is_same_v<T, Category>) {
          return l.symbol;
        } else if constexpr (std::is_same_v<T, Number>) {
          return l.value;
        } else if constexpr (std::is_same_v<T, Vector>) {
          return l.values;
        } else if constexpr (std::is_same_v<T, Ranking>) {
          return l.elements;
        } else if constexpr (std::is_same_v<T, TokenSequence>) {
          return l.tokens;
        } else if constexpr (std::is_same_v<T, SpanSet>) {
          json arr = json::array();
          for (const auto& s : l.spans) {
            json o = {{"start", s.start}, {"end", s.end}};
            if (s.cls) o["class"] = *s.cls;
            arr.push_back(std::move(o));
          }
          return arr;
        } else if constexpr (std::is_same_v<T, BoxSet>) {
          json arr = json::array();
          for (const auto& b : l.boxes) {
            arr.push_back({{"x1", b.x1}, {"y1", b.y1}, {"x2", b.x2}, {"y2", b.y2}});
          }
          return arr;
        } else {
          json arr = json::array();
          for (const auto& sk : l.skeletons) {
            json verts = json::array();
            for (const auto& v : sk.vertices) verts.push_back({{"x", v.x}, {"y", v.y}, {"v", v.visible}});
            arr.push_back({{"vertices", std::move(verts)}, {"scale", sk.scale}});
          }
          return arr;
        }
      },
      label);
}

Label label_from_json(const json& value, TaskKind kind) {
  Label out;
  switch (kind) {
    case TaskKind::category:
      if (!value.is_string()) throw DataError("expected string for category label");
      out = Category{value.get<std::string>()};
      break;
    case TaskKind::number:
      out = Number{number_of(value, "number label")};
      break;
    case TaskKind::vector: {
      if (!value.is_array()) throw DataError("expected number array for vector label");
      Vector v;
      for (const auto& e : value) v.values.push_back(number_of(e, "vector component"));
      out = std::move(v);
      break;
    }
    case TaskKind::ranking:
      out = Ranking{strings_of(value, "ranking label")};
      break;
    case TaskKind::tokens:
      out = TokenSequence{strings_of(value, "token label")};
      break;
    case TaskKind::span: {
      if (!value.is_array()) throw DataError("expected array for span label");
      SpanSet set;
      for (const auto& e : value) {
        Span s;
        const auto& st = field(e, "start");
        const auto& en = field(e, "end");
        if (!st.is_number_integer() || !en.is_number_integer()) {
          throw DataError("span start/end must be integers");
        }
        s.start = st.get<std::int64_t>();
        s.end = en.get<std::int64_t>();
        if (e.contains("class") && !e.at("class").is_null()) {
          if (!e.at("class").is_string()) throw DataError("span class must be a string");
          s.cls = e.at("class").get<std::string>();
        }
        set.spans.push_back(std::move(s));
      }
      out = std::move(set);
      break;
    }
    case TaskKind::box: {
      if (!value.is_array()) throw DataError("expected array for box label");
      BoxSet set;
      for (const auto& e : value) {
        set.boxes.push_back(Box{number_of(field(e, "x1"), "x1"), number_of(field(e, "y1"), "y1"),
                                number_of(field(e, "x2"), "x2"), number_of(field(e, "y2"), "y2")});
      }
      out = std::move(set);
      break;
    }
    case TaskKind::keypoint: {
      if (!value.is_array()) throw DataError("expected array for keypoint label");
      KeypointSet set;
      for (const auto& e : value) {
        Skeleton sk;
        sk.scale = number_of(field(e, "scale"), "scale");
        const auto& verts = field(e, "vertices");
        if (!verts.is_array()) throw DataError("keypoint vertices must be an array");
        for (const auto& v : verts) {
          Vertex vx;
          vx.x = number_of(field(v, "x"), "vertex x");
          vx.y = number_of(field(v, "y"), "vertex y");
          const auto& vis = field(v, "v");
          if (vis.is_boolean()) {
            vx.visible = vis.get<bool>();
          } else if (vis.is_number()) {
            vx.visible = vis.get<double>() > 0.0;
          } else {
            throw DataError("vertex visibility must be boolean");
          }
          sk.vertices.push_back(vx);
        }
        set.skeletons.push_back(std::move(sk));
      }
      out = std::move(set);
      break;
    }
  }
  out = canonicalize(std::move(out));
  validate(out);
  return out;
}

}  // namespace distagg
