#pragma once

#include <json.hpp>

#include "distagg/label.hpp"

namespace distagg {

using json = nlohmann::json;

/// Variant-specific wire encoding of a label (see README "Dataset format").
json label_to_json(const Label& label);
/// Throws DataError when `value` does not match the encoding for `kind`.
Label label_from_json(const json& value, TaskKind kind);

}  // namespace distagg
