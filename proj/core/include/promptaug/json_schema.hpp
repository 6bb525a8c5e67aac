#pragma once

#include <json.hpp>

#include <string>
#include <vector>

namespace promptaug {

/// Validates a document against the subset of JSON Schema used by the
/// shipped schemas: type, enum, const, required, properties,
/// additionalProperties (boolean), items, minItems, maxItems, uniqueItems,
/// minimum, maximum, exclusiveMinimum, exclusiveMaximum, minLength, pattern.
/// Unknown keywords are ignored. Returns one "<pointer>: <problem>" line per
/// violation; an empty result means the document is valid.
std::vector<std::string> validate_schema(const nlohmann::json& document, const nlohmann::json& schema);

} // namespace promptaug
