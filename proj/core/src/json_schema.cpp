#include "promptaug/json_schema.hpp"

#include <regex>

using nlohmann::json;

namespace promptaug {

namespace {

bool has_type(const json& value, const std::string& type) {
    if (type == "object") {
        return value.is_object();
    }
    if (type == "array") {
        return value.is_array();
    }
    if (type == "string") {
        return value.is_string();
    }
    if (type == "boolean") {
        return value.is_boolean();
    }
    if (type == "null") {
        return value.is_null();
    }
    if (type == "number") {
        return value.is_number();
    }
    if (type == "integer") {
        if (value.is_number_integer()) {
            return true;
        }
        return value.is_number_float() && value.get<double>() == static_cast<double>(static_cast<long long>(value.get<double>()));
    }
    return false;
}

std::string where(const std::string& pointer) {
    return pointer.empty() ? "/" : pointer;
}

void validate(const json& value, const json& schema, const std::string& pointer, std::vector<std::string>& errors) {
    if (!schema.is_object()) {
        return;
    }
    if (const auto it = schema.find("type"); it != schema.end()) {
        bool ok = false;
        if (it->is_string()) {
            ok = has_type(value, it->get<std::string>());
        } else {
            for (const auto& t : *it) {
                ok = ok || has_type(value, t.get<std::string>());
            }
        }
        if (!ok) {
            errors.push_back(where(pointer) + ": expected type " + it->dump() + ", got " + value.type_name());
            return;
        }
    }
    if (const auto it = schema.find("enum"); it != schema.end()) {
        if (std::find(it->begin(), it->end(), value) == it->end()) {
            errors.push_back(where(pointer) + ": " + value.dump() + " is not one of " + it->dump());
        }
    }
    if (const auto it = schema.find("const"); it != schema.end() && *it != value) {
        errors.push_back(where(pointer) + ": expected " + it->dump());
    }
    if (value.is_number()) {
        const double v = value.get<double>();
        if (const auto it = schema.find("minimum"); it != schema.end() && v < it->get<double>()) {
            errors.push_back(where(pointer) + ": " + value.dump() + " is below the minimum " + it->dump());
        }
        if (const auto it = schema.find("maximum"); it != schema.end() && v > it->get<double>()) {
            errors.push_back(where(pointer) + ": " + value.dump() + " is above the maximum " + it->dump());
        }
        if (const auto it = schema.find("exclusiveMinimum"); it != schema.end() && v <= it->get<double>()) {
            errors.push_back(where(pointer) + ": " + value.dump() + " must be greater than " + it->dump());
        }
        if (const auto it = schema.find("exclusiveMaximum"); it != schema.end() && v >= it->get<double>()) {
            errors.push_back(where(pointer) + ": " + value.dump() + " must be less than " + it->dump());
        }
    }
    if (value.is_string()) {
        const auto& s = value.get_ref<const std::string&>();
        if (const auto it = schema.find("minLength"); it != schema.end() && s.size() < it->get<std::size_t>()) {
            errors.push_back(where(pointer) + ": string shorter than " + it->dump());
        }
        if (const auto it = schema.find("pattern"); it != schema.end()) {
            if (!std::regex_search(s, std::regex(it->get<std::string>(), std::regex::ECMAScript))) {
                errors.push_back(where(pointer) + ": '" + s + "' does not match " + it->dump());
            }
        }
    }
    if (value.is_array()) {
        if (const auto it = schema.find("minItems"); it != schema.end() && value.size() < it->get<std::size_t>()) {
            errors.push_back(where(pointer) + ": needs at least " + it->dump() + " item(s)");
        }
        if (const auto it = schema.find("maxItems"); it != schema.end() && value.size() > it->get<std::size_t>()) {
            errors.push_back(where(pointer) + ": allows at most " + it->dump() + " item(s)");
        }
        if (const auto it = schema.find("uniqueItems"); it != schema.end() && it->get<bool>()) {
            for (std::size_t i = 0; i < value.size(); ++i) {
                for (std::size_t j = i + 1; j < value.size(); ++j) {
                    if (value[i] == value[j]) {
                        errors.push_back(where(pointer) + ": duplicate item " + value[i].dump());
                    }
                }
            }
        }
        if (const auto it = schema.find("items"); it != schema.end()) {
            for (std::size_t i = 0; i < value.size(); ++i) {
                validate(value[i], *it, pointer + "/" + std::to_string(i), errors);
            }
        }
    }
    if (value.is_object()) {
        if (const auto it = schema.find("required"); it != schema.end()) {
            for (const auto& key : *it) {
                if (!value.contains(key.get<std::string>())) {
                    errors.push_back(where(pointer) + ": missing required property '" + key.get<std::string>() + "'");
                }
            }
        }
        const auto props = schema.find("properties");
        for (const auto& [key, child] : value.items()) {
            const std::string child_pointer = pointer + "/" + key;
            if (props != schema.end() && props->contains(key)) {
                validate(child, (*props)[key], child_pointer, errors);
            } else if (const auto extra = schema.find("additionalProperties");
                       extra != schema.end() && extra->is_boolean() && !extra->get<bool>()) {
                errors.push_back(where(pointer) + ": unknown property '" + key + "'");
            } else if (extra != schema.end() && extra->is_object()) {
                validate(child, *extra, child_pointer, errors);
            }
        }
    }
}

} // namespace

std::vector<std::string> validate_schema(const json& document, const json& schema) {
    std::vector<std::string> errors;
    validate(document, schema, "", errors);
    return errors;
}

} // namespace promptaug
