#include "pfd/llm/schema.hpp"

#include <set>

#include "pfd/common/text.hpp"

namespace pfd::llm {

std::string_view to_string(FieldKind k) {
  switch (k) {
    case FieldKind::boolean: return "boolean";
    case FieldKind::text: return "text";
    case FieldKind::list_of_boolean: return "list-of-boolean";
    case FieldKind::list_of_text: return "list-of-text";
  }
  return "boolean";
}

SchemaSpec::SchemaSpec(std::string name, std::vector<FieldSpec> fields)
    : name_(std::move(name)), fields_(std::move(fields)) {
  if (name_.empty()) throw SchemaDefinitionError("schema name is empty");
  std::set<std::string> seen;
  bool any_required = false;
  for (const auto& f : fields_) {
    if (f.name.empty()) throw SchemaDefinitionError("schema '" + name_ + "' has an unnamed field");
    if (!seen.insert(f.name).second) {
      throw SchemaDefinitionError("schema '" + name_ + "' repeats field '" + f.name + "'");
    }
    any_required = any_required || f.required;
  }
  if (!any_required) throw SchemaDefinitionError("schema '" + name_ + "' has no required field");
}

const FieldSpec* SchemaSpec::field(std::string_view name) const {
  for (const auto& f : fields_) {
    if (f.name == name) return &f;
  }
  return nullptr;
}

nlohmann::json SchemaSpec::json_schema() const {
  nlohmann::ordered_json props = nlohmann::ordered_json::object();
  nlohmann::json required = nlohmann::json::array();
  for (const auto& f : fields_) {
    nlohmann::ordered_json p;
    switch (f.kind) {
      case FieldKind::boolean: p["type"] = "boolean"; break;
      case FieldKind::text: p["type"] = "string"; break;
      case FieldKind::list_of_boolean:
        p["type"] = "array";
        p["items"] = {{"type", "boolean"}};
        break;
      case FieldKind::list_of_text:
        p["type"] = "array";
        p["items"] = {{"type", "string"}};
        break;
    }
    if (!f.description.empty()) p["description"] = f.description;
    props[f.name] = p;
    if (f.required) required.push_back(f.name);
  }
  nlohmann::ordered_json schema;
  schema["type"] = "object";
  schema["properties"] = props;
  schema["required"] = required;
  schema["additionalProperties"] = false;
  return nlohmann::json::parse(schema.dump());
}

std::string SchemaSpec::canonical() const {
  nlohmann::ordered_json j;
  j["name"] = name_;
  auto arr = nlohmann::ordered_json::array();
  for (const auto& f : fields_) {
    arr.push_back({f.name, std::string(to_string(f.kind)), f.required, f.description});
  }
  j["fields"] = arr;
  return j.dump();
}

namespace {

bool kind_matches(FieldKind kind, const nlohmann::json& v) {
  switch (kind) {
    case FieldKind::boolean: return v.is_boolean();
    case FieldKind::text: return v.is_string();
    case FieldKind::list_of_boolean:
      if (!v.is_array()) return false;
      for (const auto& e : v) {
        if (!e.is_boolean()) return false;
      }
      return true;
    case FieldKind::list_of_text:
      if (!v.is_array()) return false;
      for (const auto& e : v) {
        if (!e.is_string()) return false;
      }
      return true;
  }
  return false;
}

}  // namespace

std::vector<std::string> SchemaSpec::validate(const nlohmann::json& value) const {
  std::vector<std::string> errors;
  if (!value.is_object()) {
    errors.push_back("expected a JSON object, got " + std::string(value.type_name()));
    return errors;
  }
  for (const auto& [key, v] : value.items()) {
    if (!field(key)) errors.push_back("unexpected field '" + key + "'");
  }
  for (const auto& f : fields_) {
    auto it = value.find(f.name);
    if (it == value.end() || it->is_null()) {
      if (f.required) errors.push_back("missing required field '" + f.name + "'");
      continue;
    }
    if (!kind_matches(f.kind, *it)) {
      errors.push_back("field '" + f.name + "' must be " + std::string(to_string(f.kind)) + ", got " +
                       it->dump());
    }
  }
  return errors;
}

SchemaSpec::Parsed SchemaSpec::parse(std::string_view text) const {
  Parsed out;
  std::string body = trim(text);
  if (body.starts_with("```")) {
    const auto first_nl = body.find('\n');
    const auto close = body.rfind("```");
    if (first_nl == std::string::npos || close == std::string::npos || close <= first_nl) {
      out.errors.push_back("unterminated code fence");
      return out;
    }
    body = trim(body.substr(first_nl + 1, close - first_nl - 1));
  }
  nlohmann::json value;
  try {
    value = nlohmann::json::parse(body);
  } catch (const nlohmann::json::exception& e) {
    out.errors.push_back(std::string("response is not valid JSON: ") + e.what());
    return out;
  }
  out.errors = validate(value);
  if (!out.errors.empty()) return out;
  nlohmann::json clean = nlohmann::json::object();
  for (const auto& f : fields_) {
    auto it = value.find(f.name);
    if (it != value.end() && !it->is_null()) clean[f.name] = *it;
  }
  out.value = std::move(clean);
  return out;
}

}  // namespace pfd::llm
