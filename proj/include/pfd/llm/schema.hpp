#pragma once

#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pfd/common/error.hpp"

namespace pfd::llm {

enum class FieldKind { boolean, text, list_of_boolean, list_of_text };

std::string_view to_string(FieldKind k);

struct FieldSpec {
  std::string name;
  FieldKind kind = FieldKind::boolean;
  bool required = true;
  std::string description;
};

class SchemaDefinitionError : public Error {
 public:
  using Error::Error;
};

// The output contract for one structured completion. Field names are
// unique and at least one field is required.
class SchemaSpec {
 public:
  SchemaSpec(std::string name, std::vector<FieldSpec> fields);

  const std::string& name() const { return name_; }
  const std::vector<FieldSpec>& fields() const { return fields_; }
  const FieldSpec* field(std::string_view name) const;

  // JSON Schema for the wire request (additionalProperties: false).
  nlohmann::json json_schema() const;
  // Stable text form; part of the cache key.
  std::string canonical() const;

  // Every violation found, in field order; empty means valid.
  std::vector<std::string> validate(const nlohmann::json& value) const;

  // Model text -> validated object containing only schema fields (absent
  // optional fields omitted). Tolerates surrounding whitespace and a single
  // Markdown code fence; anything else that is not one JSON object fails.
  struct Parsed {
    std::optional<nlohmann::json> value;
    std::vector<std::string> errors;
  };
  Parsed parse(std::string_view text) const;

 private:
  std::string name_;
  std::vector<FieldSpec> fields_;
};

}  // namespace pfd::llm
