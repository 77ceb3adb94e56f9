#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "etsync/sim.hpp"

namespace etsync {

namespace config {

/// Value of the TOML subset used by scenario files: numbers, booleans,
/// strings and (nested) arrays.
struct Value {
  std::variant<double, bool, std::string, std::vector<Value>> data;
  std::size_t line = 0;

  bool is_number() const { return std::holds_alternative<double>(data); }
  bool is_bool() const { return std::holds_alternative<bool>(data); }
  bool is_string() const { return std::holds_alternative<std::string>(data); }
  bool is_array() const { return std::holds_alternative<std::vector<Value>>(data); }
};

struct Table {
  std::string name;
  std::size_t line = 0;
  std::map<std::string, Value> entries;
};

struct Document {
  Table root;
  std::vector<Table> sections;  // in file order

  const Table* section(const std::string& name) const;
};

/// Throws ParseError("line N: ...").
Document parse_document(const std::string& text);

}  // namespace config

struct ScenarioOverrides {
  std::optional<double> horizon;
  std::optional<double> step;
  std::optional<bool> unchecked;
  std::optional<KernelMode> kernel;
};

/// Parses and fully validates a scenario (graph assumptions, reference model,
/// consensus design, generators, step size). Throws ParseError for malformed
/// text and ValidationError / design errors for violated hypotheses.
Scenario parse_config(const std::string& text, const ScenarioOverrides& overrides = {});
Scenario load_scenario(const std::string& path, const ScenarioOverrides& overrides = {});

std::string read_text_file(const std::string& path);

}  // namespace etsync
