#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "dqvi/errors.hpp"

namespace dqvi::toml {

/// Parse failure with the offending position (1-based).
struct parse_error : input_error {
  int line = 0, col = 0;
  parse_error(const std::string& msg, int line_, int col_)
      : input_error(msg + " at line " + std::to_string(line_) + ", column " +
                    std::to_string(col_)),
        line(line_),
        col(col_) {}
};

struct Value {
  using Array = std::vector<Value>;
  std::variant<std::string, double, std::int64_t, bool, Array> data;
  int line = 0, col = 0;

  bool is_string() const { return std::holds_alternative<std::string>(data); }
  bool is_number() const {
    return std::holds_alternative<double>(data) || std::holds_alternative<std::int64_t>(data);
  }
  bool is_integer() const { return std::holds_alternative<std::int64_t>(data); }
  bool is_bool() const { return std::holds_alternative<bool>(data); }
  bool is_array() const { return std::holds_alternative<Array>(data); }

  const std::string& as_string() const;
  double as_number() const;
  std::int64_t as_integer() const;
  bool as_bool() const;
  const Array& as_array() const;
};

/// Flat key/value table; nested tables are not part of the supported subset.
struct Table {
  std::map<std::string, Value> values;

  bool has(const std::string& key) const { return values.count(key) != 0; }
  const Value* find(const std::string& key) const;

  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_number(const std::string& key, double fallback) const;
  std::int64_t get_integer(const std::string& key, std::int64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;

  /// Throws config_error listing every key not in `known` (strict parsing).
  void reject_unknown_keys(const std::vector<std::string>& known,
                           const std::string& table_name) const;
};

struct Document {
  Table root;
  std::map<std::string, Table> tables;

  bool has_table(const std::string& name) const { return tables.count(name) != 0; }
  const Table& table(const std::string& name) const;
};

/// Supported subset: comments, bare keys, "strings", integers, floats
/// (inf/nan included), booleans, flat arrays, [table] headers. Duplicate keys
/// and malformed input raise parse_error with line/column.
Document parse(const std::string& text);

Document parse_file(const std::string& path);

}  // namespace dqvi::toml
