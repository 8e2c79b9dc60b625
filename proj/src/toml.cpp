#include "dqvi/toml.hpp"

#include <cctype>
#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>

namespace dqvi::toml {

const std::string& Value::as_string() const {
  if (!is_string()) throw parse_error("expected a string value", line, col);
  return std::get<std::string>(data);
}

double Value::as_number() const {
  if (std::holds_alternative<double>(data)) return std::get<double>(data);
  if (std::holds_alternative<std::int64_t>(data))
    return static_cast<double>(std::get<std::int64_t>(data));
  throw parse_error("expected a numeric value", line, col);
}

std::int64_t Value::as_integer() const {
  if (!is_integer()) throw parse_error("expected an integer value", line, col);
  return std::get<std::int64_t>(data);
}

bool Value::as_bool() const {
  if (!is_bool()) throw parse_error("expected a boolean value", line, col);
  return std::get<bool>(data);
}

const Value::Array& Value::as_array() const {
  if (!is_array()) throw parse_error("expected an array value", line, col);
  return std::get<Array>(data);
}

const Value* Table::find(const std::string& key) const {
  auto it = values.find(key);
  return it == values.end() ? nullptr : &it->second;
}

std::string Table::get_string(const std::string& key, const std::string& fallback) const {
  const Value* v = find(key);
  return v ? v->as_string() : fallback;
}

double Table::get_number(const std::string& key, double fallback) const {
  const Value* v = find(key);
  return v ? v->as_number() : fallback;
}

std::int64_t Table::get_integer(const std::string& key, std::int64_t fallback) const {
  const Value* v = find(key);
  return v ? v->as_integer() : fallback;
}

bool Table::get_bool(const std::string& key, bool fallback) const {
  const Value* v = find(key);
  return v ? v->as_bool() : fallback;
}

void Table::reject_unknown_keys(const std::vector<std::string>& known,
                                const std::string& table_name) const {
  std::string unknown;
  for (const auto& [key, value] : values) {
    bool ok = false;
    for (const auto& k : known) ok = ok || k == key;
    if (!ok) unknown += (unknown.empty() ? "" : ", ") + key;
  }
  if (!unknown.empty())
    throw config_error("unknown key(s) in [" + table_name + "]: " + unknown);
}

const Table& Document::table(const std::string& name) const {
  auto it = tables.find(name);
  if (it == tables.end()) throw config_error("missing required table [" + name + "]");
  return it->second;
}

namespace {

struct Cursor {
  const std::string& text;
  std::size_t pos = 0;
  int line = 1, col = 1;

  bool eof() const { return pos >= text.size(); }
  char peek() const { return text[pos]; }

  char advance() {
    const char c = text[pos++];
    if (c == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
    return c;
  }

  void skip_ws() {
    while (!eof() && (peek() == ' ' || peek() == '\t')) advance();
  }

  void skip_ws_and_comment() {
    skip_ws();
    if (!eof() && peek() == '#')
      while (!eof() && peek() != '\n') advance();
  }

  [[noreturn]] void fail(const std::string& msg) const { throw parse_error(msg, line, col); }
};

bool is_bare_key_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
}

std::string parse_key(Cursor& c) {
  c.skip_ws();
  if (c.eof() || !is_bare_key_char(c.peek())) c.fail("expected a key");
  std::string key;
  while (!c.eof() && is_bare_key_char(c.peek())) key += c.advance();
  return key;
}

Value parse_value(Cursor& c);

Value parse_scalar(Cursor& c) {
  Value v;
  v.line = c.line;
  v.col = c.col;
  if (c.peek() == '"') {
    c.advance();
    std::string s;
    while (!c.eof() && c.peek() != '"') {
      char ch = c.advance();
      if (ch == '\\') {
        if (c.eof()) c.fail("unterminated escape");
        const char esc = c.advance();
        switch (esc) {
          case 'n': ch = '\n'; break;
          case 't': ch = '\t'; break;
          case '"': ch = '"'; break;
          case '\\': ch = '\\'; break;
          default: c.fail("unsupported escape sequence");
        }
      } else if (ch == '\n') {
        c.fail("unterminated string");
      }
      s += ch;
    }
    if (c.eof()) c.fail("unterminated string");
    c.advance();
    v.data = s;
    return v;
  }
  std::string tok;
  while (!c.eof() && c.peek() != ' ' && c.peek() != '\t' && c.peek() != '\n' &&
         c.peek() != '#' && c.peek() != ',' && c.peek() != ']') {
    tok += c.advance();
  }
  if (tok.empty()) c.fail("expected a value");
  if (tok == "true") {
    v.data = true;
    return v;
  }
  if (tok == "false") {
    v.data = false;
    return v;
  }
  if (tok == "inf" || tok == "+inf") {
    v.data = std::numeric_limits<double>::infinity();
    return v;
  }
  if (tok == "-inf") {
    v.data = -std::numeric_limits<double>::infinity();
    return v;
  }
  if (tok == "nan") {
    v.data = std::numeric_limits<double>::quiet_NaN();
    return v;
  }
  const bool looks_float = tok.find_first_of(".eE") != std::string::npos;
  errno = 0;
  char* end = nullptr;
  if (!looks_float) {
    const long long iv = std::strtoll(tok.c_str(), &end, 10);
    if (errno == 0 && end == tok.c_str() + tok.size()) {
      v.data = static_cast<std::int64_t>(iv);
      return v;
    }
  }
  errno = 0;
  const double dv = std::strtod(tok.c_str(), &end);
  if (errno != 0 || end != tok.c_str() + tok.size())
    c.fail("malformed value '" + tok + "'");
  v.data = dv;
  return v;
}

Value parse_value(Cursor& c) {
  c.skip_ws();
  if (c.eof()) c.fail("expected a value");
  if (c.peek() != '[') return parse_scalar(c);

  Value arr;
  arr.line = c.line;
  arr.col = c.col;
  arr.data = Value::Array{};
  c.advance();  // '['
  auto& items = std::get<Value::Array>(arr.data);
  while (true) {
    c.skip_ws_and_comment();
    if (!c.eof() && c.peek() == '\n') {
      c.advance();
      continue;
    }
    if (c.eof()) c.fail("unterminated array");
    if (c.peek() == ']') {
      c.advance();
      break;
    }
    items.push_back(parse_value(c));
    c.skip_ws_and_comment();
    if (!c.eof() && c.peek() == ',') c.advance();
  }
  return arr;
}

}  // namespace

Document parse(const std::string& text) {
  Document doc;
  Cursor c{text};
  Table* current = &doc.root;
  std::string current_name = "<root>";

  while (!c.eof()) {
    c.skip_ws_and_comment();
    if (c.eof()) break;
    if (c.peek() == '\n') {
      c.advance();
      continue;
    }
    if (c.peek() == '[') {
      const int hline = c.line, hcol = c.col;
      c.advance();
      std::string name = parse_key(c);
      c.skip_ws();
      if (c.eof() || c.peek() != ']') throw parse_error("unterminated table header", hline, hcol);
      c.advance();
      c.skip_ws_and_comment();
      if (!c.eof() && c.peek() != '\n')
        c.fail("unexpected content after table header");
      if (doc.tables.count(name)) throw parse_error("duplicate table [" + name + "]", hline, hcol);
      current = &doc.tables[name];
      current_name = name;
      continue;
    }
    const int kline = c.line, kcol = c.col;
    const std::string key = parse_key(c);
    c.skip_ws();
    if (c.eof() || c.peek() != '=') c.fail("expected '=' after key '" + key + "'");
    c.advance();
    Value value = parse_value(c);
    c.skip_ws_and_comment();
    if (!c.eof() && c.peek() != '\n') c.fail("unexpected content after value for key '" + key + "'");
    if (current->values.count(key))
      throw parse_error("duplicate key '" + key + "' in " + current_name, kline, kcol);
    current->values.emplace(key, std::move(value));
  }
  return doc;
}

Document parse_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw input_error("cannot open scenario file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

}  // namespace dqvi::toml
