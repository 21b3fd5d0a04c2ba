#pragma once

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "pico/errors.hpp"

namespace pico {

// ---------------------------------------------------------------------------
// DataType
// ---------------------------------------------------------------------------

enum class TypeKind { Int, Float, Str, Bool, Unit, Tuple, List, Bottom };

/// The data type of collection elements. Tuple and List are recursive;
/// Bottom is the element type of the empty list and unifies with anything.
class DataType {
 public:
  DataType() : kind_(TypeKind::Bottom) {}

  static DataType intt() { return DataType(TypeKind::Int); }
  static DataType floatt() { return DataType(TypeKind::Float); }
  static DataType strt() { return DataType(TypeKind::Str); }
  static DataType boolt() { return DataType(TypeKind::Bool); }
  static DataType unitt() { return DataType(TypeKind::Unit); }
  static DataType bottom() { return DataType(TypeKind::Bottom); }

  static DataType tuple(std::vector<DataType> components) {
    if (components.size() < 2)
      throw MalformedValue("tuple type arity must be >= 2");
    DataType t(TypeKind::Tuple);
    t.children_ = std::make_shared<std::vector<DataType>>(std::move(components));
    return t;
  }

  static DataType list(DataType element) {
    DataType t(TypeKind::List);
    t.children_ =
        std::make_shared<std::vector<DataType>>(std::vector<DataType>{std::move(element)});
    return t;
  }

  TypeKind kind() const { return kind_; }
  bool is_bottom() const { return kind_ == TypeKind::Bottom; }

  const std::vector<DataType>& components() const { return *children_; }
  const DataType& element() const { return (*children_)[0]; }

  friend bool operator==(const DataType& a, const DataType& b) {
    if (a.kind_ != b.kind_) return false;
    if (a.kind_ == TypeKind::Tuple || a.kind_ == TypeKind::List) {
      return *a.children_ == *b.children_;
    }
    return true;
  }
  friend bool operator!=(const DataType& a, const DataType& b) { return !(a == b); }

 private:
  explicit DataType(TypeKind k) : kind_(k) {}

  TypeKind kind_;
  std::shared_ptr<std::vector<DataType>> children_;
};

inline std::string to_string(const DataType& t) {
  switch (t.kind()) {
    case TypeKind::Int: return "int";
    case TypeKind::Float: return "float";
    case TypeKind::Str: return "str";
    case TypeKind::Bool: return "bool";
    case TypeKind::Unit: return "unit";
    case TypeKind::Bottom: return "_";
    case TypeKind::List: return "[" + to_string(t.element()) + "]";
    case TypeKind::Tuple: {
      std::string out = "(";
      const auto& cs = t.components();
      for (std::size_t i = 0; i < cs.size(); ++i) {
        if (i) out += ", ";
        out += to_string(cs[i]);
      }
      return out + ")";
    }
  }
  return "?";
}

/// Structural unification where Bottom acts as a wildcard. Returns the more
/// specific of the two types, or nullopt if they conflict.
inline std::optional<DataType> unify(const DataType& a, const DataType& b) {
  if (a.is_bottom()) return b;
  if (b.is_bottom()) return a;
  if (a.kind() != b.kind()) return std::nullopt;
  switch (a.kind()) {
    case TypeKind::Tuple: {
      const auto& ac = a.components();
      const auto& bc = b.components();
      if (ac.size() != bc.size()) return std::nullopt;
      std::vector<DataType> out;
      out.reserve(ac.size());
      for (std::size_t i = 0; i < ac.size(); ++i) {
        auto u = unify(ac[i], bc[i]);
        if (!u) return std::nullopt;
        out.push_back(std::move(*u));
      }
      return DataType::tuple(std::move(out));
    }
    case TypeKind::List: {
      auto u = unify(a.element(), b.element());
      if (!u) return std::nullopt;
      return DataType::list(std::move(*u));
    }
    default:
      return a;
  }
}

// ---------------------------------------------------------------------------
// Value
// ---------------------------------------------------------------------------

struct Unit {
  friend bool operator==(const Unit&, const Unit&) { return true; }
};

/// Dynamically typed element flowing through pipelines. Immutable after
/// construction; tuple/list payloads are shared, so copies are cheap.
class Value {
 public:
  using Seq = std::vector<Value>;

  Value() : rep_(Unit{}) {}

  static Value integer(std::int64_t v) { return Value(Rep(v)); }
  static Value real(double v) { return Value(Rep(v)); }
  static Value str(std::string v) {
    return Value(Rep(std::make_shared<const std::string>(std::move(v))));
  }
  static Value boolean(bool v) { return Value(Rep(v)); }
  static Value unit() { return Value(); }

  static Value tuple(Seq items) {
    if (items.size() < 2) throw MalformedValue("tuple arity must be >= 2");
    return Value(Rep(TupleRep{std::make_shared<const Seq>(std::move(items))}));
  }

  static Value list(Seq items) {
    return Value(Rep(ListRep{std::make_shared<const Seq>(std::move(items))}));
  }

  bool is_int() const { return std::holds_alternative<std::int64_t>(rep_); }
  bool is_float() const { return std::holds_alternative<double>(rep_); }
  bool is_str() const { return std::holds_alternative<StrRep>(rep_); }
  bool is_bool() const { return std::holds_alternative<bool>(rep_); }
  bool is_unit() const { return std::holds_alternative<Unit>(rep_); }
  bool is_tuple() const { return std::holds_alternative<TupleRep>(rep_); }
  bool is_list() const { return std::holds_alternative<ListRep>(rep_); }

  std::int64_t as_int() const { return expect<std::int64_t>("int"); }
  double as_float() const { return expect<double>("float"); }
  bool as_bool() const { return expect<bool>("bool"); }
  const std::string& as_str() const { return *expect<StrRep>("str"); }
  const Seq& tuple_items() const { return *expect<TupleRep>("tuple").items; }
  const Seq& list_items() const { return *expect<ListRep>("list").items; }

  friend bool operator==(const Value& a, const Value& b) {
    if (a.rep_.index() != b.rep_.index()) return false;
    if (a.is_str()) return a.as_str() == b.as_str();
    if (a.is_tuple()) return a.tuple_items() == b.tuple_items();
    if (a.is_list()) return a.list_items() == b.list_items();
    return a.rep_ == b.rep_;
  }
  friend bool operator!=(const Value& a, const Value& b) { return !(a == b); }

 private:
  using StrRep = std::shared_ptr<const std::string>;
  struct TupleRep {
    std::shared_ptr<const Seq> items;
    friend bool operator==(const TupleRep&, const TupleRep&) = default;
  };
  struct ListRep {
    std::shared_ptr<const Seq> items;
    friend bool operator==(const ListRep&, const ListRep&) = default;
  };
  using Rep = std::variant<std::int64_t, double, StrRep, bool, Unit, TupleRep, ListRep>;

  explicit Value(Rep rep) : rep_(std::move(rep)) {}

  template <class T>
  const T& expect(const char* name) const {
    if (const T* p = std::get_if<T>(&rep_)) return *p;
    throw KernelError(std::string("value is not a ") + name);
  }

  Rep rep_;
};

/// Total, deterministic data type of a value. Heterogeneous lists are
/// rejected; the empty list gets element type Bottom.
inline DataType type_of(const Value& v) {
  if (v.is_int()) return DataType::intt();
  if (v.is_float()) return DataType::floatt();
  if (v.is_str()) return DataType::strt();
  if (v.is_bool()) return DataType::boolt();
  if (v.is_unit()) return DataType::unitt();
  if (v.is_tuple()) {
    std::vector<DataType> cs;
    cs.reserve(v.tuple_items().size());
    for (const Value& item : v.tuple_items()) cs.push_back(type_of(item));
    return DataType::tuple(std::move(cs));
  }
  DataType elem = DataType::bottom();
  for (const Value& item : v.list_items()) {
    auto u = unify(elem, type_of(item));
    if (!u) throw MalformedValue("heterogeneous list: " + to_string(elem) +
                                 " vs " + to_string(type_of(item)));
    elem = std::move(*u);
  }
  return DataType::list(std::move(elem));
}

// ---------------------------------------------------------------------------
// Literal syntax: 1, 1.5, "str", true, (v1,v2), [v1,v2], unit
// ---------------------------------------------------------------------------

namespace detail {

inline void append_quoted(std::string& out, const std::string& s) {
  out += '"';
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      case '\r': out += "\\r"; break;
      default: out += c;
    }
  }
  out += '"';
}

inline std::string float_literal(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  std::string s(buf, res.ptr);
  if (s.find('.') == std::string::npos && s.find('e') == std::string::npos &&
      s.find("inf") == std::string::npos && s.find("nan") == std::string::npos) {
    s += ".0";
  }
  return s;
}

}  // namespace detail

/// Canonical literal text; round-trips through parse_literal.
inline std::string to_literal(const Value& v) {
  std::string out;
  if (v.is_int()) {
    out = std::to_string(v.as_int());
  } else if (v.is_float()) {
    out = detail::float_literal(v.as_float());
  } else if (v.is_str()) {
    detail::append_quoted(out, v.as_str());
  } else if (v.is_bool()) {
    out = v.as_bool() ? "true" : "false";
  } else if (v.is_unit()) {
    out = "unit";
  } else {
    const bool tup = v.is_tuple();
    const Value::Seq& items = tup ? v.tuple_items() : v.list_items();
    out += tup ? '(' : '[';
    for (std::size_t i = 0; i < items.size(); ++i) {
      if (i) out += ", ";
      out += to_literal(items[i]);
    }
    out += tup ? ')' : ']';
  }
  return out;
}

namespace detail {

class LiteralParser {
 public:
  explicit LiteralParser(std::string_view src) : src_(src) {}

  Value parse() {
    Value v = value();
    skip_ws();
    if (pos_ != src_.size())
      throw SyntaxError("trailing characters after literal at offset " +
                        std::to_string(pos_));
    return v;
  }

 private:
  void skip_ws() {
    while (pos_ < src_.size() && (src_[pos_] == ' ' || src_[pos_] == '\t')) ++pos_;
  }

  char peek() const { return pos_ < src_.size() ? src_[pos_] : '\0'; }

  bool eat(char c) {
    if (peek() == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  [[noreturn]] void fail(const std::string& msg) {
    throw SyntaxError(msg + " at offset " + std::to_string(pos_));
  }

  Value value() {
    skip_ws();
    char c = peek();
    if (c == '"') return string_value();
    if (c == '(') return seq_value('(', ')');
    if (c == '[') return seq_value('[', ']');
    if (c == '-' || (c >= '0' && c <= '9')) return number();
    if (match_word("true")) return Value::boolean(true);
    if (match_word("false")) return Value::boolean(false);
    if (match_word("unit")) return Value::unit();
    fail("expected value literal");
  }

  bool match_word(std::string_view w) {
    if (src_.substr(pos_, w.size()) != w) return false;
    std::size_t end = pos_ + w.size();
    if (end < src_.size() && (std::isalnum(static_cast<unsigned char>(src_[end])) ||
                              src_[end] == '_'))
      return false;
    pos_ = end;
    return true;
  }

  Value string_value() {
    ++pos_;  // opening quote
    std::string out;
    while (pos_ < src_.size() && src_[pos_] != '"') {
      char c = src_[pos_++];
      if (c == '\\') {
        if (pos_ >= src_.size()) fail("unterminated escape");
        char e = src_[pos_++];
        switch (e) {
          case 'n': out += '\n'; break;
          case 't': out += '\t'; break;
          case 'r': out += '\r'; break;
          case '"': out += '"'; break;
          case '\\': out += '\\'; break;
          default: fail("unknown escape");
        }
      } else {
        out += c;
      }
    }
    if (!eat('"')) fail("unterminated string");
    return Value::str(std::move(out));
  }

  Value seq_value(char open, char close) {
    ++pos_;  // open
    std::vector<Value> items;
    skip_ws();
    if (eat(close)) {
      if (open == '(') fail("empty tuple");
      return Value::list({});
    }
    for (;;) {
      items.push_back(value());
      skip_ws();
      if (eat(close)) break;
      if (!eat(',')) fail("expected ',' or closing bracket");
    }
    if (open == '(') {
      if (items.size() == 1) return items[0];  // plain parenthesized value
      return Value::tuple(std::move(items));
    }
    return Value::list(std::move(items));
  }

  Value number() {
    std::size_t start = pos_;
    if (peek() == '-') ++pos_;
    while (std::isdigit(static_cast<unsigned char>(peek()))) ++pos_;
    bool is_float = false;
    if (peek() == '.') {
      is_float = true;
      ++pos_;
      while (std::isdigit(static_cast<unsigned char>(peek()))) ++pos_;
    }
    if (peek() == 'e' || peek() == 'E') {
      is_float = true;
      ++pos_;
      if (peek() == '+' || peek() == '-') ++pos_;
      while (std::isdigit(static_cast<unsigned char>(peek()))) ++pos_;
    }
    std::string_view text = src_.substr(start, pos_ - start);
    if (is_float) {
      double d = 0;
      auto res = std::from_chars(text.data(), text.data() + text.size(), d);
      if (res.ec != std::errc() || res.ptr != text.data() + text.size())
        fail("bad float literal");
      return Value::real(d);
    }
    std::int64_t n = 0;
    auto res = std::from_chars(text.data(), text.data() + text.size(), n);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size())
      fail("bad int literal");
    return Value::integer(n);
  }

  std::string_view src_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline Value parse_literal(std::string_view src) {
  return detail::LiteralParser(src).parse();
}

/// Total order on values via canonical literal text; used for deterministic
/// bag output and merge tie-breaks.
inline bool literal_less(const Value& a, const Value& b) {
  return to_literal(a) < to_literal(b);
}

}  // namespace pico
