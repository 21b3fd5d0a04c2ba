#pragma once

#include <algorithm>
#include <cassert>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <variant>
#include <vector>

#include "pico/errors.hpp"
#include "pico/value.hpp"

namespace pico {

// ---------------------------------------------------------------------------
// Kernel expression AST
// ---------------------------------------------------------------------------

enum class KernelBinOp { Add, Sub, Mul, Div, Eq, Lt, Le, Ge, And, Or };

enum class KernelBuiltin { Split, ListMap, Concat, Min, Max, ToFloat, SetFluctuation };

struct KernelExpr;
using KernelPtr = std::shared_ptr<const KernelExpr>;

struct KLit {
  Value value;
};
struct KVar {
  std::string name;
};
struct KLambda {
  std::vector<std::string> params;  // arity 1 or 2
  KernelPtr body;
};
struct KTuple {
  std::vector<KernelPtr> items;
};
struct KList {
  std::vector<KernelPtr> items;
};
struct KProj {
  std::size_t index;  // 1-based
  KernelPtr arg;
};
struct KBinary {
  KernelBinOp op;
  KernelPtr lhs;
  KernelPtr rhs;
};
struct KNot {
  KernelPtr arg;
};
struct KIf {
  KernelPtr cond;
  KernelPtr then_branch;
  KernelPtr else_branch;
};
struct KCall {
  KernelBuiltin fn;
  std::vector<KernelPtr> args;
};

struct KernelExpr {
  std::variant<KLit, KVar, KLambda, KTuple, KList, KProj, KBinary, KNot, KIf, KCall> node;
  SourceLoc loc;
};

inline KernelPtr make_kernel(KernelExpr e) {
  return std::make_shared<const KernelExpr>(std::move(e));
}

inline bool kernel_equal(const KernelExpr& a, const KernelExpr& b);

inline bool kernel_equal(const KernelPtr& a, const KernelPtr& b) {
  if (!a || !b) return !a && !b;
  return kernel_equal(*a, *b);
}

namespace detail {

inline bool kernels_equal(const std::vector<KernelPtr>& a, const std::vector<KernelPtr>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (!kernel_equal(a[i], b[i])) return false;
  return true;
}

}  // namespace detail

inline bool kernel_equal(const KernelExpr& a, const KernelExpr& b) {
  if (a.node.index() != b.node.index()) return false;
  return std::visit(
      [&b](const auto& na) -> bool {
        using T = std::decay_t<decltype(na)>;
        const T& nb = std::get<T>(b.node);
        if constexpr (std::is_same_v<T, KLit>) {
          return na.value == nb.value;
        } else if constexpr (std::is_same_v<T, KVar>) {
          return na.name == nb.name;
        } else if constexpr (std::is_same_v<T, KLambda>) {
          return na.params == nb.params && kernel_equal(na.body, nb.body);
        } else if constexpr (std::is_same_v<T, KTuple>) {
          return detail::kernels_equal(na.items, nb.items);
        } else if constexpr (std::is_same_v<T, KList>) {
          return detail::kernels_equal(na.items, nb.items);
        } else if constexpr (std::is_same_v<T, KProj>) {
          return na.index == nb.index && kernel_equal(na.arg, nb.arg);
        } else if constexpr (std::is_same_v<T, KBinary>) {
          return na.op == nb.op && kernel_equal(na.lhs, nb.lhs) &&
                 kernel_equal(na.rhs, nb.rhs);
        } else if constexpr (std::is_same_v<T, KNot>) {
          return kernel_equal(na.arg, nb.arg);
        } else if constexpr (std::is_same_v<T, KIf>) {
          return kernel_equal(na.cond, nb.cond) &&
                 kernel_equal(na.then_branch, nb.then_branch) &&
                 kernel_equal(na.else_branch, nb.else_branch);
        } else {
          static_assert(std::is_same_v<T, KCall>);
          return na.fn == nb.fn && detail::kernels_equal(na.args, nb.args);
        }
      },
      a.node);
}

// ---------------------------------------------------------------------------
// Lexer
// ---------------------------------------------------------------------------

namespace detail {

enum class KTok {
  End, Lambda, Dot, Ident, Proj, Int, Float, Str,
  If, Then, Else, True, False, UnitKw, Not, And, Or,
  Split, ListMap, Concat, Min, Max, ToFloat, SetFluctuation,
  LParen, RParen, LBracket, RBracket, Comma,
  Plus, Minus, Star, Slash, Eq, Lt, Le, Ge,
};

struct KToken {
  KTok kind = KTok::End;
  std::string text;
  std::int64_t int_value = 0;
  double float_value = 0;
  SourceLoc loc;
};

/// Lexer for the kernel mini-language. Hyphenated builtin names are matched
/// as whole tokens; '-' is otherwise always the subtraction operator, so
/// user variables cannot contain hyphens.
class KernelLexer {
 public:
  KernelLexer(std::string_view src, SourceLoc origin = {1, 1})
      : src_(src), line_(origin.line ? origin.line : 1),
        col_(origin.column ? origin.column : 1) {}

  KToken next() {
    skip_ws();
    KToken t;
    t.loc = {line_, col_};
    if (pos_ >= src_.size()) return t;

    char c = src_[pos_];
    if (c == '\\') return single(t, KTok::Lambda);
    if (c == '.') {
      // distinguish the lambda dot from a float like ".5" (not supported)
      return single(t, KTok::Dot);
    }
    if (c == '(') return single(t, KTok::LParen);
    if (c == ')') return single(t, KTok::RParen);
    if (c == '[') return single(t, KTok::LBracket);
    if (c == ']') return single(t, KTok::RBracket);
    if (c == ',') return single(t, KTok::Comma);
    if (c == '+') return single(t, KTok::Plus);
    if (c == '-') return single(t, KTok::Minus);
    if (c == '*') return single(t, KTok::Star);
    if (c == '/') return single(t, KTok::Slash);
    if (c == '=') return single(t, KTok::Eq);
    if (c == '<') {
      if (pos_ + 1 < src_.size() && src_[pos_ + 1] == '=') return twochar(t, KTok::Le);
      return single(t, KTok::Lt);
    }
    if (c == '>') {
      if (pos_ + 1 < src_.size() && src_[pos_ + 1] == '=') return twochar(t, KTok::Ge);
      throw SyntaxError("unexpected '>' (only >=, <=, <, = are supported)", t.loc);
    }
    if (c == '"') return string_token(t);
    if (std::isdigit(static_cast<unsigned char>(c))) return number_token(t);
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return word_token(t);
    throw SyntaxError(std::string("unexpected character '") + c + "' in kernel", t.loc);
  }

 private:
  void advance(std::size_t n) {
    for (std::size_t i = 0; i < n && pos_ < src_.size(); ++i, ++pos_) {
      if (src_[pos_] == '\n') {
        ++line_;
        col_ = 1;
      } else {
        ++col_;
      }
    }
  }

  void skip_ws() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_])))
      advance(1);
  }

  KToken single(KToken& t, KTok k) {
    t.kind = k;
    t.text = src_.substr(pos_, 1);
    advance(1);
    return t;
  }

  KToken twochar(KToken& t, KTok k) {
    t.kind = k;
    t.text = src_.substr(pos_, 2);
    advance(2);
    return t;
  }

  KToken string_token(KToken& t) {
    advance(1);  // opening quote
    std::string out;
    while (pos_ < src_.size() && src_[pos_] != '"') {
      char c = src_[pos_];
      if (c == '\\') {
        advance(1);
        if (pos_ >= src_.size()) throw SyntaxError("unterminated escape", t.loc);
        switch (src_[pos_]) {
          case 'n': out += '\n'; break;
          case 't': out += '\t'; break;
          case 'r': out += '\r'; break;
          case '"': out += '"'; break;
          case '\\': out += '\\'; break;
          default: throw SyntaxError("unknown escape in string", t.loc);
        }
        advance(1);
      } else {
        out += c;
        advance(1);
      }
    }
    if (pos_ >= src_.size()) throw SyntaxError("unterminated string literal", t.loc);
    advance(1);  // closing quote
    t.kind = KTok::Str;
    t.text = std::move(out);
    return t;
  }

  KToken number_token(KToken& t) {
    std::size_t start = pos_;
    while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_])))
      advance(1);
    bool is_float = false;
    if (pos_ + 1 < src_.size() && src_[pos_] == '.' &&
        std::isdigit(static_cast<unsigned char>(src_[pos_ + 1]))) {
      is_float = true;
      advance(1);
      while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_])))
        advance(1);
    }
    std::string text(src_.substr(start, pos_ - start));
    if (is_float) {
      t.kind = KTok::Float;
      t.float_value = std::stod(text);
    } else {
      t.kind = KTok::Int;
      t.int_value = std::stoll(text);
    }
    t.text = std::move(text);
    return t;
  }

  KToken word_token(KToken& t) {
    // hyphenated builtins first (longest match)
    static constexpr std::pair<std::string_view, KTok> kHyphenated[] = {
        {"set-fluctuation", KTok::SetFluctuation},
        {"list-map", KTok::ListMap},
        {"to-float", KTok::ToFloat},
    };
    for (auto [word, kind] : kHyphenated) {
      if (src_.substr(pos_, word.size()) == word && !ident_char_at(pos_ + word.size())) {
        t.kind = kind;
        t.text = std::string(word);
        advance(word.size());
        return t;
      }
    }
    std::size_t start = pos_;
    while (ident_char_at(pos_)) advance(1);
    std::string word(src_.substr(start, pos_ - start));
    static const std::unordered_map<std::string_view, KTok> kKeywords = {
        {"if", KTok::If},       {"then", KTok::Then},   {"else", KTok::Else},
        {"true", KTok::True},   {"false", KTok::False}, {"unit", KTok::UnitKw},
        {"not", KTok::Not},     {"and", KTok::And},     {"or", KTok::Or},
        {"split", KTok::Split}, {"concat", KTok::Concat},
        {"min", KTok::Min},     {"max", KTok::Max},
    };
    if (auto it = kKeywords.find(word); it != kKeywords.end()) {
      t.kind = it->second;
      t.text = std::move(word);
      return t;
    }
    if (word.size() > 2 && word.compare(0, 2, "pi") == 0 &&
        std::all_of(word.begin() + 2, word.end(),
                    [](char ch) { return std::isdigit(static_cast<unsigned char>(ch)); })) {
      t.kind = KTok::Proj;
      t.int_value = std::stoll(word.substr(2));
      t.text = std::move(word);
      return t;
    }
    t.kind = KTok::Ident;
    t.text = std::move(word);
    return t;
  }

  bool ident_char_at(std::size_t i) const {
    if (i >= src_.size()) return false;
    char c = src_[i];
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  std::uint32_t line_;
  std::uint32_t col_;
};

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

class KernelParser {
 public:
  KernelParser(std::string_view src, SourceLoc origin = {1, 1}) : lexer_(src, origin) {
    cur_ = lexer_.next();
  }

  /// Parses a whole kernel: a lambda, a closed expression, or a bare builtin
  /// name (eta-expanded to a lambda of its natural arity).
  KernelPtr parse_kernel() {
    KernelPtr k = parse_toplevel();
    expect(KTok::End, "end of kernel");
    return k;
  }

  /// Parses one kernel without requiring end-of-input; used when kernels are
  /// embedded in pipeline files.
  KernelPtr parse_embedded() { return parse_toplevel(); }

  bool at_end() const { return cur_.kind == KTok::End; }

 private:
  KernelPtr parse_toplevel() {
    if (cur_.kind == KTok::Lambda) return lambda();
    if (auto eta = eta_builtin()) return eta;
    return expr();
  }

  /// Bare builtin as a kernel: `min` == \x y. min (x, y), `pi1` == \x. pi1 x.
  KernelPtr eta_builtin() {
    SourceLoc loc = cur_.loc;
    auto var = [&](const char* n) {
      return make_kernel({KVar{n}, loc});
    };
    switch (cur_.kind) {
      case KTok::Min:
      case KTok::Max: {
        KernelBuiltin fn = cur_.kind == KTok::Min ? KernelBuiltin::Min : KernelBuiltin::Max;
        bump();
        if (cur_.kind != KTok::End && !closes()) {
          // `min (x, y)` — a real application, not an eta reference
          KernelPtr arg = primary();
          return finish_operators(make_kernel({KCall{fn, {arg}}, loc}));
        }
        KernelPtr pair = make_kernel({KTuple{{var("x"), var("y")}}, loc});
        KernelPtr body = make_kernel({KCall{fn, {pair}}, loc});
        return make_kernel({KLambda{{"x", "y"}, body}, loc});
      }
      case KTok::Concat: {
        bump();
        if (cur_.kind != KTok::End && !closes()) {
          KernelPtr a = primary();
          KernelPtr b = primary();
          return finish_operators(make_kernel({KCall{KernelBuiltin::Concat, {a, b}}, loc}));
        }
        KernelPtr body =
            make_kernel({KCall{KernelBuiltin::Concat, {var("x"), var("y")}}, loc});
        return make_kernel({KLambda{{"x", "y"}, body}, loc});
      }
      case KTok::Split:
      case KTok::ToFloat:
      case KTok::SetFluctuation: {
        KernelBuiltin fn = cur_.kind == KTok::Split ? KernelBuiltin::Split
                           : cur_.kind == KTok::ToFloat ? KernelBuiltin::ToFloat
                                                        : KernelBuiltin::SetFluctuation;
        bump();
        if (cur_.kind != KTok::End && !closes()) {
          KernelPtr arg = primary();
          return finish_operators(make_kernel({KCall{fn, {arg}}, loc}));
        }
        KernelPtr body = make_kernel({KCall{fn, {var("x")}}, loc});
        return make_kernel({KLambda{{"x"}, body}, loc});
      }
      case KTok::Proj: {
        std::size_t idx = static_cast<std::size_t>(cur_.int_value);
        bump();
        if (cur_.kind != KTok::End && !closes()) {
          KernelPtr arg = primary();
          return finish_operators(make_kernel({KProj{idx, arg}, loc}));
        }
        KernelPtr body = make_kernel({KProj{idx, var("x")}, loc});
        return make_kernel({KLambda{{"x"}, body}, loc});
      }
      default:
        return nullptr;
    }
  }

  /// After an eta-check turned out to be a real application, continue the
  /// surrounding operator grammar (e.g. `pi1 x + 1`).
  KernelPtr finish_operators(KernelPtr lhs) {
    lhs = mul_rest(std::move(lhs));
    lhs = add_rest(std::move(lhs));
    lhs = cmp_rest(std::move(lhs));
    lhs = and_rest(std::move(lhs));
    return or_rest(std::move(lhs));
  }

  bool closes() const {
    return cur_.kind == KTok::RParen || cur_.kind == KTok::RBracket ||
           cur_.kind == KTok::Comma;
  }

  KernelPtr lambda() {
    SourceLoc loc = cur_.loc;
    bump();  // backslash
    std::vector<std::string> params;
    while (cur_.kind == KTok::Ident) {
      params.push_back(cur_.text);
      bump();
    }
    if (params.empty() || params.size() > 2)
      throw SyntaxError("lambda takes 1 or 2 parameters", loc);
    if (params.size() == 2 && params[0] == params[1])
      throw SyntaxError("duplicate lambda parameter '" + params[0] + "'", loc);
    expect(KTok::Dot, "'.' after lambda parameters");
    KernelPtr body = expr();
    return make_kernel({KLambda{std::move(params), std::move(body)}, loc});
  }

  KernelPtr expr() {
    if (cur_.kind == KTok::If) {
      SourceLoc loc = cur_.loc;
      bump();
      KernelPtr cond = expr();
      expect(KTok::Then, "'then'");
      KernelPtr a = expr();
      expect(KTok::Else, "'else'");
      KernelPtr b = expr();
      return make_kernel({KIf{std::move(cond), std::move(a), std::move(b)}, loc});
    }
    return or_expr();
  }

  KernelPtr or_expr() { return or_rest(and_expr()); }

  KernelPtr or_rest(KernelPtr lhs) {
    while (cur_.kind == KTok::Or) {
      SourceLoc loc = cur_.loc;
      bump();
      lhs = make_kernel({KBinary{KernelBinOp::Or, std::move(lhs), and_expr()}, loc});
    }
    return lhs;
  }

  KernelPtr and_expr() { return and_rest(cmp_expr()); }

  KernelPtr and_rest(KernelPtr lhs) {
    while (cur_.kind == KTok::And) {
      SourceLoc loc = cur_.loc;
      bump();
      lhs = make_kernel({KBinary{KernelBinOp::And, std::move(lhs), cmp_expr()}, loc});
    }
    return lhs;
  }

  KernelPtr cmp_expr() { return cmp_rest(add_expr()); }

  KernelPtr cmp_rest(KernelPtr lhs) {
    KernelBinOp op;
    switch (cur_.kind) {
      case KTok::Eq: op = KernelBinOp::Eq; break;
      case KTok::Lt: op = KernelBinOp::Lt; break;
      case KTok::Le: op = KernelBinOp::Le; break;
      case KTok::Ge: op = KernelBinOp::Ge; break;
      default: return lhs;
    }
    SourceLoc loc = cur_.loc;
    bump();
    return make_kernel({KBinary{op, std::move(lhs), add_expr()}, loc});
  }

  KernelPtr add_expr() { return add_rest(mul_expr()); }

  KernelPtr add_rest(KernelPtr lhs) {
    while (cur_.kind == KTok::Plus || cur_.kind == KTok::Minus) {
      KernelBinOp op = cur_.kind == KTok::Plus ? KernelBinOp::Add : KernelBinOp::Sub;
      SourceLoc loc = cur_.loc;
      bump();
      lhs = make_kernel({KBinary{op, std::move(lhs), mul_expr()}, loc});
    }
    return lhs;
  }

  KernelPtr mul_expr() { return mul_rest(unary()); }

  KernelPtr mul_rest(KernelPtr lhs) {
    while (cur_.kind == KTok::Star || cur_.kind == KTok::Slash) {
      KernelBinOp op = cur_.kind == KTok::Star ? KernelBinOp::Mul : KernelBinOp::Div;
      SourceLoc loc = cur_.loc;
      bump();
      lhs = make_kernel({KBinary{op, std::move(lhs), unary()}, loc});
    }
    return lhs;
  }

  KernelPtr unary() {
    if (cur_.kind == KTok::Not) {
      SourceLoc loc = cur_.loc;
      bump();
      return make_kernel({KNot{unary()}, loc});
    }
    return application();
  }

  KernelPtr application() {
    SourceLoc loc = cur_.loc;
    switch (cur_.kind) {
      case KTok::Split:
        bump();
        return make_kernel({KCall{KernelBuiltin::Split, {primary()}}, loc});
      case KTok::ToFloat:
        bump();
        return make_kernel({KCall{KernelBuiltin::ToFloat, {primary()}}, loc});
      case KTok::SetFluctuation:
        bump();
        return make_kernel({KCall{KernelBuiltin::SetFluctuation, {primary()}}, loc});
      case KTok::Min:
        bump();
        return make_kernel({KCall{KernelBuiltin::Min, {primary()}}, loc});
      case KTok::Max:
        bump();
        return make_kernel({KCall{KernelBuiltin::Max, {primary()}}, loc});
      case KTok::Concat: {
        bump();
        KernelPtr a = primary();
        KernelPtr b = primary();
        return make_kernel({KCall{KernelBuiltin::Concat, {std::move(a), std::move(b)}}, loc});
      }
      case KTok::ListMap: {
        bump();
        KernelPtr f = primary();
        KernelPtr l = primary();
        return make_kernel({KCall{KernelBuiltin::ListMap, {std::move(f), std::move(l)}}, loc});
      }
      case KTok::Proj: {
        std::size_t idx = static_cast<std::size_t>(cur_.int_value);
        bump();
        return make_kernel({KProj{idx, primary()}, loc});
      }
      default:
        return primary();
    }
  }

  KernelPtr primary() {
    SourceLoc loc = cur_.loc;
    switch (cur_.kind) {
      case KTok::Int: {
        Value v = Value::integer(cur_.int_value);
        bump();
        return make_kernel({KLit{std::move(v)}, loc});
      }
      case KTok::Float: {
        Value v = Value::real(cur_.float_value);
        bump();
        return make_kernel({KLit{std::move(v)}, loc});
      }
      case KTok::Str: {
        Value v = Value::str(cur_.text);
        bump();
        return make_kernel({KLit{std::move(v)}, loc});
      }
      case KTok::True:
        bump();
        return make_kernel({KLit{Value::boolean(true)}, loc});
      case KTok::False:
        bump();
        return make_kernel({KLit{Value::boolean(false)}, loc});
      case KTok::UnitKw:
        bump();
        return make_kernel({KLit{Value::unit()}, loc});
      case KTok::Ident: {
        std::string name = cur_.text;
        bump();
        return make_kernel({KVar{std::move(name)}, loc});
      }
      case KTok::LParen: {
        bump();
        if (cur_.kind == KTok::Lambda) {
          KernelPtr l = lambda();
          expect(KTok::RParen, "')'");
          return l;
        }
        KernelPtr first = expr();
        if (cur_.kind == KTok::Comma) {
          std::vector<KernelPtr> items{std::move(first)};
          while (cur_.kind == KTok::Comma) {
            bump();
            items.push_back(expr());
          }
          expect(KTok::RParen, "')'");
          return make_kernel({KTuple{std::move(items)}, loc});
        }
        expect(KTok::RParen, "')'");
        return first;
      }
      case KTok::LBracket: {
        bump();
        std::vector<KernelPtr> items;
        if (cur_.kind != KTok::RBracket) {
          items.push_back(expr());
          while (cur_.kind == KTok::Comma) {
            bump();
            items.push_back(expr());
          }
        }
        expect(KTok::RBracket, "']'");
        return make_kernel({KList{std::move(items)}, loc});
      }
      default:
        throw SyntaxError("expected kernel expression, got '" + cur_.text + "'", loc);
    }
  }

  void bump() { cur_ = lexer_.next(); }

  void expect(KTok k, const std::string& what) {
    if (cur_.kind != k)
      throw SyntaxError("expected " + what + ", got '" +
                            (cur_.kind == KTok::End ? "<end>" : cur_.text) + "'",
                        cur_.loc);
    if (k != KTok::End) bump();
  }

  KernelLexer lexer_;
  KToken cur_;
};

}  // namespace detail

inline KernelPtr parse_kernel(std::string_view src, SourceLoc origin = {1, 1}) {
  return detail::KernelParser(src, origin).parse_kernel();
}

// ---------------------------------------------------------------------------
// Type inference
// ---------------------------------------------------------------------------

struct KernelType {
  std::vector<DataType> params;
  DataType result;
};

namespace detail {

/// Inference-time types: concrete data types plus numbered variables with an
/// optional numeric constraint. Monomorphic; variables exist only while
/// solving.
class TypeSolver {
 public:
  struct IType {
    enum Kind { Con, Var, Tup, Lst } kind = Con;
    TypeKind con = TypeKind::Unit;
    int var = -1;
    std::vector<int> children;  // indices into nodes_
  };

  int fresh_var(bool numeric = false) {
    int id = static_cast<int>(bindings_.size());
    bindings_.push_back(-1);
    numeric_.push_back(numeric);
    IType t;
    t.kind = IType::Var;
    t.var = id;
    return add(t);
  }

  int concrete(TypeKind k) {
    IType t;
    t.kind = IType::Con;
    t.con = k;
    return add(t);
  }

  int tuple_of(std::vector<int> components) {
    IType t;
    t.kind = IType::Tup;
    t.children = std::move(components);
    return add(t);
  }

  int list_of(int element) {
    IType t;
    t.kind = IType::Lst;
    t.children = {element};
    return add(t);
  }

  /// Converts a DataType into the solver space; Bottom becomes a fresh var.
  int from_data_type(const DataType& d) {
    switch (d.kind()) {
      case TypeKind::Bottom: return fresh_var();
      case TypeKind::Tuple: {
        std::vector<int> cs;
        for (const DataType& c : d.components()) cs.push_back(from_data_type(c));
        return tuple_of(std::move(cs));
      }
      case TypeKind::List: return list_of(from_data_type(d.element()));
      default: return concrete(d.kind());
    }
  }

  /// Resolves back to a DataType; unresolved variables come back as Bottom.
  DataType to_data_type(int id) {
    id = find(id);
    const IType& t = nodes_[id];
    switch (t.kind) {
      case IType::Var: return DataType::bottom();
      case IType::Con:
        switch (t.con) {
          case TypeKind::Int: return DataType::intt();
          case TypeKind::Float: return DataType::floatt();
          case TypeKind::Str: return DataType::strt();
          case TypeKind::Bool: return DataType::boolt();
          default: return DataType::unitt();
        }
      case IType::Tup: {
        std::vector<DataType> cs;
        for (int c : t.children) cs.push_back(to_data_type(c));
        return DataType::tuple(std::move(cs));
      }
      case IType::Lst: return DataType::list(to_data_type(t.children[0]));
    }
    return DataType::bottom();
  }

  bool grounded(int id) {
    id = find(id);
    const IType& t = nodes_[id];
    if (t.kind == IType::Var) return false;
    for (int c : t.children)
      if (!grounded(c)) return false;
    return true;
  }

  void unify(int a, int b, SourceLoc loc) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    IType& ta = nodes_[a];
    IType& tb = nodes_[b];
    if (ta.kind == IType::Var) return bind(a, b, loc);
    if (tb.kind == IType::Var) return bind(b, a, loc);
    if (ta.kind != tb.kind)
      throw KernelTypeError("type mismatch: " + describe(a) + " vs " + describe(b), loc);
    if (ta.kind == IType::Con) {
      if (ta.con != tb.con)
        throw KernelTypeError("type mismatch: " + describe(a) + " vs " + describe(b), loc);
      return;
    }
    if (ta.children.size() != tb.children.size())
      throw KernelTypeError("tuple arity mismatch: " + describe(a) + " vs " + describe(b),
                            loc);
    auto ac = ta.children, bc = tb.children;  // copies; unify may grow nodes_
    for (std::size_t i = 0; i < ac.size(); ++i) unify(ac[i], bc[i], loc);
  }

  void require_numeric(int id, SourceLoc loc) {
    id = find(id);
    IType& t = nodes_[id];
    if (t.kind == IType::Var) {
      numeric_[static_cast<std::size_t>(t.var)] = true;
      return;
    }
    if (t.kind != IType::Con || (t.con != TypeKind::Int && t.con != TypeKind::Float))
      throw KernelTypeError("numeric type required, got " + describe(id), loc);
  }

  /// Resolves a type that must already be a tuple (projection target).
  const IType& expect_tuple(int id, SourceLoc loc) {
    id = find(id);
    const IType& t = nodes_[id];
    if (t.kind == IType::Var)
      throw KernelTypeError(
          "cannot infer tuple shape for projection; give the parameter a concrete type",
          loc);
    if (t.kind != IType::Tup)
      throw KernelTypeError("projection requires a tuple, got " + describe(id), loc);
    return t;
  }

  /// Resolves a type that must be a list; unresolved vars are constrained to
  /// a fresh list.
  int expect_list(int id, SourceLoc loc) {
    int r = find(id);
    if (nodes_[r].kind == IType::Var) {
      int lst = list_of(fresh_var());
      unify(r, lst, loc);
      r = find(r);
    }
    if (nodes_[r].kind != IType::Lst)
      throw KernelTypeError("list type required, got " + describe(r), loc);
    return nodes_[r].children[0];
  }

  std::string describe(int id) {
    id = find(id);
    const IType& t = nodes_[id];
    switch (t.kind) {
      case IType::Var: return numeric_[static_cast<std::size_t>(t.var)] ? "<numeric>" : "<unknown>";
      case IType::Con:
        switch (t.con) {
          case TypeKind::Int: return "int";
          case TypeKind::Float: return "float";
          case TypeKind::Str: return "str";
          case TypeKind::Bool: return "bool";
          default: return "unit";
        }
      case IType::Tup: {
        std::string s = "(";
        for (std::size_t i = 0; i < t.children.size(); ++i) {
          if (i) s += ", ";
          s += describe(t.children[i]);
        }
        return s + ")";
      }
      case IType::Lst: return "[" + describe(t.children[0]) + "]";
    }
    return "?";
  }

 private:
  int add(IType t) {
    nodes_.push_back(std::move(t));
    return static_cast<int>(nodes_.size()) - 1;
  }

  int find(int id) {
    const IType& t = nodes_[static_cast<std::size_t>(id)];
    if (t.kind == IType::Var) {
      int bound = bindings_[static_cast<std::size_t>(t.var)];
      if (bound >= 0) return find(bound);
    }
    return id;
  }

  bool occurs(int var_node, int in) {
    in = find(in);
    if (in == var_node) return true;
    for (int c : nodes_[static_cast<std::size_t>(in)].children)
      if (occurs(var_node, c)) return true;
    return false;
  }

  void bind(int var_node, int target, SourceLoc loc) {
    target = find(target);
    if (occurs(var_node, target))
      throw KernelTypeError("infinite type in kernel expression", loc);
    int var_id = nodes_[static_cast<std::size_t>(var_node)].var;
    if (numeric_[static_cast<std::size_t>(var_id)]) {
      const IType& t = nodes_[static_cast<std::size_t>(target)];
      if (t.kind == IType::Con) {
        if (t.con != TypeKind::Int && t.con != TypeKind::Float)
          throw KernelTypeError("numeric type required, got " + describe(target), loc);
      } else if (t.kind == IType::Var) {
        numeric_[static_cast<std::size_t>(t.var)] = true;
      } else {
        throw KernelTypeError("numeric type required, got " + describe(target), loc);
      }
    }
    bindings_[static_cast<std::size_t>(var_id)] = target;
  }

  std::vector<IType> nodes_;
  std::vector<int> bindings_;   // var id -> node index or -1
  std::vector<bool> numeric_;   // var id -> numeric constraint
};

class KernelTyper {
 public:
  using Env = std::vector<std::pair<std::string, int>>;

  explicit KernelTyper(TypeSolver& solver) : solver_(solver) {}

  int infer(const KernelExpr& e, Env& env) {
    return std::visit([&](const auto& n) { return infer_node(n, e.loc, env); }, e.node);
  }

 private:
  int infer_node(const KLit& n, SourceLoc, Env&) {
    return solver_.from_data_type(type_of(n.value));
  }

  int infer_node(const KVar& n, SourceLoc loc, Env& env) {
    for (auto it = env.rbegin(); it != env.rend(); ++it)
      if (it->first == n.name) return it->second;
    throw KernelTypeError("unbound variable '" + n.name + "'", loc);
  }

  int infer_node(const KLambda&, SourceLoc loc, Env&) {
    throw KernelTypeError("lambda is only allowed at kernel top level or as list-map argument",
                          loc);
  }

  int infer_node(const KTuple& n, SourceLoc, Env& env) {
    std::vector<int> cs;
    cs.reserve(n.items.size());
    for (const KernelPtr& item : n.items) cs.push_back(infer(*item, env));
    return solver_.tuple_of(std::move(cs));
  }

  int infer_node(const KList& n, SourceLoc loc, Env& env) {
    int elem = solver_.fresh_var();
    for (const KernelPtr& item : n.items) solver_.unify(elem, infer(*item, env), loc);
    return solver_.list_of(elem);
  }

  int infer_node(const KProj& n, SourceLoc loc, Env& env) {
    int arg = infer(*n.arg, env);
    const TypeSolver::IType& t = solver_.expect_tuple(arg, loc);
    if (n.index < 1 || n.index > t.children.size())
      throw KernelTypeError("projection pi" + std::to_string(n.index) +
                                " out of range for " + solver_.describe(arg),
                            loc);
    return t.children[n.index - 1];
  }

  int infer_node(const KBinary& n, SourceLoc loc, Env& env) {
    int l = infer(*n.lhs, env);
    int r = infer(*n.rhs, env);
    switch (n.op) {
      case KernelBinOp::Add:
      case KernelBinOp::Sub:
      case KernelBinOp::Mul:
      case KernelBinOp::Div:
        solver_.unify(l, r, loc);
        solver_.require_numeric(l, loc);
        return l;
      case KernelBinOp::Lt:
      case KernelBinOp::Le:
      case KernelBinOp::Ge:
        solver_.unify(l, r, loc);
        solver_.require_numeric(l, loc);
        return solver_.concrete(TypeKind::Bool);
      case KernelBinOp::Eq:
        solver_.unify(l, r, loc);
        return solver_.concrete(TypeKind::Bool);
      case KernelBinOp::And:
      case KernelBinOp::Or:
        solver_.unify(l, solver_.concrete(TypeKind::Bool), loc);
        solver_.unify(r, solver_.concrete(TypeKind::Bool), loc);
        return solver_.concrete(TypeKind::Bool);
    }
    throw KernelTypeError("unknown operator", loc);
  }

  int infer_node(const KNot& n, SourceLoc loc, Env& env) {
    solver_.unify(infer(*n.arg, env), solver_.concrete(TypeKind::Bool), loc);
    return solver_.concrete(TypeKind::Bool);
  }

  int infer_node(const KIf& n, SourceLoc loc, Env& env) {
    solver_.unify(infer(*n.cond, env), solver_.concrete(TypeKind::Bool), loc);
    int a = infer(*n.then_branch, env);
    int b = infer(*n.else_branch, env);
    solver_.unify(a, b, loc);
    return a;
  }

  int infer_node(const KCall& n, SourceLoc loc, Env& env) {
    switch (n.fn) {
      case KernelBuiltin::Split: {
        solver_.unify(infer(*n.args[0], env), solver_.concrete(TypeKind::Str), loc);
        return solver_.list_of(solver_.concrete(TypeKind::Str));
      }
      case KernelBuiltin::Concat: {
        int a = infer(*n.args[0], env);
        int b = infer(*n.args[1], env);
        solver_.expect_list(a, loc);
        solver_.unify(a, b, loc);
        return a;
      }
      case KernelBuiltin::ListMap: {
        const auto* lam = std::get_if<KLambda>(&n.args[0]->node);
        if (!lam || lam->params.size() != 1)
          throw KernelTypeError("list-map requires a unary lambda as first argument", loc);
        int list = infer(*n.args[1], env);
        int elem = solver_.expect_list(list, loc);
        env.emplace_back(lam->params[0], elem);
        int out = infer(*lam->body, env);
        env.pop_back();
        return solver_.list_of(out);
      }
      case KernelBuiltin::Min:
      case KernelBuiltin::Max: {
        int arg = infer(*n.args[0], env);
        int elem = solver_.fresh_var(true);
        solver_.unify(arg, solver_.tuple_of({elem, elem}), loc);
        return elem;
      }
      case KernelBuiltin::ToFloat: {
        solver_.require_numeric(infer(*n.args[0], env), loc);
        return solver_.concrete(TypeKind::Float);
      }
      case KernelBuiltin::SetFluctuation: {
        int arg = infer(*n.args[0], env);
        int elem = solver_.expect_list(arg, loc);
        solver_.require_numeric(elem, loc);
        return solver_.concrete(TypeKind::Float);
      }
    }
    throw KernelTypeError("unknown builtin", loc);
  }

  TypeSolver& solver_;
};

}  // namespace detail

/// Kernel typing with the side conditions operator signatures impose.
/// Parameter types seed the solver (Bottom positions stay open and must be
/// determined by the body); `params_equal` forces all parameters onto one
/// type (reduce's ⊕ : T×T→T), and `result_equals_param` unifies the result
/// with a parameter inside the solver so accumulator kernels like
/// `\s x. concat s [x]` can refine an open seed type.
inline KernelType infer_kernel_type_constrained(
    const KernelExpr& e, const std::vector<DataType>& param_types, bool params_equal,
    std::optional<std::size_t> result_equals_param) {
  detail::TypeSolver solver;
  detail::KernelTyper typer(solver);
  detail::KernelTyper::Env env;

  const auto* lam = std::get_if<KLambda>(&e.node);
  if (!lam) {
    if (!param_types.empty())
      throw KernelTypeError("kernel is not a lambda but parameter types were supplied",
                            e.loc);
    int result = typer.infer(e, env);
    return KernelType{{}, solver.to_data_type(result)};
  }

  if (lam->params.size() != param_types.size())
    throw KernelTypeError("kernel arity is " + std::to_string(lam->params.size()) +
                              " but " + std::to_string(param_types.size()) +
                              " parameter types were supplied",
                          e.loc);
  std::vector<int> params;
  for (std::size_t i = 0; i < lam->params.size(); ++i) {
    int p = solver.from_data_type(param_types[i]);
    params.push_back(p);
    env.emplace_back(lam->params[i], p);
  }
  if (params_equal)
    for (std::size_t i = 1; i < params.size(); ++i)
      solver.unify(params[0], params[i], e.loc);

  int result = typer.infer(*lam->body, env);
  if (result_equals_param) {
    if (*result_equals_param >= params.size())
      throw KernelTypeError("result constraint refers to a missing parameter", e.loc);
    solver.unify(result, params[*result_equals_param], e.loc);
  }

  KernelType kt;
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!solver.grounded(params[i]))
      throw KernelTypeError("cannot infer type of parameter '" + lam->params[i] + "'",
                            e.loc);
    kt.params.push_back(solver.to_data_type(params[i]));
  }
  kt.result = solver.to_data_type(result);
  return kt;
}

/// Result type of a kernel given concrete parameter types. Use an empty
/// parameter list for closed (non-lambda) kernels. Unresolved positions in
/// the result come back as Bottom (e.g. a kernel returning only `[]`).
inline KernelType infer_kernel_type(const KernelExpr& e,
                                    const std::vector<DataType>& param_types) {
  return infer_kernel_type_constrained(e, param_types, false, std::nullopt);
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

namespace detail {

class KernelEvaluator {
 public:
  using Env = std::vector<std::pair<std::string, Value>>;

  Value eval(const KernelExpr& e, Env& env) {
    return std::visit([&](const auto& n) { return eval_node(n, e.loc, env); }, e.node);
  }

 private:
  Value eval_node(const KLit& n, SourceLoc, Env&) { return n.value; }

  Value eval_node(const KVar& n, SourceLoc loc, Env& env) {
    for (auto it = env.rbegin(); it != env.rend(); ++it)
      if (it->first == n.name) return it->second;
    throw KernelError("unbound variable '" + n.name + "'", loc);
  }

  Value eval_node(const KLambda&, SourceLoc loc, Env&) {
    throw KernelError("lambda cannot be evaluated as a value", loc);
  }

  Value eval_node(const KTuple& n, SourceLoc, Env& env) {
    Value::Seq items;
    items.reserve(n.items.size());
    for (const KernelPtr& item : n.items) items.push_back(eval(*item, env));
    return Value::tuple(std::move(items));
  }

  Value eval_node(const KList& n, SourceLoc, Env& env) {
    Value::Seq items;
    items.reserve(n.items.size());
    for (const KernelPtr& item : n.items) items.push_back(eval(*item, env));
    return Value::list(std::move(items));
  }

  Value eval_node(const KProj& n, SourceLoc loc, Env& env) {
    Value v = eval(*n.arg, env);
    if (!v.is_tuple()) throw KernelError("projection applied to non-tuple", loc);
    const Value::Seq& items = v.tuple_items();
    if (n.index < 1 || n.index > items.size())
      throw KernelError("projection index out of range", loc);
    return items[n.index - 1];
  }

  Value eval_node(const KBinary& n, SourceLoc loc, Env& env) {
    if (n.op == KernelBinOp::And) {
      Value l = eval(*n.lhs, env);
      if (!l.as_bool()) return Value::boolean(false);
      return Value::boolean(eval(*n.rhs, env).as_bool());
    }
    if (n.op == KernelBinOp::Or) {
      Value l = eval(*n.lhs, env);
      if (l.as_bool()) return Value::boolean(true);
      return Value::boolean(eval(*n.rhs, env).as_bool());
    }
    Value l = eval(*n.lhs, env);
    Value r = eval(*n.rhs, env);
    switch (n.op) {
      case KernelBinOp::Add: return arith(l, r, loc, [](auto a, auto b) { return a + b; });
      case KernelBinOp::Sub: return arith(l, r, loc, [](auto a, auto b) { return a - b; });
      case KernelBinOp::Mul: return arith(l, r, loc, [](auto a, auto b) { return a * b; });
      case KernelBinOp::Div: return divide(l, r, loc);
      case KernelBinOp::Eq: return Value::boolean(l == r);
      case KernelBinOp::Lt: return compare(l, r, loc, [](auto a, auto b) { return a < b; });
      case KernelBinOp::Le: return compare(l, r, loc, [](auto a, auto b) { return a <= b; });
      case KernelBinOp::Ge: return compare(l, r, loc, [](auto a, auto b) { return a >= b; });
      default: throw KernelError("unexpected operator", loc);
    }
  }

  Value eval_node(const KNot& n, SourceLoc, Env& env) {
    return Value::boolean(!eval(*n.arg, env).as_bool());
  }

  Value eval_node(const KIf& n, SourceLoc, Env& env) {
    return eval(*n.cond, env).as_bool() ? eval(*n.then_branch, env)
                                        : eval(*n.else_branch, env);
  }

  Value eval_node(const KCall& n, SourceLoc loc, Env& env) {
    switch (n.fn) {
      case KernelBuiltin::Split: {
        const std::string& s = eval(*n.args[0], env).as_str();
        Value::Seq words;
        std::size_t i = 0;
        while (i < s.size()) {
          while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
          std::size_t start = i;
          while (i < s.size() && !std::isspace(static_cast<unsigned char>(s[i]))) ++i;
          if (i > start) words.push_back(Value::str(s.substr(start, i - start)));
        }
        return Value::list(std::move(words));
      }
      case KernelBuiltin::Concat: {
        Value a = eval(*n.args[0], env);
        Value b = eval(*n.args[1], env);
        Value::Seq out = a.list_items();
        const Value::Seq& bs = b.list_items();
        out.insert(out.end(), bs.begin(), bs.end());
        return Value::list(std::move(out));
      }
      case KernelBuiltin::ListMap: {
        const auto* lam = std::get_if<KLambda>(&n.args[0]->node);
        if (!lam || lam->params.size() != 1)
          throw KernelError("list-map requires a unary lambda", loc);
        Value list = eval(*n.args[1], env);
        Value::Seq out;
        out.reserve(list.list_items().size());
        for (const Value& item : list.list_items()) {
          env.emplace_back(lam->params[0], item);
          out.push_back(eval(*lam->body, env));
          env.pop_back();
        }
        return Value::list(std::move(out));
      }
      case KernelBuiltin::Min:
      case KernelBuiltin::Max: {
        Value pair = eval(*n.args[0], env);
        const Value::Seq& items = pair.tuple_items();
        if (items.size() != 2) throw KernelError("min/max require a pair", loc);
        bool take_first;
        if (items[0].is_int())
          take_first = n.fn == KernelBuiltin::Min ? items[0].as_int() <= items[1].as_int()
                                                  : items[0].as_int() >= items[1].as_int();
        else
          take_first = n.fn == KernelBuiltin::Min
                           ? items[0].as_float() <= items[1].as_float()
                           : items[0].as_float() >= items[1].as_float();
        return take_first ? items[0] : items[1];
      }
      case KernelBuiltin::ToFloat: {
        Value v = eval(*n.args[0], env);
        return v.is_float() ? v : Value::real(static_cast<double>(v.as_int()));
      }
      case KernelBuiltin::SetFluctuation: {
        Value list = eval(*n.args[0], env);
        const Value::Seq& items = list.list_items();
        if (items.empty())
          throw KernelError("set-fluctuation of an empty collection", loc);
        double lo = 0, hi = 0;
        bool first = true;
        for (const Value& v : items) {
          double x = v.is_float() ? v.as_float() : static_cast<double>(v.as_int());
          if (first) {
            lo = hi = x;
            first = false;
          } else {
            lo = std::min(lo, x);
            hi = std::max(hi, x);
          }
        }
        if (lo == 0) throw DivisionByZero("set-fluctuation with zero minimum", loc);
        return Value::real((hi - lo) / lo);
      }
    }
    throw KernelError("unknown builtin", loc);
  }

  template <class F>
  Value arith(const Value& l, const Value& r, SourceLoc loc, F op) {
    if (l.is_int() && r.is_int()) return Value::integer(op(l.as_int(), r.as_int()));
    if (l.is_float() && r.is_float()) return Value::real(op(l.as_float(), r.as_float()));
    throw KernelError("arithmetic requires two ints or two floats", loc);
  }

  Value divide(const Value& l, const Value& r, SourceLoc loc) {
    if (l.is_int() && r.is_int()) {
      if (r.as_int() == 0) throw DivisionByZero("integer division by zero", loc);
      return Value::integer(l.as_int() / r.as_int());  // truncates toward zero
    }
    if (l.is_float() && r.is_float()) return Value::real(l.as_float() / r.as_float());
    throw KernelError("division requires two ints or two floats", loc);
  }

  template <class F>
  Value compare(const Value& l, const Value& r, SourceLoc loc, F op) {
    if (l.is_int() && r.is_int()) return Value::boolean(op(l.as_int(), r.as_int()));
    if (l.is_float() && r.is_float()) return Value::boolean(op(l.as_float(), r.as_float()));
    throw KernelError("comparison requires two ints or two floats", loc);
  }
};

}  // namespace detail

/// Evaluates a kernel on the given arguments. A lambda kernel consumes one
/// argument per parameter; a closed expression takes none. Deterministic and
/// terminating: the language has no recursion.
inline Value eval_kernel(const KernelExpr& e, const std::vector<Value>& args) {
  detail::KernelEvaluator ev;
  detail::KernelEvaluator::Env env;
  if (const auto* lam = std::get_if<KLambda>(&e.node)) {
    if (lam->params.size() != args.size())
      throw KernelError("kernel arity mismatch: expected " +
                            std::to_string(lam->params.size()) + " arguments, got " +
                            std::to_string(args.size()),
                        e.loc);
    for (std::size_t i = 0; i < args.size(); ++i)
      env.emplace_back(lam->params[i], args[i]);
    return ev.eval(*lam->body, env);
  }
  if (!args.empty())
    throw KernelError("kernel is not a lambda but arguments were supplied", e.loc);
  return ev.eval(e, env);
}

// ---------------------------------------------------------------------------
// Printing (round-trips through parse_kernel)
// ---------------------------------------------------------------------------

namespace detail {

inline int precedence_of(const KernelExpr& e) {
  // larger binds tighter; mirrors the parser
  if (std::holds_alternative<KIf>(e.node)) return 0;
  if (const auto* b = std::get_if<KBinary>(&e.node)) {
    switch (b->op) {
      case KernelBinOp::Or: return 1;
      case KernelBinOp::And: return 2;
      case KernelBinOp::Eq:
      case KernelBinOp::Lt:
      case KernelBinOp::Le:
      case KernelBinOp::Ge: return 3;
      case KernelBinOp::Add:
      case KernelBinOp::Sub: return 4;
      case KernelBinOp::Mul:
      case KernelBinOp::Div: return 5;
    }
  }
  if (std::holds_alternative<KNot>(e.node)) return 6;
  if (std::holds_alternative<KCall>(e.node) || std::holds_alternative<KProj>(e.node))
    return 7;
  return 8;  // atoms
}

inline void print_kernel(const KernelExpr& e, std::string& out, int min_prec);

inline void print_child(const KernelExpr& e, std::string& out, int min_prec) {
  if (precedence_of(e) < min_prec) {
    out += '(';
    print_kernel(e, out, 0);
    out += ')';
  } else {
    print_kernel(e, out, min_prec);
  }
}

inline void print_kernel(const KernelExpr& e, std::string& out, int min_prec) {
  (void)min_prec;  // parenthesization decisions live in print_child
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, KLit>) {
          out += to_literal(n.value);
        } else if constexpr (std::is_same_v<T, KVar>) {
          out += n.name;
        } else if constexpr (std::is_same_v<T, KLambda>) {
          out += '\\';
          for (std::size_t i = 0; i < n.params.size(); ++i) {
            if (i) out += ' ';
            out += n.params[i];
          }
          out += ". ";
          print_kernel(*n.body, out, 0);
        } else if constexpr (std::is_same_v<T, KTuple>) {
          out += '(';
          for (std::size_t i = 0; i < n.items.size(); ++i) {
            if (i) out += ", ";
            print_kernel(*n.items[i], out, 0);
          }
          out += ')';
        } else if constexpr (std::is_same_v<T, KList>) {
          out += '[';
          for (std::size_t i = 0; i < n.items.size(); ++i) {
            if (i) out += ", ";
            print_kernel(*n.items[i], out, 0);
          }
          out += ']';
        } else if constexpr (std::is_same_v<T, KProj>) {
          out += "pi" + std::to_string(n.index) + " ";
          print_child(*n.arg, out, 8);
        } else if constexpr (std::is_same_v<T, KBinary>) {
          int prec = precedence_of(e);
          const char* op = "?";
          switch (n.op) {
            case KernelBinOp::Add: op = "+"; break;
            case KernelBinOp::Sub: op = "-"; break;
            case KernelBinOp::Mul: op = "*"; break;
            case KernelBinOp::Div: op = "/"; break;
            case KernelBinOp::Eq: op = "="; break;
            case KernelBinOp::Lt: op = "<"; break;
            case KernelBinOp::Le: op = "<="; break;
            case KernelBinOp::Ge: op = ">="; break;
            case KernelBinOp::And: op = "and"; break;
            case KernelBinOp::Or: op = "or"; break;
          }
          print_child(*n.lhs, out, prec);
          out += ' ';
          out += op;
          out += ' ';
          print_child(*n.rhs, out, prec + 1);
        } else if constexpr (std::is_same_v<T, KNot>) {
          out += "not ";
          print_child(*n.arg, out, 6);
        } else if constexpr (std::is_same_v<T, KIf>) {
          out += "if ";
          print_kernel(*n.cond, out, 0);
          out += " then ";
          print_kernel(*n.then_branch, out, 0);
          out += " else ";
          print_kernel(*n.else_branch, out, 0);
        } else {
          static_assert(std::is_same_v<T, KCall>);
          const char* name = "?";
          switch (n.fn) {
            case KernelBuiltin::Split: name = "split"; break;
            case KernelBuiltin::ListMap: name = "list-map"; break;
            case KernelBuiltin::Concat: name = "concat"; break;
            case KernelBuiltin::Min: name = "min"; break;
            case KernelBuiltin::Max: name = "max"; break;
            case KernelBuiltin::ToFloat: name = "to-float"; break;
            case KernelBuiltin::SetFluctuation: name = "set-fluctuation"; break;
          }
          out += name;
          for (const KernelPtr& arg : n.args) {
            out += ' ';
            if (std::holds_alternative<KLambda>(arg->node)) {
              out += '(';
              print_kernel(*arg, out, 0);
              out += ')';
            } else {
              print_child(*arg, out, 8);
            }
          }
        }
      },
      e.node);
}

}  // namespace detail

inline std::string to_string(const KernelExpr& e) {
  std::string out;
  detail::print_kernel(e, out, 0);
  return out;
}

}  // namespace pico
