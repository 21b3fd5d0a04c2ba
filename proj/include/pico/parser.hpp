#pragma once

#include <cctype>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "pico/ast.hpp"
#include "pico/errors.hpp"
#include "pico/kernel.hpp"

namespace pico {

// ---------------------------------------------------------------------------
// Programs
// ---------------------------------------------------------------------------

/// A parsed .pico file: named operator and pipeline declarations. Names must
/// be declared before use, which rules out cycles. The last pipeline
/// declaration is the designated top-level entry.
struct Program {
  struct OpDecl {
    std::string name;
    Operator op;
    SourceLoc loc;
  };
  struct PipeDecl {
    std::string name;
    PipelinePtr pipeline;
    SourceLoc loc;
  };

  std::vector<OpDecl> operators;
  std::vector<PipeDecl> pipelines;
  std::string entry;

  const PipeDecl& entry_decl() const {
    for (const PipeDecl& d : pipelines)
      if (d.name == entry) return d;
    throw SyntaxError("program has no pipeline declarations");
  }

  PipelinePtr entry_pipeline() const { return entry_decl().pipeline; }

  const Operator* find_operator(const std::string& name) const {
    for (const OpDecl& d : operators)
      if (d.name == name) return &d.op;
    return nullptr;
  }

  const PipelinePtr* find_pipeline(const std::string& name) const {
    for (const PipeDecl& d : pipelines)
      if (d.name == name) return &d.pipeline;
    return nullptr;
  }
};

namespace detail {

// ---------------------------------------------------------------------------
// Program lexer
// ---------------------------------------------------------------------------

enum class PTok {
  End, Name, Str, Int,
  LParen, RParen, LBracket, RBracket,
  Comma, Semi, Pipe, Plus, Equals,
};

struct PToken {
  PTok kind = PTok::End;
  std::string text;
  std::int64_t int_value = 0;
  SourceLoc loc;
  std::size_t end_offset = 0;  // offset just past this token
};

/// Lexer for .pico files. Identifiers may contain hyphens (word-count,
/// from-file); `fold+reduce` and its zip/join variants are single tokens, so
/// a bare '+' is always the merge sugar. Comments run from '#' to newline.
class ProgramLexer {
 public:
  explicit ProgramLexer(std::string_view src) : src_(src) {}

  PToken next() {
    skip_trivia();
    PToken t;
    t.loc = {line_, col_};
    if (pos_ >= src_.size()) {
      t.end_offset = pos_;
      return t;
    }
    char c = src_[pos_];
    switch (c) {
      case '(': return punct(t, PTok::LParen);
      case ')': return punct(t, PTok::RParen);
      case '[': return punct(t, PTok::LBracket);
      case ']': return punct(t, PTok::RBracket);
      case ',': return punct(t, PTok::Comma);
      case ';': return punct(t, PTok::Semi);
      case '|': return punct(t, PTok::Pipe);
      case '+': return punct(t, PTok::Plus);
      case '=': return punct(t, PTok::Equals);
      default: break;
    }
    if (c == '"') return string_token(t);
    if (std::isdigit(static_cast<unsigned char>(c))) return int_token(t);
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return name_token(t);
    throw SyntaxError(std::string("unexpected character '") + c + "'", t.loc);
  }

  /// Captures the raw source between the current position and the close
  /// character matching an already-consumed opener. Respects nesting and
  /// string literals. Returns the inner text and its starting location.
  std::pair<std::string, SourceLoc> capture_balanced(std::size_t start_offset, char open,
                                                     char close) {
    std::size_t i = start_offset;
    SourceLoc start_loc = loc_at(start_offset);
    int depth = 1;
    while (i < src_.size()) {
      char c = src_[i];
      if (c == '"') {
        ++i;
        while (i < src_.size() && src_[i] != '"') {
          if (src_[i] == '\\') ++i;
          ++i;
        }
        if (i >= src_.size()) throw SyntaxError("unterminated string", start_loc);
        ++i;
        continue;
      }
      if (c == open) ++depth;
      if (c == close && --depth == 0) {
        std::string inner(src_.substr(start_offset, i - start_offset));
        reset_to(i + 1);
        return {std::move(inner), start_loc};
      }
      ++i;
    }
    throw SyntaxError(std::string("missing closing '") + close + "'", start_loc);
  }

  void reset_to(std::size_t offset) {
    // recompute line/col by rescanning; files are small
    line_ = 1;
    col_ = 1;
    pos_ = 0;
    while (pos_ < offset && pos_ < src_.size()) advance(1);
  }

 private:
  SourceLoc loc_at(std::size_t offset) const {
    std::uint32_t line = 1, col = 1;
    for (std::size_t i = 0; i < offset && i < src_.size(); ++i) {
      if (src_[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    return {line, col};
  }

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

  void skip_trivia() {
    for (;;) {
      while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_])))
        advance(1);
      if (pos_ < src_.size() && src_[pos_] == '#') {
        while (pos_ < src_.size() && src_[pos_] != '\n') advance(1);
        continue;
      }
      break;
    }
  }

  PToken punct(PToken& t, PTok k) {
    t.kind = k;
    t.text = src_.substr(pos_, 1);
    advance(1);
    t.end_offset = pos_;
    return t;
  }

  PToken string_token(PToken& t) {
    advance(1);
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
    advance(1);
    t.kind = PTok::Str;
    t.text = std::move(out);
    t.end_offset = pos_;
    return t;
  }

  PToken int_token(PToken& t) {
    std::size_t start = pos_;
    while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_])))
      advance(1);
    t.kind = PTok::Int;
    t.text = src_.substr(start, pos_ - start);
    t.int_value = std::stoll(t.text);
    t.end_offset = pos_;
    return t;
  }

  PToken name_token(PToken& t) {
    std::size_t start = pos_;
    auto ident_char = [this](std::size_t i) {
      if (i >= src_.size()) return false;
      char c = src_[i];
      return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
    };
    while (ident_char(pos_)) advance(1);
    std::string word(src_.substr(start, pos_ - start));
    // fold+reduce family: the '+' belongs to the keyword
    if ((word == "fold" || word == "zip-fold" || word == "join-fold") &&
        src_.substr(pos_, 7) == "+reduce" && !ident_char(pos_ + 7)) {
      advance(7);
      word += "+reduce";
    }
    t.kind = PTok::Name;
    t.text = std::move(word);
    t.end_offset = pos_;
    return t;
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  std::uint32_t line_ = 1;
  std::uint32_t col_ = 1;
};

// ---------------------------------------------------------------------------
// Program parser
// ---------------------------------------------------------------------------

class ProgramParser {
 public:
  explicit ProgramParser(std::string_view src) : src_(src), lexer_(src) { bump(); }

  Program parse() {
    Program prog;
    while (cur_.kind != PTok::End) {
      if (cur_.kind != PTok::Name)
        throw SyntaxError("expected declaration name, got '" + cur_.text + "'", cur_.loc);
      std::string name = cur_.text;
      SourceLoc loc = cur_.loc;
      if (reserved().count(name))
        throw SyntaxError("'" + name + "' is a reserved word and cannot be declared",
                          loc);
      if (names_.count(name))
        throw SyntaxError("duplicate declaration of '" + name + "'", loc);
      bump();
      expect(PTok::Equals, "'='");

      if (starts_operator()) {
        Operator op = operator_expr();
        op.name = name;
        op.loc = loc;
        prog.operators.push_back({name, std::move(op), loc});
      } else {
        PipelinePtr p = pipeline_expr(prog);
        prog.pipelines.push_back({name, std::move(p), loc});
        prog.entry = name;
      }
      names_.insert(std::move(name));
    }
    if (prog.pipelines.empty())
      throw SyntaxError("program declares no pipelines");
    return prog;
  }

 private:
  static const std::set<std::string>& reserved() {
    static const std::set<std::string> kReserved = {
        "new", "to", "pair", "w", "p", "by", "win", "as", "of",
        "map", "flatmap", "reduce", "fold+reduce",
        "zip-map", "join-map", "zip-flatmap", "join-flatmap",
        "zip-reduce", "join-reduce", "zip-fold+reduce", "join-fold+reduce",
        "from-file", "from-socket", "from-replay",
        "to-file", "to-socket", "to-stdout",
        "bag", "list", "stream", "int", "float", "str", "bool", "unit",
        "count", "time", "true", "false",
        "min", "max", "concat", "split", "to-float", "set-fluctuation",
    };
    return kReserved;
  }

  static bool is_family(const std::string& w) {
    static const std::set<std::string> kFamilies = {
        "map", "flatmap", "reduce", "fold+reduce",
        "zip-map", "join-map", "zip-flatmap", "join-flatmap",
        "zip-reduce", "join-reduce", "zip-fold+reduce", "join-fold+reduce",
        "from-file", "from-socket", "from-replay",
        "to-file", "to-socket", "to-stdout",
    };
    return kFamilies.count(w) > 0;
  }

  bool starts_operator() const {
    if (cur_.kind != PTok::Name) return false;
    return cur_.text == "w" || cur_.text == "p" || is_family(cur_.text);
  }

  // ---- operators ----

  Operator operator_expr() {
    SourceLoc loc = cur_.loc;
    bool windowed = false, partitioned = false;
    if (cur_.kind == PTok::Name && cur_.text == "w") {
      windowed = true;
      bump();
    }
    if (cur_.kind == PTok::Name && cur_.text == "p") {
      partitioned = true;
      bump();
    }
    if (cur_.kind != PTok::Name || !is_family(cur_.text))
      throw SyntaxError("expected operator family keyword, got '" + cur_.text + "'",
                        cur_.loc);
    std::string family = cur_.text;
    bump();

    Operator op;
    op.loc = loc;
    if (family == "map" || family == "flatmap") {
      op.core = MapSpec{kernel_arg(), family == "flatmap"};
    } else if (family == "reduce") {
      op.core = ReduceSpec{kernel_arg()};
    } else if (family == "fold+reduce") {
      op.core = fold_reduce_spec();
    } else if (family.rfind("zip-", 0) == 0 || family.rfind("join-", 0) == 0) {
      Pairing pairing = family.rfind("zip-", 0) == 0 ? Pairing::Zip : Pairing::Join;
      std::string base = family.substr(family.find('-') + 1);
      if (base == "map" || base == "flatmap") {
        op.core = BMapSpec{pairing, kernel_arg(), base == "flatmap"};
      } else if (base == "reduce") {
        op.core = BCombineSpec{pairing, ReduceSpec{kernel_arg()}};
      } else {
        op.core = BCombineSpec{pairing, fold_reduce_spec()};
      }
    } else if (family.rfind("from-", 0) == 0) {
      SourceKind kind = family == "from-file"     ? SourceKind::File
                        : family == "from-socket" ? SourceKind::Socket
                                                  : SourceKind::Replay;
      std::string target = expect_string("source path or endpoint");
      CollectionType declared = type_clause();
      if (kind == SourceKind::Socket && declared.structure != StructureType::Stream)
        throw SyntaxError("from-socket sources emit streams", loc);
      if (kind == SourceKind::Replay && declared.structure == StructureType::Bag)
        throw SyntaxError("from-replay sources are timestamped; declare list or stream",
                          loc);
      op.core = EmitSpec{kind, std::move(target), declared};
    } else {
      SinkKind kind = family == "to-file"     ? SinkKind::File
                      : family == "to-socket" ? SinkKind::Socket
                                              : SinkKind::Stdout;
      std::string target;
      if (kind != SinkKind::Stdout) target = expect_string("sink path or endpoint");
      CollectionType declared = type_clause();
      op.core = CollectSpec{kind, std::move(target), declared};
    }

    // trailing decomposition clauses
    if (cur_.kind == PTok::Name && cur_.text == "by") {
      bump();
      op.partition_by = kernel_arg();
      partitioned = true;
    } else if (partitioned) {
      throw SyntaxError("'p' modifier requires a 'by' clause", loc);
    }
    if (cur_.kind == PTok::Name && cur_.text == "win") {
      bump();
      op.window = window_clause();
      windowed = true;
    } else if (windowed) {
      throw SyntaxError("'w' modifier requires a 'win' clause", loc);
    }
    return op;
  }

  FoldReduceSpec fold_reduce_spec() {
    KernelPtr fold = kernel_arg();
    Value init = value_arg();
    KernelPtr merge = kernel_arg();
    return FoldReduceSpec{std::move(fold), std::move(init), std::move(merge)};
  }

  /// A kernel argument: parenthesized kernel text, a bracketed list literal,
  /// a bare builtin name, or an atomic literal.
  KernelPtr kernel_arg() {
    SourceLoc loc = cur_.loc;
    if (cur_.kind == PTok::LParen) {
      auto [text, start] = lexer_.capture_balanced(cur_.end_offset, '(', ')');
      (void)start;
      bump();
      // keep the delimiters so tuple kernels like (0, 0) parse whole; the
      // re-added paren sits at the original one's position, so locations line
      // up with the source
      return parse_kernel("(" + text + ")", loc);
    }
    if (cur_.kind == PTok::LBracket) {
      auto [text, start] = lexer_.capture_balanced(cur_.end_offset, '[', ']');
      (void)start;
      bump();
      return parse_kernel("[" + text + "]", loc);
    }
    if (cur_.kind == PTok::Str) {
      KernelPtr k = make_kernel({KLit{Value::str(cur_.text)}, loc});
      bump();
      return k;
    }
    if (cur_.kind == PTok::Int) {
      KernelPtr k = make_kernel({KLit{Value::integer(cur_.int_value)}, loc});
      bump();
      return k;
    }
    if (cur_.kind == PTok::Name) {
      // bare builtin kernels: min, pi1, concat, ...
      KernelPtr k = parse_kernel(cur_.text, loc);
      bump();
      return k;
    }
    throw SyntaxError("expected kernel argument", loc);
  }

  /// A closed kernel expression evaluated now (the fold+reduce seed z).
  Value value_arg() {
    SourceLoc loc = cur_.loc;
    KernelPtr k = kernel_arg();
    try {
      return eval_kernel(*k, {});
    } catch (const KernelError& e) {
      throw SyntaxError(std::string("initial value is not a closed literal: ") + e.what(),
                        loc);
    }
  }

  WindowingPolicy window_clause() {
    expect(PTok::LParen, "'('");
    std::int64_t size = expect_int("window size");
    expect(PTok::Comma, "','");
    std::int64_t slide = expect_int("window slide");
    expect(PTok::Comma, "','");
    if (cur_.kind != PTok::Name || (cur_.text != "count" && cur_.text != "time"))
      throw SyntaxError("expected 'count' or 'time'", cur_.loc);
    WindowBasis basis = cur_.text == "count" ? WindowBasis::Count : WindowBasis::Time;
    bump();
    expect(PTok::RParen, "')'");
    if (size < 1 || slide < 1)
      throw SyntaxError("window size and slide must be >= 1", cur_.loc);
    return WindowingPolicy(static_cast<std::uint64_t>(size),
                           static_cast<std::uint64_t>(slide), basis);
  }

  CollectionType type_clause() {
    expect_word("as");
    if (cur_.kind != PTok::Name)
      throw SyntaxError("expected structure type (bag, list, stream)", cur_.loc);
    StructureType s;
    if (cur_.text == "bag") s = StructureType::Bag;
    else if (cur_.text == "list") s = StructureType::List;
    else if (cur_.text == "stream") s = StructureType::Stream;
    else throw SyntaxError("expected structure type (bag, list, stream)", cur_.loc);
    bump();
    expect_word("of");
    return CollectionType{data_type(), s};
  }

  DataType data_type() {
    SourceLoc loc = cur_.loc;
    if (cur_.kind == PTok::LParen) {
      bump();
      std::vector<DataType> components{data_type()};
      while (cur_.kind == PTok::Comma) {
        bump();
        components.push_back(data_type());
      }
      expect(PTok::RParen, "')'");
      if (components.size() < 2)
        throw SyntaxError("tuple type needs at least two components", loc);
      return DataType::tuple(std::move(components));
    }
    if (cur_.kind == PTok::LBracket) {
      bump();
      DataType elem = data_type();
      expect(PTok::RBracket, "']'");
      return DataType::list(std::move(elem));
    }
    if (cur_.kind == PTok::Name) {
      std::string w = cur_.text;
      bump();
      if (w == "int") return DataType::intt();
      if (w == "float") return DataType::floatt();
      if (w == "str") return DataType::strt();
      if (w == "bool") return DataType::boolt();
      if (w == "unit") return DataType::unitt();
      throw SyntaxError("unknown data type '" + w + "'", loc);
    }
    throw SyntaxError("expected data type", loc);
  }

  // ---- pipelines ----

  PipelinePtr pipeline_expr(const Program& prog) {
    PipelinePtr left = chain_expr(prog);
    while (cur_.kind == PTok::Plus) {
      SourceLoc loc = cur_.loc;
      bump();
      left = merge_pipeline(std::move(left), chain_expr(prog), loc);
    }
    return left;
  }

  PipelinePtr chain_expr(const Program& prog) {
    PipelinePtr left = pipeline_atom(prog);
    while (cur_.kind == PTok::Pipe) {
      SourceLoc loc = cur_.loc;
      bump();
      left = to_pipeline(std::move(left), {pipeline_atom(prog)}, loc);
    }
    return left;
  }

  PipelinePtr pipeline_atom(const Program& prog) {
    SourceLoc loc = cur_.loc;
    if (cur_.kind == PTok::LParen) {
      bump();
      PipelinePtr p = pipeline_expr(prog);
      expect(PTok::RParen, "')'");
      return p;
    }
    if (cur_.kind != PTok::Name)
      throw SyntaxError("expected pipeline expression, got '" + cur_.text + "'", loc);

    if (cur_.text == "new") {
      bump();
      return new_pipeline(operator_use(prog), loc);
    }
    if (cur_.text == "to") {
      bump();
      expect(PTok::LParen, "'('");
      PipelinePtr source = pipeline_expr(prog);
      expect(PTok::Semi, "';' between source and destinations");
      std::vector<PipelinePtr> dests{pipeline_expr(prog)};
      while (cur_.kind == PTok::Comma) {
        bump();
        dests.push_back(pipeline_expr(prog));
      }
      expect(PTok::RParen, "')'");
      return to_pipeline(std::move(source), std::move(dests), loc);
    }
    if (cur_.text == "pair") {
      bump();
      expect(PTok::LParen, "'('");
      PipelinePtr left = pipeline_expr(prog);
      expect(PTok::Comma, "','");
      PipelinePtr right = pipeline_expr(prog);
      expect(PTok::Comma, "','");
      Operator op = operator_use(prog);
      expect(PTok::RParen, "')'");
      if (!op.is_binary())
        throw TypeError("pair", "pair requires a binary operator", loc);
      return pair_pipeline(std::move(left), std::move(right), std::move(op), loc);
    }

    // named pipeline reference
    std::string name = cur_.text;
    if (const PipelinePtr* p = prog.find_pipeline(name)) {
      bump();
      return *p;
    }
    if (prog.find_operator(name))
      throw SyntaxError("'" + name + "' names an operator; write 'new " + name + "'", loc);
    throw SyntaxError("unresolved name '" + name + "'", loc);
  }

  /// After `new` or inside `pair(...)`: an operator reference or literal.
  Operator operator_use(const Program& prog) {
    SourceLoc loc = cur_.loc;
    if (cur_.kind == PTok::LParen && !starts_operator()) {
      bump();
      Operator op = operator_expr();
      expect(PTok::RParen, "')'");
      return op;
    }
    if (starts_operator()) return operator_expr();
    if (cur_.kind == PTok::Name) {
      if (const Operator* op = prog.find_operator(cur_.text)) {
        Operator copy = *op;
        bump();
        return copy;
      }
      if (prog.find_pipeline(cur_.text))
        throw SyntaxError("'" + cur_.text + "' names a pipeline, not an operator",
                          cur_.loc);
      throw SyntaxError("unresolved operator name '" + cur_.text + "'", cur_.loc);
    }
    throw SyntaxError("expected an operator", loc);
  }

  // ---- plumbing ----

  void bump() { cur_ = lexer_.next(); }

  void expect(PTok k, const std::string& what) {
    if (cur_.kind != k)
      throw SyntaxError("expected " + what + ", got '" +
                            (cur_.kind == PTok::End ? "<end>" : cur_.text) + "'",
                        cur_.loc);
    bump();
  }

  void expect_word(const std::string& w) {
    if (cur_.kind != PTok::Name || cur_.text != w)
      throw SyntaxError("expected '" + w + "', got '" + cur_.text + "'", cur_.loc);
    bump();
  }

  std::string expect_string(const std::string& what) {
    if (cur_.kind != PTok::Str)
      throw SyntaxError("expected " + what + " (a string literal)", cur_.loc);
    std::string s = cur_.text;
    bump();
    return s;
  }

  std::int64_t expect_int(const std::string& what) {
    if (cur_.kind != PTok::Int) throw SyntaxError("expected " + what, cur_.loc);
    std::int64_t v = cur_.int_value;
    bump();
    return v;
  }

  std::string_view src_;
  ProgramLexer lexer_;
  PToken cur_;
  std::set<std::string> names_;
};

}  // namespace detail

inline Program parse_program(std::string_view src) {
  return detail::ProgramParser(src).parse();
}

// ---------------------------------------------------------------------------
// Program printing (round-trips through parse_program)
// ---------------------------------------------------------------------------

inline std::string to_string(const Program& prog) {
  std::string out;
  for (const Program::OpDecl& d : prog.operators) {
    out += d.name;
    out += " = ";
    out += to_string(d.op);
    out += '\n';
  }
  for (const Program::PipeDecl& d : prog.pipelines) {
    out += d.name;
    out += " = ";
    out += to_string(d.pipeline);
    out += '\n';
  }
  return out;
}

}  // namespace pico
