#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace pico {

/// Source position inside a program or kernel text. Line/column are 1-based;
/// {0,0} means "no position" (AST built programmatically).
struct SourceLoc {
  std::uint32_t line = 0;
  std::uint32_t column = 0;

  bool known() const { return line != 0; }
  friend bool operator==(const SourceLoc&, const SourceLoc&) = default;
};

inline std::string to_string(const SourceLoc& loc) {
  return std::to_string(loc.line) + ":" + std::to_string(loc.column);
}

/// Root of the error hierarchy. Anything thrown by the library derives from
/// this, so callers can catch one type at the CLI boundary.
class PicoError : public std::runtime_error {
 public:
  explicit PicoError(const std::string& msg, SourceLoc loc = {})
      : std::runtime_error(msg), loc_(loc) {}

  const SourceLoc& where() const { return loc_; }

 private:
  SourceLoc loc_;
};

/// A Value that violates its own invariants (e.g. heterogeneous list).
class MalformedValue : public PicoError {
 public:
  using PicoError::PicoError;
};

/// Lexical or grammatical error in program, kernel or literal text.
class SyntaxError : public PicoError {
 public:
  using PicoError::PicoError;
};

/// Kernel expression rejected by type inference.
class KernelTypeError : public PicoError {
 public:
  using PicoError::PicoError;
};

/// Kernel evaluation failure (bad argument shapes, arity mismatch).
class KernelError : public PicoError {
 public:
  using PicoError::PicoError;
};

class DivisionByZero : public KernelError {
 public:
  using KernelError::KernelError;
};

/// Operation applied to a collection of the wrong structure type
/// (e.g. windowing a multiset, reducing an unbounded sequence).
class StructureError : public PicoError {
 public:
  using PicoError::PicoError;
};

/// Reduce over an empty collection; reduce has no unit value.
class EmptyReduce : public PicoError {
 public:
  using PicoError::PicoError;
};

/// Pipeline typing failure. Carries the violated rule name so diagnostics
/// can cite it.
class TypeError : public PicoError {
 public:
  TypeError(std::string rule, const std::string& msg, SourceLoc loc = {})
      : PicoError(msg, loc), rule_(std::move(rule)) {}

  const std::string& rule() const { return rule_; }

  /// Stable diagnostic format: `file:line:col: rule <name>: message`.
  std::string diagnostic(const std::string& file) const {
    std::string out = file;
    out += ":" + to_string(where());
    out += ": rule " + rule_ + ": ";
    out += what();
    return out;
  }

 private:
  std::string rule_;
};

class IoError : public PicoError {
 public:
  using PicoError::PicoError;
};

}  // namespace pico
