#pragma once

#include <algorithm>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "pico/collection.hpp"
#include "pico/errors.hpp"
#include "pico/kernel.hpp"
#include "pico/value.hpp"

namespace pico {

// ---------------------------------------------------------------------------
// Operators
// ---------------------------------------------------------------------------

enum class Pairing { Zip, Join };

struct MapSpec {
  KernelPtr fn;
  bool flat = false;  // flatmap when true
};

struct ReduceSpec {
  KernelPtr combine;  // ⊕ : T×T→T, associative and commutative
};

struct FoldReduceSpec {
  KernelPtr fold;   // ⊕₁ : S×T→S
  Value init;       // z : S
  KernelPtr merge;  // ⊕₂ : S×S→S
};

using CombineSpec = std::variant<ReduceSpec, FoldReduceSpec>;

enum class SourceKind { File, Socket, Replay };
enum class SinkKind { File, Socket, Stdout };

struct EmitSpec {
  SourceKind kind = SourceKind::File;
  std::string target;  // path, or endpoint name for sockets
  CollectionType declared;
};

struct CollectSpec {
  SinkKind kind = SinkKind::File;
  std::string target;  // empty for stdout
  CollectionType declared;
};

struct BMapSpec {
  Pairing pairing = Pairing::Join;
  KernelPtr fn;  // binary kernel
  bool flat = false;
};

struct BCombineSpec {
  Pairing pairing = Pairing::Join;
  CombineSpec inner;
};

/// An operator: a core family member plus optional windowing and
/// partitioning modifiers. Modifiers on non-decomposable families
/// (map, emit, collect) are structurally inert and erased by normalize.
struct Operator {
  std::variant<MapSpec, ReduceSpec, FoldReduceSpec, BMapSpec, BCombineSpec, EmitSpec,
               CollectSpec>
      core;
  std::optional<WindowingPolicy> window;
  std::optional<KernelPtr> partition_by;

  std::string name;  // declaration name; informational only
  SourceLoc loc;

  bool windowed() const { return window.has_value(); }
  bool partitioned() const { return partition_by.has_value(); }

  bool is_emit() const { return std::holds_alternative<EmitSpec>(core); }
  bool is_collect() const { return std::holds_alternative<CollectSpec>(core); }
  bool is_binary() const {
    return std::holds_alternative<BMapSpec>(core) ||
           std::holds_alternative<BCombineSpec>(core);
  }
  bool is_combine() const {
    return std::holds_alternative<ReduceSpec>(core) ||
           std::holds_alternative<FoldReduceSpec>(core);
  }

  /// Families that support decomposition (Table 2): combine, b-map, b-combine.
  bool decomposable() const {
    return is_combine() || is_binary();
  }
};

inline bool combine_equal(const CombineSpec& a, const CombineSpec& b) {
  if (a.index() != b.index()) return false;
  if (const auto* ra = std::get_if<ReduceSpec>(&a))
    return kernel_equal(ra->combine, std::get<ReduceSpec>(b).combine);
  const auto& fa = std::get<FoldReduceSpec>(a);
  const auto& fb = std::get<FoldReduceSpec>(b);
  return kernel_equal(fa.fold, fb.fold) && fa.init == fb.init &&
         kernel_equal(fa.merge, fb.merge);
}

/// Structural operator equality; declaration names and locations are ignored.
inline bool operator_equal(const Operator& a, const Operator& b) {
  if (a.core.index() != b.core.index()) return false;
  if (a.window != b.window) return false;
  if (a.partition_by.has_value() != b.partition_by.has_value()) return false;
  if (a.partition_by && !kernel_equal(*a.partition_by, *b.partition_by)) return false;
  return std::visit(
      [&b](const auto& ca) -> bool {
        using T = std::decay_t<decltype(ca)>;
        const T& cb = std::get<T>(b.core);
        if constexpr (std::is_same_v<T, MapSpec>) {
          return ca.flat == cb.flat && kernel_equal(ca.fn, cb.fn);
        } else if constexpr (std::is_same_v<T, ReduceSpec>) {
          return kernel_equal(ca.combine, cb.combine);
        } else if constexpr (std::is_same_v<T, FoldReduceSpec>) {
          return combine_equal(CombineSpec(ca), CombineSpec(cb));
        } else if constexpr (std::is_same_v<T, BMapSpec>) {
          return ca.pairing == cb.pairing && ca.flat == cb.flat &&
                 kernel_equal(ca.fn, cb.fn);
        } else if constexpr (std::is_same_v<T, BCombineSpec>) {
          return ca.pairing == cb.pairing && combine_equal(ca.inner, cb.inner);
        } else if constexpr (std::is_same_v<T, EmitSpec>) {
          return ca.kind == cb.kind && ca.target == cb.target &&
                 ca.declared == cb.declared;
        } else {
          static_assert(std::is_same_v<T, CollectSpec>);
          return ca.kind == cb.kind && ca.target == cb.target &&
                 ca.declared == cb.declared;
        }
      },
      a.core);
}

// ---------------------------------------------------------------------------
// Pipelines
// ---------------------------------------------------------------------------

struct Pipeline;
using PipelinePtr = std::shared_ptr<const Pipeline>;

struct PNew {
  Operator op;
};

struct PTo {
  PipelinePtr source;
  std::vector<PipelinePtr> destinations;  // n >= 1; broadcast when n > 1
};

struct PPair {
  PipelinePtr left;
  PipelinePtr right;
  Operator op;  // binary operator
};

struct PMerge {
  PipelinePtr left;
  PipelinePtr right;
};

struct Pipeline {
  std::variant<PNew, PTo, PPair, PMerge> node;
  SourceLoc loc;
};

inline PipelinePtr make_pipeline(Pipeline p) {
  return std::make_shared<const Pipeline>(std::move(p));
}

inline PipelinePtr new_pipeline(Operator op, SourceLoc loc = {}) {
  return make_pipeline({PNew{std::move(op)}, loc});
}
inline PipelinePtr to_pipeline(PipelinePtr src, std::vector<PipelinePtr> dests,
                               SourceLoc loc = {}) {
  if (dests.empty()) throw SyntaxError("to requires at least one destination", loc);
  return make_pipeline({PTo{std::move(src), std::move(dests)}, loc});
}
inline PipelinePtr pair_pipeline(PipelinePtr l, PipelinePtr r, Operator op,
                                 SourceLoc loc = {}) {
  return make_pipeline({PPair{std::move(l), std::move(r), std::move(op)}, loc});
}
inline PipelinePtr merge_pipeline(PipelinePtr l, PipelinePtr r, SourceLoc loc = {}) {
  return make_pipeline({PMerge{std::move(l), std::move(r)}, loc});
}

inline bool pipeline_equal(const PipelinePtr& a, const PipelinePtr& b) {
  if (!a || !b) return !a && !b;
  if (a->node.index() != b->node.index()) return false;
  return std::visit(
      [&b](const auto& na) -> bool {
        using T = std::decay_t<decltype(na)>;
        const T& nb = std::get<T>(b->node);
        if constexpr (std::is_same_v<T, PNew>) {
          return operator_equal(na.op, nb.op);
        } else if constexpr (std::is_same_v<T, PTo>) {
          if (!pipeline_equal(na.source, nb.source)) return false;
          if (na.destinations.size() != nb.destinations.size()) return false;
          for (std::size_t i = 0; i < na.destinations.size(); ++i)
            if (!pipeline_equal(na.destinations[i], nb.destinations[i])) return false;
          return true;
        } else if constexpr (std::is_same_v<T, PPair>) {
          return pipeline_equal(na.left, nb.left) && pipeline_equal(na.right, nb.right) &&
                 operator_equal(na.op, nb.op);
        } else {
          static_assert(std::is_same_v<T, PMerge>);
          return pipeline_equal(na.left, nb.left) && pipeline_equal(na.right, nb.right);
        }
      },
      a->node);
}

// ---------------------------------------------------------------------------
// Printing (surface syntax; also the canonical ordering key)
// ---------------------------------------------------------------------------

inline std::string to_string(const Operator& op);

namespace detail {

inline std::string type_clause(const CollectionType& t) {
  return to_string(t.structure) + " of " + to_string(t.data);
}

inline std::string combine_text(const CombineSpec& c) {
  if (const auto* r = std::get_if<ReduceSpec>(&c))
    return "reduce (" + to_string(*r->combine) + ")";
  const auto& f = std::get<FoldReduceSpec>(c);
  return "fold+reduce (" + to_string(*f.fold) + ") (" + to_literal(f.init) + ") (" +
         to_string(*f.merge) + ")";
}

}  // namespace detail

inline std::string to_string(const Operator& op) {
  std::string out;
  if (op.windowed()) out += "w ";
  if (op.partitioned()) out += "p ";
  std::visit(
      [&out](const auto& c) {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, MapSpec>) {
          out += c.flat ? "flatmap (" : "map (";
          out += to_string(*c.fn);
          out += ')';
        } else if constexpr (std::is_same_v<T, ReduceSpec>) {
          out += detail::combine_text(CombineSpec(c));
        } else if constexpr (std::is_same_v<T, FoldReduceSpec>) {
          out += detail::combine_text(CombineSpec(c));
        } else if constexpr (std::is_same_v<T, BMapSpec>) {
          out += c.pairing == Pairing::Zip ? "zip-" : "join-";
          out += c.flat ? "flatmap (" : "map (";
          out += to_string(*c.fn);
          out += ')';
        } else if constexpr (std::is_same_v<T, BCombineSpec>) {
          out += c.pairing == Pairing::Zip ? "zip-" : "join-";
          out += detail::combine_text(c.inner);
        } else if constexpr (std::is_same_v<T, EmitSpec>) {
          switch (c.kind) {
            case SourceKind::File: out += "from-file "; break;
            case SourceKind::Socket: out += "from-socket "; break;
            case SourceKind::Replay: out += "from-replay "; break;
          }
          out += to_literal(Value::str(c.target));
          out += " as " + detail::type_clause(c.declared);
        } else {
          static_assert(std::is_same_v<T, CollectSpec>);
          switch (c.kind) {
            case SinkKind::File: out += "to-file "; break;
            case SinkKind::Socket: out += "to-socket "; break;
            case SinkKind::Stdout: out += "to-stdout"; break;
          }
          if (c.kind != SinkKind::Stdout) {
            out += to_literal(Value::str(c.target));
          }
          out += " as " + detail::type_clause(c.declared);
        }
      },
      op.core);
  if (op.partitioned()) out += " by (" + to_string(**op.partition_by) + ")";
  if (op.windowed()) {
    out += " win (" + std::to_string(op.window->size) + ", " +
           std::to_string(op.window->slide) + ", " +
           (op.window->basis == WindowBasis::Count ? "count" : "time") + ")";
  }
  return out;
}

inline std::string to_string(const PipelinePtr& p) {
  return std::visit(
      [](const auto& n) -> std::string {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, PNew>) {
          return "new (" + to_string(n.op) + ")";
        } else if constexpr (std::is_same_v<T, PTo>) {
          if (n.destinations.size() == 1)
            return "(" + to_string(n.source) + " | " + to_string(n.destinations[0]) + ")";
          std::string out = "to(" + to_string(n.source) + ";";
          for (std::size_t i = 0; i < n.destinations.size(); ++i) {
            out += i ? ", " : " ";
            out += to_string(n.destinations[i]);
          }
          return out + ")";
        } else if constexpr (std::is_same_v<T, PPair>) {
          return "pair(" + to_string(n.left) + ", " + to_string(n.right) + ", " +
                 to_string(n.op) + ")";
        } else {
          static_assert(std::is_same_v<T, PMerge>);
          return "(" + to_string(n.left) + " + " + to_string(n.right) + ")";
        }
      },
      p->node);
}

// ---------------------------------------------------------------------------
// Normalization (Table 1 structural properties + modifier erasure)
// ---------------------------------------------------------------------------

namespace detail {

/// Flattens a chain of linear To nodes into its segments, in order.
inline void collect_linear(const PipelinePtr& p, std::vector<PipelinePtr>& out) {
  if (const auto* to = std::get_if<PTo>(&p->node); to && to->destinations.size() == 1) {
    collect_linear(to->source, out);
    collect_linear(to->destinations[0], out);
    return;
  }
  out.push_back(p);
}

/// Flattens a merge tree into its leaves.
inline void collect_merge(const PipelinePtr& p, std::vector<PipelinePtr>& out) {
  if (const auto* m = std::get_if<PMerge>(&p->node)) {
    collect_merge(m->left, out);
    collect_merge(m->right, out);
    return;
  }
  out.push_back(p);
}

inline void sort_by_key(std::vector<PipelinePtr>& ps) {
  std::stable_sort(ps.begin(), ps.end(), [](const PipelinePtr& a, const PipelinePtr& b) {
    return to_string(a) < to_string(b);
  });
}

}  // namespace detail

/// Canonical form: modifiers erased on non-decomposable operators, linear To
/// chains right-associated, branching To destinations and Merge children
/// sorted by a deterministic structural ordering, Merge trees
/// right-associated.
inline PipelinePtr normalize(const PipelinePtr& p) {
  return std::visit(
      [&p](const auto& n) -> PipelinePtr {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, PNew>) {
          if ((n.op.windowed() || n.op.partitioned()) && !n.op.decomposable()) {
            Operator op = n.op;
            op.window.reset();
            op.partition_by.reset();
            return make_pipeline({PNew{std::move(op)}, p->loc});
          }
          return p;
        } else if constexpr (std::is_same_v<T, PTo>) {
          PipelinePtr source = normalize(n.source);
          std::vector<PipelinePtr> dests;
          dests.reserve(n.destinations.size());
          for (const PipelinePtr& d : n.destinations) dests.push_back(normalize(d));

          if (dests.size() > 1) {
            detail::sort_by_key(dests);
            return make_pipeline({PTo{std::move(source), std::move(dests)}, p->loc});
          }
          // linear: right-associate the whole chain
          std::vector<PipelinePtr> segments;
          detail::collect_linear(source, segments);
          detail::collect_linear(dests[0], segments);
          PipelinePtr acc = segments.back();
          for (std::size_t i = segments.size() - 1; i-- > 0;)
            acc = make_pipeline({PTo{segments[i], {acc}}, p->loc});
          return acc;
        } else if constexpr (std::is_same_v<T, PPair>) {
          Operator op = n.op;
          if ((op.windowed() || op.partitioned()) && !op.decomposable()) {
            op.window.reset();
            op.partition_by.reset();
          }
          return make_pipeline(
              {PPair{normalize(n.left), normalize(n.right), std::move(op)}, p->loc});
        } else {
          static_assert(std::is_same_v<T, PMerge>);
          PipelinePtr l = normalize(n.left);
          PipelinePtr r = normalize(n.right);
          std::vector<PipelinePtr> leaves;
          detail::collect_merge(l, leaves);
          detail::collect_merge(r, leaves);
          detail::sort_by_key(leaves);
          PipelinePtr acc = leaves.back();
          for (std::size_t i = leaves.size() - 1; i-- > 0;)
            acc = make_pipeline({PMerge{leaves[i], acc}, p->loc});
          return acc;
        }
      },
      p->node);
}

/// True iff the two pipelines have the same canonical form under the Table 1
/// structural properties.
inline bool structurally_equal(const PipelinePtr& a, const PipelinePtr& b) {
  return pipeline_equal(normalize(a), normalize(b));
}

}  // namespace pico
