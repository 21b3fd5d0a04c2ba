#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "pico/ast.hpp"
#include "pico/collection.hpp"
#include "pico/errors.hpp"
#include "pico/kernel.hpp"
#include "pico/parser.hpp"
#include "pico/value.hpp"

namespace pico {

// ---------------------------------------------------------------------------
// Pipeline and operator types
// ---------------------------------------------------------------------------

using SigmaSet = std::set<StructureType>;

inline const SigmaSet& sigma_all() {
  static const SigmaSet s{StructureType::Bag, StructureType::List, StructureType::Stream};
  return s;
}
inline const SigmaSet& sigma_bounded() {
  static const SigmaSet s{StructureType::Bag, StructureType::List};
  return s;
}
inline const SigmaSet& sigma_ordered() {
  static const SigmaSet s{StructureType::List, StructureType::Stream};
  return s;
}
inline const SigmaSet& sigma_bounded_ordered() {
  static const SigmaSet s{StructureType::List};
  return s;
}

inline SigmaSet sigma_intersect(const SigmaSet& a, const SigmaSet& b) {
  SigmaSet out;
  for (StructureType s : a)
    if (b.count(s)) out.insert(s);
  return out;
}

inline std::string to_string(const SigmaSet& s) {
  if (s == sigma_all()) return "\xCE\xA3";          // Σ
  if (s == sigma_bounded()) return "\xCE\xA3_b";    // Σ_b
  if (s == sigma_ordered()) return "\xCE\xA3_o";    // Σ_o
  std::string out = "{";
  bool first = true;
  for (StructureType st : s) {
    if (!first) out += ", ";
    out += to_string(st);
    first = false;
  }
  return out + "}";
}

/// Optional-input/optional-output pipeline type. The σ set is shared by the
/// non-void sides: a singleton set is a concrete structure type, a larger
/// set means the pipeline is polymorphic over it.
struct PipelineType {
  std::optional<DataType> input;
  std::optional<DataType> output;
  SigmaSet sigmas;

  bool top_level() const { return !input && !output; }

  friend bool operator==(const PipelineType&, const PipelineType&) = default;
};

/// Input/output signature of one operator (Table 3 row instantiated at
/// concrete data types).
struct OperatorSignature {
  std::vector<DataType> inputs;  // 0 for emit, 1 unary, 2 binary
  std::optional<DataType> output;  // nullopt for collect
  SigmaSet sigmas;
};

namespace detail {

inline std::string typed_side(const std::optional<DataType>& data, bool poly,
                              const SigmaSet& sigmas) {
  if (!data) return "\xE2\x88\x85";  // ∅
  std::string st = poly ? "\xCF\x83" : to_string(*sigmas.begin());  // σ
  return "(" + to_string(*data) + ", " + st + ")";
}

}  // namespace detail

inline std::string to_string(const PipelineType& t) {
  bool poly = t.sigmas.size() > 1;
  std::string out = detail::typed_side(t.input, poly, t.sigmas) + " -> " +
                    detail::typed_side(t.output, poly, t.sigmas);
  if (poly && (t.input || t.output))
    out += ", \xE2\x88\x80\xCF\x83 \xE2\x88\x88 " + to_string(t.sigmas);  // ∀σ ∈
  return out;
}

inline std::string to_string(const OperatorSignature& sig) {
  bool poly = sig.sigmas.size() > 1;
  std::string out;
  if (sig.inputs.empty()) {
    out = "\xE2\x88\x85";
  } else {
    for (std::size_t i = 0; i < sig.inputs.size(); ++i) {
      if (i) out += " \xC3\x97 ";  // ×
      out += detail::typed_side(sig.inputs[i], poly, sig.sigmas);
    }
  }
  out += " -> " + detail::typed_side(sig.output, poly, sig.sigmas);
  if (poly) out += ", \xE2\x88\x80\xCF\x83 \xE2\x88\x88 " + to_string(sig.sigmas);
  return out;
}

// ---------------------------------------------------------------------------
// Operator typing (Table 3 + Fig. 6)
// ---------------------------------------------------------------------------

namespace detail {

/// Table 3 row label for diagnostics.
inline std::string table3_row(const Operator& op) {
  std::string mods;
  if (op.windowed()) mods += "w-";
  if (op.partitioned()) mods += "p-";
  if (std::holds_alternative<MapSpec>(op.core)) return "map";
  if (op.is_combine()) return mods + "combine";
  if (std::holds_alternative<BMapSpec>(op.core)) return mods + "b-map";
  if (std::holds_alternative<BCombineSpec>(op.core)) return mods + "b-combine";
  if (op.is_emit()) return "emit";
  return "collect";
}

/// Admissible structure types per Table 3, with the Fig. 6 rule lifting
/// windowed bounded-ordered operators to any ordered σ.
inline SigmaSet admissible_sigmas(const Operator& op) {
  if (std::holds_alternative<MapSpec>(op.core)) return sigma_all();
  if (const auto* e = std::get_if<EmitSpec>(&op.core)) return {e->declared.structure};
  if (const auto* c = std::get_if<CollectSpec>(&op.core)) return {c->declared.structure};

  std::optional<Pairing> pairing;
  if (const auto* bm = std::get_if<BMapSpec>(&op.core)) pairing = bm->pairing;
  if (const auto* bc = std::get_if<BCombineSpec>(&op.core)) pairing = bc->pairing;

  if (op.windowed()) return sigma_ordered();
  if (pairing && *pairing == Pairing::Zip) return sigma_bounded_ordered();
  return sigma_bounded();
}

inline DataType combine_output(const CombineSpec& c, const DataType& element,
                               SourceLoc loc) {
  if (const auto* r = std::get_if<ReduceSpec>(&c)) {
    KernelType kt = infer_kernel_type_constrained(*r->combine, {element, element},
                                                  /*params_equal=*/true,
                                                  /*result_equals_param=*/0);
    return kt.result;
  }
  const auto& f = std::get<FoldReduceSpec>(c);
  DataType seed = type_of(f.init);
  KernelType fold_t = infer_kernel_type_constrained(*f.fold, {seed, element},
                                                    /*params_equal=*/false,
                                                    /*result_equals_param=*/0);
  DataType acc = fold_t.params[0];
  infer_kernel_type_constrained(*f.merge, {acc, acc}, /*params_equal=*/true,
                                /*result_equals_param=*/0);
  (void)loc;
  return acc;
}

inline void check_grounded(const DataType& t, const std::string& what, SourceLoc loc) {
  bool open = false;
  // Bottom anywhere inside means the data type could not be determined.
  std::function<void(const DataType&)> scan = [&](const DataType& d) {
    if (d.is_bottom()) {
      open = true;
      return;
    }
    if (d.kind() == TypeKind::Tuple)
      for (const DataType& c : d.components()) scan(c);
    if (d.kind() == TypeKind::List) scan(d.element());
  };
  scan(t);
  if (open)
    throw KernelTypeError("cannot infer " + what +
                              "; annotate an upstream emit or ground the kernel",
                          loc);
}

}  // namespace detail

/// Signature of one operator at the given input data types. Pass
/// DataType::bottom() for an unknown input; the kernels must then determine
/// it (e.g. split forcing str). Structure admissibility is returned as the
/// signature's σ set; intersecting it with the upstream σ happens in
/// pipeline typing.
inline OperatorSignature type_operator(const Operator& op,
                                       const std::vector<DataType>& input_data) {
  OperatorSignature sig;
  sig.sigmas = detail::admissible_sigmas(op);

  auto expect_arity = [&](std::size_t n) {
    if (input_data.size() != n)
      throw TypeError(detail::table3_row(op),
                      "operator expects " + std::to_string(n) + " input(s), got " +
                          std::to_string(input_data.size()),
                      op.loc);
  };

  if (const auto* e = std::get_if<EmitSpec>(&op.core)) {
    expect_arity(0);
    sig.output = e->declared.data;
    return sig;
  }

  if (const auto* c = std::get_if<CollectSpec>(&op.core)) {
    expect_arity(1);
    auto u = unify(input_data[0], c->declared.data);
    if (!u)
      throw TypeError("collect",
                      "sink declared " + to_string(c->declared.data) + " but receives " +
                          to_string(input_data[0]),
                      op.loc);
    sig.inputs = {c->declared.data};
    return sig;
  }

  if (const auto* m = std::get_if<MapSpec>(&op.core)) {
    expect_arity(1);
    KernelType kt = infer_kernel_type(*m->fn, {input_data[0]});
    DataType out = kt.result;
    if (m->flat) {
      if (out.kind() != TypeKind::List)
        throw KernelTypeError("flatmap kernel must return a list, got " + to_string(out),
                              op.loc);
      out = out.element();
    }
    detail::check_grounded(kt.params[0], "map input data type", op.loc);
    detail::check_grounded(out, "map output data type", op.loc);
    sig.inputs = {kt.params[0]};
    sig.output = out;
    return sig;
  }

  if (op.is_combine()) {
    expect_arity(1);
    CombineSpec combine = std::holds_alternative<ReduceSpec>(op.core)
                              ? CombineSpec(std::get<ReduceSpec>(op.core))
                              : CombineSpec(std::get<FoldReduceSpec>(op.core));
    DataType element = input_data[0];
    if (op.partitioned()) {
      KernelType pi = infer_kernel_type(**op.partition_by, {element});
      element = pi.params[0];
      detail::check_grounded(pi.result, "partitioning key type", op.loc);
    }
    DataType out = detail::combine_output(combine, element, op.loc);
    detail::check_grounded(element, "combine input data type", op.loc);
    detail::check_grounded(out, "combine output data type", op.loc);
    sig.inputs = {element};
    sig.output = out;
    return sig;
  }

  // binary families
  expect_arity(2);
  DataType left = input_data[0];
  DataType right = input_data[1];
  if (op.partitioned()) {
    KernelType pl = infer_kernel_type(**op.partition_by, {left});
    KernelType pr = infer_kernel_type(**op.partition_by, {right});
    left = pl.params[0];
    right = pr.params[0];
    auto key = unify(pl.result, pr.result);
    if (!key)
      throw TypeError(detail::table3_row(op),
                      "partitioning keys disagree across the paired inputs: " +
                          to_string(pl.result) + " vs " + to_string(pr.result),
                      op.loc);
  }

  if (const auto* bm = std::get_if<BMapSpec>(&op.core)) {
    KernelType kt = infer_kernel_type(*bm->fn, {left, right});
    DataType out = kt.result;
    if (bm->flat) {
      if (out.kind() != TypeKind::List)
        throw KernelTypeError("flatmap kernel must return a list, got " + to_string(out),
                              op.loc);
      out = out.element();
    }
    detail::check_grounded(kt.params[0], "b-map left input data type", op.loc);
    detail::check_grounded(kt.params[1], "b-map right input data type", op.loc);
    detail::check_grounded(out, "b-map output data type", op.loc);
    sig.inputs = {kt.params[0], kt.params[1]};
    sig.output = out;
    return sig;
  }

  const auto& bc = std::get<BCombineSpec>(op.core);
  detail::check_grounded(left, "b-combine left input data type", op.loc);
  detail::check_grounded(right, "b-combine right input data type", op.loc);
  DataType paired = DataType::tuple({left, right});
  DataType out = detail::combine_output(bc.inner, paired, op.loc);
  detail::check_grounded(out, "b-combine output data type", op.loc);
  sig.inputs = {left, right};
  sig.output = out;
  return sig;
}

// ---------------------------------------------------------------------------
// Pipeline typing (Fig. 7) and the top-level check (Def. 1)
// ---------------------------------------------------------------------------

namespace detail {

struct Upstream {
  DataType data;
  SigmaSet sigmas;
};

class PipelineTyper {
 public:
  PipelineType type(const PipelinePtr& p, const std::optional<Upstream>& hint) {
    return std::visit([&](const auto& n) { return type_node(n, p->loc, hint); }, p->node);
  }

  /// Operator signatures resolved while typing, first resolution wins.
  const std::vector<std::pair<std::string, OperatorSignature>>& resolved() const {
    return resolved_;
  }

 private:
  void record(const Operator& op, const OperatorSignature& sig) {
    if (op.name.empty()) return;
    for (const auto& [name, s] : resolved_)
      if (name == op.name) return;
    resolved_.emplace_back(op.name, sig);
  }

  PipelineType type_node(const PNew& n, SourceLoc loc,
                         const std::optional<Upstream>& hint) {
    const Operator& op = n.op;
    if (op.is_binary())
      throw TypeError("new", "binary operator '" + to_string(op) +
                                 "' needs a pair Pipeline",
                      loc);

    if (op.is_emit()) {
      OperatorSignature sig = type_operator(op, {});
      record(op, sig);
      return PipelineType{std::nullopt, sig.output, sig.sigmas};
    }

    DataType in = hint ? hint->data : DataType::bottom();
    OperatorSignature sig = type_operator(op, {in});
    SigmaSet sigmas = hint ? sigma_intersect(hint->sigmas, sig.sigmas) : sig.sigmas;
    if (sigmas.empty())
      throw TypeError(table3_row(op),
                      "operator admits \xCF\x83 \xE2\x88\x88 " + to_string(sig.sigmas) +
                          " but upstream provides " + to_string(hint->sigmas),
                      op.loc.known() ? op.loc : loc);
    record(op, sig);
    if (op.is_collect()) return PipelineType{sig.inputs[0], std::nullopt, sigmas};
    return PipelineType{sig.inputs[0], sig.output, sigmas};
  }

  PipelineType type_node(const PTo& n, SourceLoc loc,
                         const std::optional<Upstream>& hint) {
    PipelineType source = type(n.source, hint);
    if (!source.output)
      throw TypeError("to", "to source has void output; nothing to send", loc);

    Upstream downstream{*source.output, source.sigmas};
    SigmaSet sigmas = source.sigmas;
    std::optional<DataType> shared_output;
    bool any_nonvoid = false;

    for (const PipelinePtr& dest : n.destinations) {
      PipelineType dt = type(dest, downstream);
      if (!dt.input)
        throw TypeError("to", "to destination has void input; it cannot consume", loc);
      auto u = unify(*dt.input, *source.output);
      if (!u)
        throw TypeError("to",
                        "destination consumes " + to_string(*dt.input) +
                            " but source produces " + to_string(*source.output),
                        loc);
      sigmas = sigma_intersect(sigmas, dt.sigmas);
      if (sigmas.empty())
        throw TypeError("to", "destinations disagree on structure type", loc);
      if (dt.output) {
        if (shared_output) {
          auto v = unify(*shared_output, *dt.output);
          if (!v)
            throw TypeError("to",
                            "destinations with non-void output disagree: " +
                                to_string(*shared_output) + " vs " + to_string(*dt.output),
                            loc);
          shared_output = *v;
        } else {
          shared_output = dt.output;
        }
        any_nonvoid = true;
      }
    }
    // rule to when some destination keeps a non-void output, rule to∅ otherwise
    return PipelineType{source.input, any_nonvoid ? shared_output : std::nullopt, sigmas};
  }

  PipelineType type_node(const PPair& n, SourceLoc loc,
                         const std::optional<Upstream>& hint) {
    PipelineType lt = type(n.left, hint);
    PipelineType rt = type(n.right, hint);
    if (lt.input && rt.input)
      throw TypeError("pair",
                      "pair requires at least one void input path; both sides consume",
                      loc);
    const char* rule = rt.input ? "pair'" : "pair";
    if (!lt.output || !rt.output)
      throw TypeError(rule, "pair inputs must both produce a collection", loc);

    SigmaSet sigmas = sigma_intersect(lt.sigmas, rt.sigmas);
    if (sigmas.empty())
      throw TypeError(rule,
                      "paired pipelines disagree on structure type: " +
                          to_string(lt.sigmas) + " vs " + to_string(rt.sigmas),
                      loc);

    OperatorSignature sig = type_operator(n.op, {*lt.output, *rt.output});
    sigmas = sigma_intersect(sigmas, sig.sigmas);
    if (sigmas.empty())
      throw TypeError(table3_row(n.op),
                      "operator admits \xCF\x83 \xE2\x88\x88 " + to_string(sig.sigmas) +
                          " but the paired inputs provide " +
                          to_string(sigma_intersect(lt.sigmas, rt.sigmas)),
                      n.op.loc.known() ? n.op.loc : loc);
    record(n.op, sig);
    std::optional<DataType> input = lt.input ? lt.input : rt.input;
    return PipelineType{input, sig.output, sigmas};
  }

  PipelineType type_node(const PMerge& n, SourceLoc loc,
                         const std::optional<Upstream>& hint) {
    PipelineType lt = type(n.left, hint);
    PipelineType rt = type(n.right, hint);
    if (lt.input && rt.input)
      throw TypeError("merge",
                      "merge requires at least one void input path; both sides consume",
                      loc);
    if (!lt.output || !rt.output)
      throw TypeError("merge", "merge inputs must both produce a collection", loc);
    auto u = unify(*lt.output, *rt.output);
    if (!u)
      throw TypeError("merge",
                      "merged collections disagree on data type: " + to_string(*lt.output) +
                          " vs " + to_string(*rt.output),
                      loc);
    SigmaSet sigmas = sigma_intersect(lt.sigmas, rt.sigmas);
    if (sigmas.empty())
      throw TypeError("merge",
                      "merged collections disagree on structure type: " +
                          to_string(lt.sigmas) + " vs " + to_string(rt.sigmas),
                      loc);
    std::optional<DataType> input = lt.input ? lt.input : rt.input;
    return PipelineType{input, *u, sigmas};
  }

  std::vector<std::pair<std::string, OperatorSignature>> resolved_;
};

}  // namespace detail

/// Fig. 7 typing of a pipeline term. Emit declarations fix data and
/// structure types which then propagate forward; a pipeline fragment with an
/// open input is typed when its first kernel determines the input data type.
inline PipelineType type_pipeline(const PipelinePtr& p) {
  detail::PipelineTyper typer;
  return typer.type(p, std::nullopt);
}

/// Name/kind/signature listing produced by checking a whole program, in
/// declaration order. Stable: golden-testable.
struct CheckReport {
  struct Row {
    std::string name;
    std::string kind;  // "operator" or "pipeline"
    std::string signature;
  };
  std::vector<Row> rows;
  std::string entry_name;
  PipelineType entry_type;
};

inline CheckReport check_program(const Program& prog) {
  detail::PipelineTyper typer;
  std::map<std::string, PipelineType> pipeline_types;
  for (const Program::PipeDecl& d : prog.pipelines)
    pipeline_types.emplace(d.name, typer.type(d.pipeline, std::nullopt));

  CheckReport report;
  for (const Program::OpDecl& d : prog.operators) {
    std::string sig = "(data-polymorphic)";
    for (const auto& [name, s] : typer.resolved())
      if (name == d.name) {
        sig = to_string(s);
        break;
      }
    report.rows.push_back({d.name, "operator", sig});
  }
  for (const Program::PipeDecl& d : prog.pipelines)
    report.rows.push_back({d.name, "pipeline", to_string(pipeline_types.at(d.name))});

  report.entry_name = prog.entry;
  report.entry_type = pipeline_types.at(prog.entry);
  return report;
}

/// Def. 1: the designated pipeline must be a non-empty Pipeline of type
/// ∅ → ∅. Throws TypeError (rule "top-level") carrying the actual type.
inline void check_toplevel(const Program& prog) {
  CheckReport report = check_program(prog);
  if (!report.entry_type.top_level())
    throw TypeError("top-level",
                    "entry pipeline '" + report.entry_name + "' has type " +
                        to_string(report.entry_type) +
                        "; a top-level Pipeline must be \xE2\x88\x85 -> \xE2\x88\x85",
                    prog.entry_decl().loc);
}

}  // namespace pico
