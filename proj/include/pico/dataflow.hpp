#pragma once

#include <algorithm>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "pico/ast.hpp"
#include "pico/errors.hpp"

namespace pico {

// ---------------------------------------------------------------------------
// Semantic dataflow graphs
// ---------------------------------------------------------------------------

/// Short family label for unnamed operators (named ones keep their name).
inline std::string operator_label(const Operator& op) {
  std::string mods;
  if (op.windowed()) mods += "w";
  if (op.partitioned()) mods += "p";
  if (!mods.empty()) mods += "-";
  return std::visit(
      [&mods](const auto& c) -> std::string {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, MapSpec>) {
          return mods + (c.flat ? "flatmap" : "map");
        } else if constexpr (std::is_same_v<T, ReduceSpec>) {
          return mods + "reduce";
        } else if constexpr (std::is_same_v<T, FoldReduceSpec>) {
          return mods + "fold+reduce";
        } else if constexpr (std::is_same_v<T, BMapSpec>) {
          return mods + (c.pairing == Pairing::Zip ? "zip-" : "join-") +
                 (c.flat ? "flatmap" : "map");
        } else if constexpr (std::is_same_v<T, BCombineSpec>) {
          return mods + (c.pairing == Pairing::Zip ? "zip-" : "join-") +
                 (std::holds_alternative<ReduceSpec>(c.inner) ? "reduce" : "fold+reduce");
        } else if constexpr (std::is_same_v<T, EmitSpec>) {
          switch (c.kind) {
            case SourceKind::File: return "from-file";
            case SourceKind::Socket: return "from-socket";
            case SourceKind::Replay: return "from-replay";
          }
          return "emit";
        } else {
          static_assert(std::is_same_v<T, CollectSpec>);
          switch (c.kind) {
            case SinkKind::File: return "to-file";
            case SinkKind::Socket: return "to-socket";
            case SinkKind::Stdout: return "to-stdout";
          }
          return "collect";
        }
      },
      op.core);
}

/// Dataflow graph: operator vertices plus non-determinate merge vertices μ,
/// with the §5.4 input/output vertex designation. Immutable once built.
struct DataflowGraph {
  struct Vertex {
    std::size_t id = 0;
    bool is_merge = false;                   // μ node
    std::shared_ptr<const Operator> op;      // null for μ
    std::string label;                       // operator name or family, "mu" for μ
  };

  std::vector<Vertex> vertices;
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  std::optional<std::size_t> input;   // ι(G)
  std::optional<std::size_t> output;  // o(G)

  const Vertex& vertex(std::size_t id) const { return vertices.at(id); }

  std::vector<std::size_t> predecessors(std::size_t id) const {
    std::vector<std::size_t> out;
    for (auto [from, to] : edges)
      if (to == id) out.push_back(from);
    return out;
  }

  std::vector<std::size_t> successors(std::size_t id) const {
    std::vector<std::size_t> out;
    for (auto [from, to] : edges)
      if (from == id) out.push_back(to);
    return out;
  }

  std::vector<std::string> vertex_labels() const {
    std::vector<std::string> out;
    out.reserve(vertices.size());
    for (const Vertex& v : vertices) out.push_back(v.label);
    return out;
  }

  std::vector<std::pair<std::string, std::string>> edge_labels() const {
    std::vector<std::pair<std::string, std::string>> out;
    out.reserve(edges.size());
    for (auto [from, to] : edges)
      out.emplace_back(vertices[from].label, vertices[to].label);
    return out;
  }
};

namespace detail {

class GraphBuilder {
 public:
  struct Sub {
    std::optional<std::size_t> input;
    std::optional<std::size_t> output;
  };

  DataflowGraph take() { return std::move(g_); }

  Sub build(const PipelinePtr& p) {
    return std::visit([&](const auto& n) { return build_node(n, p->loc); }, p->node);
  }

 private:
  std::size_t add_operator(const Operator& op) {
    DataflowGraph::Vertex v;
    v.id = g_.vertices.size();
    v.op = std::make_shared<const Operator>(op);
    v.label = op.name.empty() ? operator_label(op) : op.name;
    g_.vertices.push_back(std::move(v));
    return g_.vertices.back().id;
  }

  std::size_t add_merge() {
    DataflowGraph::Vertex v;
    v.id = g_.vertices.size();
    v.is_merge = true;
    v.label = "mu";
    g_.vertices.push_back(std::move(v));
    return g_.vertices.back().id;
  }

  void add_edge(std::size_t from, std::size_t to) { g_.edges.emplace_back(from, to); }

  Sub build_node(const PNew& n, SourceLoc) {
    std::size_t v = add_operator(n.op);
    if (n.op.is_emit()) return {std::nullopt, v};
    if (n.op.is_collect()) return {v, std::nullopt};
    return {v, v};
  }

  Sub build_node(const PTo& n, SourceLoc loc) {
    Sub source = build(n.source);
    if (!source.output)
      throw StructureError("to source has no output vertex; was the pipeline type-checked?",
                           loc);
    std::vector<std::size_t> open_outputs;
    for (const PipelinePtr& dest : n.destinations) {
      Sub d = build(dest);
      if (!d.input)
        throw StructureError("to destination has no input vertex", loc);
      add_edge(*source.output, *d.input);
      if (d.output) open_outputs.push_back(*d.output);
    }
    Sub out;
    out.input = source.input;
    if (open_outputs.size() == 1) {
      // degenerate merge elided: a single surviving output is the output
      out.output = open_outputs[0];
    } else if (open_outputs.size() >= 2) {
      std::size_t mu = add_merge();
      for (std::size_t v : open_outputs) add_edge(v, mu);
      out.output = mu;
    }
    return out;
  }

  Sub build_node(const PPair& n, SourceLoc loc) {
    Sub left = build(n.left);
    Sub right = build(n.right);
    if (!left.output || !right.output)
      throw StructureError("pair inputs must both have an output vertex", loc);
    std::size_t v = add_operator(n.op);
    add_edge(*left.output, v);
    add_edge(*right.output, v);
    Sub out;
    out.output = v;
    out.input = left.input ? left.input : right.input;
    return out;
  }

  Sub build_node(const PMerge& n, SourceLoc loc) {
    Sub left = build(n.left);
    Sub right = build(n.right);
    if (!left.output || !right.output)
      throw StructureError("merge inputs must both have an output vertex", loc);
    std::size_t mu = add_merge();
    add_edge(*left.output, mu);
    add_edge(*right.output, mu);
    Sub out;
    out.output = mu;
    out.input = left.input ? left.input : right.input;
    return out;
  }

  DataflowGraph g_;
};

}  // namespace detail

/// Lowers a type-checked pipeline to its semantic dataflow graph. Vertex ids
/// are assigned in a deterministic traversal order, so building the same
/// pipeline twice yields identical graphs.
inline DataflowGraph build_graph(const PipelinePtr& p) {
  detail::GraphBuilder builder;
  detail::GraphBuilder::Sub top = builder.build(p);
  DataflowGraph g = builder.take();
  g.input = top.input;
  g.output = top.output;
  return g;
}

/// Deterministic Graphviz text: vertices in id order, edges sorted. μ nodes
/// render as points.
inline std::string export_dot(const DataflowGraph& g) {
  std::string out = "digraph pico {\n";
  for (const DataflowGraph::Vertex& v : g.vertices) {
    out += "  ";
    out += (v.is_merge ? "m" : "v") + std::to_string(v.id);
    if (v.is_merge) {
      out += " [shape=point]";
    } else {
      std::string label;
      for (char c : v.label) {
        if (c == '"' || c == '\\') label += '\\';
        label += c;
      }
      out += " [label=\"" + label + "\"]";
    }
    out += ";\n";
  }
  std::vector<std::pair<std::size_t, std::size_t>> edges = g.edges;
  std::sort(edges.begin(), edges.end());
  for (auto [from, to] : edges) {
    out += "  ";
    out += (g.vertices[from].is_merge ? "m" : "v") + std::to_string(from);
    out += " -> ";
    out += (g.vertices[to].is_merge ? "m" : "v") + std::to_string(to);
    out += ";\n";
  }
  out += "}\n";
  return out;
}

}  // namespace pico
