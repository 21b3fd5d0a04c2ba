#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <netdb.h>
#include <sys/socket.h>
#include <unistd.h>

#include "pico/ast.hpp"
#include "pico/collection.hpp"
#include "pico/dataflow.hpp"
#include "pico/errors.hpp"
#include "pico/kernel.hpp"
#include "pico/value.hpp"

namespace pico {

// ---------------------------------------------------------------------------
// Execution configuration
// ---------------------------------------------------------------------------

struct SocketEndpoint {
  std::string host;
  std::uint16_t port = 0;
};

/// Per-run configuration. The batch policy drives weak (unbounded)
/// element-wise processing and is forced to be tumbling.
struct ExecConfig {
  WindowingPolicy batch{1000, 1000, WindowBasis::Count};

  /// Source/sink endpoint or path -> replay file standing in for it.
  std::map<std::string, std::string> replay_bindings;
  /// Socket endpoint name -> host:port.
  std::map<std::string, SocketEndpoint> socket_bindings;

  bool deterministic_merge = true;

  /// Conveniences for single-source/single-sink programs.
  std::optional<std::string> input_override;
  std::optional<std::string> output_override;

  void set_batch_size(std::uint64_t n) { batch = WindowingPolicy(n, n, WindowBasis::Count); }
};

struct RunReport {
  struct EdgeFlow {
    std::string from;
    std::string to;
    std::size_t items = 0;
  };
  struct SinkInfo {
    std::string vertex;
    std::string target;
    std::size_t items = 0;
    std::string digest;
  };
  std::vector<EdgeFlow> edges;
  std::vector<SinkInfo> sinks;
};

// ---------------------------------------------------------------------------
// Element-wise operators (Eqs. 3, 4 and the weak extension Eq. 8)
// ---------------------------------------------------------------------------

namespace detail {

inline Value apply_unary(const KernelExpr& f, const Value& v) {
  try {
    return eval_kernel(f, {v});
  } catch (const KernelError& e) {
    throw KernelError(std::string(e.what()) + " (on item " + to_literal(v) + ")",
                      e.where());
  }
}

inline Value apply_binary(const KernelExpr& f, const Value& a, const Value& b) {
  try {
    return eval_kernel(f, {a, b});
  } catch (const KernelError& e) {
    throw KernelError(std::string(e.what()) + " (on items " + to_literal(a) + ", " +
                          to_literal(b) + ")",
                      e.where());
  }
}

inline const Value::Seq& as_kernel_list(const Value& v, SourceLoc loc) {
  if (!v.is_list())
    throw KernelError("flatmap kernel returned a non-list value " + to_literal(v), loc);
  return v.list_items();
}

}  // namespace detail

/// Strict semantic map: image multiset for bags; per-item application that
/// preserves timestamps and source order for sequences.
inline SemCollection exec_map(const KernelExpr& f, const SemCollection& c) {
  if (c.is_multiset()) {
    std::vector<Value> out;
    out.reserve(c.size());
    for (const Value& v : c.bag_items()) out.push_back(detail::apply_unary(f, v));
    return SemCollection::bag(std::move(out));
  }
  std::vector<TimedValue> out;
  out.reserve(c.size());
  for (const TimedValue& tv : c.seq_items())
    out.push_back({tv.time, detail::apply_unary(f, tv.value)});
  return SemCollection::sequence(std::move(out), c.structure());
}

/// Flatmap: the kernel yields a list per item; outputs are concatenated in
/// source order and every output inherits its source item's timestamp.
inline SemCollection exec_flatmap(const KernelExpr& f, const SemCollection& c) {
  if (c.is_multiset()) {
    std::vector<Value> out;
    for (const Value& v : c.bag_items()) {
      Value r = detail::apply_unary(f, v);
      const Value::Seq& items = detail::as_kernel_list(r, f.loc);
      out.insert(out.end(), items.begin(), items.end());
    }
    return SemCollection::bag(std::move(out));
  }
  std::vector<TimedValue> out;
  for (const TimedValue& tv : c.seq_items()) {
    Value r = detail::apply_unary(f, tv.value);
    for (const Value& item : detail::as_kernel_list(r, f.loc))
      out.push_back({tv.time, item});
  }
  return SemCollection::sequence(std::move(out), c.structure());
}

/// Weak semantic map (Eq. 8): tumbling batches are time-reordered and then
/// mapped strictly; global time-ordering is partially dropped. Batch size 1
/// degenerates to the strict map.
inline SemCollection exec_unbounded_elementwise(const MapSpec& m, const SemCollection& s,
                                                const WindowingPolicy& batch) {
  if (!s.is_sequence())
    throw StructureError("weak element-wise execution requires a sequence");
  if (!batch.tumbling()) throw StructureError("the execution batch policy must be tumbling");
  std::vector<TimedValue> out;
  for (const SemCollection& window : windowed_view(s, batch)) {
    SemCollection mapped = m.flat ? exec_flatmap(*m.fn, window) : exec_map(*m.fn, window);
    const auto& items = mapped.seq_items();
    out.insert(out.end(), items.begin(), items.end());
  }
  return SemCollection::sequence(std::move(out), s.structure());
}

// ---------------------------------------------------------------------------
// Combine operators (Eq. 5 and fold+reduce)
// ---------------------------------------------------------------------------

namespace detail {

inline std::vector<Value> collection_values(const SemCollection& c) {
  if (c.is_multiset()) return c.bag_items();
  std::vector<Value> out;
  out.reserve(c.size());
  for (const TimedValue& tv : c.seq_items()) out.push_back(tv.value);
  return out;
}

inline Timestamp max_timestamp(const SemCollection& c) {
  Timestamp t = 0;
  for (const TimedValue& tv : c.seq_items()) t = std::max(t, tv.time);
  return t;
}

inline SemCollection singleton_like(const SemCollection& input, Value v, Timestamp t) {
  if (input.is_multiset()) return SemCollection::bag({std::move(v)});
  return SemCollection::sequence({{t, std::move(v)}}, input.structure());
}

}  // namespace detail

/// Classical reduction with an associative, commutative ⊕. The ordered
/// result carries t' = max input timestamp.
inline SemCollection exec_reduce(const KernelExpr& plus, const SemCollection& c) {
  if (!c.bounded()) throw StructureError("reduce requires a bounded collection");
  if (c.empty()) throw EmptyReduce("reduce over an empty collection has no value");
  std::vector<Value> values = detail::collection_values(c);
  Value acc = values[0];
  for (std::size_t i = 1; i < values.size(); ++i)
    acc = detail::apply_binary(plus, acc, values[i]);
  Timestamp t = c.is_sequence() ? detail::max_timestamp(c) : 0;
  return detail::singleton_like(c, std::move(acc), t);
}

/// Two-phase aggregation: fold contiguous chunks from z with ⊕₁, then
/// combine the per-chunk accumulators with ⊕₂. `chunk_sizes` fixes the
/// segmentation (empty = one chunk); results are chunking-independent for
/// well-behaved kernels, which tests assert.
inline SemCollection exec_fold_reduce(const KernelExpr& fold, const Value& init,
                                      const KernelExpr& merge, const SemCollection& c,
                                      const std::vector<std::size_t>& chunk_sizes = {}) {
  if (!c.bounded()) throw StructureError("fold+reduce requires a bounded collection");
  std::vector<Value> values = detail::collection_values(c);

  std::vector<std::size_t> sizes = chunk_sizes;
  if (sizes.empty()) sizes.push_back(values.size());
  std::size_t covered = 0;
  for (std::size_t s : sizes) covered += s;
  if (covered != values.size())
    throw KernelError("chunk sizes cover " + std::to_string(covered) + " of " +
                      std::to_string(values.size()) + " items");

  std::vector<Value> accumulators;
  std::size_t pos = 0;
  for (std::size_t size : sizes) {
    Value acc = init;
    for (std::size_t i = 0; i < size; ++i, ++pos)
      acc = detail::apply_binary(fold, acc, values[pos]);
    accumulators.push_back(std::move(acc));
  }
  Value result = accumulators[0];
  for (std::size_t i = 1; i < accumulators.size(); ++i)
    result = detail::apply_binary(merge, result, accumulators[i]);

  Timestamp t = c.is_sequence() ? detail::max_timestamp(c) : 0;
  return detail::singleton_like(c, std::move(result), t);
}

inline SemCollection exec_combine(const CombineSpec& spec, const SemCollection& c,
                                  const std::vector<std::size_t>& chunk_sizes = {}) {
  if (const auto* r = std::get_if<ReduceSpec>(&spec)) return exec_reduce(*r->combine, c);
  const auto& f = std::get<FoldReduceSpec>(spec);
  return exec_fold_reduce(*f.fold, f.init, *f.merge, c, chunk_sizes);
}

// ---------------------------------------------------------------------------
// Decomposed execution: partitioning (§5.2.2) and windowing (Eqs. 6–7)
// ---------------------------------------------------------------------------

namespace detail {

inline PartitioningPolicy partitioner(const KernelExpr& pi) {
  return PartitioningPolicy{[&pi](const Value& v) { return apply_unary(pi, v); }};
}

/// Recomposes per-group sequences into one: groups concatenated in key
/// order, then stably sorted by timestamp, so equal timestamps keep key
/// order and within-group order.
inline SemCollection merge_groups_ordered(std::vector<std::vector<TimedValue>> groups,
                                          StructureType structure) {
  std::vector<TimedValue> all;
  for (std::vector<TimedValue>& g : groups)
    all.insert(all.end(), std::make_move_iterator(g.begin()),
               std::make_move_iterator(g.end()));
  std::stable_sort(all.begin(), all.end(),
                   [](const TimedValue& a, const TimedValue& b) { return a.time < b.time; });
  return SemCollection::sequence(std::move(all), structure);
}

}  // namespace detail

/// p-combine: apply the inner operator per group and recompose. Bags get the
/// union of the group results; sequences interleave group results by
/// timestamp (stable, key-order tie-break).
inline SemCollection exec_partitioned(const CombineSpec& inner, const KernelExpr& pi,
                                      const SemCollection& c) {
  PartitioningPolicy policy = detail::partitioner(pi);
  auto groups = partition(c, policy);
  if (c.is_multiset()) {
    std::vector<Value> out;
    for (auto& [key, group] : groups) {
      try {
        SemCollection r = exec_combine(inner, group);
        const auto& items = r.bag_items();
        out.insert(out.end(), items.begin(), items.end());
      } catch (const PicoError& e) {
        throw KernelError(std::string(e.what()) + " (group " + to_literal(key) + ")",
                          e.where());
      }
    }
    return SemCollection::bag(std::move(out));
  }
  std::vector<std::vector<TimedValue>> results;
  for (auto& [key, group] : groups) {
    try {
      results.push_back(exec_combine(inner, group).seq_items());
    } catch (const PicoError& e) {
      throw KernelError(std::string(e.what()) + " (group " + to_literal(key) + ")",
                        e.where());
    }
  }
  return detail::merge_groups_ordered(std::move(results), c.structure());
}

/// w-combine / wp-combine: windows per Def. 6, inner operator per window,
/// results concatenated in window order (Eq. 6; the unbounded Eq. 7 is the
/// same on an exhausted stream). With a partitioning policy (non-null pi)
/// the partitioning decomposes first (§2.2.5) and groups recompose by
/// timestamp.
inline SemCollection exec_windowed(const CombineSpec& inner, const KernelExpr* pi,
                                   const WindowingPolicy& w, const SemCollection& s) {
  if (!s.is_sequence())
    throw StructureError("windowed execution requires an ordered collection");

  auto run_windows = [&inner, &w](const SemCollection& seq) {
    std::vector<TimedValue> out;
    for (const SemCollection& window : windowed_view(seq, w)) {
      SemCollection r = exec_combine(inner, window);
      const auto& items = r.seq_items();
      out.insert(out.end(), items.begin(), items.end());
    }
    return out;
  };

  if (!pi) {
    return SemCollection::sequence(run_windows(s), s.structure());
  }

  PartitioningPolicy policy = detail::partitioner(*pi);
  std::vector<std::vector<TimedValue>> results;
  for (auto& [key, group] : partition(s, policy)) {
    try {
      results.push_back(run_windows(group));
    } catch (const PicoError& e) {
      throw KernelError(std::string(e.what()) + " (group " + to_literal(key) + ")",
                        e.where());
    }
  }
  return detail::merge_groups_ordered(std::move(results), s.structure());
}

// ---------------------------------------------------------------------------
// Pairing (b-map, b-combine)
// ---------------------------------------------------------------------------

namespace detail {

struct PairedItem {
  Timestamp time = 0;  // max of the paired items' timestamps
  Value left;
  Value right;
};

/// Pairs two bounded collections: zip joins equal positions and stops at the
/// shorter input; join builds the Cartesian product in left-major order.
inline std::vector<PairedItem> pair_values(Pairing pairing,
                                           const std::vector<TimedValue>& a,
                                           const std::vector<TimedValue>& b) {
  std::vector<PairedItem> out;
  if (pairing == Pairing::Zip) {
    std::size_t n = std::min(a.size(), b.size());
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
      out.push_back({std::max(a[i].time, b[i].time), a[i].value, b[i].value});
    return out;
  }
  out.reserve(a.size() * b.size());
  for (const TimedValue& x : a)
    for (const TimedValue& y : b)
      out.push_back({std::max(x.time, y.time), x.value, y.value});
  return out;
}

inline std::vector<TimedValue> timed_items(const SemCollection& c) {
  if (c.is_sequence()) return c.seq_items();
  std::vector<TimedValue> out;
  out.reserve(c.size());
  for (const Value& v : c.bag_items()) out.push_back({0, v});
  return out;
}

/// Applies a b-map kernel or an inner combine to one paired block,
/// appending the results.
inline void run_paired_block(const Operator& op, const std::vector<PairedItem>& pairs,
                             std::vector<TimedValue>& out) {
  if (pairs.empty()) return;
  if (const auto* bm = std::get_if<BMapSpec>(&op.core)) {
    for (const PairedItem& p : pairs) {
      Value r = apply_binary(*bm->fn, p.left, p.right);
      if (bm->flat) {
        for (const Value& item : as_kernel_list(r, bm->fn->loc))
          out.push_back({p.time, item});
      } else {
        out.push_back({p.time, std::move(r)});
      }
    }
    return;
  }
  const auto& bc = std::get<BCombineSpec>(op.core);
  std::vector<TimedValue> tuples;
  tuples.reserve(pairs.size());
  for (const PairedItem& p : pairs)
    tuples.push_back({p.time, Value::tuple({p.left, p.right})});
  SemCollection combined = exec_combine(bc.inner, SemCollection::list(std::move(tuples)));
  for (const TimedValue& tv : combined.seq_items()) out.push_back(tv);
}

}  // namespace detail

/// Binary operators: pair the two inputs (zip or join), apply the kernel or
/// inner combine, honoring the operator's partitioning (per key, on both
/// sides) and windowing (window i pairs with window i) modifiers.
inline SemCollection exec_pair(const Operator& op, const SemCollection& left,
                               const SemCollection& right) {
  if (!op.is_binary()) throw StructureError("exec_pair requires a binary operator");
  Pairing pairing = std::holds_alternative<BMapSpec>(op.core)
                        ? std::get<BMapSpec>(op.core).pairing
                        : std::get<BCombineSpec>(op.core).pairing;
  if (pairing == Pairing::Zip && (left.is_multiset() || right.is_multiset()))
    throw StructureError("zip pairing requires ordered collections");

  const bool ordered_out = left.is_sequence();
  StructureType structure = left.structure();

  // one (group, side) -> windows of it; without windowing the whole side is
  // a single block
  auto blocks_of = [&op](const std::vector<TimedValue>& items,
                         StructureType s) -> std::vector<std::vector<TimedValue>> {
    if (!op.windowed()) return {items};
    std::vector<std::vector<TimedValue>> out;
    for (const SemCollection& w : windowed_view(SemCollection::sequence(items, s), *op.window))
      out.push_back(w.seq_items());
    return out;
  };

  auto run_group = [&](const std::vector<TimedValue>& l, const std::vector<TimedValue>& r,
                       std::vector<TimedValue>& out) {
    StructureType bounded = StructureType::List;
    std::vector<std::vector<TimedValue>> lb = blocks_of(l, op.windowed() ? structure : bounded);
    std::vector<std::vector<TimedValue>> rb = blocks_of(r, op.windowed() ? structure : bounded);
    std::size_t n = std::min(lb.size(), rb.size());
    for (std::size_t i = 0; i < n; ++i)
      detail::run_paired_block(op, detail::pair_values(pairing, lb[i], rb[i]), out);
  };

  std::vector<std::vector<TimedValue>> group_results;
  if (op.partitioned()) {
    PartitioningPolicy policy = detail::partitioner(**op.partition_by);
    auto lgroups = partition(left, policy);
    auto rgroups = partition(right, policy);
    for (auto& [key, lgroup] : lgroups) {
      for (auto& [rkey, rgroup] : rgroups) {
        if (!(key == rkey)) continue;
        std::vector<TimedValue> out;
        run_group(detail::timed_items(lgroup), detail::timed_items(rgroup), out);
        group_results.push_back(std::move(out));
        break;
      }
    }
  } else {
    std::vector<TimedValue> out;
    run_group(detail::timed_items(left), detail::timed_items(right), out);
    group_results.push_back(std::move(out));
  }

  if (!ordered_out) {
    std::vector<Value> out;
    for (auto& g : group_results)
      for (TimedValue& tv : g) out.push_back(std::move(tv.value));
    return SemCollection::bag(std::move(out));
  }
  return detail::merge_groups_ordered(std::move(group_results), structure);
}

// ---------------------------------------------------------------------------
// Merge
// ---------------------------------------------------------------------------

/// Merge of same-typed collections. Bags take the multiset union. With the
/// deterministic flag, ordered collections merge into the canonical
/// timestamp order (ties broken by literal text, so the merge is observably
/// associative and commutative); without it, inputs are concatenated, which
/// is one of the interleavings the non-determinate μ permits.
inline SemCollection exec_merge_many(const std::vector<SemCollection>& inputs,
                                     bool deterministic = true) {
  if (inputs.empty()) throw StructureError("merge of zero collections");
  StructureType structure = inputs[0].structure();
  for (const SemCollection& c : inputs)
    if (c.structure() != structure)
      throw StructureError("merged collections disagree on structure type");

  if (structure == StructureType::Bag) {
    std::vector<Value> out;
    for (const SemCollection& c : inputs) {
      const auto& items = c.bag_items();
      out.insert(out.end(), items.begin(), items.end());
    }
    return SemCollection::bag(std::move(out));
  }

  std::vector<TimedValue> all;
  for (const SemCollection& c : inputs) {
    const auto& items = c.seq_items();
    all.insert(all.end(), items.begin(), items.end());
  }
  if (deterministic) {
    std::stable_sort(all.begin(), all.end(), [](const TimedValue& a, const TimedValue& b) {
      if (a.time != b.time) return a.time < b.time;
      return literal_less(a.value, b.value);
    });
  }
  return SemCollection::sequence(std::move(all), structure);
}

inline SemCollection exec_merge(const SemCollection& a, const SemCollection& b,
                                bool deterministic = true) {
  return exec_merge_many({a, b}, deterministic);
}

// ---------------------------------------------------------------------------
// Vertex dispatch
// ---------------------------------------------------------------------------

/// Runs one operator firing on its input tokens. Emit/collect are handled by
/// the graph runner, not here.
inline SemCollection exec_operator(const Operator& op,
                                   const std::vector<SemCollection>& inputs,
                                   const ExecConfig& cfg = {}) {
  if (op.is_binary()) {
    if (inputs.size() != 2) throw StructureError("binary operator needs two tokens");
    return exec_pair(op, inputs[0], inputs[1]);
  }
  if (inputs.size() != 1) throw StructureError("unary operator needs one token");
  const SemCollection& c = inputs[0];

  if (const auto* m = std::get_if<MapSpec>(&op.core)) {
    if (!c.bounded()) return exec_unbounded_elementwise(*m, c, cfg.batch);
    return m->flat ? exec_flatmap(*m->fn, c) : exec_map(*m->fn, c);
  }

  if (!op.is_combine())
    throw StructureError("emit/collect vertices have no functional semantics");

  CombineSpec spec = std::holds_alternative<ReduceSpec>(op.core)
                         ? CombineSpec(std::get<ReduceSpec>(op.core))
                         : CombineSpec(std::get<FoldReduceSpec>(op.core));

  if (op.windowed()) {
    const KernelExpr* pi = op.partitioned() ? op.partition_by->get() : nullptr;
    return exec_windowed(spec, pi, *op.window, c);
  }
  if (!c.bounded())
    throw StructureError("combine over an unbounded collection requires windowing");
  if (op.partitioned()) return exec_partitioned(spec, **op.partition_by, c);
  return exec_combine(spec, c);
}

// ---------------------------------------------------------------------------
// Sources and sinks
// ---------------------------------------------------------------------------

namespace detail {

inline std::vector<std::string> read_lines_text(const std::string& text) {
  std::vector<std::string> lines;
  std::string line;
  std::istringstream in(text);
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

inline std::vector<std::string> read_lines_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::ostringstream buf;
  buf << in.rdbuf();
  return read_lines_text(buf.str());
}

inline int connect_tcp(const SocketEndpoint& ep) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  std::string port = std::to_string(ep.port);
  if (getaddrinfo(ep.host.c_str(), port.c_str(), &hints, &res) != 0 || !res)
    throw IoError("cannot resolve " + ep.host + ":" + port);
  int fd = -1;
  for (addrinfo* ai = res; ai; ai = ai->ai_next) {
    fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
    if (fd < 0) continue;
    if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) break;
    ::close(fd);
    fd = -1;
  }
  freeaddrinfo(res);
  if (fd < 0) throw IoError("cannot connect to " + ep.host + ":" + port);
  return fd;
}

inline std::vector<std::string> read_lines_socket(const SocketEndpoint& ep) {
  int fd = connect_tcp(ep);
  std::string data;
  char buf[4096];
  for (;;) {
    ssize_t n = ::read(fd, buf, sizeof buf);
    if (n <= 0) break;
    data.append(buf, static_cast<std::size_t>(n));
  }
  ::close(fd);
  return read_lines_text(data);
}

inline void write_text_socket(const SocketEndpoint& ep, const std::string& text) {
  int fd = connect_tcp(ep);
  std::size_t off = 0;
  while (off < text.size()) {
    ssize_t n = ::write(fd, text.data() + off, text.size() - off);
    if (n <= 0) {
      ::close(fd);
      throw IoError("socket write to " + ep.host + " failed");
    }
    off += static_cast<std::size_t>(n);
  }
  ::close(fd);
}

/// Replay record: `<timestamp-int><TAB><value-literal>`.
inline std::vector<TimedValue> parse_replay(const std::vector<std::string>& lines,
                                            const std::string& origin) {
  std::vector<TimedValue> out;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::string& line = lines[i];
    if (line.empty()) continue;
    std::size_t tab = line.find('\t');
    if (tab == std::string::npos)
      throw IoError(origin + ": replay line " + std::to_string(i + 1) +
                    " has no <timestamp>\\t<literal> separator");
    Timestamp t = 0;
    try {
      t = static_cast<Timestamp>(std::stoull(line.substr(0, tab)));
    } catch (const std::exception&) {
      throw IoError(origin + ": bad timestamp on replay line " + std::to_string(i + 1));
    }
    out.push_back({t, parse_literal(line.substr(tab + 1))});
  }
  return out;
}

inline Value value_from_line(const std::string& line, const DataType& declared) {
  // str sources read raw lines; anything else is a value literal
  if (declared.kind() == TypeKind::Str) return Value::str(line);
  return parse_literal(line);
}

inline SemCollection materialize_source(const EmitSpec& emit, const ExecConfig& cfg) {
  const std::string& name = emit.target;

  auto replay_it = cfg.replay_bindings.find(name);
  bool has_replay = replay_it != cfg.replay_bindings.end();

  std::vector<std::string> lines;
  bool replay_format = false;
  switch (emit.kind) {
    case SourceKind::File: {
      std::string path = cfg.input_override ? *cfg.input_override
                         : has_replay       ? replay_it->second
                                            : name;
      lines = read_lines_file(path);
      break;
    }
    case SourceKind::Replay: {
      lines = read_lines_file(has_replay ? replay_it->second : name);
      replay_format = true;
      break;
    }
    case SourceKind::Socket: {
      if (has_replay) {
        lines = read_lines_file(replay_it->second);
        replay_format = true;
      } else if (auto it = cfg.socket_bindings.find(name); it != cfg.socket_bindings.end()) {
        lines = read_lines_socket(it->second);
      } else {
        throw IoError("socket source '" + name +
                      "' has no binding; pass --socket or --replay for it");
      }
      break;
    }
  }

  if (replay_format) {
    std::vector<TimedValue> items = parse_replay(lines, name);
    return SemCollection::sequence(std::move(items), emit.declared.structure);
  }

  if (emit.declared.structure == StructureType::Bag) {
    std::vector<Value> items;
    items.reserve(lines.size());
    for (const std::string& line : lines)
      items.push_back(value_from_line(line, emit.declared.data));
    return SemCollection::bag(std::move(items));
  }
  // ordered sources tag items with their arrival ordinal (§5.2.4)
  std::vector<TimedValue> items;
  items.reserve(lines.size());
  for (std::size_t i = 0; i < lines.size(); ++i)
    items.push_back({i, value_from_line(lines[i], emit.declared.data)});
  return SemCollection::sequence(std::move(items), emit.declared.structure);
}

inline std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  static const char* hex = "0123456789abcdef";
  for (int i = 15; i >= 0; --i) {
    buf[15 - i] = hex[(h >> (i * 4)) & 0xF];
  }
  buf[16] = '\0';
  return buf;
}

/// Sink text: one value literal per line. Bag output is sorted by literal
/// text so identical runs are byte-identical.
inline std::string sink_text(const SemCollection& c) {
  std::vector<std::string> lines;
  if (c.is_multiset()) {
    lines.reserve(c.size());
    for (const Value& v : c.bag_items()) lines.push_back(to_literal(v));
    std::sort(lines.begin(), lines.end());
  } else {
    lines.reserve(c.size());
    for (const TimedValue& tv : c.seq_items()) lines.push_back(to_literal(tv.value));
  }
  std::string out;
  for (const std::string& line : lines) {
    out += line;
    out += '\n';
  }
  return out;
}

inline RunReport::SinkInfo write_sink(const CollectSpec& sink, const SemCollection& token,
                                      const ExecConfig& cfg, const std::string& vertex) {
  std::string text = sink_text(token);
  RunReport::SinkInfo info;
  info.vertex = vertex;
  info.items = token.size();
  info.digest = fnv1a_hex(text);
  switch (sink.kind) {
    case SinkKind::File: {
      std::string path = cfg.output_override ? *cfg.output_override : sink.target;
      std::ofstream out(path, std::ios::binary | std::ios::trunc);
      if (!out) throw IoError("cannot open '" + path + "' for writing");
      out << text;
      info.target = path;
      break;
    }
    case SinkKind::Socket: {
      auto it = cfg.socket_bindings.find(sink.target);
      if (it == cfg.socket_bindings.end())
        throw IoError("socket sink '" + sink.target + "' has no --socket binding");
      write_text_socket(it->second, text);
      info.target = sink.target;
      break;
    }
    case SinkKind::Stdout: {
      fwrite(text.data(), 1, text.size(), stdout);
      info.target = "<stdout>";
      break;
    }
  }
  return info;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Graph execution
// ---------------------------------------------------------------------------

/// Executes a dataflow graph built from a top-level pipeline: vertices fire
/// once in topological order, one token per edge. Emit vertices materialize
/// and timestamp their sources; μ vertices merge; collect vertices write
/// sinks. Unbounded sources are exhausted replays/sockets, processed with
/// windowed or batched (weak) semantics and flushed at EOF.
inline RunReport run_graph(const DataflowGraph& g, const ExecConfig& cfg = {}) {
  std::vector<std::optional<SemCollection>> edge_tokens(g.edges.size());
  std::vector<int> pending(g.vertices.size(), 0);
  for (auto [from, to] : g.edges) pending[to]++;

  // Kahn's algorithm, lowest vertex id first, so firing order is stable.
  std::vector<std::size_t> ready;
  for (const auto& v : g.vertices)
    if (pending[v.id] == 0) ready.push_back(v.id);

  RunReport report;
  std::size_t fired = 0;
  while (!ready.empty()) {
    std::sort(ready.begin(), ready.end());
    std::size_t id = ready.front();
    ready.erase(ready.begin());
    const DataflowGraph::Vertex& v = g.vertices[id];
    ++fired;

    // gather input tokens in edge order
    std::vector<SemCollection> inputs;
    for (std::size_t e = 0; e < g.edges.size(); ++e)
      if (g.edges[e].second == id) {
        if (!edge_tokens[e]) throw StructureError("vertex fired before its inputs");
        inputs.push_back(*edge_tokens[e]);
      }

    std::optional<SemCollection> output;
    try {
      if (v.is_merge) {
        output = exec_merge_many(inputs, cfg.deterministic_merge);
      } else if (v.op->is_emit()) {
        output = detail::materialize_source(std::get<EmitSpec>(v.op->core), cfg);
      } else if (v.op->is_collect()) {
        report.sinks.push_back(detail::write_sink(std::get<CollectSpec>(v.op->core),
                                                  inputs.at(0), cfg, v.label));
      } else {
        output = exec_operator(*v.op, inputs, cfg);
      }
    } catch (const TypeError&) {
      throw;
    } catch (const PicoError& e) {
      throw PicoError("vertex '" + v.label + "': " + e.what(), e.where());
    }

    for (std::size_t e = 0; e < g.edges.size(); ++e) {
      if (g.edges[e].first != id) continue;
      if (!output) throw StructureError("vertex '" + v.label + "' produced no token");
      edge_tokens[e] = output;
      report.edges.push_back(
          {v.label, g.vertices[g.edges[e].second].label, output->size()});
      if (--pending[g.edges[e].second] == 0) ready.push_back(g.edges[e].second);
    }
    // sinks have no out-edges; vertices with outputs but no consumers are
    // only possible in fragments, which run_graph does not accept
    if (output && g.successors(id).empty() && !v.op)
      throw StructureError("merge vertex without consumers");
  }

  if (fired != g.vertices.size())
    throw StructureError("dataflow graph has a cycle or unreachable vertices");
  return report;
}

}  // namespace pico
