#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "pico/errors.hpp"
#include "pico/value.hpp"

namespace pico {

// ---------------------------------------------------------------------------
// Structure and collection types
// ---------------------------------------------------------------------------

/// bag = bounded unordered, list = bounded ordered, stream = unbounded ordered.
enum class StructureType { Bag, List, Stream };

inline bool is_bounded(StructureType s) { return s != StructureType::Stream; }
inline bool is_ordered(StructureType s) { return s != StructureType::Bag; }

inline std::string to_string(StructureType s) {
  switch (s) {
    case StructureType::Bag: return "bag";
    case StructureType::List: return "list";
    case StructureType::Stream: return "stream";
  }
  return "?";
}

struct CollectionType {
  DataType data;
  StructureType structure;

  friend bool operator==(const CollectionType&, const CollectionType&) = default;
};

/// Optional collection type; nullopt is the void type.
using OptCollectionType = std::optional<CollectionType>;

inline std::string to_string(const CollectionType& t) {
  return "(" + to_string(t.data) + ", " + to_string(t.structure) + ")";
}

inline std::string to_string(const OptCollectionType& t) {
  return t ? to_string(*t) : std::string("\xE2\x88\x85");  // ∅
}

// ---------------------------------------------------------------------------
// Semantic collections
// ---------------------------------------------------------------------------

using Timestamp = std::uint64_t;

struct TimedValue {
  Timestamp time = 0;
  Value value;

  friend bool operator==(const TimedValue&, const TimedValue&) = default;
};

/// A semantic collection token: either a multiset of values (bag) or a
/// timestamped sequence (list/stream). Sequences need not be time-ordered.
class SemCollection {
 public:
  static SemCollection bag(std::vector<Value> items) {
    SemCollection c;
    c.structure_ = StructureType::Bag;
    c.bag_items_ = std::move(items);
    return c;
  }

  static SemCollection sequence(std::vector<TimedValue> items, StructureType s) {
    if (!is_ordered(s)) throw StructureError("sequence structure must be ordered");
    SemCollection c;
    c.structure_ = s;
    c.seq_items_ = std::move(items);
    return c;
  }

  static SemCollection list(std::vector<TimedValue> items) {
    return sequence(std::move(items), StructureType::List);
  }
  static SemCollection stream(std::vector<TimedValue> items) {
    return sequence(std::move(items), StructureType::Stream);
  }

  static SemCollection empty_of(StructureType s) {
    return s == StructureType::Bag ? bag({}) : sequence({}, s);
  }

  StructureType structure() const { return structure_; }
  bool is_multiset() const { return structure_ == StructureType::Bag; }
  bool is_sequence() const { return structure_ != StructureType::Bag; }
  bool bounded() const { return is_bounded(structure_); }

  std::size_t size() const {
    return is_multiset() ? bag_items_.size() : seq_items_.size();
  }
  bool empty() const { return size() == 0; }

  const std::vector<Value>& bag_items() const {
    require_multiset("bag_items");
    return bag_items_;
  }
  const std::vector<TimedValue>& seq_items() const {
    require_sequence("seq_items");
    return seq_items_;
  }

  /// Element data type, unified across all items; Bottom when empty.
  DataType data_type() const {
    DataType t = DataType::bottom();
    auto extend = [&t](const Value& v) {
      auto u = unify(t, type_of(v));
      if (!u)
        throw MalformedValue("collection elements disagree on data type: " +
                             to_string(t) + " vs " + to_string(type_of(v)));
      t = std::move(*u);
    };
    if (is_multiset()) {
      for (const Value& v : bag_items_) extend(v);
    } else {
      for (const TimedValue& tv : seq_items_) extend(tv.value);
    }
    return t;
  }

  friend bool operator==(const SemCollection& a, const SemCollection& b) {
    if (a.structure_ != b.structure_) return false;
    if (a.is_multiset()) return multiset_equal(a.bag_items_, b.bag_items_);
    return a.seq_items_ == b.seq_items_;
  }

  /// The items as a multiset of values (timestamps dropped), canonically
  /// sorted. Basis of multiset-equality assertions.
  std::vector<Value> as_sorted_multiset() const {
    std::vector<Value> out;
    if (is_multiset()) {
      out = bag_items_;
    } else {
      out.reserve(seq_items_.size());
      for (const TimedValue& tv : seq_items_) out.push_back(tv.value);
    }
    std::sort(out.begin(), out.end(), literal_less);
    return out;
  }

 private:
  static bool multiset_equal(const std::vector<Value>& a, const std::vector<Value>& b) {
    if (a.size() != b.size()) return false;
    std::vector<Value> sa = a, sb = b;
    std::sort(sa.begin(), sa.end(), literal_less);
    std::sort(sb.begin(), sb.end(), literal_less);
    return sa == sb;
  }

  void require_multiset(const char* op) const {
    if (!is_multiset())
      throw StructureError(std::string(op) + " requires a multiset collection");
  }
  void require_sequence(const char* op) const {
    if (!is_sequence())
      throw StructureError(std::string(op) + " requires an ordered collection");
  }

  StructureType structure_ = StructureType::Bag;
  std::vector<Value> bag_items_;
  std::vector<TimedValue> seq_items_;
};

inline bool multiset_equal(const SemCollection& a, const SemCollection& b) {
  return a.as_sorted_multiset() == b.as_sorted_multiset();
}

// ---------------------------------------------------------------------------
// Windowing and partitioning policies
// ---------------------------------------------------------------------------

enum class WindowBasis { Count, Time };

/// Sliding-window policy (|W|, delta, basis); tumbling when |W| == delta.
struct WindowingPolicy {
  std::uint64_t size = 1;
  std::uint64_t slide = 1;
  WindowBasis basis = WindowBasis::Count;

  WindowingPolicy() = default;
  WindowingPolicy(std::uint64_t size_, std::uint64_t slide_, WindowBasis basis_)
      : size(size_), slide(slide_), basis(basis_) {
    if (size == 0 || slide == 0)
      throw StructureError("windowing policy requires |W| >= 1 and slide >= 1");
  }

  bool tumbling() const { return size == slide; }

  friend bool operator==(const WindowingPolicy&, const WindowingPolicy&) = default;
};

inline std::string to_string(const WindowingPolicy& w) {
  return "(" + std::to_string(w.size) + ", " + std::to_string(w.slide) + ", " +
         (w.basis == WindowBasis::Count ? "count" : "time") + ")";
}

/// Key-extraction policy; the key function is total on the collection's data
/// type (kernel-lang wires kernel expressions in here).
struct PartitioningPolicy {
  std::function<Value(const Value&)> key;
};

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

/// Sub-collection of elements mapping to key k. Sequences keep their original
/// relative order and timestamps.
inline SemCollection k_selection(const SemCollection& c, const PartitioningPolicy& pi,
                                 const Value& k) {
  if (c.is_multiset()) {
    std::vector<Value> out;
    for (const Value& v : c.bag_items())
      if (pi.key(v) == k) out.push_back(v);
    return SemCollection::bag(std::move(out));
  }
  std::vector<TimedValue> out;
  for (const TimedValue& tv : c.seq_items())
    if (pi.key(tv.value) == k) out.push_back(tv);
  return SemCollection::sequence(std::move(out), c.structure());
}

/// All non-empty groups, keyed; key order is first occurrence in the source
/// collection, which keeps the result deterministic.
inline std::vector<std::pair<Value, SemCollection>> partition(
    const SemCollection& c, const PartitioningPolicy& pi) {
  std::vector<Value> keys;
  std::unordered_map<std::string, std::size_t> index;

  auto group_of = [&](const Value& v) -> std::size_t {
    Value k = pi.key(v);
    std::string rep = to_literal(k);
    auto [it, fresh] = index.emplace(std::move(rep), keys.size());
    if (fresh) keys.push_back(k);
    return it->second;
  };

  if (c.is_multiset()) {
    std::vector<std::vector<Value>> groups;
    for (const Value& v : c.bag_items()) {
      std::size_t g = group_of(v);
      if (g == groups.size()) groups.emplace_back();
      groups[g].push_back(v);
    }
    std::vector<std::pair<Value, SemCollection>> out;
    out.reserve(keys.size());
    for (std::size_t i = 0; i < keys.size(); ++i)
      out.emplace_back(keys[i], SemCollection::bag(std::move(groups[i])));
    return out;
  }

  std::vector<std::vector<TimedValue>> groups;
  for (const TimedValue& tv : c.seq_items()) {
    std::size_t g = group_of(tv.value);
    if (g == groups.size()) groups.emplace_back();
    groups[g].push_back(tv);
  }
  std::vector<std::pair<Value, SemCollection>> out;
  out.reserve(keys.size());
  for (std::size_t i = 0; i < keys.size(); ++i)
    out.emplace_back(keys[i],
                     SemCollection::sequence(std::move(groups[i]), c.structure()));
  return out;
}

/// Stable sort by timestamp. Bounded sequences only.
inline SemCollection time_reorder(const SemCollection& s) {
  if (!s.is_sequence()) throw StructureError("time_reorder requires a sequence");
  if (!s.bounded()) throw StructureError("time_reorder requires a bounded sequence");
  std::vector<TimedValue> items = s.seq_items();
  std::stable_sort(items.begin(), items.end(),
                   [](const TimedValue& a, const TimedValue& b) { return a.time < b.time; });
  return SemCollection::list(std::move(items));
}

/// Windowed view of a sequence: repeated head-splitting per the policy, each
/// emitted window time-reordered. Count windows start at every offset
/// i*slide < length (partial trailing windows included); time windows cover
/// [i*slide, i*slide + size) up to the max emitted timestamp, empty ones
/// skipped.
inline std::vector<SemCollection> windowed_view(const SemCollection& s,
                                                const WindowingPolicy& w) {
  if (!s.is_sequence())
    throw StructureError("windowed_view requires an ordered collection");
  const std::vector<TimedValue>& items = s.seq_items();
  std::vector<SemCollection> out;

  if (w.basis == WindowBasis::Count) {
    for (std::uint64_t start = 0; start < items.size(); start += w.slide) {
      std::uint64_t end = std::min<std::uint64_t>(start + w.size, items.size());
      std::vector<TimedValue> win(items.begin() + static_cast<std::ptrdiff_t>(start),
                                  items.begin() + static_cast<std::ptrdiff_t>(end));
      out.push_back(time_reorder(SemCollection::list(std::move(win))));
    }
    return out;
  }

  if (items.empty()) return out;
  Timestamp max_t = 0;
  for (const TimedValue& tv : items) max_t = std::max(max_t, tv.time);
  for (std::uint64_t i = 0; i * w.slide <= max_t; ++i) {
    Timestamp lo = i * w.slide;
    Timestamp hi = lo + w.size;
    std::vector<TimedValue> win;
    for (const TimedValue& tv : items)
      if (tv.time >= lo && tv.time < hi) win.push_back(tv);
    if (win.empty()) continue;
    out.push_back(time_reorder(SemCollection::list(std::move(win))));
  }
  return out;
}

}  // namespace pico
