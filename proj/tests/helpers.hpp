#pragma once

// Shared test utilities: deterministic random generators for values,
// collections, kernels and pipelines, plus small filesystem helpers.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "pico/pico.hpp"

namespace picotest {

struct Rng {
  std::mt19937 engine;

  explicit Rng(std::uint32_t seed) : engine(seed) {}

  int range(int lo, int hi) {  // inclusive
    return std::uniform_int_distribution<int>(lo, hi)(engine);
  }
  bool coin(double p = 0.5) {
    return std::uniform_real_distribution<double>(0, 1)(engine) < p;
  }
  double real(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(engine);
  }
  template <class T>
  const T& pick(const std::vector<T>& xs) {
    return xs[static_cast<std::size_t>(range(0, static_cast<int>(xs.size()) - 1))];
  }
};

// ---------------------------------------------------------------------------
// Random values
// ---------------------------------------------------------------------------

inline pico::Value random_value(Rng& rng, int depth = 2) {
  int choice = rng.range(0, depth > 0 ? 6 : 4);
  switch (choice) {
    case 0: return pico::Value::integer(rng.range(-1000, 1000));
    case 1: return pico::Value::real(rng.real(-100, 100));
    case 2: {
      static const std::vector<std::string> words = {"a", "b", "ab", "x y", "", "q\"z"};
      return pico::Value::str(words[static_cast<std::size_t>(rng.range(0, 5))]);
    }
    case 3: return pico::Value::boolean(rng.coin());
    case 4: return pico::Value::unit();
    case 5: {
      pico::Value::Seq items;
      int n = rng.range(2, 3);
      for (int i = 0; i < n; ++i) items.push_back(random_value(rng, depth - 1));
      return pico::Value::tuple(std::move(items));
    }
    default: {
      // homogeneous list
      pico::Value::Seq items;
      int n = rng.range(0, 3);
      for (int i = 0; i < n; ++i) items.push_back(pico::Value::integer(rng.range(0, 9)));
      return pico::Value::list(std::move(items));
    }
  }
}

inline pico::Value random_value_of(Rng& rng, const pico::DataType& t) {
  using pico::TypeKind;
  switch (t.kind()) {
    case TypeKind::Int: return pico::Value::integer(rng.range(-50, 50));
    case TypeKind::Float: return pico::Value::real(rng.real(-20, 20));
    case TypeKind::Str: {
      static const std::vector<std::string> words = {"a", "b", "c", "aa", "zz"};
      return pico::Value::str(words[static_cast<std::size_t>(rng.range(0, 4))]);
    }
    case TypeKind::Bool: return pico::Value::boolean(rng.coin());
    case TypeKind::Unit: return pico::Value::unit();
    case TypeKind::Tuple: {
      pico::Value::Seq items;
      for (const pico::DataType& c : t.components())
        items.push_back(random_value_of(rng, c));
      return pico::Value::tuple(std::move(items));
    }
    case TypeKind::List: {
      pico::Value::Seq items;
      int n = rng.range(0, 3);
      for (int i = 0; i < n; ++i) items.push_back(random_value_of(rng, t.element()));
      return pico::Value::list(std::move(items));
    }
    case TypeKind::Bottom: return pico::Value::integer(0);
  }
  return pico::Value::unit();
}

// ---------------------------------------------------------------------------
// Random collections
// ---------------------------------------------------------------------------

/// Timestamped sequence with duplicates and out-of-order timestamps.
inline std::vector<pico::TimedValue> random_timed_items(Rng& rng, int max_len,
                                                        const pico::DataType& t) {
  int n = rng.range(0, max_len);
  std::vector<pico::TimedValue> items;
  items.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    pico::Timestamp ts = static_cast<pico::Timestamp>(rng.range(0, max_len * 2));
    items.push_back({ts, random_value_of(rng, t)});
  }
  return items;
}

inline pico::SemCollection random_sequence(Rng& rng, int max_len,
                                           const pico::DataType& t,
                                           pico::StructureType s = pico::StructureType::List) {
  return pico::SemCollection::sequence(random_timed_items(rng, max_len, t), s);
}

inline pico::SemCollection random_bag(Rng& rng, int max_len, const pico::DataType& t) {
  int n = rng.range(0, max_len);
  std::vector<pico::Value> items;
  for (int i = 0; i < n; ++i) items.push_back(random_value_of(rng, t));
  return pico::SemCollection::bag(std::move(items));
}

inline pico::WindowingPolicy random_policy(Rng& rng) {
  return pico::WindowingPolicy(
      static_cast<std::uint64_t>(rng.range(1, 8)),
      static_cast<std::uint64_t>(rng.range(1, 8)),
      rng.coin() ? pico::WindowBasis::Count : pico::WindowBasis::Time);
}

/// Random contiguous chunking of n items.
inline std::vector<std::size_t> random_chunks(Rng& rng, std::size_t n) {
  std::vector<std::size_t> sizes;
  std::size_t left = n;
  while (left > 0) {
    std::size_t take = static_cast<std::size_t>(rng.range(1, static_cast<int>(left)));
    sizes.push_back(take);
    left -= take;
  }
  if (sizes.empty()) sizes.push_back(0);
  return sizes;
}

// ---------------------------------------------------------------------------
// Random pipelines (structure only; used by normalization tests)
// ---------------------------------------------------------------------------

inline pico::Operator mk_map(const std::string& kernel, bool flat = false) {
  pico::Operator op;
  op.core = pico::MapSpec{pico::parse_kernel(kernel), flat};
  return op;
}

inline pico::Operator mk_reduce(const std::string& kernel) {
  pico::Operator op;
  op.core = pico::ReduceSpec{pico::parse_kernel(kernel)};
  return op;
}

inline pico::Operator mk_emit_file(const std::string& path, pico::StructureType s,
                                   const pico::DataType& t) {
  pico::Operator op;
  op.core = pico::EmitSpec{pico::SourceKind::File, path, {t, s}};
  return op;
}

inline pico::Operator mk_collect_file(const std::string& path, pico::StructureType s,
                                      const pico::DataType& t) {
  pico::Operator op;
  op.core = pico::CollectSpec{pico::SinkKind::File, path, {t, s}};
  return op;
}

inline pico::PipelinePtr random_pipeline(Rng& rng, int depth) {
  using namespace pico;
  static const std::vector<std::string> kernels = {"\\x. x + 1", "\\x. x * 2",
                                                   "\\x. x - 3"};
  if (depth <= 0 || rng.coin(0.4)) {
    Operator op = mk_map(rng.pick(kernels));
    if (rng.coin(0.3)) op.window = WindowingPolicy(2, 2, WindowBasis::Count);
    if (rng.coin(0.3)) op.partition_by = parse_kernel("\\x. x");
    return new_pipeline(op);
  }
  switch (rng.range(0, 2)) {
    case 0: {
      PipelinePtr src = random_pipeline(rng, depth - 1);
      int n = rng.range(1, 3);
      std::vector<PipelinePtr> dests;
      for (int i = 0; i < n; ++i) dests.push_back(random_pipeline(rng, depth - 1));
      return to_pipeline(src, std::move(dests));
    }
    case 1:
      return merge_pipeline(random_pipeline(rng, depth - 1),
                            random_pipeline(rng, depth - 1));
    default: {
      Operator op;
      op.core = BMapSpec{rng.coin() ? Pairing::Zip : Pairing::Join,
                         parse_kernel("\\x y. x + y"), false};
      return pair_pipeline(random_pipeline(rng, depth - 1),
                           random_pipeline(rng, depth - 1), op);
    }
  }
}

// ---------------------------------------------------------------------------
// Filesystem helpers
// ---------------------------------------------------------------------------

inline std::filesystem::path temp_dir() {
  static int counter = 0;
  auto dir = std::filesystem::temp_directory_path() /
             ("pico_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::string write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  return path.string();
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline std::string source_dir() { return PICO_SOURCE_DIR; }

}  // namespace picotest
