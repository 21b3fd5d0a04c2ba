#pragma once

// Independent brute-force oracles. These recompute expected results with
// plain scans and hash maps, never through the library's execution path, so
// tests can compare the two.

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "pico/collection.hpp"
#include "pico/value.hpp"

namespace picotest {

/// Brute-force windowed view: window membership decided per item with
/// explicit position/interval predicates, then a stable time sort.
inline std::vector<std::vector<pico::TimedValue>> oracle_windows(
    const std::vector<pico::TimedValue>& items, const pico::WindowingPolicy& w) {
  std::vector<std::vector<pico::TimedValue>> out;
  auto time_sort = [](std::vector<pico::TimedValue> win) {
    std::stable_sort(win.begin(), win.end(),
                     [](const pico::TimedValue& a, const pico::TimedValue& b) {
                       return a.time < b.time;
                     });
    return win;
  };

  if (w.basis == pico::WindowBasis::Count) {
    for (std::uint64_t i = 0; i * w.slide < items.size(); ++i) {
      std::vector<pico::TimedValue> win;
      for (std::size_t j = 0; j < items.size(); ++j)
        if (j >= i * w.slide && j < i * w.slide + w.size) win.push_back(items[j]);
      out.push_back(time_sort(std::move(win)));
    }
    return out;
  }

  if (items.empty()) return out;
  pico::Timestamp max_t = 0;
  for (const pico::TimedValue& tv : items) max_t = std::max(max_t, tv.time);
  for (std::uint64_t i = 0; i * w.slide <= max_t; ++i) {
    std::vector<pico::TimedValue> win;
    for (const pico::TimedValue& tv : items)
      if (tv.time >= i * w.slide && tv.time < i * w.slide + w.size) win.push_back(tv);
    if (!win.empty()) out.push_back(time_sort(std::move(win)));
  }
  return out;
}

inline bool oracle_time_ordered(const std::vector<pico::TimedValue>& items) {
  for (std::size_t i = 1; i < items.size(); ++i)
    if (items[i - 1].time > items[i].time) return false;
  return true;
}

/// Hash-map word count over raw text lines.
inline std::map<std::string, long> oracle_word_count(const std::vector<std::string>& lines) {
  std::map<std::string, long> counts;
  for (const std::string& line : lines) {
    std::size_t i = 0;
    while (i < line.size()) {
      while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
      std::size_t start = i;
      while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
      if (i > start) counts[line.substr(start, i - start)]++;
    }
  }
  return counts;
}

// ---------------------------------------------------------------------------
// Stock-market oracles (recompute from raw replay records)
// ---------------------------------------------------------------------------

struct PriceRecord {
  pico::Timestamp time = 0;
  std::string stock;
  double price = 0;
};

/// The deterministic-merge order of the two price replays: all records
/// sorted by (timestamp, literal text), mirroring the canonical merge.
inline std::vector<PriceRecord> oracle_merge_prices(std::vector<PriceRecord> a,
                                                    const std::vector<PriceRecord>& b) {
  a.insert(a.end(), b.begin(), b.end());
  std::stable_sort(a.begin(), a.end(), [](const PriceRecord& x, const PriceRecord& y) {
    if (x.time != y.time) return x.time < y.time;
    std::string lx = pico::to_literal(
        pico::Value::tuple({pico::Value::str(x.stock), pico::Value::real(x.price)}));
    std::string ly = pico::to_literal(
        pico::Value::tuple({pico::Value::str(y.stock), pico::Value::real(y.price)}));
    return lx < ly;
  });
  return a;
}

inline std::vector<PriceRecord> oracle_key_series(const std::vector<PriceRecord>& merged,
                                                  const std::string& stock) {
  std::vector<PriceRecord> out;
  for (const PriceRecord& r : merged)
    if (r.stock == stock) out.push_back(r);
  return out;
}

inline std::vector<std::string> oracle_stocks_in_order(
    const std::vector<PriceRecord>& merged) {
  std::vector<std::string> stocks;
  for (const PriceRecord& r : merged)
    if (std::find(stocks.begin(), stocks.end(), r.stock) == stocks.end())
      stocks.push_back(r.stock);
  return stocks;
}

/// Index windows [i*slide, i*slide+size) over a per-key series.
inline std::vector<std::vector<PriceRecord>> oracle_count_windows(
    const std::vector<PriceRecord>& series, std::uint64_t size, std::uint64_t slide) {
  std::vector<std::vector<PriceRecord>> out;
  for (std::uint64_t i = 0; i * slide < series.size(); ++i) {
    std::vector<PriceRecord> win;
    for (std::size_t j = i * slide; j < std::min<std::size_t>(i * slide + size, series.size());
         ++j)
      win.push_back(series[j]);
    out.push_back(std::move(win));
  }
  return out;
}

inline double oracle_window_min(const std::vector<PriceRecord>& win) {
  double m = win[0].price;
  for (const PriceRecord& r : win) m = std::min(m, r.price);
  return m;
}

inline double oracle_window_max(const std::vector<PriceRecord>& win) {
  double m = win[0].price;
  for (const PriceRecord& r : win) m = std::max(m, r.price);
  return m;
}

/// Mean via the (count, sum) fold, dividing at the end.
inline double oracle_window_mean(const std::vector<PriceRecord>& win) {
  long count = 0;
  double sum = 0;
  for (const PriceRecord& r : win) {
    count += 1;
    sum += r.price;
  }
  return sum / static_cast<double>(count);
}

inline double oracle_window_fluctuation(const std::vector<PriceRecord>& win) {
  return (oracle_window_max(win) - oracle_window_min(win)) / oracle_window_min(win);
}

}  // namespace picotest
