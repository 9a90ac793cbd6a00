#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <iterator>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

namespace hhs {

using Vertex = std::uint32_t;
/// Sorted, duplicate-free list of vertex ids.
using VertexSet = std::vector<Vertex>;

inline constexpr std::uint32_t kUnreached = std::numeric_limits<std::uint32_t>::max();

enum class ErrorKind {
  Disconnected,
  UnknownGenerator,
  BudgetExceeded,
  Inconclusive,
  EmptyIntersection,
  TruncatedPiece,
  FactorSystemViolated,
  EmbeddingViolated,
  StructureMismatch,
  MalformedMove,
  MissingStructure,
  DisconnectedImage,
  InvalidArgument,
  ConfigError,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Disconnected: return "Disconnected";
    case ErrorKind::UnknownGenerator: return "UnknownGenerator";
    case ErrorKind::BudgetExceeded: return "BudgetExceeded";
    case ErrorKind::Inconclusive: return "Inconclusive";
    case ErrorKind::EmptyIntersection: return "EmptyIntersection";
    case ErrorKind::TruncatedPiece: return "TruncatedPiece";
    case ErrorKind::FactorSystemViolated: return "FactorSystemViolated";
    case ErrorKind::EmbeddingViolated: return "EmbeddingViolated";
    case ErrorKind::StructureMismatch: return "StructureMismatch";
    case ErrorKind::MalformedMove: return "MalformedMove";
    case ErrorKind::MissingStructure: return "MissingStructure";
    case ErrorKind::DisconnectedImage: return "DisconnectedImage";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

/// Every failure raised by the library carries a machine-readable kind.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// How a check enumerates its items: exhaustively when the item count is at
/// most `max_exhaustive`, otherwise `sample_size` seeded draws.
struct SampleSpec {
  std::size_t max_exhaustive = 200000;
  std::size_t sample_size = 200000;
  std::uint64_t seed = 1;

  static SampleSpec exhaustive() {
    return SampleSpec{std::numeric_limits<std::size_t>::max(), 0, 1};
  }
};

/// Stateless 64-bit mixer; `splitmix64(seed + i)` gives the i-th draw of a
/// reproducible stream, so prefixes of a sample are stable across sizes.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t draw(std::uint64_t seed, std::uint64_t stream, std::uint64_t i) {
  return splitmix64(splitmix64(seed ^ (stream * 0xd1b54a32d192ed03ULL)) + i);
}

/// Indices of the items a check visits: all of [0, total) or a seeded sample.
inline std::vector<std::uint64_t> sample_indices(std::uint64_t total, const SampleSpec& spec,
                                                 std::uint64_t stream, bool* sampled = nullptr) {
  std::vector<std::uint64_t> out;
  if (total <= spec.max_exhaustive) {
    out.resize(total);
    for (std::uint64_t i = 0; i < total; ++i) out[i] = i;
    if (sampled) *sampled = false;
    return out;
  }
  out.reserve(spec.sample_size);
  for (std::uint64_t i = 0; i < spec.sample_size; ++i) out.push_back(draw(spec.seed, stream, i) % total);
  if (sampled) *sampled = true;
  return out;
}

/// Decodes index k of the n*(n-1)/2 unordered pairs (i < j).
inline std::pair<std::uint64_t, std::uint64_t> unordered_pair(std::uint64_t k, std::uint64_t n) {
  // row i holds n-1-i pairs and starts at i*(2n-i-1)/2
  auto row_start = [n](std::uint64_t i) { return i * (2 * n - i - 1) / 2; };
  double nn = static_cast<double>(n);
  double disc = (2 * nn - 1) * (2 * nn - 1) - 8.0 * static_cast<double>(k);
  auto i = static_cast<std::uint64_t>(((2 * nn - 1) - std::sqrt(std::max(0.0, disc))) / 2);
  if (i > n - 2) i = n - 2;
  while (i > 0 && row_start(i) > k) --i;
  while (i + 1 <= n - 2 && row_start(i + 1) <= k) ++i;
  return {i, i + 1 + (k - row_start(i))};
}

inline std::size_t worker_count() {
  if (const char* env = std::getenv("HHS_THREADS")) {
    long v = std::strtol(env, nullptr, 10);
    if (v > 0) return static_cast<std::size_t>(v);
  }
  unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : hc;
}

/// Runs body(begin, end, chunk) over contiguous chunks of [0, n). Chunk
/// boundaries depend only on n and the worker count, and callers reduce
/// per-chunk results in chunk order, so results are deterministic.
template <class Body>
void parallel_chunks(std::size_t n, Body&& body) {
  std::size_t workers = std::min<std::size_t>(worker_count(), std::max<std::size_t>(1, n / 64));
  if (workers <= 1) {
    body(std::size_t{0}, n, std::size_t{0});
    return;
  }
  std::vector<std::thread> threads;
  threads.reserve(workers);
  std::size_t step = (n + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    std::size_t b = w * step;
    std::size_t e = std::min(n, b + step);
    if (b >= e) break;
    threads.emplace_back([&body, b, e, w] { body(b, e, w); });
  }
  for (auto& t : threads) t.join();
}

template <class Body>
void parallel_for(std::size_t n, Body&& body) {
  parallel_chunks(n, [&](std::size_t b, std::size_t e, std::size_t) {
    for (std::size_t i = b; i < e; ++i) body(i);
  });
}

inline VertexSet make_set(std::vector<Vertex> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

inline VertexSet set_union(std::span<const Vertex> a, std::span<const Vertex> b) {
  VertexSet out;
  out.reserve(a.size() + b.size());
  std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

inline bool contains(std::span<const Vertex> set, Vertex v) {
  return std::binary_search(set.begin(), set.end(), v);
}

/// Compressed table of vertex sets, one per row.
class SetTable {
 public:
  SetTable() : offsets_{0} {}

  explicit SetTable(const std::vector<VertexSet>& rows) : offsets_{0} {
    for (const auto& r : rows) push_back(r);
  }

  void push_back(std::span<const Vertex> row) {
    values_.insert(values_.end(), row.begin(), row.end());
    offsets_.push_back(static_cast<std::uint32_t>(values_.size()));
  }

  std::size_t size() const { return offsets_.size() - 1; }

  std::span<const Vertex> operator[](std::size_t i) const {
    return {values_.data() + offsets_[i], values_.data() + offsets_[i + 1]};
  }

  bool operator==(const SetTable&) const = default;

 private:
  std::vector<std::uint32_t> offsets_;
  std::vector<Vertex> values_;
};

}  // namespace hhs
