#pragma once

#include <numeric>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include "hhs/group.hpp"

namespace hhs {

/// A finitely generated subgroup, given by generating words in normal form.
struct SubgroupSpec {
  std::string label;
  std::vector<Word> generators;

  bool operator==(const SubgroupSpec&) const = default;
};

inline SubgroupSpec make_subgroup(const GroupModel& m, std::string label, const std::vector<std::string>& words) {
  SubgroupSpec h{std::move(label), {}};
  for (const auto& w : words) {
    Word nf = m.normal_form(m.parse(w));
    if (!nf.empty()) h.generators.push_back(std::move(nf));
  }
  return h;
}

/// Folded, base-pointed Stallings graph of a subgroup of a free group.
/// Transitions are indexed by letter code; kNone marks a missing edge.
class StallingsGraph {
 public:
  static constexpr std::uint32_t kNone = std::numeric_limits<std::uint32_t>::max();

  StallingsGraph(std::size_t rank, const std::vector<Word>& generators) : letters_(2 * rank) {
    // petals: one loop per generator word at vertex 0
    struct Arc {
      std::uint32_t from, to;
      Letter letter;  // always a positive letter
    };
    std::vector<Arc> arcs;
    std::uint32_t next = 1;
    for (const auto& w : generators) {
      if (w.empty()) continue;
      std::uint32_t cur = 0;
      for (std::size_t i = 0; i < w.size(); ++i) {
        std::uint32_t to = (i + 1 == w.size()) ? 0 : next++;
        if (w[i] & 1) {
          arcs.push_back({to, cur, inverse_letter(w[i])});
        } else {
          arcs.push_back({cur, to, w[i]});
        }
        cur = to;
      }
    }
    std::vector<std::uint32_t> parent(next);
    std::iota(parent.begin(), parent.end(), 0u);
    auto find = [&](std::uint32_t x) {
      while (parent[x] != x) x = parent[x] = parent[parent[x]];
      return x;
    };
    bool changed = true;
    while (changed) {
      changed = false;
      std::unordered_map<std::uint64_t, std::uint32_t> seen;
      for (auto& a : arcs) {
        a.from = find(a.from);
        a.to = find(a.to);
      }
      for (const auto& a : arcs) {
        std::uint64_t fwd = (std::uint64_t{a.from} << 32) | (std::uint64_t{a.letter} << 1);
        std::uint64_t bwd = (std::uint64_t{a.to} << 32) | (std::uint64_t{a.letter} << 1) | 1;
        for (auto [key, target] : {std::pair{fwd, a.to}, std::pair{bwd, a.from}}) {
          auto [it, fresh] = seen.emplace(key, target);
          if (!fresh) {
            std::uint32_t x = find(it->second), y = find(target);
            if (x != y) {
              parent[std::max(x, y)] = std::min(x, y);
              changed = true;
            }
          }
        }
        if (changed) break;
      }
    }
    std::unordered_map<std::uint32_t, std::uint32_t> compact;
    compact.emplace(find(0), 0);
    for (std::uint32_t v = 0; v < next; ++v) compact.emplace(find(v), static_cast<std::uint32_t>(compact.size()));
    vertex_count_ = compact.size();
    trans_.assign(vertex_count_ * letters_, kNone);
    for (const auto& a : arcs) {
      std::uint32_t u = compact.at(find(a.from)), v = compact.at(find(a.to));
      trans_[u * letters_ + a.letter] = v;
      trans_[v * letters_ + inverse_letter(a.letter)] = u;
    }
  }

  std::size_t vertex_count() const { return vertex_count_; }

  std::uint32_t step(std::uint32_t v, Letter l) const { return trans_[v * letters_ + l]; }

  /// Reads a reduced word from the base vertex as far as possible; returns the
  /// vertex reached and the number of letters consumed.
  std::pair<std::uint32_t, std::size_t> read(const Word& w) const {
    std::uint32_t v = 0;
    std::size_t i = 0;
    for (; i < w.size(); ++i) {
      std::uint32_t t = step(v, w[i]);
      if (t == kNone) break;
      v = t;
    }
    return {v, i};
  }

  bool accepts(const Word& reduced) const {
    auto [v, i] = read(reduced);
    return v == 0 && i == reduced.size();
  }

 private:
  std::size_t letters_;
  std::size_t vertex_count_ = 0;
  std::vector<std::uint32_t> trans_;
};

/// Hermite normal form of an integer lattice, used for cosets in free
/// abelian groups. Rows have strictly increasing pivot columns and positive
/// pivots; entries above each pivot are reduced modulo it.
class Lattice {
 public:
  explicit Lattice(std::vector<std::vector<std::int64_t>> rows, std::size_t dim) : dim_(dim) {
    std::size_t r = 0;
    for (std::size_t c = 0; c < dim_ && r < rows.size(); ++c) {
      // Euclid on column c among rows r..end
      while (true) {
        std::size_t best = rows.size();
        for (std::size_t i = r; i < rows.size(); ++i) {
          if (rows[i][c] != 0 && (best == rows.size() || std::llabs(rows[i][c]) < std::llabs(rows[best][c]))) best = i;
        }
        if (best == rows.size()) break;
        std::swap(rows[r], rows[best]);
        if (rows[r][c] < 0) {
          for (auto& x : rows[r]) x = -x;
        }
        bool done = true;
        for (std::size_t i = r + 1; i < rows.size(); ++i) {
          std::int64_t q = rows[i][c] / rows[r][c];
          if (q != 0) {
            for (std::size_t k = 0; k < dim_; ++k) rows[i][k] -= q * rows[r][k];
          }
          if (rows[i][c] != 0) done = false;
        }
        if (done) {
          pivots_.push_back(c);
          ++r;
          break;
        }
      }
    }
    rows.resize(r);
    for (std::size_t i = 0; i < r; ++i) {
      for (std::size_t j = 0; j < i; ++j) {
        std::int64_t q = floor_div(rows[j][pivots_[i]], rows[i][pivots_[i]]);
        for (std::size_t k = 0; k < dim_; ++k) rows[j][k] -= q * rows[i][k];
      }
    }
    rows_ = std::move(rows);
  }

  /// Canonical representative of v + L.
  std::vector<std::int64_t> residue(std::vector<std::int64_t> v) const {
    for (std::size_t i = 0; i < rows_.size(); ++i) {
      std::int64_t q = floor_div(v[pivots_[i]], rows_[i][pivots_[i]]);
      if (q != 0) {
        for (std::size_t k = 0; k < dim_; ++k) v[k] -= q * rows_[i][k];
      }
    }
    return v;
  }

  std::size_t rank() const { return rows_.size(); }

 private:
  static std::int64_t floor_div(std::int64_t a, std::int64_t b) {
    std::int64_t q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
    return q;
  }

  std::size_t dim_;
  std::vector<std::vector<std::int64_t>> rows_;
  std::vector<std::size_t> pivots_;
};

struct MembershipVerdict {
  bool member = false;
  /// Set when the answer comes from bounded enumeration rather than an exact
  /// algorithm.
  bool radius_limited = false;
};

struct OracleLimits {
  /// Word-length bound for enumerating subgroup elements in the fallback.
  std::size_t length_bound = 12;
  std::size_t element_budget = 200000;
};

/// Decides membership and canonical coset keys. Exact for free and free
/// abelian ambient groups, bounded enumeration otherwise.
class SubgroupOracle {
 public:
  SubgroupOracle(const GroupModel& m, const SubgroupSpec& h, OracleLimits limits = {}) : model_(m), spec_(h) {
    switch (m.effective_kind()) {
      case GroupKind::Free:
        stallings_.emplace(m.rank(), h.generators);
        break;
      case GroupKind::FreeAbelian: {
        std::vector<std::vector<std::int64_t>> rows;
        for (const auto& g : h.generators) rows.push_back(m.abelianize(g));
        lattice_.emplace(std::move(rows), m.rank());
        break;
      }
      default:
        enumerate(limits);
        break;
    }
  }

  bool exact() const { return stallings_ || lattice_; }
  const SubgroupSpec& spec() const { return spec_; }
  const GroupModel& model() const { return model_; }

  MembershipVerdict contains(const Word& w) const {
    Word nf = model_.normal_form(w);
    if (stallings_) return {stallings_->accepts(nf), false};
    if (lattice_) {
      auto r = lattice_->residue(model_.abelianize(nf));
      return {std::all_of(r.begin(), r.end(), [](std::int64_t x) { return x == 0; }), false};
    }
    return {elements_.count(nf) > 0, true};
  }

  /// Canonical key of the left coset gH, when an exact algorithm exists.
  std::optional<std::vector<std::int64_t>> left_coset_key(const Word& g) const {
    if (stallings_) {
      // gH = g'H iff Hg^-1 = Hg'^-1; the Schreier position of g^-1 is the core
      // vertex where reading stops plus the unread suffix.
      Word u = model_.normal_form(inverse(g));
      auto [v, i] = stallings_->read(u);
      std::vector<std::int64_t> key{static_cast<std::int64_t>(v)};
      for (std::size_t k = i; k < u.size(); ++k) key.push_back(u[k]);
      return key;
    }
    if (lattice_) return lattice_->residue(model_.abelianize(g));
    return std::nullopt;
  }

  /// Elements found by the fallback enumeration, in shortlex order.
  std::vector<Word> enumerated_elements() const {
    std::vector<Word> out(elements_.begin(), elements_.end());
    std::sort(out.begin(), out.end(), shortlex_less);
    return out;
  }

 private:
  void enumerate(const OracleLimits& limits) {
    std::vector<Word> steps;
    for (const auto& g : spec_.generators) {
      steps.push_back(g);
      steps.push_back(model_.normal_form(inverse(g)));
    }
    std::vector<Word> frontier{Word{}};
    elements_.insert(Word{});
    while (!frontier.empty()) {
      std::vector<Word> next;
      for (const auto& x : frontier) {
        for (const auto& s : steps) {
          Word y = model_.multiply(x, s);
          if (y.size() > limits.length_bound) continue;
          if (elements_.insert(y).second) {
            if (elements_.size() > limits.element_budget) {
              throw Error(ErrorKind::Inconclusive, "subgroup enumeration for " + spec_.label + " exceeded its budget");
            }
            next.push_back(std::move(y));
          }
        }
      }
      frontier = std::move(next);
    }
  }

  GroupModel model_;
  SubgroupSpec spec_;
  std::optional<StallingsGraph> stallings_;
  std::optional<Lattice> lattice_;
  std::unordered_set<Word, WordHash> elements_;
};

inline MembershipVerdict subgroup_membership(const GroupModel& m, const SubgroupSpec& h, const Word& w,
                                             OracleLimits limits = {}) {
  return SubgroupOracle(m, h, limits).contains(w);
}

}  // namespace hhs
