#pragma once

#include <cctype>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "hhs/common.hpp"

namespace hhs {

/// Letter code 2*g for generator g and 2*g+1 for its inverse, so the letter
/// order is a < a' < b < b' < ...
using Letter = std::uint32_t;
using Word = std::vector<Letter>;

inline Letter inverse_letter(Letter l) { return l ^ 1u; }
inline std::uint32_t generator_of(Letter l) { return l >> 1; }

inline Word inverse(const Word& w) {
  Word out(w.rbegin(), w.rend());
  for (auto& l : out) l = inverse_letter(l);
  return out;
}

inline Word concat(Word a, const Word& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

/// Shortlex comparison: shorter first, then lexicographic on letter codes.
inline bool shortlex_less(const Word& a, const Word& b) {
  if (a.size() != b.size()) return a.size() < b.size();
  return a < b;
}

struct WordHash {
  std::size_t operator()(const Word& w) const noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (Letter l : w) h = splitmix64(h ^ l);
    return static_cast<std::size_t>(h);
  }
};

enum class GroupKind { Free, FreeAbelian, Raag, FreeProduct };

inline const char* to_string(GroupKind k) {
  switch (k) {
    case GroupKind::Free: return "free";
    case GroupKind::FreeAbelian: return "free-abelian";
    case GroupKind::Raag: return "raag";
    case GroupKind::FreeProduct: return "free-product";
  }
  return "?";
}

/// A finitely generated group with a normal-form oracle.
class GroupModel {
 public:
  /// The trivial group.
  GroupModel() : kind_(GroupKind::Free), effective_(GroupKind::Free) {}

  static GroupModel free(std::vector<std::string> labels) { return GroupModel(GroupKind::Free, std::move(labels)); }

  static GroupModel free_abelian(std::vector<std::string> labels) {
    return GroupModel(GroupKind::FreeAbelian, std::move(labels));
  }

  /// Right-angled Artin group on the given defining graph (edges = commuting
  /// generator pairs, by generator index).
  static GroupModel raag(std::vector<std::string> labels, const std::vector<std::pair<std::uint32_t, std::uint32_t>>& edges) {
    GroupModel m(GroupKind::Raag, std::move(labels));
    std::size_t k = m.labels_.size();
    m.commute_.assign(k * k, 0);
    for (auto [u, v] : edges) {
      if (u >= k || v >= k || u == v) throw Error(ErrorKind::InvalidArgument, "bad defining-graph edge");
      m.commute_[u * k + v] = m.commute_[v * k + u] = 1;
    }
    m.raag_edges_ = edges;
    for (auto& e : m.raag_edges_) {
      if (e.first > e.second) std::swap(e.first, e.second);
    }
    std::sort(m.raag_edges_.begin(), m.raag_edges_.end());
    m.raag_edges_.erase(std::unique(m.raag_edges_.begin(), m.raag_edges_.end()), m.raag_edges_.end());
    std::size_t pairs = k * (k - (k > 0 ? 1 : 0)) / 2;
    if (m.raag_edges_.empty()) {
      m.effective_ = GroupKind::Free;
    } else if (m.raag_edges_.size() == pairs) {
      m.effective_ = GroupKind::FreeAbelian;
    }
    return m;
  }

  static GroupModel free_product(std::vector<GroupModel> factors) {
    std::vector<std::string> labels;
    bool all_free = true;
    for (const auto& f : factors) {
      labels.insert(labels.end(), f.labels().begin(), f.labels().end());
      if (f.effective_kind() != GroupKind::Free) all_free = false;
    }
    GroupModel m(GroupKind::FreeProduct, std::move(labels));
    m.factors_ = std::make_shared<std::vector<GroupModel>>(std::move(factors));
    std::uint32_t offset = 0;
    for (std::uint32_t i = 0; i < m.factors_->size(); ++i) {
      m.factor_offset_.push_back(offset);
      for (std::size_t g = 0; g < (*m.factors_)[i].rank(); ++g) m.factor_of_.push_back(i);
      offset += static_cast<std::uint32_t>((*m.factors_)[i].rank());
    }
    if (all_free) m.effective_ = GroupKind::Free;
    return m;
  }

  GroupKind kind() const { return kind_; }
  /// The normal-form algorithm actually used (an edgeless RAAG is free, etc).
  GroupKind effective_kind() const { return effective_; }
  std::size_t rank() const { return labels_.size(); }
  const std::vector<std::string>& labels() const { return labels_; }
  const std::vector<std::pair<std::uint32_t, std::uint32_t>>& raag_edges() const { return raag_edges_; }
  const std::vector<GroupModel>& factors() const {
    static const std::vector<GroupModel> none;
    return factors_ ? *factors_ : none;
  }

  bool commutes(std::uint32_t g, std::uint32_t h) const {
    if (g == h) return true;
    switch (effective_) {
      case GroupKind::Free: return false;
      case GroupKind::FreeAbelian: return true;
      case GroupKind::Raag: return commute_[g * rank() + h] != 0;
      case GroupKind::FreeProduct: {
        std::uint32_t f = factor_of_[g];
        if (f != factor_of_[h]) return false;
        std::uint32_t o = factor_offset_[f];
        return (*factors_)[f].commutes(g - o, h - o);
      }
    }
    return false;
  }

  std::uint32_t generator_index(const std::string& label) const {
    for (std::uint32_t i = 0; i < labels_.size(); ++i) {
      if (labels_[i] == label) return i;
    }
    throw Error(ErrorKind::UnknownGenerator, "unknown generator '" + label + "'");
  }

  /// Canonical shortlex-least representative.
  Word normal_form(const Word& w) const {
    for (Letter l : w) {
      if (generator_of(l) >= rank()) throw Error(ErrorKind::UnknownGenerator, "letter code " + std::to_string(l));
    }
    switch (effective_) {
      case GroupKind::Free: return free_reduce(w);
      case GroupKind::FreeAbelian: return abelian_form(w);
      case GroupKind::Raag: return raag_form(w);
      case GroupKind::FreeProduct: return product_form(w);
    }
    return w;
  }

  Word multiply(const Word& a, const Word& b) const { return normal_form(concat(a, b)); }

  /// Exponent sums per generator.
  std::vector<std::int64_t> abelianize(const Word& w) const {
    std::vector<std::int64_t> e(rank(), 0);
    for (Letter l : w) e[generator_of(l)] += (l & 1) ? -1 : 1;
    return e;
  }

  /// Parses whitespace-separated tokens: `a`, `a'` (inverse), `a^3`, `a^-2`.
  /// `1` and the empty string are the identity.
  Word parse(const std::string& text) const {
    Word w;
    std::istringstream in(text);
    std::string tok;
    while (in >> tok) {
      if (tok == "1" && !has_label("1")) continue;
      long long exponent = 1;
      std::string name = tok;
      auto caret = tok.find('^');
      if (caret != std::string::npos) {
        name = tok.substr(0, caret);
        std::string ex = tok.substr(caret + 1);
        char* end = nullptr;
        exponent = std::strtoll(ex.c_str(), &end, 10);
        if (ex.empty() || *end != '\0') throw Error(ErrorKind::InvalidArgument, "bad exponent in token '" + tok + "'");
      }
      while (!name.empty() && name.back() == '\'') {
        name.pop_back();
        exponent = -exponent;
      }
      Letter base = 2 * generator_index(name);
      Letter l = exponent < 0 ? base + 1 : base;
      for (long long i = 0; i < (exponent < 0 ? -exponent : exponent); ++i) w.push_back(l);
    }
    return w;
  }

  std::string format(const Word& w) const {
    if (w.empty()) return "1";
    std::string out;
    for (std::size_t i = 0; i < w.size(); ++i) {
      if (i) out += ' ';
      out += labels_[generator_of(w[i])];
      if (w[i] & 1) out += '\'';
    }
    return out;
  }

  bool operator==(const GroupModel& o) const {
    if (kind_ != o.kind_ || labels_ != o.labels_ || raag_edges_ != o.raag_edges_) return false;
    return factors() == o.factors();
  }

 private:
  GroupModel(GroupKind kind, std::vector<std::string> labels) : kind_(kind), effective_(kind), labels_(std::move(labels)) {
    for (std::size_t i = 0; i < labels_.size(); ++i) {
      const auto& s = labels_[i];
      if (s.empty() || s.find_first_of(" \t'^") != std::string::npos) {
        throw Error(ErrorKind::InvalidArgument, "invalid generator label '" + s + "'");
      }
      for (std::size_t j = 0; j < i; ++j) {
        if (labels_[j] == s) throw Error(ErrorKind::InvalidArgument, "duplicate generator label '" + s + "'");
      }
    }
  }

  bool has_label(const std::string& s) const { return std::find(labels_.begin(), labels_.end(), s) != labels_.end(); }

  static Word free_reduce(const Word& w) {
    Word out;
    out.reserve(w.size());
    for (Letter l : w) {
      if (!out.empty() && out.back() == inverse_letter(l)) {
        out.pop_back();
      } else {
        out.push_back(l);
      }
    }
    return out;
  }

  Word abelian_form(const Word& w) const {
    auto e = abelianize(w);
    Word out;
    for (std::uint32_t g = 0; g < e.size(); ++g) {
      Letter l = e[g] < 0 ? 2 * g + 1 : 2 * g;
      for (std::int64_t i = 0; i < (e[g] < 0 ? -e[g] : e[g]); ++i) out.push_back(l);
    }
    return out;
  }

  // Cancels x..x' pairs whose intervening letters all commute with x, then
  // emits the lexicographically least linearization of the trace.
  Word raag_form(const Word& w) const {
    Word cur = free_reduce(w);
    bool changed = true;
    while (changed) {
      changed = false;
      for (std::size_t i = 0; i < cur.size() && !changed; ++i) {
        std::uint32_t x = generator_of(cur[i]);
        for (std::size_t j = i + 1; j < cur.size(); ++j) {
          if (cur[j] == inverse_letter(cur[i])) {
            cur.erase(cur.begin() + j);
            cur.erase(cur.begin() + i);
            changed = true;
            break;
          }
          if (generator_of(cur[j]) == x || !commutes(x, generator_of(cur[j]))) break;
        }
      }
    }
    Word out;
    out.reserve(cur.size());
    std::vector<char> used(cur.size(), 0);
    for (std::size_t step = 0; step < cur.size(); ++step) {
      std::size_t best = cur.size();
      for (std::size_t i = 0; i < cur.size(); ++i) {
        if (used[i]) continue;
        bool free_to_move = true;
        for (std::size_t j = 0; j < i; ++j) {
          if (!used[j] && (generator_of(cur[j]) == generator_of(cur[i]) ||
                           !commutes(generator_of(cur[j]), generator_of(cur[i])))) {
            free_to_move = false;
            break;
          }
        }
        if (free_to_move && (best == cur.size() || cur[i] < cur[best])) best = i;
      }
      used[best] = 1;
      out.push_back(cur[best]);
    }
    return out;
  }

  Word product_form(const Word& w) const {
    // stack of syllables, each in one factor's normal form (global codes)
    std::vector<std::pair<std::uint32_t, Word>> stack;
    auto push = [&](std::uint32_t f, Word local) {
      if (!stack.empty() && stack.back().first == f) {
        local = concat(std::move(stack.back().second), local);
        stack.pop_back();
      }
      Letter off = 2 * factor_offset_[f];
      for (auto& l : local) l -= off;
      local = (*factors_)[f].normal_form(local);
      for (auto& l : local) l += off;
      if (!local.empty()) stack.emplace_back(f, std::move(local));
    };
    std::size_t i = 0;
    while (i < w.size()) {
      std::uint32_t f = factor_of_[generator_of(w[i])];
      std::size_t j = i;
      while (j < w.size() && factor_of_[generator_of(w[j])] == f) ++j;
      push(f, Word(w.begin() + i, w.begin() + j));
      i = j;
    }
    Word out;
    for (auto& s : stack) out.insert(out.end(), s.second.begin(), s.second.end());
    return out;
  }

  GroupKind kind_;
  GroupKind effective_;
  std::vector<std::string> labels_;
  std::vector<char> commute_;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> raag_edges_;
  std::shared_ptr<std::vector<GroupModel>> factors_;
  std::vector<std::uint32_t> factor_offset_;
  std::vector<std::uint32_t> factor_of_;
};

}  // namespace hhs
