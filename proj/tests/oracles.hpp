#pragma once

// Brute-force reference computations used to derive expected values. None of
// these call into the library's BFS or projection code.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace oracle {

constexpr int kInf = 1 << 28;

using Edges = std::vector<std::pair<int, int>>;
using Matrix = std::vector<std::vector<int>>;

inline Matrix floyd_warshall(int n, const Edges& edges) {
  Matrix d(n, std::vector<int>(n, kInf));
  for (int i = 0; i < n; ++i) d[i][i] = 0;
  for (auto [u, v] : edges) d[u][v] = d[v][u] = std::min(d[u][v], 1);
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (d[i][k] + d[k][j] < d[i][j]) d[i][j] = d[i][k] + d[k][j];
  return d;
}

inline std::vector<std::vector<int>> adjacency(int n, const Edges& edges) {
  std::vector<std::vector<int>> adj(n);
  for (auto [u, v] : edges) {
    adj[u].push_back(v);
    adj[v].push_back(u);
  }
  return adj;
}

/// Length of the shortest simple path, by exhaustive DFS over simple paths.
inline int shortest_by_enumeration(int n, const Edges& edges, int s, int t) {
  auto adj = adjacency(n, edges);
  int best = kInf;
  std::vector<char> on(n, 0);
  std::function<void(int, int)> go = [&](int u, int len) {
    if (len >= best) return;
    if (u == t) {
      best = len;
      return;
    }
    on[u] = 1;
    for (int w : adj[u])
      if (!on[w]) go(w, len + 1);
    on[u] = 0;
  };
  go(s, 0);
  return best;
}

/// Twice the four-point delta, by direct evaluation of every ordered quadruple.
inline int twice_delta(const Matrix& d) {
  int n = static_cast<int>(d.size());
  int best = 0;
  for (int x = 0; x < n; ++x)
    for (int y = 0; y < n; ++y)
      for (int z = 0; z < n; ++z)
        for (int w = 0; w < n; ++w) {
          int lhs = d[x][y] + d[z][w];
          int rhs = std::max(d[x][z] + d[y][w], d[x][w] + d[y][z]);
          best = std::max(best, lhs - rhs);
        }
  return best;
}

/// Every geodesic from s to t, as vertex sequences.
inline std::vector<std::vector<int>> all_geodesics(const Matrix& d, const std::vector<std::vector<int>>& adj, int s,
                                                   int t) {
  std::vector<std::vector<int>> out;
  std::vector<int> cur{s};
  std::function<void(int)> go = [&](int u) {
    if (u == t) {
      out.push_back(cur);
      return;
    }
    for (int w : adj[u]) {
      if (d[w][t] + 1 == d[u][t]) {
        cur.push_back(w);
        go(w);
        cur.pop_back();
      }
    }
  };
  go(s);
  return out;
}

inline int dist_to_set(const Matrix& d, int x, const std::vector<int>& h) {
  int best = kInf;
  for (int v : h) best = std::min(best, d[x][v]);
  return best;
}

/// Smallest q with every geodesic between points of h inside N_q(h).
inline int quasiconvexity(int n, const Edges& edges, const std::vector<int>& h) {
  auto d = floyd_warshall(n, edges);
  auto adj = adjacency(n, edges);
  int q = 0;
  for (int u : h)
    for (int v : h)
      for (const auto& path : all_geodesics(d, adj, u, v))
        for (int x : path) q = std::max(q, dist_to_set(d, x, h));
  return q;
}

inline int hausdorff(const Matrix& d, const std::vector<int>& a, const std::vector<int>& b) {
  int best = 0;
  for (int x : a) best = std::max(best, dist_to_set(d, x, b));
  for (int x : b) best = std::max(best, dist_to_set(d, x, a));
  return best;
}

inline std::vector<int> projection(const Matrix& d, int x, const std::vector<int>& h) {
  int m = dist_to_set(d, x, h);
  std::vector<int> out;
  for (int v : h)
    if (d[x][v] == m) out.push_back(v);
  std::sort(out.begin(), out.end());
  return out;
}

inline Edges grid_edges(int w, int h) {
  Edges e;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      int v = y * w + x;
      if (x + 1 < w) e.emplace_back(v, v + 1);
      if (y + 1 < h) e.emplace_back(v, v + w);
    }
  return e;
}

inline Edges cycle_edges(int n) {
  Edges e;
  for (int i = 0; i < n; ++i) e.emplace_back(i, (i + 1) % n);
  return e;
}

// Free-group words as strings over {a,A,b,B,...}: lower case is a generator,
// upper case its inverse.

inline std::string free_reduce(const std::string& w) {
  std::string out;
  for (char c : w) {
    if (!out.empty() && out.back() != c && std::tolower(out.back()) == std::tolower(c)) {
      out.pop_back();
    } else {
      out.push_back(c);
    }
  }
  return out;
}

inline std::string invert(const std::string& w) {
  std::string out(w.rbegin(), w.rend());
  for (char& c : out) c = std::islower(c) ? static_cast<char>(std::toupper(c)) : static_cast<char>(std::tolower(c));
  return out;
}

/// All reduced words of length <= r over the first `rank` generators.
inline std::vector<std::string> free_ball(int rank, int r) {
  std::string letters;
  for (int i = 0; i < rank; ++i) {
    letters.push_back(static_cast<char>('a' + i));
    letters.push_back(static_cast<char>('A' + i));
  }
  std::vector<std::string> out{""};
  std::vector<std::string> layer{""};
  for (int k = 0; k < r; ++k) {
    std::vector<std::string> next;
    for (const auto& w : layer)
      for (char c : letters) {
        std::string x = free_reduce(w + c);
        if (static_cast<int>(x.size()) == k + 1) next.push_back(x);
      }
    std::sort(next.begin(), next.end());
    next.erase(std::unique(next.begin(), next.end()), next.end());
    out.insert(out.end(), next.begin(), next.end());
    layer = next;
  }
  return out;
}

/// Reduced elements of <gens> reachable as products of at most `depth`
/// generators or inverses, kept when their length is at most `max_len`.
inline std::set<std::string> subgroup_elements(const std::vector<std::string>& gens, int depth, int max_len) {
  std::vector<std::string> steps;
  for (const auto& g : gens) {
    steps.push_back(g);
    steps.push_back(invert(g));
  }
  std::set<std::string> all{""};
  std::set<std::string> layer{""};
  for (int k = 0; k < depth; ++k) {
    std::set<std::string> next;
    for (const auto& w : layer)
      for (const auto& s : steps) next.insert(free_reduce(w + s));
    for (const auto& w : next) all.insert(w);
    layer = next;
  }
  std::set<std::string> out;
  for (const auto& w : all)
    if (static_cast<int>(w.size()) <= max_len) out.insert(w);
  return out;
}

/// Converts a compact string word to the library's token syntax.
inline std::string tokens(const std::string& w) {
  if (w.empty()) return "1";
  std::string out;
  for (char c : w) {
    if (!out.empty()) out += ' ';
    out += static_cast<char>(std::tolower(c));
    if (std::isupper(c)) out += '\'';
  }
  return out;
}

/// Free group ball with the cosets of <x> coned off for each x in `axes`.
struct FreeCone {
  std::vector<std::string> words;
  std::map<std::string, int> id;
  Edges base;
  Edges coned;
};

inline std::string strip_trailing(std::string w, char x) {
  while (!w.empty() && std::tolower(w.back()) == x) w.pop_back();
  return w;
}

inline FreeCone free_cone(int r, const std::string& axes) {
  FreeCone fc;
  fc.words = free_ball(2, r);
  for (int i = 0; i < static_cast<int>(fc.words.size()); ++i) fc.id[fc.words[i]] = i;
  for (const auto& w : fc.words)
    for (char c : std::string("aAbB")) {
      auto it = fc.id.find(free_reduce(w + c));
      if (it != fc.id.end() && fc.id[w] < it->second) fc.base.emplace_back(fc.id[w], it->second);
    }
  fc.coned = fc.base;
  for (char x : axes) {
    std::map<std::string, std::vector<int>> cosets;
    for (const auto& w : fc.words) cosets[strip_trailing(w, x)].push_back(fc.id[w]);
    for (const auto& [key, members] : cosets)
      for (std::size_t i = 0; i < members.size(); ++i)
        for (std::size_t j = i + 1; j < members.size(); ++j) fc.coned.emplace_back(members[i], members[j]);
  }
  return fc;
}

}  // namespace oracle
