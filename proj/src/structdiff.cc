#include "difftune/structdiff.h"

#include <algorithm>
#include <numeric>

#include "difftune/error.h"

namespace difftune {

namespace {

std::vector<std::string> sorted_unique(std::vector<std::string> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

void check_injective(std::span<const IndexPair> pairs, std::size_t a_size, std::size_t b_size,
                     const char* what) {
  std::vector<bool> used_a(a_size, false), used_b(b_size, false);
  for (const auto& [i, j] : pairs) {
    if (i >= a_size || j >= b_size) {
      throw StructuralError(std::string(what) + " pair (" + std::to_string(i) + ", " +
                            std::to_string(j) + ") is out of range");
    }
    if (used_a[i] || used_b[j]) {
      throw StructuralError(std::string(what) + " pairs are not injective at (" +
                            std::to_string(i) + ", " + std::to_string(j) + ")");
    }
    used_a[i] = used_b[j] = true;
  }
}

// Block scores in tenths so the search compares integers exactly.
int bb_tenths(const BlockDescriptor& a, const BlockDescriptor& b) {
  if (a.semantic_id != b.semantic_id) return 0;
  return sorted_unique(a.registers) == sorted_unique(b.registers) ? 10 : 9;
}

template <typename W>
struct Assignment {
  W total{};
  std::vector<IndexPair> pairs;
};

template <typename W>
bool improves(W candidate, W incumbent) {
  if constexpr (std::is_floating_point_v<W>) {
    return candidate > incumbent + 1e-12;
  } else {
    return candidate > incumbent;
  }
}

template <typename W>
Assignment<W> greedy_assignment(const std::vector<std::vector<W>>& w) {
  struct Cand {
    W weight;
    std::size_t r, c;
  };
  std::vector<Cand> cands;
  for (std::size_t r = 0; r < w.size(); ++r) {
    for (std::size_t c = 0; c < w[r].size(); ++c) {
      if (w[r][c] > W{}) cands.push_back({w[r][c], r, c});
    }
  }
  std::stable_sort(cands.begin(), cands.end(), [](const Cand& x, const Cand& y) {
    if (x.weight != y.weight) return x.weight > y.weight;
    return std::tie(x.r, x.c) < std::tie(y.r, y.c);
  });
  Assignment<W> out;
  std::vector<bool> used_r(w.size(), false);
  std::vector<bool> used_c(w.empty() ? 0 : w[0].size(), false);
  for (const Cand& k : cands) {
    if (used_r[k.r] || used_c[k.c]) continue;
    used_r[k.r] = used_c[k.c] = true;
    out.total += k.weight;
    out.pairs.emplace_back(k.r, k.c);
  }
  std::sort(out.pairs.begin(), out.pairs.end());
  return out;
}

// Branch and bound over injective partial assignments rows -> columns,
// seeded with the greedy solution so a truncated search is never worse.
template <typename W>
class BranchAndBound {
 public:
  BranchAndBound(const std::vector<std::vector<W>>& w, std::uint64_t& nodes, std::uint64_t budget)
      : w_(w), nodes_(nodes), budget_(budget) {
    const std::size_t rows = w.size();
    const std::size_t cols = rows ? w[0].size() : 0;
    used_.assign(cols, false);
    order_.resize(rows);
    suffix_.assign(rows + 1, W{});
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < cols; ++c) {
        if (w[r][c] > W{}) order_[r].push_back(c);
      }
      std::stable_sort(order_[r].begin(), order_[r].end(),
                       [&w, r](std::size_t x, std::size_t y) { return w[r][x] > w[r][y]; });
    }
    for (std::size_t r = rows; r-- > 0;) {
      suffix_[r] = suffix_[r + 1] + (order_[r].empty() ? W{} : w[r][order_[r].front()]);
    }
  }

  Assignment<W> solve() {
    best_ = greedy_assignment(w_);
    search(0, W{});
    std::sort(best_.pairs.begin(), best_.pairs.end());
    return best_;
  }

  bool truncated() const { return truncated_; }

 private:
  void search(std::size_t row, W current) {
    if (truncated_) return;
    if (++nodes_ > budget_) {
      truncated_ = true;
      return;
    }
    if (!improves(current + suffix_[row], best_.total)) return;
    if (row == w_.size()) {
      best_.total = current;
      best_.pairs = chosen_;
      return;
    }
    for (std::size_t c : order_[row]) {
      if (used_[c]) continue;
      used_[c] = true;
      chosen_.emplace_back(row, c);
      search(row + 1, current + w_[row][c]);
      chosen_.pop_back();
      used_[c] = false;
    }
    search(row + 1, current);
  }

  const std::vector<std::vector<W>>& w_;
  std::uint64_t& nodes_;
  std::uint64_t budget_;
  std::vector<bool> used_;
  std::vector<std::vector<std::size_t>> order_;
  std::vector<W> suffix_;
  std::vector<IndexPair> chosen_;
  Assignment<W> best_;
  bool truncated_ = false;
};

std::vector<std::vector<int>> block_weights(const Cfg& a, const Cfg& b) {
  std::vector<std::vector<int>> w(a.blocks.size(), std::vector<int>(b.blocks.size(), 0));
  for (std::size_t i = 0; i < a.blocks.size(); ++i) {
    for (std::size_t j = 0; j < b.blocks.size(); ++j) w[i][j] = bb_tenths(a.blocks[i], b.blocks[j]);
  }
  return w;
}

}  // namespace

std::size_t ProgramGraph::total_blocks() const {
  std::size_t n = 0;
  for (const Cfg& f : functions) n += f.blocks.size();
  return n;
}

void ProgramGraph::validate() const {
  for (std::size_t fi = 0; fi < functions.size(); ++fi) {
    const Cfg& f = functions[fi];
    if (f.blocks.empty()) throw StructuralError("function '" + f.function_name + "' has no blocks");
    for (const BlockDescriptor& b : f.blocks) {
      if (b.semantic_id.empty()) throw StructuralError("block with empty semantic id");
    }
    for (const auto& [x, y] : f.edges) {
      if (x >= f.blocks.size() || y >= f.blocks.size()) {
        throw StructuralError("edge (" + std::to_string(x) + ", " + std::to_string(y) +
                              ") in function '" + f.function_name + "' is out of range");
      }
    }
  }
  for (const auto& [x, y] : call_edges) {
    if (x >= functions.size() || y >= functions.size()) {
      throw StructuralError("call edge (" + std::to_string(x) + ", " + std::to_string(y) +
                            ") is out of range");
    }
  }
}

double bb_match_score(const BlockDescriptor& a, const BlockDescriptor& b) {
  switch (bb_tenths(a, b)) {
    case 10: return 1.0;
    case 9: return 0.9;
    default: return 0.0;
  }
}

double cfg_match_score(const Cfg& a, const Cfg& b, std::span<const IndexPair> block_pairs) {
  check_injective(block_pairs, a.blocks.size(), b.blocks.size(), "block");
  const std::size_t size = std::min(a.blocks.size(), b.blocks.size());
  if (size == 0) throw StructuralError("CFG with no blocks");
  double sum = 0.0;
  for (const auto& [i, j] : block_pairs) sum += bb_match_score(a.blocks[i], b.blocks[j]);
  return sum / static_cast<double>(size);
}

void validate_matching(const ProgramGraph& a, const ProgramGraph& b, const Matching& matching) {
  std::vector<IndexPair> fn_pairs;
  for (const FunctionPair& p : matching.functions) fn_pairs.emplace_back(p.a, p.b);
  check_injective(fn_pairs, a.functions.size(), b.functions.size(), "function");
  for (const FunctionPair& p : matching.functions) {
    check_injective(p.blocks, a.functions[p.a].blocks.size(), b.functions[p.b].blocks.size(),
                    "block");
  }
}

double cg_match_score(const ProgramGraph& a, const ProgramGraph& b, const Matching& matching) {
  validate_matching(a, b, matching);
  const std::size_t size = std::min(a.functions.size(), b.functions.size());
  if (size == 0) throw StructuralError("program with no functions");
  double sum = 0.0;
  for (const FunctionPair& p : matching.functions) {
    sum += cfg_match_score(a.functions[p.a], b.functions[p.b], p.blocks);
  }
  return sum / static_cast<double>(size);
}

double binhunt_difference(const ProgramGraph& a, const ProgramGraph& b, const Matching& matching) {
  return 1.0 - cg_match_score(a, b, matching);
}

MatchMode choose_mode(const ProgramGraph& a, const ProgramGraph& b, const MatchOptions& options) {
  const std::size_t smaller = std::min(a.total_blocks(), b.total_blocks());
  return smaller <= options.exhaustive_block_bound ? MatchMode::kExhaustive : MatchMode::kGreedy;
}

Matching best_match(const ProgramGraph& a, const ProgramGraph& b, const MatchOptions& options) {
  return best_match(a, b, choose_mode(a, b, options), options);
}

Matching best_match(const ProgramGraph& a, const ProgramGraph& b, MatchMode mode,
                    const MatchOptions& options) {
  a.validate();
  b.validate();
  const std::size_t na = a.functions.size();
  const std::size_t nb = b.functions.size();
  std::uint64_t nodes = 0;
  bool truncated = false;

  // Per function pair: best block assignment and its CFG score.
  std::vector<std::vector<Assignment<int>>> blocks(na, std::vector<Assignment<int>>(nb));
  std::vector<std::vector<double>> fn_weight(na, std::vector<double>(nb, 0.0));
  for (std::size_t i = 0; i < na; ++i) {
    for (std::size_t j = 0; j < nb; ++j) {
      auto w = block_weights(a.functions[i], b.functions[j]);
      if (mode == MatchMode::kExhaustive) {
        BranchAndBound<int> bb(w, nodes, options.node_budget);
        blocks[i][j] = bb.solve();
        truncated |= bb.truncated();
      } else {
        blocks[i][j] = greedy_assignment(w);
      }
      const std::size_t size = std::min(a.functions[i].blocks.size(), b.functions[j].blocks.size());
      fn_weight[i][j] = static_cast<double>(blocks[i][j].total) / 10.0 / static_cast<double>(size);
    }
  }

  Assignment<double> fns;
  if (mode == MatchMode::kExhaustive) {
    BranchAndBound<double> bb(fn_weight, nodes, options.node_budget);
    fns = bb.solve();
    truncated |= bb.truncated();
  } else {
    fns = greedy_assignment(fn_weight);
  }

  Matching m;
  m.truncated = truncated;
  for (const auto& [i, j] : fns.pairs) m.functions.push_back({i, j, blocks[i][j].pairs});
  return m;
}

}  // namespace difftune
