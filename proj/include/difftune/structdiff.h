// Call-graph / CFG difference score between two programs.
//
// Basic blocks are matched by an opaque semantic id (producers of the graph
// decide functional equivalence) and scored 1.0 / 0.9 / 0.0. CFG scores sum
// the matched block scores over the smaller CFG's block count; the call-graph
// score sums matched CFG scores over the smaller function count; the
// difference is one minus the call-graph score.
#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace difftune {

using IndexPair = std::pair<std::size_t, std::size_t>;

struct BlockDescriptor {
  std::string semantic_id;
  std::vector<std::string> registers;  // compared as a set

  bool operator==(const BlockDescriptor&) const = default;
};

struct Cfg {
  std::string function_name;
  std::vector<BlockDescriptor> blocks;
  std::vector<IndexPair> edges;

  bool operator==(const Cfg&) const = default;
};

struct ProgramGraph {
  std::vector<Cfg> functions;
  std::vector<IndexPair> call_edges;

  std::size_t total_blocks() const;
  // Throws StructuralError on dangling edges, empty CFGs or empty ids.
  void validate() const;

  bool operator==(const ProgramGraph&) const = default;
};

struct FunctionPair {
  std::size_t a = 0;
  std::size_t b = 0;
  std::vector<IndexPair> blocks;

  bool operator==(const FunctionPair&) const = default;
};

struct Matching {
  std::vector<FunctionPair> functions;
  // Set when best_match ran out of budget; the matching is the best found.
  bool truncated = false;

  bool operator==(const Matching& o) const { return functions == o.functions; }
};

double bb_match_score(const BlockDescriptor& a, const BlockDescriptor& b);

// Throws StructuralError if block_pairs is not injective or out of range.
double cfg_match_score(const Cfg& a, const Cfg& b, std::span<const IndexPair> block_pairs);

// Throws StructuralError for matchings that are invalid against a or b.
void validate_matching(const ProgramGraph& a, const ProgramGraph& b, const Matching& matching);

double cg_match_score(const ProgramGraph& a, const ProgramGraph& b, const Matching& matching);
double binhunt_difference(const ProgramGraph& a, const ProgramGraph& b, const Matching& matching);

struct MatchOptions {
  // Exhaustive search when the smaller program has at most this many blocks.
  std::size_t exhaustive_block_bound = 64;
  // Search nodes explored before giving up with a truncated result.
  std::uint64_t node_budget = 20'000'000;
};

enum class MatchMode { kExhaustive, kGreedy };

MatchMode choose_mode(const ProgramGraph& a, const ProgramGraph& b, const MatchOptions& options);

// Matching maximizing the call-graph score: branch and bound in exhaustive
// mode, score-ordered greedy pairing otherwise.
Matching best_match(const ProgramGraph& a, const ProgramGraph& b, const MatchOptions& options = {});
Matching best_match(const ProgramGraph& a, const ProgramGraph& b, MatchMode mode,
                    const MatchOptions& options = {});

// Text formats. Both parse functions throw ParseError carrying the line.
ProgramGraph parse_program_graph(std::string_view text);
std::string serialize_program_graph(const ProgramGraph& graph);
Matching parse_matching(std::string_view text);
std::string serialize_matching(const Matching& matching);

}  // namespace difftune
