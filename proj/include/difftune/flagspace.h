// Optimization-flag search space, chromosome encoding and constraint rules.
#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "difftune/rng.h"

namespace difftune {

struct FlagDescriptor {
  std::size_t id = 0;
  std::string name;
  // Token emitted when the gene is off; no token at all when absent.
  std::optional<std::string> negative_form;

  bool operator==(const FlagDescriptor&) const = default;
};

class FlagSpace {
 public:
  FlagSpace() = default;
  // Throws StructuralError unless ids are 0..N-1 in order, names are
  // non-empty, whitespace-free and unique, and base_levels is non-empty.
  FlagSpace(std::vector<std::string> base_levels, std::vector<FlagDescriptor> flags,
            std::string catalog_digest);

  const std::vector<std::string>& base_levels() const { return base_levels_; }
  const std::vector<FlagDescriptor>& flags() const { return flags_; }
  std::size_t size() const { return flags_.size(); }
  const std::string& catalog_digest() const { return catalog_digest_; }

  std::optional<std::size_t> find_flag(std::string_view name) const;
  std::optional<std::size_t> find_level(std::string_view token) const;

 private:
  std::vector<std::string> base_levels_;
  std::vector<FlagDescriptor> flags_;
  std::string catalog_digest_;
};

struct Chromosome {
  std::size_t base_level = 0;
  std::vector<bool> genes;

  Chromosome() = default;
  Chromosome(std::size_t level, std::vector<bool> g) : base_level(level), genes(std::move(g)) {}
  // All genes off.
  static Chromosome off(std::size_t level, std::size_t gene_count) {
    return Chromosome(level, std::vector<bool>(gene_count, false));
  }

  std::size_t count_on() const;

  // "<level>:<hex>" where bit i of the gene bytes is gene i (LSB first).
  std::string encode() const;
  // Inverse of encode(); throws ParseError on malformed text.
  static Chromosome decode(std::string_view text, std::size_t gene_count);

  bool operator==(const Chromosome&) const = default;
  auto operator<=>(const Chromosome& o) const {
    if (auto c = base_level <=> o.base_level; c != 0) return c;
    return genes <=> o.genes;
  }
};

// Throws StructuralError if chromosome does not fit the space.
void check_fits(const Chromosome& chromosome, const FlagSpace& space);

struct Literal {
  std::size_t flag = 0;
  bool positive = true;
  bool operator==(const Literal&) const = default;
};

enum class RuleKind { kImplication, kConflict, kClause };

struct Rule {
  RuleKind kind = RuleKind::kImplication;
  // Implication: first -> second. Conflict: not both.
  std::size_t first = 0;
  std::size_t second = 0;
  // Clause: disjunction of literals.
  std::vector<Literal> literals;
  // Effectiveness-only dependency; skipped by verify and repair.
  bool advisory = false;

  bool operator==(const Rule&) const = default;
};

struct Violation {
  std::size_t rule_index = 0;
  RuleKind kind = RuleKind::kImplication;

  bool operator==(const Violation&) const = default;
};

// Rules in declaration order; the order drives repair.
class ConstraintSet {
 public:
  void add_implication(std::size_t antecedent, std::size_t consequent, bool advisory = false);
  void add_conflict(std::size_t a, std::size_t b);
  void add_clause(std::vector<Literal> literals);
  void remove_rule(std::size_t index);

  const std::vector<Rule>& rules() const { return rules_; }
  std::size_t count(RuleKind kind) const;
  std::size_t max_flag_id() const;  // 0 when empty
  bool empty() const { return rules_.empty(); }

  // Throws StructuralError if any rule references a flag outside the space.
  void check_against(const FlagSpace& space) const;

 private:
  std::vector<Rule> rules_;
};

// Human-readable rule, using flag names when a space is given.
std::string describe_rule(const Rule& rule, const FlagSpace* space = nullptr);

// Every violated non-advisory rule, in rule order.
std::vector<Violation> verify(const Chromosome& chromosome, const ConstraintSet& constraints);

// Turns flags off until verify() is clean. Throws UnsatisfiableError when a
// clause has no negative literal left to switch off.
Chromosome repair(Chromosome chromosome, const ConstraintSet& constraints);

// Base-level token followed by the rendering of each gene in id order.
std::vector<std::string> decode(const Chromosome& chromosome, const FlagSpace& space);

// Names of the flags switched on.
std::vector<std::string> enabled_flag_names(const Chromosome& chromosome, const FlagSpace& space);

Chromosome random_chromosome(const FlagSpace& space, const ConstraintSet& constraints,
                             CounterRng& rng);

}  // namespace difftune
