#include "difftune/flagspace.h"

#include <algorithm>
#include <cctype>
#include <unordered_set>

#include "difftune/error.h"

namespace difftune {

namespace {

bool has_space(std::string_view s) {
  return std::any_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c) != 0; });
}

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  return -1;
}

std::string kind_name(RuleKind kind) {
  switch (kind) {
    case RuleKind::kImplication: return "requires";
    case RuleKind::kConflict: return "conflicts";
    case RuleKind::kClause: return "clause";
  }
  return "?";
}

bool clause_satisfied(const Rule& rule, const std::vector<bool>& genes) {
  for (const Literal& lit : rule.literals) {
    if (genes[lit.flag] == lit.positive) return true;
  }
  return false;
}

}  // namespace

FlagSpace::FlagSpace(std::vector<std::string> base_levels, std::vector<FlagDescriptor> flags,
                     std::string catalog_digest)
    : base_levels_(std::move(base_levels)),
      flags_(std::move(flags)),
      catalog_digest_(std::move(catalog_digest)) {
  if (base_levels_.empty()) throw StructuralError("flag space needs at least one base level");
  std::unordered_set<std::string_view> seen;
  for (std::size_t i = 0; i < flags_.size(); ++i) {
    const FlagDescriptor& f = flags_[i];
    if (f.id != i) {
      throw StructuralError("flag '" + f.name + "' has id " + std::to_string(f.id) + ", expected " +
                            std::to_string(i));
    }
    if (f.name.empty() || has_space(f.name)) {
      throw StructuralError("flag " + std::to_string(i) + " has an empty or whitespace name");
    }
    if (f.negative_form && (f.negative_form->empty() || has_space(*f.negative_form))) {
      throw StructuralError("flag '" + f.name + "' has a malformed negative form");
    }
    if (!seen.insert(f.name).second) throw StructuralError("duplicate flag '" + f.name + "'");
  }
  for (const std::string& level : base_levels_) {
    if (level.empty() || has_space(level)) throw StructuralError("malformed base level token");
  }
}

std::optional<std::size_t> FlagSpace::find_flag(std::string_view name) const {
  for (const FlagDescriptor& f : flags_) {
    if (f.name == name) return f.id;
  }
  return std::nullopt;
}

std::optional<std::size_t> FlagSpace::find_level(std::string_view token) const {
  for (std::size_t i = 0; i < base_levels_.size(); ++i) {
    if (base_levels_[i] == token) return i;
  }
  return std::nullopt;
}

std::size_t Chromosome::count_on() const {
  return static_cast<std::size_t>(std::count(genes.begin(), genes.end(), true));
}

std::string Chromosome::encode() const {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out = std::to_string(base_level);
  out.push_back(':');
  for (std::size_t byte = 0; byte * 8 < genes.size(); ++byte) {
    unsigned v = 0;
    for (std::size_t bit = 0; bit < 8 && byte * 8 + bit < genes.size(); ++bit) {
      if (genes[byte * 8 + bit]) v |= 1u << bit;
    }
    out.push_back(kDigits[v >> 4]);
    out.push_back(kDigits[v & 0xf]);
  }
  return out;
}

Chromosome Chromosome::decode(std::string_view text, std::size_t gene_count) {
  auto colon = text.find(':');
  if (colon == std::string_view::npos || colon == 0) {
    throw ParseError("chromosome '" + std::string(text) + "' lacks a base level", 0);
  }
  Chromosome c;
  for (char ch : text.substr(0, colon)) {
    if (ch < '0' || ch > '9') throw ParseError("bad base level in chromosome", 0);
    c.base_level = c.base_level * 10 + static_cast<std::size_t>(ch - '0');
  }
  std::string_view hex = text.substr(colon + 1);
  std::size_t bytes = (gene_count + 7) / 8;
  if (hex.size() != bytes * 2) {
    throw ParseError("chromosome gene field has " + std::to_string(hex.size()) +
                         " hex digits, expected " + std::to_string(bytes * 2),
                     0);
  }
  c.genes.assign(gene_count, false);
  for (std::size_t byte = 0; byte < bytes; ++byte) {
    int hi = hex_value(hex[2 * byte]);
    int lo = hex_value(hex[2 * byte + 1]);
    if (hi < 0 || lo < 0) throw ParseError("non-hex digit in chromosome", 0);
    unsigned v = static_cast<unsigned>(hi * 16 + lo);
    for (std::size_t bit = 0; bit < 8; ++bit) {
      bool on = (v >> bit) & 1u;
      if (byte * 8 + bit < gene_count) {
        c.genes[byte * 8 + bit] = on;
      } else if (on) {
        throw ParseError("chromosome sets padding bits", 0);
      }
    }
  }
  return c;
}

void check_fits(const Chromosome& chromosome, const FlagSpace& space) {
  if (chromosome.genes.size() != space.size()) {
    throw StructuralError("chromosome has " + std::to_string(chromosome.genes.size()) +
                          " genes, catalog has " + std::to_string(space.size()) + " flags");
  }
  if (chromosome.base_level >= space.base_levels().size()) {
    throw StructuralError("base level index " + std::to_string(chromosome.base_level) +
                          " out of range");
  }
}

void ConstraintSet::add_implication(std::size_t antecedent, std::size_t consequent, bool advisory) {
  Rule r;
  r.kind = RuleKind::kImplication;
  r.first = antecedent;
  r.second = consequent;
  r.advisory = advisory;
  rules_.push_back(std::move(r));
}

void ConstraintSet::add_conflict(std::size_t a, std::size_t b) {
  if (a == b) throw StructuralError("flag " + std::to_string(a) + " cannot conflict with itself");
  Rule r;
  r.kind = RuleKind::kConflict;
  r.first = a;
  r.second = b;
  rules_.push_back(std::move(r));
}

void ConstraintSet::add_clause(std::vector<Literal> literals) {
  if (literals.empty()) throw StructuralError("empty clause");
  Rule r;
  r.kind = RuleKind::kClause;
  r.literals = std::move(literals);
  rules_.push_back(std::move(r));
}

void ConstraintSet::remove_rule(std::size_t index) {
  if (index >= rules_.size()) throw StructuralError("rule index out of range");
  rules_.erase(rules_.begin() + static_cast<std::ptrdiff_t>(index));
}

std::size_t ConstraintSet::count(RuleKind kind) const {
  return static_cast<std::size_t>(
      std::count_if(rules_.begin(), rules_.end(), [kind](const Rule& r) { return r.kind == kind; }));
}

std::size_t ConstraintSet::max_flag_id() const {
  std::size_t m = 0;
  for (const Rule& r : rules_) {
    if (r.kind == RuleKind::kClause) {
      for (const Literal& l : r.literals) m = std::max(m, l.flag);
    } else {
      m = std::max({m, r.first, r.second});
    }
  }
  return m;
}

void ConstraintSet::check_against(const FlagSpace& space) const {
  if (!rules_.empty() && max_flag_id() >= space.size()) {
    throw StructuralError("constraint references flag id " + std::to_string(max_flag_id()) +
                          " but the catalog has " + std::to_string(space.size()) + " flags");
  }
}

std::string describe_rule(const Rule& rule, const FlagSpace* space) {
  auto name = [space](std::size_t id) {
    if (space && id < space->size()) return space->flags()[id].name;
    return "#" + std::to_string(id);
  };
  std::string out = kind_name(rule.kind);
  if (rule.kind == RuleKind::kClause) {
    for (const Literal& l : rule.literals) {
      out += ' ';
      out += l.positive ? '+' : '-';
      out += name(l.flag);
    }
  } else {
    out += ' ' + name(rule.first) + ' ' + name(rule.second);
  }
  if (rule.advisory) out += " advisory";
  return out;
}

std::vector<Violation> verify(const Chromosome& chromosome, const ConstraintSet& constraints) {
  const std::vector<bool>& g = chromosome.genes;
  if (!constraints.empty() && constraints.max_flag_id() >= g.size()) {
    throw StructuralError("constraint references flag id " +
                          std::to_string(constraints.max_flag_id()) + " beyond chromosome length " +
                          std::to_string(g.size()));
  }
  std::vector<Violation> out;
  const auto& rules = constraints.rules();
  for (std::size_t i = 0; i < rules.size(); ++i) {
    const Rule& r = rules[i];
    if (r.advisory) continue;
    bool violated = false;
    switch (r.kind) {
      case RuleKind::kImplication: violated = g[r.first] && !g[r.second]; break;
      case RuleKind::kConflict: violated = g[r.first] && g[r.second]; break;
      case RuleKind::kClause: violated = !clause_satisfied(r, g); break;
    }
    if (violated) out.push_back({i, r.kind});
  }
  return out;
}

Chromosome repair(Chromosome chromosome, const ConstraintSet& constraints) {
  std::vector<bool>& g = chromosome.genes;
  if (!constraints.empty() && constraints.max_flag_id() >= g.size()) {
    throw StructuralError("constraint references flag id beyond chromosome length");
  }
  const auto& rules = constraints.rules();
  // Each change switches a flag off, so at most |genes| passes change anything.
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t i = 0; i < rules.size(); ++i) {
      const Rule& r = rules[i];
      if (r.advisory) continue;
      switch (r.kind) {
        case RuleKind::kImplication:
          if (g[r.first] && !g[r.second]) {
            g[r.first] = false;
            changed = true;
          }
          break;
        case RuleKind::kConflict:
          if (g[r.first] && g[r.second]) {
            g[std::max(r.first, r.second)] = false;
            changed = true;
          }
          break;
        case RuleKind::kClause: {
          if (clause_satisfied(r, g)) break;
          // Violated: every negative literal's flag is on. Switch off the
          // highest-id one; an all-positive clause cannot be fixed this way.
          std::optional<std::size_t> victim;
          for (const Literal& l : r.literals) {
            if (!l.positive && (!victim || l.flag > *victim)) victim = l.flag;
          }
          if (!victim) {
            throw UnsatisfiableError(
                "clause '" + describe_rule(r) + "' cannot be satisfied by switching flags off", {i});
          }
          g[*victim] = false;
          changed = true;
          break;
        }
      }
    }
  }
  return chromosome;
}

std::vector<std::string> decode(const Chromosome& chromosome, const FlagSpace& space) {
  check_fits(chromosome, space);
  std::vector<std::string> tokens;
  tokens.push_back(space.base_levels()[chromosome.base_level]);
  for (const FlagDescriptor& f : space.flags()) {
    if (chromosome.genes[f.id]) {
      tokens.push_back(f.name);
    } else if (f.negative_form) {
      tokens.push_back(*f.negative_form);
    }
  }
  return tokens;
}

std::vector<std::string> enabled_flag_names(const Chromosome& chromosome, const FlagSpace& space) {
  check_fits(chromosome, space);
  std::vector<std::string> names;
  for (const FlagDescriptor& f : space.flags()) {
    if (chromosome.genes[f.id]) names.push_back(f.name);
  }
  return names;
}

Chromosome random_chromosome(const FlagSpace& space, const ConstraintSet& constraints,
                             CounterRng& rng) {
  Chromosome c;
  c.base_level = static_cast<std::size_t>(rng.below(space.base_levels().size()));
  c.genes.resize(space.size());
  for (std::size_t i = 0; i < space.size(); ++i) c.genes[i] = (rng.next() >> 63) != 0;
  return repair(std::move(c), constraints);
}

}  // namespace difftune
