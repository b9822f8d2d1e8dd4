#include "difftune/catalog.h"

#include <fstream>
#include <sstream>
#include <vector>

#include "difftune/digest.h"
#include "difftune/error.h"

namespace difftune {

namespace {

std::string_view strip_comment_and_trailing(std::string_view line) {
  if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
  while (!line.empty() && (line.back() == ' ' || line.back() == '\t' || line.back() == '\r')) {
    line.remove_suffix(1);
  }
  return line;
}

std::vector<std::string> split_ws(std::string_view line) {
  std::vector<std::string> out;
  std::istringstream in{std::string(line)};
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto nl = text.find('\n', start);
    if (nl == std::string_view::npos) {
      if (start < text.size()) lines.push_back(text.substr(start));
      break;
    }
    lines.push_back(text.substr(start, nl - start));
    start = nl + 1;
  }
  return lines;
}

}  // namespace

std::string catalog_digest(std::string_view text) {
  std::string canonical;
  bool first = true;
  for (std::string_view raw : split_lines(text)) {
    std::string_view line = strip_comment_and_trailing(raw);
    if (line.empty()) continue;
    if (!first) canonical.push_back('\n');
    canonical.append(line);
    first = false;
  }
  return sha256_hex(canonical);
}

Catalog parse_catalog(std::string_view text) {
  struct PendingRule {
    std::size_t line;
    std::vector<std::string> tokens;
  };
  std::vector<std::string> levels;
  std::vector<FlagDescriptor> flags;
  std::vector<PendingRule> pending;

  std::size_t lineno = 0;
  for (std::string_view raw : split_lines(text)) {
    ++lineno;
    std::vector<std::string> tok = split_ws(strip_comment_and_trailing(raw));
    if (tok.empty()) continue;
    const std::string& kw = tok[0];
    if (kw == "level") {
      if (tok.size() != 2) throw ParseError("'level' takes exactly one token", lineno);
      levels.push_back(tok[1]);
    } else if (kw == "flag") {
      if (tok.size() < 2 || tok.size() > 3) {
        throw ParseError("'flag' takes a name and an optional negative form", lineno);
      }
      FlagDescriptor f;
      f.id = flags.size();
      f.name = tok[1];
      if (tok.size() == 3) f.negative_form = tok[2];
      for (const FlagDescriptor& other : flags) {
        if (other.name == f.name) throw ParseError("duplicate flag '" + f.name + "'", lineno);
      }
      flags.push_back(std::move(f));
    } else if (kw == "requires" || kw == "conflicts" || kw == "clause") {
      pending.push_back({lineno, std::move(tok)});
    } else {
      throw ParseError("unknown directive '" + kw + "'", lineno);
    }
  }
  // A catalog without levels still needs one base level to build against.
  if (levels.empty()) levels.push_back("-O0");

  FlagSpace space(std::move(levels), std::move(flags), catalog_digest(text));
  auto lookup = [&space](const std::string& name, std::size_t line) {
    auto id = space.find_flag(name);
    if (!id) throw ParseError("unknown flag '" + name + "'", line);
    return *id;
  };

  ConstraintSet constraints;
  for (const PendingRule& p : pending) {
    const auto& tok = p.tokens;
    if (tok[0] == "requires") {
      bool advisory = tok.size() == 4 && tok[3] == "advisory";
      if (tok.size() != 3 && !advisory) {
        throw ParseError("'requires' takes two flag names and an optional 'advisory'", p.line);
      }
      constraints.add_implication(lookup(tok[1], p.line), lookup(tok[2], p.line), advisory);
    } else if (tok[0] == "conflicts") {
      if (tok.size() != 3) throw ParseError("'conflicts' takes two flag names", p.line);
      std::size_t a = lookup(tok[1], p.line);
      std::size_t b = lookup(tok[2], p.line);
      if (a == b) throw ParseError("flag conflicts with itself", p.line);
      constraints.add_conflict(a, b);
    } else {
      if (tok.size() < 2) throw ParseError("'clause' needs at least one literal", p.line);
      std::vector<Literal> lits;
      for (std::size_t i = 1; i < tok.size(); ++i) {
        const std::string& t = tok[i];
        if (t.size() < 2 || (t[0] != '+' && t[0] != '-')) {
          throw ParseError("clause literal '" + t + "' must start with '+' or '-'", p.line);
        }
        lits.push_back({lookup(t.substr(1), p.line), t[0] == '+'});
      }
      constraints.add_clause(std::move(lits));
    }
  }
  return {std::move(space), std::move(constraints)};
}

Catalog load_catalog(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open catalog " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_catalog(buf.str());
}

std::string serialize_catalog(const Catalog& catalog) {
  std::string out;
  for (const std::string& level : catalog.space.base_levels()) out += "level " + level + "\n";
  for (const FlagDescriptor& f : catalog.space.flags()) {
    out += "flag " + f.name;
    if (f.negative_form) out += " " + *f.negative_form;
    out += "\n";
  }
  for (const Rule& r : catalog.constraints.rules()) {
    out += describe_rule(r, &catalog.space) + "\n";
  }
  return out;
}

}  // namespace difftune
