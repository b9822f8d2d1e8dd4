#include <charconv>
#include <sstream>

#include "difftune/error.h"
#include "difftune/structdiff.h"

namespace difftune {

namespace {

std::vector<std::string> tokens_of(std::string_view line) {
  if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
  std::vector<std::string> out;
  std::istringstream in{std::string(line)};
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

std::size_t parse_index(const std::string& tok, std::size_t line) {
  std::size_t v = 0;
  auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || p != tok.data() + tok.size()) {
    throw ParseError("expected a non-negative index, got '" + tok + "'", line);
  }
  return v;
}

template <typename Fn>
void for_each_line(std::string_view text, Fn&& fn) {
  std::size_t lineno = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    auto nl = text.find('\n', start);
    std::string_view line =
        text.substr(start, nl == std::string_view::npos ? std::string_view::npos : nl - start);
    ++lineno;
    auto tok = tokens_of(line);
    if (!tok.empty()) fn(tok, lineno);
    if (nl == std::string_view::npos) break;
    start = nl + 1;
  }
}

}  // namespace

ProgramGraph parse_program_graph(std::string_view text) {
  ProgramGraph g;
  std::vector<std::pair<IndexPair, std::size_t>> pending_calls;
  std::vector<std::pair<std::size_t, std::size_t>> pending_edges;  // (function, line)
  for_each_line(text, [&](const std::vector<std::string>& tok, std::size_t line) {
    const std::string& kw = tok[0];
    if (kw == "function") {
      if (tok.size() != 2) throw ParseError("'function' takes one name", line);
      g.functions.push_back(Cfg{tok[1], {}, {}});
    } else if (kw == "block") {
      if (g.functions.empty()) throw ParseError("'block' before any 'function'", line);
      if (tok.size() < 2 || tok.size() > 3) {
        throw ParseError("'block' takes a semantic id and an optional register list", line);
      }
      BlockDescriptor b{tok[1], {}};
      if (tok.size() == 3) {
        std::string_view regs = tok[2];
        std::size_t start = 0;
        while (start <= regs.size()) {
          auto comma = regs.find(',', start);
          std::string_view r = regs.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
          if (r.empty()) throw ParseError("empty register name", line);
          b.registers.emplace_back(r);
          if (comma == std::string_view::npos) break;
          start = comma + 1;
        }
      }
      g.functions.back().blocks.push_back(std::move(b));
    } else if (kw == "edge") {
      if (g.functions.empty()) throw ParseError("'edge' before any 'function'", line);
      if (tok.size() != 3) throw ParseError("'edge' takes two block indices", line);
      g.functions.back().edges.emplace_back(parse_index(tok[1], line), parse_index(tok[2], line));
      pending_edges.emplace_back(g.functions.size() - 1, line);
    } else if (kw == "call") {
      if (tok.size() != 3) throw ParseError("'call' takes two function indices", line);
      IndexPair e{parse_index(tok[1], line), parse_index(tok[2], line)};
      g.call_edges.push_back(e);
      pending_calls.emplace_back(e, line);
    } else {
      throw ParseError("unknown directive '" + kw + "'", line);
    }
  });

  std::vector<std::size_t> edge_cursor(g.functions.size(), 0);
  for (const auto& [fi, line] : pending_edges) {
    const Cfg& f = g.functions[fi];
    const auto& [x, y] = f.edges[edge_cursor[fi]++];
    if (x >= f.blocks.size() || y >= f.blocks.size()) {
      throw ParseError("edge references a block that does not exist", line);
    }
  }
  for (const auto& [e, line] : pending_calls) {
    if (e.first >= g.functions.size() || e.second >= g.functions.size()) {
      throw ParseError("call references a function that does not exist", line);
    }
  }
  for (const Cfg& f : g.functions) {
    if (f.blocks.empty()) throw ParseError("function '" + f.function_name + "' has no blocks", 0);
  }
  return g;
}

std::string serialize_program_graph(const ProgramGraph& graph) {
  std::string out;
  for (const Cfg& f : graph.functions) {
    out += "function " + f.function_name + "\n";
    for (const BlockDescriptor& b : f.blocks) {
      out += "block " + b.semantic_id;
      for (std::size_t i = 0; i < b.registers.size(); ++i) {
        out += (i == 0 ? " " : ",") + b.registers[i];
      }
      out += "\n";
    }
    for (const auto& [x, y] : f.edges) {
      out += "edge " + std::to_string(x) + " " + std::to_string(y) + "\n";
    }
  }
  for (const auto& [x, y] : graph.call_edges) {
    out += "call " + std::to_string(x) + " " + std::to_string(y) + "\n";
  }
  return out;
}

Matching parse_matching(std::string_view text) {
  Matching m;
  for_each_line(text, [&](const std::vector<std::string>& tok, std::size_t line) {
    if (tok.size() != 3) throw ParseError("'" + tok[0] + "' takes two indices", line);
    if (tok[0] == "match-fn") {
      m.functions.push_back({parse_index(tok[1], line), parse_index(tok[2], line), {}});
    } else if (tok[0] == "match-bb") {
      if (m.functions.empty()) throw ParseError("'match-bb' before any 'match-fn'", line);
      m.functions.back().blocks.emplace_back(parse_index(tok[1], line), parse_index(tok[2], line));
    } else {
      throw ParseError("unknown directive '" + tok[0] + "'", line);
    }
  });
  return m;
}

std::string serialize_matching(const Matching& matching) {
  std::string out;
  for (const FunctionPair& p : matching.functions) {
    out += "match-fn " + std::to_string(p.a) + " " + std::to_string(p.b) + "\n";
    for (const auto& [x, y] : p.blocks) {
      out += "match-bb " + std::to_string(x) + " " + std::to_string(y) + "\n";
    }
  }
  return out;
}

}  // namespace difftune
