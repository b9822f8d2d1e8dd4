// difftune: command-line front end.
//
// Exit codes: 0 success, 1 usage or input error, 2 infrastructure failure,
// 3 unsatisfiable constraints.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <iterator>
#include <optional>
#include <string>

#include "difftune/analysis.h"
#include "difftune/catalog.h"
#include "difftune/config.h"
#include "difftune/elf.h"
#include "difftune/error.h"
#include "difftune/fitness.h"
#include "difftune/session.h"
#include "difftune/store.h"
#include "difftune/structdiff.h"

namespace dt = difftune;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 1;
constexpr int kExitInfra = 2;
constexpr int kExitUnsat = 3;

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw dt::ConfigError("cannot read " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::vector<std::uint8_t> slurp_bytes(const std::string& path) {
  std::string s = slurp(path);
  return {s.begin(), s.end()};
}

struct Globals {
  std::string config;
  std::string session;
  std::size_t jobs = 1;
  std::optional<std::uint64_t> seed;
};

dt::SessionConfig load(const Globals& g) {
  if (g.config.empty()) throw dt::ConfigError("--config is required");
  dt::SessionConfig c = dt::load_config(g.config);
  if (g.seed) c.ga.seed = *g.seed;
  return c;
}

void need_session(const Globals& g) {
  if (g.session.empty()) throw dt::ConfigError("--session is required");
}

int cmd_tune(const Globals& g) {
  need_session(g);
  dt::SessionConfig c = load(g);
  dt::TuneOutcome out = dt::tune(c, g.session, g.jobs, &std::cerr);
  std::cerr << (out.resumed ? "resumed; " : "") << "stopped: " << dt::stop_reason_name(out.run.reason)
            << " after " << out.run.history.size() << " generations\n";
  if (!out.run.history.empty()) {
    std::cout << "best_fitness\t" << dt::format_fixed6(out.run.history.back().best_fitness) << "\n";
  }
  for (const dt::ExportedBinary& e : out.exported) {
    std::cout << "best\t" << e.binary.string() << "\t" << e.flags.string() << "\n";
  }
  return kExitOk;
}

int cmd_score(const std::string& a, const std::string& b, const std::string& mode,
              const std::string& compressor) {
  const dt::ExtractionMode m = dt::parse_mode(mode);
  const dt::CompressorId comp = dt::CompressorId::parse(compressor);
  auto x = dt::extract_code_section(slurp_bytes(a), m);
  auto y = dt::extract_code_section(slurp_bytes(b), m);
  std::cout << dt::format_fixed6(dt::ncd(x, y, comp).value) << "\n";
  return kExitOk;
}

int cmd_structdiff(const std::string& a, const std::string& b, const std::string& matching) {
  dt::ProgramGraph ga = dt::parse_program_graph(slurp(a));
  dt::ProgramGraph gb = dt::parse_program_graph(slurp(b));
  dt::Matching m;
  if (matching.empty()) {
    m = dt::best_match(ga, gb);
    if (m.truncated) std::cerr << "warning: search budget exhausted; matching may not be optimal\n";
  } else {
    m = dt::parse_matching(slurp(matching));
  }
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", dt::binhunt_difference(ga, gb, m));
  std::cout << buf << "\n";
  return kExitOk;
}

int cmd_potency(const Globals& g, const std::string& scorer) {
  need_session(g);
  dt::SessionConfig c = load(g);
  auto kind = scorer == "binhunt" ? dt::PotencyScorerKind::kBinhunt : dt::PotencyScorerKind::kNcd;
  std::cout << dt::format_potency(dt::session_potency(c, g.session, kind, g.jobs));
  return kExitOk;
}

int cmd_report(const Globals& g, std::string out_dir) {
  need_session(g);
  dt::SessionConfig c = load(g);
  dt::Catalog cat = dt::load_catalog(c.catalog);
  dt::SessionLog log = dt::read_session_log(g.session);
  if (out_dir.empty()) out_dir = g.session + ".report";
  dt::ReportFiles f = dt::emit_report(log, cat.space, out_dir);
  std::cout << f.generations_csv.string() << "\n" << f.best_flags.string() << "\n" << f.summary.string() << "\n";
  return kExitOk;
}

int cmd_validate(const std::string& path, std::uint64_t seed, std::size_t samples) {
  dt::Catalog cat = dt::load_catalog(path);
  const dt::FlagSpace& space = cat.space;
  const dt::ConstraintSet& rules = cat.constraints;
  std::size_t advisory = 0;
  for (const dt::Rule& r : rules.rules()) advisory += r.advisory;
  std::cout << "levels\t" << space.base_levels().size() << "\n"
            << "flags\t" << space.size() << "\n"
            << "requires\t" << rules.count(dt::RuleKind::kImplication) - advisory << "\n"
            << "advisory\t" << advisory << "\n"
            << "conflicts\t" << rules.count(dt::RuleKind::kConflict) << "\n"
            << "clauses\t" << rules.count(dt::RuleKind::kClause) << "\n";

  dt::CounterRng rng(seed);
  std::vector<dt::Chromosome> probes;
  for (std::size_t lvl = 0; lvl < space.base_levels().size(); ++lvl) {
    probes.push_back(dt::Chromosome(lvl, std::vector<bool>(space.size(), true)));
    probes.push_back(dt::Chromosome::off(lvl, space.size()));
  }
  for (std::size_t i = 0; i < samples; ++i) {
    dt::Chromosome c(static_cast<std::size_t>(rng.below(space.base_levels().size())),
                     std::vector<bool>(space.size()));
    for (std::size_t k = 0; k < space.size(); ++k) c.genes[k] = rng.bernoulli(0.5);
    probes.push_back(std::move(c));
  }
  for (const dt::Chromosome& c : probes) {
    dt::Chromosome fixed = dt::repair(c, rules);
    if (!dt::verify(fixed, rules).empty() || dt::repair(fixed, rules) != fixed) {
      std::cerr << "repair is unsound for " << c.encode() << "\n";
      return kExitUnsat;
    }
  }
  std::cout << "checked\t" << probes.size() << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Iterative-compilation search for maximally different binaries"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config, "Session config file");
  app.add_option("--session", g.session, "Session log (.btlog)");
  app.add_option("--jobs", g.jobs, "Concurrent builds and evaluations")->check(CLI::PositiveNumber);
  app.add_option("--seed", g.seed, "Seed overriding the config");

  std::function<int()> action;

  auto* tune = app.add_subcommand("tune", "Run or resume a tuning session");
  tune->callback([&] { action = [&] { return cmd_tune(g); }; });

  std::string score_a, score_b, mode = "elf_text", compressor = dt::CompressorId{}.tag();
  auto* score = app.add_subcommand("score", "Print the NCD of two binaries' code sections");
  score->add_option("a", score_a)->required();
  score->add_option("b", score_b)->required();
  score->add_option("--mode", mode, "elf_text or whole_file");
  score->add_option("--compressor", compressor, "Compressor tag, e.g. lzma2:9e");
  score->callback([&] { action = [&] { return cmd_score(score_a, score_b, mode, compressor); }; });

  std::string graph_a, graph_b, matching;
  auto* sd = app.add_subcommand("structdiff", "Print the call-graph difference of two program graphs");
  sd->add_option("a", graph_a)->required();
  sd->add_option("b", graph_b)->required();
  sd->add_option("matching", matching, "Matching to score instead of searching");
  sd->callback([&] { action = [&] { return cmd_structdiff(graph_a, graph_b, matching); }; });

  std::string scorer = "ncd";
  auto* pot = app.add_subcommand("potency", "Leave-one-out flag potency of the session's best build");
  pot->add_option("--scorer", scorer)->check(CLI::IsMember({"ncd", "binhunt"}));
  pot->callback([&] { action = [&] { return cmd_potency(g, scorer); }; });

  std::string out_dir;
  auto* rep = app.add_subcommand("report", "Write generations.csv, best_flags.txt and summary.txt");
  rep->add_option("--out", out_dir, "Output directory (default <session>.report)");
  rep->callback([&] { action = [&] { return cmd_report(g, out_dir); }; });

  std::string catalog;
  std::size_t samples = 1000;
  auto* val = app.add_subcommand("validate-constraints", "Check a flag catalog's rules");
  val->add_option("catalog", catalog)->required();
  val->add_option("--samples", samples, "Random chromosomes to repair");
  val->callback([&] { action = [&] { return cmd_validate(catalog, g.seed.value_or(1), samples); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitInput;
  }

  try {
    return action();
  } catch (const dt::UnsatisfiableError& e) {
    std::cerr << "unsatisfiable: " << e.what() << "\n";
    if (!catalog.empty() || !g.config.empty()) {
      try {
        dt::Catalog cat = dt::load_catalog(catalog.empty() ? dt::load_config(g.config).catalog.string() : catalog);
        for (std::size_t i : e.rule_indices()) {
          std::cerr << "  rule " << i << ": " << dt::describe_rule(cat.constraints.rules().at(i), &cat.space) << "\n";
        }
      } catch (const std::exception&) {
      }
    }
    return kExitUnsat;
  } catch (const dt::InfrastructureError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInfra;
  } catch (const dt::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInfra;
  }
}
