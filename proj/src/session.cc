#include "difftune/session.h"

#include <fstream>
#include <iterator>
#include <memory>
#include <mutex>
#include <ostream>

#include "difftune/digest.h"
#include "difftune/driver.h"
#include "difftune/error.h"
#include "difftune/structdiff.h"

namespace difftune {

namespace {

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InfrastructureError("cannot read " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) throw InfrastructureError("cannot write " + path.string());
}

std::string join(const std::vector<std::string>& tokens) {
  std::string out;
  for (const std::string& t : tokens) {
    if (!out.empty()) out += ' ';
    out += t;
  }
  return out;
}

struct Artifacts {
  std::vector<std::uint8_t> binary;
  std::optional<std::string> graph;
};

// Builds a chromosome and keeps its outputs in memory; nullopt when the
// build fails.
std::optional<Artifacts> build(const BuildManifest& manifest, const Chromosome& c,
                               const FlagSpace& space) {
  CompileResult r = compile(manifest, c, space);
  std::optional<Artifacts> out;
  std::error_code ec;
  if (r.status == CompileStatus::kOk) {
    out.emplace();
    out->binary = read_bytes(r.output_path);
    const auto sidecar = graph_sidecar(r.output_path);
    if (std::filesystem::exists(sidecar)) {
      auto bytes = read_bytes(sidecar);
      out->graph = std::string(bytes.begin(), bytes.end());
    }
  }
  std::filesystem::remove(r.output_path, ec);
  std::filesystem::remove(graph_sidecar(r.output_path), ec);
  std::filesystem::remove(r.output_path.parent_path(), ec);
  return out;
}

std::filesystem::path with_suffix(const std::filesystem::path& p, const std::string& suffix) {
  std::filesystem::path out = p;
  out += suffix;
  return out;
}

}  // namespace

SessionSetup prepare_session(const SessionConfig& config) {
  SessionSetup s;
  s.config = config;
  s.catalog = load_catalog(config.catalog);
  config.ga.validate(s.catalog.space.size());
  s.baseline_chromosome = baseline_chromosome(config, s.catalog.space, s.catalog.constraints);

  auto art = build(config.build, s.baseline_chromosome, s.catalog.space);
  if (!art) {
    throw InfrastructureError("baseline build failed: " +
                              join(render_command(config.build, s.baseline_chromosome, s.catalog.space)));
  }
  try {
    s.baseline = extract_code_section(art->binary, config.extraction);
  } catch (const ExtractionError& e) {
    throw InfrastructureError(std::string("baseline code section: ") + e.what());
  }

  SessionHeader& h = s.header;
  h.catalog_digest = s.catalog.space.catalog_digest();
  h.gene_count = s.catalog.space.size();
  h.manifest_digest = config.build.digest();
  h.ga_config = config.ga.canonical();
  h.termination = config.stop.canonical();
  h.compressor = config.compressor.tag();
  h.extraction = std::string(mode_name(config.extraction));
  h.seed = config.ga.seed;
  h.baseline_digest = sha256_hex(s.baseline.bytes);
  return s;
}

TuneOutcome tune(const SessionConfig& config, const std::filesystem::path& session,
                 std::size_t jobs, std::ostream* progress) {
  SessionSetup setup = prepare_session(config);
  const FlagSpace& space = setup.catalog.space;
  const StoreOptions store_opts{config.sync};

  TuneOutcome outcome;
  std::error_code ec;
  outcome.resumed = std::filesystem::exists(session, ec);
  SessionStore store = outcome.resumed ? SessionStore::open(session, setup.header, store_opts)
                                       : SessionStore::create(session, setup.header, store_opts);

  BaselineScorer scorer(setup.baseline, config.compressor);
  CompileFn compile_fn = make_compile_fn(config.build, space);
  FitnessFn fitness = [&](const Chromosome& c) {
    return fitness_against_baseline(c, compile_fn, scorer, config.extraction);
  };

  RunOptions opts;
  opts.jobs = jobs;
  opts.record_timing = config.record_timing;
  std::mutex out_mu;
  if (progress) {
    opts.on_generation = [&](const GenerationSummary& g) {
      std::lock_guard lock(out_mu);
      *progress << "generation " << g.index << " best " << format_fixed6(g.best_fitness)
                << " evaluated " << g.evaluated_count << "\n";
    };
  }
  outcome.run = run(space, setup.catalog.constraints, fitness, config.ga, config.stop, store, opts);

  std::size_t k = 0;
  for (const IterationRecord& r : outcome.run.best_records) {
    if (r.status != CompileStatus::kOk) continue;
    auto art = build(config.build, r.chromosome, space);
    if (!art) throw InfrastructureError("best chromosome " + r.chromosome.encode() + " no longer builds");
    if (progress && r.binary_digest && sha256_hex(art->binary) != *r.binary_digest) {
      *progress << "warning: rebuild of " << r.chromosome.encode() << " differs from the recorded binary\n";
    }
    ++k;
    ExportedBinary e{with_suffix(session, ".best." + std::to_string(k)),
                     with_suffix(session, ".best." + std::to_string(k) + ".flags")};
    write_text(e.binary, std::string(art->binary.begin(), art->binary.end()));
    write_text(e.flags, join(decode(r.chromosome, space)) + "\n");
    outcome.exported.push_back(std::move(e));
  }
  return outcome;
}

PotencyReport session_potency(const SessionConfig& config, const std::filesystem::path& session,
                              PotencyScorerKind kind, std::size_t jobs) {
  SessionSetup setup = prepare_session(config);
  SessionStore store = SessionStore::open(session, setup.header);
  const FlagSpace& space = setup.catalog.space;

  const IterationRecord* best = nullptr;
  for (const IterationRecord& r : store.iterations()) {
    if (r.status == CompileStatus::kOk && (!best || r.fitness >= best->fitness)) best = &r;
  }
  if (!best) throw UndefinedInputError("session has no successful build to analyze");

  PotencyScorer scorer;
  std::string name;
  if (kind == PotencyScorerKind::kNcd) {
    name = "ncd(" + config.compressor.tag() + ")";
    auto ncd_scorer = std::make_shared<BaselineScorer>(setup.baseline, config.compressor);
    scorer = [&config, &space, ncd_scorer](const Chromosome& c) {
      auto art = build(config.build, c, space);
      if (!art) throw Error("variant failed to build");
      return ncd_scorer->score(extract_code_section(art->binary, config.extraction)).value;
    };
  } else {
    name = "binhunt";
    auto base = build(config.build, setup.baseline_chromosome, space);
    if (!base || !base->graph) {
      throw InfrastructureError("binhunt scorer needs a backend that writes program graphs");
    }
    auto base_graph = std::make_shared<ProgramGraph>(parse_program_graph(*base->graph));
    scorer = [&config, &space, base_graph](const Chromosome& c) {
      auto art = build(config.build, c, space);
      if (!art) throw Error("variant failed to build");
      if (!art->graph) throw Error("variant has no program graph");
      ProgramGraph g = parse_program_graph(*art->graph);
      return binhunt_difference(*base_graph, g, best_match(*base_graph, g));
    };
  }
  return flag_potency(best->chromosome, scorer, space, setup.catalog.constraints, name, jobs);
}

}  // namespace difftune
