#include "difftune/ga.h"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <exception>
#include <map>
#include <thread>

#include "difftune/error.h"
#include "difftune/store.h"

namespace difftune {

namespace {

std::string fmt(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

bool in_unit(double p) { return p >= 0.0 && p <= 1.0; }

// Strict "a is fitter than b" with the earlier record winning ties.
bool fitter(const Individual& a, const Individual& b) {
  if (a.fitness != b.fitness) return a.fitness > b.fitness;
  return a.order < b.order;
}

struct Slot {
  Evaluation eval;
  std::exception_ptr error;
};

void evaluate_batch(const std::vector<Chromosome>& batch, const FitnessFn& fitness_fn,
                    std::size_t jobs, std::vector<Slot>& out) {
  out.assign(batch.size(), Slot{});
  const std::size_t workers = std::min(std::max<std::size_t>(jobs, 1), batch.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= batch.size()) return;
      try {
        out[i].eval = fitness_fn(batch[i]);
      } catch (...) {
        out[i].error = std::current_exception();
      }
    }
  };
  if (workers <= 1) {
    work();
    return;
  }
  std::vector<std::thread> threads;
  threads.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) threads.emplace_back(work);
  for (auto& t : threads) t.join();
}

}  // namespace

void GaConfig::validate(std::size_t gene_count) const {
  if (population_size == 0) throw ConfigError("population_size must be positive");
  if (!in_unit(mutation_rate)) throw ConfigError("mutation_rate must be in [0,1]");
  if (!in_unit(crossover_rate)) throw ConfigError("crossover_rate must be in [0,1]");
  if (!in_unit(crossover_strength)) throw ConfigError("crossover_strength must be in [0,1]");
  if (must_mutate_count > gene_count) {
    throw ConfigError("must_mutate_count " + std::to_string(must_mutate_count) +
                      " exceeds the gene count " + std::to_string(gene_count));
  }
  if (elite_count >= population_size) throw ConfigError("elite_count must be below population_size");
}

std::string GaConfig::canonical() const {
  return "pop=" + std::to_string(population_size) + ",mut=" + fmt(mutation_rate) +
         ",cx=" + fmt(crossover_rate) + ",must=" + std::to_string(must_mutate_count) +
         ",strength=" + fmt(crossover_strength) + ",elite=" + std::to_string(elite_count);
}

void TerminationCriteria::validate() const {
  if (max_iterations && *max_iterations == 0) throw ConfigError("max_iterations must be positive");
  if (max_wall_clock && max_wall_clock->count() < 0) throw ConfigError("max_wall_clock must be non-negative");
  if (!(plateau_threshold >= 0.0)) throw ConfigError("plateau_threshold must be non-negative");
  if (!max_iterations && !max_wall_clock && !plateau_enabled()) {
    throw ConfigError("at least one termination criterion must be enabled");
  }
}

std::string TerminationCriteria::canonical() const {
  std::string s = "iter=" + (max_iterations ? std::to_string(*max_iterations) : std::string("-"));
  s += ",wall_ms=" + (max_wall_clock ? std::to_string(max_wall_clock->count()) : std::string("-"));
  s += ",plateau=" + fmt(plateau_threshold) + "/" + std::to_string(plateau_window);
  return s;
}

std::string_view stop_reason_name(StopReason reason) {
  switch (reason) {
    case StopReason::kMaxIterations: return "max_iterations";
    case StopReason::kWallClock: return "wall_clock";
    case StopReason::kPlateau: return "plateau";
  }
  return "?";
}

StopReason parse_stop_reason(std::string_view name) {
  if (name == "max_iterations") return StopReason::kMaxIterations;
  if (name == "wall_clock") return StopReason::kWallClock;
  if (name == "plateau") return StopReason::kPlateau;
  throw ParseError("unknown stop reason '" + std::string(name) + "'", 0);
}

StopDecision check_termination(std::span<const GenerationSummary> history,
                               const TerminationCriteria& criteria,
                               std::chrono::milliseconds elapsed) {
  if (criteria.max_iterations && !history.empty() &&
      history.back().index >= *criteria.max_iterations) {
    return {StopReason::kMaxIterations};
  }
  if (criteria.max_wall_clock && elapsed >= *criteria.max_wall_clock) {
    return {StopReason::kWallClock};
  }
  const std::size_t w = criteria.plateau_window;
  if (criteria.plateau_enabled() && history.size() > w) {
    double now = history.back().best_fitness;
    double then = history[history.size() - 1 - w].best_fitness;
    double growth = (now - then) / std::max(then, kPlateauEpsilon);
    if (growth < criteria.plateau_threshold) return {StopReason::kPlateau};
  }
  return {};
}

std::pair<Chromosome, Chromosome> crossover(const Chromosome& parent_a, const Chromosome& parent_b,
                                            const GaConfig& config, CounterRng& rng) {
  if (parent_a.genes.size() != parent_b.genes.size()) {
    throw StructuralError("crossover parents have different gene counts");
  }
  Chromosome a = parent_a;
  Chromosome b = parent_b;
  if (!rng.bernoulli(config.crossover_rate)) return {a, b};
  for (std::size_t i = 0; i < a.genes.size(); ++i) {
    if (rng.bernoulli(config.crossover_strength)) {
      bool t = a.genes[i];
      a.genes[i] = b.genes[i];
      b.genes[i] = t;
    }
  }
  if (rng.bernoulli(config.crossover_strength)) std::swap(a.base_level, b.base_level);
  return {a, b};
}

Chromosome mutate(Chromosome individual, std::size_t level_count, const GaConfig& config,
                  CounterRng& rng) {
  const std::size_t n = individual.genes.size();
  if (config.must_mutate_count > n) throw ConfigError("must_mutate_count exceeds the gene count");
  std::vector<bool> flipped(n, false);
  std::size_t count = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (rng.bernoulli(config.mutation_rate)) {
      flipped[i] = true;
      ++count;
    }
  }
  while (count < config.must_mutate_count) {
    // Pick uniformly among positions not yet flipped.
    std::size_t k = static_cast<std::size_t>(rng.below(n - count));
    for (std::size_t i = 0; i < n; ++i) {
      if (flipped[i]) continue;
      if (k-- == 0) {
        flipped[i] = true;
        break;
      }
    }
    ++count;
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (flipped[i]) individual.genes[i] = !individual.genes[i];
  }
  if (level_count > 1 && rng.bernoulli(config.mutation_rate)) {
    individual.base_level = static_cast<std::size_t>(rng.below(level_count));
  }
  return individual;
}

std::pair<Chromosome, Chromosome> select_parents(std::span<const Individual> population,
                                                 CounterRng& rng) {
  if (population.empty()) throw StructuralError("cannot select from an empty population");
  auto tournament = [&]() -> const Individual& {
    const Individual& x = population[rng.below(population.size())];
    const Individual& y = population[rng.below(population.size())];
    return fitter(y, x) ? y : x;
  };
  const Individual& a = tournament();
  const Individual& b = tournament();
  return {a.chromosome, b.chromosome};
}

RunResult run(const FlagSpace& space, const ConstraintSet& constraints, const FitnessFn& fitness_fn,
              const GaConfig& config, const TerminationCriteria& criteria, SessionStore& store,
              const RunOptions& options) {
  config.validate(space.size());
  criteria.validate();
  constraints.check_against(space);
  if (store.header().gene_count != space.size()) {
    throw StructuralError("session gene count does not match the flag space");
  }
  const auto started = std::chrono::steady_clock::now();
  auto elapsed = [&] {
    return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - started);
  };

  RunResult result;
  CounterRng rng(config.seed);
  std::vector<Individual> population;
  std::optional<Individual> best;

  auto individual_for = [&store](const Chromosome& c) {
    auto rec = store.lookup(c);
    return Individual{c, rec->fitness, rec->sequence};
  };

  for (const GenerationRecord& g : store.generations()) result.history.push_back(g.summary);
  if (auto last = store.resume_state().last_generation) {
    rng.seek(last->rng_draws);
    for (const Chromosome& c : last->population) {
      if (!store.lookup(c)) throw IntegrityError("population member without an iteration record");
      population.push_back(individual_for(c));
    }
    if (store.lookup(last->summary.best_chromosome)) best = individual_for(last->summary.best_chromosome);
  }

  std::optional<StopReason> reason;
  if (auto end = store.end()) reason = end->reason;

  while (!reason) {
    if (!result.history.empty()) {
      if (auto d = check_termination(result.history, criteria, elapsed()); d.stop()) {
        reason = d.reason;
        EndRecord e;
        e.sequence = store.next_sequence();
        e.reason = *reason;
        e.generations = result.history.size();
        if (options.record_timing) {
          e.wall = std::chrono::duration_cast<std::chrono::microseconds>(std::chrono::steady_clock::now() - started);
        }
        store.append(e);
        break;
      }
    }

    const std::uint64_t gen = result.history.empty() ? 0 : result.history.back().index + 1;
    std::vector<Chromosome> next;
    next.reserve(config.population_size);
    if (population.empty()) {
      for (std::size_t i = 0; i < config.population_size; ++i) {
        next.push_back(random_chromosome(space, constraints, rng));
      }
    } else {
      std::vector<Individual> ranked = population;
      std::stable_sort(ranked.begin(), ranked.end(), fitter);
      for (std::size_t i = 0; i < config.elite_count && i < ranked.size(); ++i) {
        next.push_back(ranked[i].chromosome);
      }
      while (next.size() < config.population_size) {
        auto [pa, pb] = select_parents(population, rng);
        auto [ca, cb] = crossover(pa, pb, config, rng);
        for (Chromosome* child : {&ca, &cb}) {
          if (next.size() == config.population_size) break;
          Chromosome m = mutate(std::move(*child), space.base_levels().size(), config, rng);
          next.push_back(repair(std::move(m), constraints));
        }
      }
    }
    const std::uint64_t draws = rng.draws();

    // New chromosomes, first occurrence order.
    std::vector<Chromosome> batch;
    for (const Chromosome& c : next) {
      if (store.lookup(c)) continue;
      if (std::find(batch.begin(), batch.end(), c) != batch.end()) continue;
      batch.push_back(c);
    }
    std::vector<Slot> slots;
    evaluate_batch(batch, fitness_fn, options.jobs, slots);
    result.fitness_calls += batch.size();
    for (std::size_t i = 0; i < batch.size(); ++i) {
      if (slots[i].error) std::rethrow_exception(slots[i].error);
      const Evaluation& ev = slots[i].eval;
      IterationRecord r;
      r.sequence = store.next_sequence();
      r.generation = gen;
      r.chromosome = batch[i];
      r.status = ev.status;
      r.binary_digest = ev.status == CompileStatus::kOk ? ev.binary_digest : std::nullopt;
      r.fitness = ev.status == CompileStatus::kOk ? ev.fitness : kFailureFloor;
      if (options.record_timing) r.duration = ev.duration;
      store.append(r);
    }

    population.clear();
    for (const Chromosome& c : next) {
      population.push_back(individual_for(c));
      if (!best || fitter(population.back(), *best)) best = population.back();
    }

    GenerationRecord g;
    g.sequence = store.next_sequence();
    g.summary.index = gen;
    g.summary.best_fitness = best->fitness;
    g.summary.best_chromosome = best->chromosome;
    g.summary.evaluated_count = store.evaluated_in_generation(gen);
    g.rng_draws = draws;
    g.population = next;
    store.append(g);
    result.history.push_back(g.summary);
    if (options.on_generation) options.on_generation(g.summary);
  }

  result.reason = *reason;
  if (!result.history.empty()) {
    const double top = result.history.back().best_fitness;
    for (const IterationRecord& r : store.iterations()) {
      if (r.fitness == top) result.best_records.push_back(r);
    }
  }
  return result;
}

}  // namespace difftune
